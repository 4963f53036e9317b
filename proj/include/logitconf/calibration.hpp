#ifndef LOGITCONF_CALIBRATION_HPP
#define LOGITCONF_CALIBRATION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "logitconf/core.hpp"
#include "logitconf/random.hpp"

namespace logitconf {

/// Scored predictions that all carry gold labels and share one scorer.
class LabeledScoredSet {
public:
    explicit LabeledScoredSet(std::vector<ScoredPrediction> items) : items_(std::move(items)) {
        for (const auto& item : items_) {
            if (!item.labeled()) {
                throw DataError("record '" + item.record.id() +
                                "' has no gold label; calibration needs labeled data");
            }
            if (item.scorer != items_.front().scorer) {
                throw DataError("labeled set mixes scorer kinds");
            }
            if (item.correct()) {
                ++successes_;
            } else {
                ++errors_;
            }
        }
    }

    std::span<const ScoredPrediction> items() const noexcept { return items_; }
    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }
    std::uint64_t num_errors() const noexcept { return errors_; }
    std::uint64_t num_successes() const noexcept { return successes_; }
    ScorerKind scorer() const { return items_.at(0).scorer; }
    std::size_t num_classes() const { return items_.at(0).record.num_classes(); }

    /// Simple accuracy: correct / total.
    double accuracy() const {
        return static_cast<double>(successes_) / static_cast<double>(items_.size());
    }

private:
    std::vector<ScoredPrediction> items_;
    std::uint64_t errors_ = 0;
    std::uint64_t successes_ = 0;
};

/// The part of a labeled prediction the threshold search looks at.
struct ScoredOutcome {
    double confidence = 0.0;
    bool correct = false;
};

inline std::vector<ScoredOutcome> outcomes(const LabeledScoredSet& set) {
    std::vector<ScoredOutcome> out;
    out.reserve(set.size());
    for (const auto& item : set.items()) out.push_back({item.confidence, item.correct()});
    return out;
}

/// floor() that treats values within 1e-9 (relative) of an integer as that
/// integer, so decimal inputs like q = 0.95 do not lose a whole count to
/// binary rounding (100 * 0.05 / 0.2 must give 25, not 24).
inline std::uint64_t floor_count(double x) {
    if (!(x > 0.0)) return 0;
    const double nearest = std::round(x);
    if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, x)) {
        return static_cast<std::uint64_t>(nearest);
    }
    return static_cast<std::uint64_t>(std::floor(x));
}

/// Relative error e_mu / (e_mu + s_mu) among items with confidence >= threshold.
/// Empty exploit yields nullopt.
inline std::optional<double> relative_error_in_exploit(const LabeledScoredSet& set,
                                                       double threshold_mu) {
    if (set.empty()) throw DataError("relative error: empty set");
    std::uint64_t errors = 0;
    std::uint64_t total = 0;
    for (const auto& item : set.items()) {
        if (item.confidence >= threshold_mu) {
            ++total;
            if (!item.correct()) ++errors;
        }
    }
    if (total == 0) return std::nullopt;
    return static_cast<double>(errors) / static_cast<double>(total);
}

/// Number of errors the exploit may keep so that accuracy q is reached from a
/// baseline accuracy p with e total errors: floor(e (1 - q) / (1 - p)).
/// q <= p keeps every error; q = 1 keeps none.
inline std::uint64_t error_budget(std::uint64_t total_errors_e, double baseline_accuracy_p,
                                  double confidence_level_q) {
    if (!(baseline_accuracy_p >= 0.0 && baseline_accuracy_p <= 1.0)) {
        throw UsageError("error budget: baseline accuracy must lie in [0, 1]");
    }
    if (!(confidence_level_q > 0.0 && confidence_level_q <= 1.0)) {
        throw UsageError("error budget: confidence level must lie in (0, 1]");
    }
    if (confidence_level_q <= baseline_accuracy_p) return total_errors_e;
    if (confidence_level_q == 1.0 || baseline_accuracy_p == 1.0) return 0;
    const double e = static_cast<double>(total_errors_e);
    const double budget = e * (1.0 - confidence_level_q) / (1.0 - baseline_accuracy_p);
    return std::min(floor_count(budget), total_errors_e);
}

struct ThresholdChoice {
    double threshold_mu = accept_all;
    bool degenerate = false;
};

/// Smallest confidence value whose inclusive exploit holds at most `budget`
/// errors. accept_all when the budget covers every error; reject_all with the
/// degenerate flag when even the top tie group exceeds it.
inline ThresholdChoice find_threshold(std::span<const ScoredOutcome> items,
                                      std::uint64_t budget) {
    if (items.empty()) throw DataError("threshold search: empty set");
    std::uint64_t total_errors = 0;
    for (const auto& o : items) total_errors += o.correct ? 0 : 1;
    if (budget >= total_errors) return {accept_all, false};

    std::vector<ScoredOutcome> sorted(items.begin(), items.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const ScoredOutcome& a, const ScoredOutcome& b) {
                  return a.confidence > b.confidence;
              });

    // Walk tie groups from the top; each group enters the exploit as a whole.
    std::optional<double> best;
    std::uint64_t errors = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        const double value = sorted[i].confidence;
        std::size_t j = i;
        for (; j < sorted.size() && sorted[j].confidence == value; ++j) {
            errors += sorted[j].correct ? 0 : 1;
        }
        if (errors > budget) break;
        best = value;
        i = j;
    }
    if (!best) return {reject_all, true};
    return {*best, false};
}

inline ThresholdChoice find_threshold(const LabeledScoredSet& set, std::uint64_t budget) {
    if (set.empty()) throw DataError("threshold search: empty set");
    if (budget > set.num_errors()) {
        throw UsageError("threshold search: budget exceeds the number of errors");
    }
    const auto o = outcomes(set);
    return find_threshold(std::span<const ScoredOutcome>(o), budget);
}

/// Measures p on the labeled set, derives the error budget for level q and
/// places the threshold.
inline CalibrationArtifact calibrate(const LabeledScoredSet& set, double confidence_level_q) {
    if (set.empty()) throw DataError("calibration: empty set");
    if (!(confidence_level_q > 0.0 && confidence_level_q <= 1.0)) {
        throw UsageError("calibration: confidence level must lie in (0, 1]");
    }
    CalibrationArtifact a;
    a.scorer = set.scorer();
    a.confidence_level_q = confidence_level_q;
    a.baseline_accuracy_p = set.accuracy();
    a.total_errors_e = set.num_errors();
    a.testset_size_n = set.size();
    a.num_classes_r = set.num_classes();
    a.error_budget_e_mu = error_budget(a.total_errors_e, a.baseline_accuracy_p,
                                       confidence_level_q);
    const auto choice = find_threshold(set, a.error_budget_e_mu);
    a.threshold_mu = choice.threshold_mu;
    a.degenerate = choice.degenerate;
    return a;
}

// ---------------------------------------------------------------------------
// Threshold stability under subsampling

struct StabilityCell {
    std::uint64_t errors = 0;
    std::uint64_t budget = 0;
    // Empty when the subsample holds no error or no threshold meets the budget.
    std::optional<double> threshold_mu;

    friend bool operator==(const StabilityCell&, const StabilityCell&) = default;
};

struct StabilityRow {
    double fraction = 1.0;
    std::size_t sample_size = 0;
    std::vector<StabilityCell> cells;
    std::size_t defined = 0;
    std::optional<double> mean;
    std::optional<double> stddev;
    std::optional<double> min;
    std::optional<double> max;
    std::optional<double> max_abs_deviation;  // from the full-set threshold

    friend bool operator==(const StabilityRow&, const StabilityRow&) = default;
};

struct StabilityReport {
    double error_fraction = 0.1;
    std::uint64_t seed = 0;
    std::size_t repeats = 1;
    std::optional<double> full_threshold;
    std::vector<StabilityRow> rows;

    /// Largest deviation over all rows; empty when nothing was comparable.
    std::optional<double> max_abs_deviation() const {
        std::optional<double> worst;
        for (const auto& row : rows) {
            if (row.max_abs_deviation && (!worst || *row.max_abs_deviation > *worst)) {
                worst = row.max_abs_deviation;
            }
        }
        return worst;
    }

    friend bool operator==(const StabilityReport&, const StabilityReport&) = default;
};

/// Threshold that lets floor(error_fraction * e) of the e errors into the exploit.
inline StabilityCell threshold_for_error_fraction(std::span<const ScoredOutcome> items,
                                                  double error_fraction) {
    StabilityCell cell;
    for (const auto& o : items) cell.errors += o.correct ? 0 : 1;
    if (cell.errors == 0) return cell;
    cell.budget = std::min(floor_count(error_fraction * static_cast<double>(cell.errors)),
                           cell.errors);
    const auto choice = find_threshold(items, cell.budget);
    if (std::isfinite(choice.threshold_mu)) cell.threshold_mu = choice.threshold_mu;
    return cell;
}

/// For every fraction, draws `repeats` subsamples without replacement and
/// places the error-fraction threshold on each. Repeat k of fraction i uses
/// a stream derived from (seed, i, k), so results do not depend on order.
inline StabilityReport stability_experiment(const LabeledScoredSet& set,
                                            std::span<const double> fractions,
                                            double error_fraction, std::uint64_t seed,
                                            std::size_t repeats) {
    if (set.empty()) throw DataError("stability: empty set");
    if (fractions.empty()) throw UsageError("stability: no fractions given");
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw UsageError("stability: fractions must lie in (0, 1]");
    }
    if (!(error_fraction >= 0.0 && error_fraction <= 1.0)) {
        throw UsageError("stability: error fraction must lie in [0, 1]");
    }
    if (repeats == 0) throw UsageError("stability: repeats must be positive");

    const auto all = outcomes(set);
    StabilityReport report;
    report.error_fraction = error_fraction;
    report.seed = seed;
    report.repeats = repeats;
    report.full_threshold = threshold_for_error_fraction(all, error_fraction).threshold_mu;

    std::vector<ScoredOutcome> sample;
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
        StabilityRow row;
        row.fraction = fractions[fi];
        row.sample_size = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(fractions[fi] * static_cast<double>(all.size()))));
        for (std::size_t k = 0; k < repeats; ++k) {
            auto rng = Rng::derive(seed, fi, k);
            sample.clear();
            for (std::size_t idx : rng.sample_without_replacement(all.size(), row.sample_size)) {
                sample.push_back(all[idx]);
            }
            row.cells.push_back(threshold_for_error_fraction(sample, error_fraction));
        }

        std::vector<double> values;
        for (const auto& cell : row.cells) {
            if (cell.threshold_mu) values.push_back(*cell.threshold_mu);
        }
        row.defined = values.size();
        if (!values.empty()) {
            const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
            row.min = *lo;
            row.max = *hi;
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= static_cast<double>(values.size());
            double var = 0.0;
            for (double v : values) var += (v - mean) * (v - mean);
            row.mean = mean;
            row.stddev = std::sqrt(var / static_cast<double>(values.size()));
            if (report.full_threshold) {
                row.max_abs_deviation = std::max(std::abs(*hi - *report.full_threshold),
                                                 std::abs(*lo - *report.full_threshold));
            }
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace logitconf

#endif  // LOGITCONF_CALIBRATION_HPP
