#ifndef LOGITCONF_METRICS_HPP
#define LOGITCONF_METRICS_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "logitconf/core.hpp"

namespace logitconf {

struct SplitOutcome {
    std::vector<ScoredPrediction> exploit;
    std::vector<ScoredPrediction> waste;
    SplitReport report;
};

namespace detail {

inline bool all_labeled(std::span<const ScoredPrediction> items) {
    return std::all_of(items.begin(), items.end(),
                       [](const ScoredPrediction& p) { return p.labeled(); });
}

inline void require_single_scorer(std::span<const ScoredPrediction> items) {
    for (const auto& item : items) {
        if (item.scorer != items.front().scorer) {
            throw DataError("predictions mix scorer kinds");
        }
    }
}

}  // namespace detail

/// Stable partition into exploit (confidence >= threshold) and waste.
/// Label-dependent report fields are filled only when every item is labeled.
inline SplitOutcome split(std::span<const ScoredPrediction> items, double threshold_mu) {
    detail::require_single_scorer(items);
    SplitOutcome out;
    for (const auto& item : items) {
        (item.confidence >= threshold_mu ? out.exploit : out.waste).push_back(item);
    }

    auto& r = out.report;
    r.threshold_mu = threshold_mu;
    r.exploit_count = out.exploit.size();
    r.waste_count = out.waste.size();
    r.exploit_ratio = items.empty() ? 0.0
                                    : static_cast<double>(r.exploit_count) /
                                          static_cast<double>(items.size());

    if (!items.empty() && detail::all_labeled(items)) {
        std::uint64_t errors = 0;
        for (const auto& item : out.exploit) errors += item.correct() ? 0 : 1;
        std::uint64_t correct_total = 0;
        for (const auto& item : items) correct_total += item.correct() ? 1 : 0;
        r.exploit_errors_e_mu = errors;
        r.exploit_successes_s_mu = r.exploit_count - errors;
        if (r.exploit_count > 0) {
            r.enhanced_accuracy = static_cast<double>(*r.exploit_successes_s_mu) /
                                  static_cast<double>(r.exploit_count);
        }
        r.baseline_accuracy = static_cast<double>(correct_total) /
                              static_cast<double>(items.size());
    }
    return out;
}

/// Accuracy on the exploit (E.ACCU); nullopt when the exploit is empty.
inline std::optional<double> enhanced_accuracy(const SplitOutcome& outcome) {
    if (outcome.report.total() > 0 && !outcome.report.labeled()) {
        throw DataError("enhanced accuracy needs gold labels");
    }
    return outcome.report.enhanced_accuracy;
}

/// Fraction of predictions in the exploit (EXPL.R); 0 for empty input.
inline double exploit_ratio(const SplitOutcome& outcome) { return outcome.report.exploit_ratio; }

struct CurveRow {
    std::size_t rank = 0;  // 1-based position after sorting
    double confidence = 0.0;
    std::optional<bool> is_error;
};

/// Predictions sorted by ascending confidence, ties kept in input order.
inline std::vector<CurveRow> confidence_curve(std::span<const ScoredPrediction> items) {
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return items[a].confidence < items[b].confidence;
    });
    std::vector<CurveRow> rows;
    rows.reserve(items.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& item = items[order[k]];
        CurveRow row{k + 1, item.confidence, std::nullopt};
        if (item.labeled()) row.is_error = !item.correct();
        rows.push_back(row);
    }
    return rows;
}

/// Unweighted mean of per-class F1 over every class that occurs as a gold
/// label or as a prediction. A class with precision + recall = 0 scores 0.
inline double macro_f1(std::span<const ScoredPrediction> items) {
    if (items.empty()) throw DataError("macro F1: no predictions");
    if (!detail::all_labeled(items)) throw DataError("macro F1 needs gold labels");

    struct Counts {
        std::uint64_t tp = 0, fp = 0, fn = 0;
    };
    std::map<std::size_t, Counts> per_class;
    for (const auto& item : items) {
        const std::size_t gold = *item.record.label();
        if (gold == item.predicted_class) {
            ++per_class[gold].tp;
        } else {
            ++per_class[item.predicted_class].fp;
            ++per_class[gold].fn;
        }
    }
    double sum = 0.0;
    for (const auto& [cls, c] : per_class) {
        const double denom = static_cast<double>(2 * c.tp + c.fp + c.fn);
        sum += c.tp == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / denom;
    }
    return sum / static_cast<double>(per_class.size());
}

}  // namespace logitconf

#endif  // LOGITCONF_METRICS_HPP
