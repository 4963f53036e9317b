#ifndef LOGITCONF_CORE_HPP
#define LOGITCONF_CORE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace logitconf {

/// Malformed or inconsistent input data (bad records, unusable scorer, ...).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments passed to an operation (out-of-range level, bad fractions, ...).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Threshold that sends every prediction to the exploit.
inline constexpr double accept_all = -std::numeric_limits<double>::infinity();
/// Threshold that sends every prediction to the waste.
inline constexpr double reject_all = std::numeric_limits<double>::infinity();

enum class ScorerKind { wdf, krt };

inline std::string_view to_string(ScorerKind kind) {
    return kind == ScorerKind::wdf ? "wdf" : "krt";
}

inline ScorerKind parse_scorer(std::string_view name) {
    if (name == "wdf" || name == "WDF") return ScorerKind::wdf;
    if (name == "krt" || name == "KRT") return ScorerKind::krt;
    throw UsageError("unknown scorer '" + std::string(name) + "' (expected wdf or krt)");
}

/// Index of the largest logit; ties resolve to the lowest index.
inline std::size_t predicted_class(std::span<const double> logits) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.size(); ++j) {
        if (logits[j] > logits[best]) best = j;
    }
    return best;
}

/// One classified object: an opaque id, its output-layer logits and an
/// optional gold class index. Immutable once constructed.
class PredictionRecord {
public:
    PredictionRecord(std::string id, std::vector<double> logits,
                     std::optional<std::size_t> label = std::nullopt)
        : id_(std::move(id)), logits_(std::move(logits)), label_(label) {
        if (logits_.empty()) {
            throw DataError("record '" + id_ + "': logit vector is empty");
        }
        for (std::size_t j = 0; j < logits_.size(); ++j) {
            if (!std::isfinite(logits_[j])) {
                throw DataError("record '" + id_ + "': logit " + std::to_string(j) +
                                " is not finite");
            }
        }
        if (label_ && *label_ >= logits_.size()) {
            throw DataError("record '" + id_ + "': label " + std::to_string(*label_) +
                            " out of range for " + std::to_string(logits_.size()) +
                            " classes");
        }
    }

    const std::string& id() const noexcept { return id_; }
    std::span<const double> logits() const noexcept { return logits_; }
    std::size_t num_classes() const noexcept { return logits_.size(); }
    const std::optional<std::size_t>& label() const noexcept { return label_; }
    bool labeled() const noexcept { return label_.has_value(); }

    friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;

private:
    std::string id_;
    std::vector<double> logits_;
    std::optional<std::size_t> label_;
};

inline std::size_t predicted_class(const PredictionRecord& record) {
    return predicted_class(record.logits());
}

struct ScoredPrediction {
    PredictionRecord record;
    std::size_t predicted_class = 0;
    double confidence = 0.0;
    ScorerKind scorer = ScorerKind::wdf;

    bool labeled() const noexcept { return record.labeled(); }

    /// Only meaningful for labeled records.
    bool correct() const { return record.label().value() == predicted_class; }

    friend bool operator==(const ScoredPrediction&, const ScoredPrediction&) = default;
};

/// Result of threshold calibration for one (model, scorer, confidence level).
struct CalibrationArtifact {
    ScorerKind scorer = ScorerKind::wdf;
    double confidence_level_q = 1.0;
    double baseline_accuracy_p = 0.0;
    double threshold_mu = accept_all;
    std::uint64_t error_budget_e_mu = 0;
    std::uint64_t total_errors_e = 0;
    std::uint64_t testset_size_n = 1;
    std::uint64_t num_classes_r = 1;
    // Set when no threshold meets the error budget; threshold_mu is then reject_all.
    bool degenerate = false;

    friend bool operator==(const CalibrationArtifact&, const CalibrationArtifact&) = default;
};

inline void validate(const CalibrationArtifact& a) {
    if (!(a.confidence_level_q > 0.0 && a.confidence_level_q <= 1.0)) {
        throw DataError("calibration: confidence level must lie in (0, 1]");
    }
    if (!(a.baseline_accuracy_p >= 0.0 && a.baseline_accuracy_p <= 1.0)) {
        throw DataError("calibration: baseline accuracy must lie in [0, 1]");
    }
    if (std::isnan(a.threshold_mu)) throw DataError("calibration: threshold is NaN");
    if (a.error_budget_e_mu > a.total_errors_e) {
        throw DataError("calibration: error budget exceeds total errors");
    }
    if (a.testset_size_n == 0) throw DataError("calibration: empty test set");
    if (a.num_classes_r == 0) throw DataError("calibration: zero classes");
    if (a.confidence_level_q <= a.baseline_accuracy_p && a.threshold_mu != accept_all) {
        throw DataError("calibration: level at or below baseline accuracy requires the "
                        "accept-all threshold");
    }
}

/// Counts and ratios of an exploit/waste partition. Label-dependent fields
/// are empty unless every record carried a gold label.
struct SplitReport {
    double threshold_mu = accept_all;
    std::uint64_t exploit_count = 0;
    std::uint64_t waste_count = 0;
    double exploit_ratio = 0.0;
    std::optional<std::uint64_t> exploit_errors_e_mu;
    std::optional<std::uint64_t> exploit_successes_s_mu;
    std::optional<double> enhanced_accuracy;
    std::optional<double> baseline_accuracy;

    bool labeled() const noexcept { return exploit_errors_e_mu.has_value(); }
    std::uint64_t total() const noexcept { return exploit_count + waste_count; }

    friend bool operator==(const SplitReport&, const SplitReport&) = default;
};

}  // namespace logitconf

#endif  // LOGITCONF_CORE_HPP
