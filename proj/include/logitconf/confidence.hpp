#ifndef LOGITCONF_CONFIDENCE_HPP
#define LOGITCONF_CONFIDENCE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "logitconf/core.hpp"

namespace logitconf {

namespace detail {

inline void require_finite(std::span<const double> logits, const char* who) {
    for (double v : logits) {
        if (!std::isfinite(v)) {
            throw DataError(std::string(who) + ": logits must be finite");
        }
    }
}

/// Largest and second largest entries, counting duplicates: {5, 5, 1} -> (5, 5).
inline std::pair<double, double> top_two(std::span<const double> logits) {
    double max1 = -std::numeric_limits<double>::infinity();
    double max2 = -std::numeric_limits<double>::infinity();
    for (double v : logits) {
        if (v > max1) {
            max2 = max1;
            max1 = v;
        } else if (v > max2) {
            max2 = v;
        }
    }
    return {max1, max2};
}

}  // namespace detail

/// Unclamped winner-difference value (Max1 - Max2) / |Max1 + Max2|.
/// Equal top two give 0; a zero denominator otherwise gives +inf.
/// Can exceed 1 when the top two logits have opposite signs.
inline double score_wdf_raw(std::span<const double> logits) {
    if (logits.size() < 2) throw DataError("wdf: needs at least 2 logits");
    detail::require_finite(logits, "wdf");
    const auto [max1, max2] = detail::top_two(logits);
    if (max1 == max2) return 0.0;
    const double denom = std::abs(max1 + max2);
    if (denom == 0.0) return std::numeric_limits<double>::infinity();
    return (max1 - max2) / denom;
}

/// Winner-difference confidence in [0, 1].
inline double score_wdf(std::span<const double> logits) {
    return std::clamp(score_wdf_raw(logits), 0.0, 1.0);
}

/// Kurtosis confidence: mean of the fourth power of the standardized logits,
/// using the population standard deviation. Plain kurtosis (no -3 offset).
/// A constant vector scores 0. Binary outputs are rejected: any two distinct
/// values have kurtosis exactly 1.
inline double score_krt(std::span<const double> logits) {
    if (logits.size() < 3) {
        throw DataError("krt: needs at least 3 classes (kurtosis carries no information "
                        "for binary classification)");
    }
    detail::require_finite(logits, "krt");
    const auto [lo, hi] = std::minmax_element(logits.begin(), logits.end());
    if (*lo == *hi) return 0.0;

    const double n = static_cast<double>(logits.size());
    double mean = 0.0;
    for (double v : logits) mean += v;
    mean /= n;

    // Rescale deviations by their largest magnitude so the fourth powers
    // cannot overflow; the ratio m4 / m2^2 is scale free.
    double scale = 0.0;
    for (double v : logits) scale = std::max(scale, std::abs(v - mean));

    double m2 = 0.0;
    double m4 = 0.0;
    for (double v : logits) {
        const double z = (v - mean) / scale;
        const double z2 = z * z;
        m2 += z2;
        m4 += z2 * z2;
    }
    m2 /= n;
    m4 /= n;
    if (m2 == 0.0) return 0.0;
    return m4 / (m2 * m2);
}

inline double score(std::span<const double> logits, ScorerKind kind) {
    return kind == ScorerKind::wdf ? score_wdf(logits) : score_krt(logits);
}

inline std::size_t min_classes(ScorerKind kind) noexcept {
    return kind == ScorerKind::krt ? 3 : 2;
}

inline ScoredPrediction score_record(const PredictionRecord& record, ScorerKind kind) {
    return ScoredPrediction{record, predicted_class(record), score(record.logits(), kind), kind};
}

/// Scores every record with one scorer, preserving input order.
/// All records must have the same number of classes.
inline std::vector<ScoredPrediction> score_batch(std::span<const PredictionRecord> records,
                                                 ScorerKind kind) {
    std::vector<ScoredPrediction> out;
    if (records.empty()) return out;
    const std::size_t r = records.front().num_classes();
    if (r < min_classes(kind)) {
        throw DataError(std::string(to_string(kind)) + ": " + std::to_string(r) +
                        "-class records are not supported (KRT does not work for binary "
                        "classification; use wdf)");
    }
    out.reserve(records.size());
    for (const auto& rec : records) {
        if (rec.num_classes() != r) {
            throw DataError("record '" + rec.id() + "' has " +
                            std::to_string(rec.num_classes()) + " logits, expected " +
                            std::to_string(r));
        }
        out.push_back(score_record(rec, kind));
    }
    return out;
}

}  // namespace logitconf

#endif  // LOGITCONF_CONFIDENCE_HPP
