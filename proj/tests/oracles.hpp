// Reference computations used only by the tests. Each one follows the
// definition directly (exact integer arithmetic, brute-force scans, full
// confusion matrices) and shares no code path with the library.
#ifndef LOGITCONF_TESTS_ORACLES_HPP
#define LOGITCONF_TESTS_ORACLES_HPP

#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "logitconf/core.hpp"

namespace oracle {

struct Fraction {
    __int128 num = 0;
    __int128 den = 1;
};

inline Fraction reduce(__int128 num, __int128 den) {
    if (den < 0) {
        num = -num;
        den = -den;
    }
    auto a = num < 0 ? -num : num;
    auto b = den;
    while (b != 0) {
        const auto t = a % b;
        a = b;
        b = t;
    }
    return {num / a, den / a};
}

inline double to_double(Fraction f) {
    return static_cast<double>(f.num) / static_cast<double>(f.den);
}

/// Population kurtosis of integer data, exact: E[(x - m)^4] / (E[(x - m)^2])^2.
/// Works on n * x so the mean stays integral.
inline Fraction kurtosis_exact(const std::vector<std::int64_t>& xs) {
    const auto n = static_cast<__int128>(xs.size());
    __int128 sum = 0;
    for (auto x : xs) sum += x;
    __int128 s2 = 0;
    __int128 s4 = 0;
    for (auto x : xs) {
        const __int128 d = n * x - sum;  // n * (x - mean)
        s2 += d * d;
        s4 += d * d * d * d;
    }
    // m4 / m2^2 = (s4 / n) / (s2 / n)^2 = n * s4 / s2^2
    return reduce(n * s4, s2 * s2);
}

/// floor(e (1 - q) / (1 - p)) with p = s / n and q = q_permille / 1000,
/// following the q <= p and q = 1 rules.
inline std::uint64_t error_budget_exact(std::uint64_t e, std::uint64_t s, std::uint64_t q_permille) {
    const std::uint64_t n = e + s;
    if (q_permille * n <= s * 1000) return e;
    if (q_permille == 1000) return 0;
    const unsigned __int128 num = static_cast<unsigned __int128>(e) * (1000 - q_permille) * n;
    const unsigned __int128 den = static_cast<unsigned __int128>(1000) * (n - s);
    return static_cast<std::uint64_t>(num / den);
}

struct Item {
    double confidence;
    bool correct;
};

struct Choice {
    double threshold;
    bool degenerate;
};

/// Tries every distinct confidence value as a threshold and keeps the smallest
/// one whose inclusive exploit has at most `budget` errors.
inline Choice threshold_brute_force(const std::vector<Item>& items, std::uint64_t budget) {
    std::uint64_t e = 0;
    for (const auto& it : items) e += it.correct ? 0 : 1;
    if (budget >= e) return {logitconf::accept_all, false};
    std::set<double> candidates;
    for (const auto& it : items) candidates.insert(it.confidence);
    std::optional<double> best;
    for (double c : candidates) {
        std::uint64_t errors = 0;
        for (const auto& it : items) {
            if (it.confidence >= c && !it.correct) ++errors;
        }
        if (errors <= budget && (!best || c < *best)) best = c;
    }
    if (!best) return {logitconf::reject_all, true};
    return {*best, false};
}

/// Macro F1 from an explicit r x r confusion matrix over the classes seen in
/// gold or predicted labels.
inline double macro_f1_confusion(const std::vector<std::size_t>& gold,
                                 const std::vector<std::size_t>& predicted, std::size_t r) {
    std::vector<std::vector<std::uint64_t>> cm(r, std::vector<std::uint64_t>(r, 0));
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        ++cm[gold[i]][predicted[i]];
        seen.insert(gold[i]);
        seen.insert(predicted[i]);
    }
    double sum = 0.0;
    for (std::size_t c : seen) {
        double tp = static_cast<double>(cm[c][c]);
        double col = 0.0;
        double row = 0.0;
        for (std::size_t k = 0; k < r; ++k) {
            col += static_cast<double>(cm[k][c]);
            row += static_cast<double>(cm[c][k]);
        }
        const double precision = col == 0.0 ? 0.0 : tp / col;
        const double recall = row == 0.0 ? 0.0 : tp / row;
        sum += precision + recall == 0.0 ? 0.0 : 2 * precision * recall / (precision + recall);
    }
    return sum / static_cast<double>(seen.size());
}

/// Random labeled scored predictions. With `grid` > 0 confidences are drawn
/// from {0, 1/grid, ..., 1} so ties are common.
inline std::vector<logitconf::ScoredPrediction> random_scored(std::mt19937_64& rng,
                                                              std::size_t size, int grid,
                                                              double error_rate) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> g(0, grid > 0 ? grid : 1);
    std::vector<logitconf::ScoredPrediction> out;
    for (std::size_t i = 0; i < size; ++i) {
        const double conf = grid > 0 ? static_cast<double>(g(rng)) / grid : u(rng);
        // Errors lean toward low confidence so thresholds are informative.
        const bool error = u(rng) < error_rate * 2.0 * (1.0 - conf);
        const std::size_t label = 0;
        const std::size_t predicted = error ? 1 : 0;
        logitconf::PredictionRecord rec("r" + std::to_string(i),
                                        error ? std::vector<double>{0.5, 1.0, 0.0}
                                              : std::vector<double>{1.0, 0.5, 0.0},
                                        label);
        out.push_back({rec, predicted, conf, logitconf::ScorerKind::wdf});
    }
    return out;
}

inline std::vector<Item> items_of(const std::vector<logitconf::ScoredPrediction>& xs) {
    std::vector<Item> out;
    for (const auto& x : xs) out.push_back({x.confidence, x.correct()});
    return out;
}

}  // namespace oracle

#endif  // LOGITCONF_TESTS_ORACLES_HPP
