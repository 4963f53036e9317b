#ifndef LOGITCONF_SYNTH_HPP
#define LOGITCONF_SYNTH_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "logitconf/core.hpp"
#include "logitconf/random.hpp"

namespace logitconf {

struct SynthOptions {
    std::size_t n = 1000;
    std::size_t num_classes = 5;
    double target_accuracy = 0.8;
    // Mean winner margin of correct predictions. 0 removes all signal.
    double margin_strength = 1.0;
    // Error margins are drawn with mean margin_strength * error_margin_ratio.
    double error_margin_ratio = 0.2;
    std::uint64_t seed = 0;
};

inline void validate(const SynthOptions& o) {
    if (o.num_classes < 2) throw UsageError("synth: need at least 2 classes");
    if (!(o.target_accuracy >= 0.0 && o.target_accuracy <= 1.0)) {
        throw UsageError("synth: target accuracy must lie in [0, 1]");
    }
    if (!(o.margin_strength >= 0.0)) throw UsageError("synth: margin strength must be >= 0");
    if (!(o.error_margin_ratio >= 0.0)) throw UsageError("synth: error margin ratio must be >= 0");
}

/// Labeled logit vectors from a simple classifier model. Each record picks a
/// gold class uniformly; with probability target_accuracy the winner is the
/// gold class, otherwise a uniformly chosen other class. Non-winner logits are
/// U(0, 1) and the winner sits above the runner-up by 0.01 plus an exponential
/// margin, larger for correct predictions, so confidence tracks correctness.
inline std::vector<PredictionRecord> generate_synthetic(const SynthOptions& o) {
    validate(o);
    constexpr double min_gap = 0.01;
    Rng rng(o.seed);
    std::vector<PredictionRecord> out;
    out.reserve(o.n);
    const std::size_t r = o.num_classes;
    const std::size_t width = std::to_string(o.n == 0 ? 0 : o.n - 1).size();
    for (std::size_t i = 0; i < o.n; ++i) {
        const auto gold = static_cast<std::size_t>(rng.below(r));
        const bool correct = rng.bernoulli(o.target_accuracy);
        const std::size_t winner =
            correct ? gold : (gold + 1 + static_cast<std::size_t>(rng.below(r - 1))) % r;

        std::vector<double> logits(r);
        double runner_up = 0.0;
        for (std::size_t j = 0; j < r; ++j) {
            if (j == winner) continue;
            logits[j] = rng.uniform();
            runner_up = std::max(runner_up, logits[j]);
        }
        const double scale = correct ? o.margin_strength : o.margin_strength * o.error_margin_ratio;
        logits[winner] = runner_up + min_gap + rng.exponential(scale);

        std::string id = std::to_string(i);
        id.insert(0, width - id.size(), '0');
        out.emplace_back("s" + id, std::move(logits), gold);
    }
    return out;
}

}  // namespace logitconf

#endif  // LOGITCONF_SYNTH_HPP
