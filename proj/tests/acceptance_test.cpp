// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "logitconf/logitconf.hpp"
#include "oracles.hpp"

using namespace logitconf;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

constexpr std::uint64_t kSynthSeed = 0;

std::vector<PredictionRecord> synthetic(double margin_strength) {
    SynthOptions o;
    o.n = 20000;
    o.num_classes = 5;
    o.target_accuracy = 0.75;
    o.margin_strength = margin_strength;
    o.seed = kSynthSeed;
    return generate_synthetic(o);
}

// 1 and 2 share the same runs.
struct BudgetRuns {
    Outcome budget;
    Outcome identity;
};

BudgetRuns budget_exactness() {
    BudgetRuns r;
    const auto t0 = Clock::now();
    std::size_t checks = 0, exploits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t size = 10 + rng() % 491;
        const LabeledScoredSet set(oracle::random_scored(rng, size, seed % 4 == 0 ? 10 : 0, 0.4));
        for (std::uint64_t qm : {900u, 950u, 990u}) {
            const double q = static_cast<double>(qm) / 1000.0;
            const auto a = calibrate(set, q);
            const auto want = oracle::error_budget_exact(set.num_errors(), set.num_successes(), qm);
            const auto out = split(set.items(), a.threshold_mu);
            ++checks;
            if (a.error_budget_e_mu != want || *out.report.exploit_errors_e_mu > want) {
                r.budget.pass = false;
                r.budget.detail = fmt("seed %llu q=%.2f: budget %llu (oracle %llu), exploit errors %llu",
                                      (unsigned long long)seed, q,
                                      (unsigned long long)a.error_budget_e_mu,
                                      (unsigned long long)want,
                                      (unsigned long long)*out.report.exploit_errors_e_mu);
            }
            if (!out.exploit.empty()) {
                ++exploits;
                const double sum = *enhanced_accuracy(out) + *relative_error_in_exploit(set, a.threshold_mu);
                if (sum != 1.0) {
                    r.identity.pass = false;
                    r.identity.detail = fmt("seed %llu q=%.2f: sum = %.17g", (unsigned long long)seed, q, sum);
                }
            }
        }
    }
    const double secs = seconds_since(t0);
    if (secs >= 10.0) {
        r.budget.pass = false;
        r.budget.detail += fmt(" runtime %.2fs >= 10s", secs);
    }
    if (r.budget.pass) r.budget.detail = fmt("%zu calibrations within budget, %.2fs", checks, secs);
    if (r.identity.pass) r.identity.detail = fmt("%zu non-empty exploits, sum == 1 exactly", exploits);
    return r;
}

Outcome oracle_equivalence() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t size = 1 + rng() % 200;
        const int grid = trial % 3 == 0 ? static_cast<int>(1 + rng() % 20) : 0;
        const auto items = oracle::random_scored(rng, size, grid, 0.4);
        const LabeledScoredSet set(items);
        const auto budget = rng() % (set.num_errors() + 1);
        const auto got = find_threshold(set, budget);
        const auto want = oracle::threshold_brute_force(oracle::items_of(items), budget);
        if (got.threshold_mu != want.threshold || got.degenerate != want.degenerate) {
            o.pass = false;
            o.detail = fmt("trial %d: got %.17g, brute force %.17g", trial, got.threshold_mu, want.threshold);
            return o;
        }
    }
    const double secs = seconds_since(t0);
    if (secs >= 30.0) {
        o.pass = false;
        o.detail = fmt("runtime %.2fs >= 30s", secs);
        return o;
    }
    o.detail = fmt("1000 sets agree exactly, %.2fs", secs);
    return o;
}

Outcome generalization() {
    Outcome o;
    const auto t0 = Clock::now();
    const auto records = synthetic(1.0);
    const std::span<const PredictionRecord> all(records);
    const auto calib = score_batch(all.first(10000), ScorerKind::wdf);
    const auto held = score_batch(all.subspan(10000), ScorerKind::wdf);
    const LabeledScoredSet calib_set(calib);
    const auto a = calibrate(calib_set, 0.9);
    const auto out = split(held, a.threshold_mu);
    const double secs = seconds_since(t0);
    const auto eaccu = enhanced_accuracy(out);
    const double explr = exploit_ratio(out);
    const double p = a.baseline_accuracy_p;
    // Exploit accuracy on the calibration half cannot exceed p / (p + 1 - q)
    // when the exploit keeps e (1-q)/(1-p) errors.
    const double ceiling = p / (p + 1.0 - a.confidence_level_q);
    const auto calib_out = split(calib, a.threshold_mu);
    o.pass = eaccu && *eaccu >= 0.88 && explr >= 0.2 && secs < 10.0;
    o.detail = fmt("held-out E.ACCU %.4f (need >= 0.88), EXPL.R %.4f (need >= 0.2); "
                   "calibration p %.4f, calibration-half E.ACCU %.4f, ceiling p/(p+1-q) %.4f; %.2fs",
                   eaccu.value_or(NAN), explr, p, calib_out.report.enhanced_accuracy.value_or(NAN),
                   ceiling, secs);
    return o;
}

Outcome stability() {
    Outcome o;
    const LabeledScoredSet set(score_batch(synthetic(1.0), ScorerKind::wdf));
    const std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    const auto rep = stability_experiment(set, fractions, 0.1, 17, 5);
    for (const auto& row : rep.rows) {
        if (row.defined != row.cells.size()) {
            o.pass = false;
            o.detail = fmt("fraction %.1f: %zu undefined cells", row.fraction,
                           row.cells.size() - row.defined);
            return o;
        }
    }
    const auto dev = rep.max_abs_deviation();
    o.pass = rep.full_threshold && dev && *dev <= 0.05;
    o.detail = fmt("full-set threshold %.4f, max |deviation| %.4f (need <= 0.05)",
                   rep.full_threshold.value_or(NAN), dev.value_or(NAN));
    return o;
}

Outcome scorer_properties() {
    Outcome o;
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    std::uniform_int_distribution<int> len(2, 20);
    const auto fail = [&](std::string why) {
        if (o.pass) o.detail = std::move(why);
        o.pass = false;
    };
    const auto rel_close = [](double a, double b) {
        return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)) ||
               std::abs(a - b) <= 1e-15;
    };
    for (int trial = 0; trial < 10000; ++trial) {
        std::vector<double> l(len(rng));
        for (auto& v : l) v = u(rng);
        const double w = score_wdf(l);
        if (!(w >= 0.0 && w <= 1.0)) fail(fmt("trial %d: WDF %.17g out of [0,1]", trial, w));

        const double a = scale(rng);
        const double b = u(rng);
        std::vector<double> scaled = l, affine = l;
        for (auto& v : scaled) v *= a;
        for (auto& v : affine) v = a * v + b;
        if (!rel_close(score_wdf(scaled), w)) fail(fmt("trial %d: WDF not scale invariant", trial));

        if (l.size() == 2) {
            bool rejected = false;
            try {
                score_krt(l);
            } catch (const DataError&) {
                rejected = true;
            }
            if (!rejected) fail(fmt("trial %d: KRT accepted a 2-vector", trial));
        } else {
            const double k = score_krt(l);
            if (!rel_close(score_krt(affine), k)) {
                fail(fmt("trial %d: KRT %.17g vs %.17g after affine map", trial, k, score_krt(affine)));
            }
        }

        std::vector<double> flat(l.size(), l[0]);
        if (score_wdf(flat) != 0.0) fail(fmt("trial %d: WDF of constant vector not 0", trial));
        if (flat.size() >= 3 && score_krt(flat) != 0.0) {
            fail(fmt("trial %d: KRT of constant vector not 0", trial));
        }
    }
    if (o.pass) o.detail = "10000 vectors: range, invariances, binary rejection, sigma=0 rules";
    return o;
}

Outcome hand_values() {
    Outcome o;
    std::vector<std::string> bad;
    using V = std::vector<double>;
    if (score_wdf(V{3, 1, 0.5, 0.2}) != 0.5) bad.push_back("WDF([3,1,0.5,0.2])");
    if (score_wdf(V{4, 0, 0, 0}) != 1.0) bad.push_back("WDF([4,0,0,0])");
    if (score_wdf(V{2, 2, 1}) != 0.0) bad.push_back("WDF equal top two");
    if (std::abs(score_krt(V{0, 0, 0, 1}) - 7.0 / 3.0) > 1e-12) bad.push_back("KRT([0,0,0,1])");
    if (error_budget(100, 0.8, 0.95) != 25) bad.push_back("e_mu(100,0.8,0.95)");
    o.pass = bad.empty();
    for (const auto& b : bad) o.detail += b + " ";
    if (o.pass) o.detail = "WDF 0.5 / 1 / 0, KRT 7/3, e_mu 25";
    return o;
}

Outcome io_round_trips() {
    Outcome o;
    std::mt19937_64 rng(88);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    std::uniform_int_distribution<int> ex(-300, 300);
    const std::string alphabet = "abc,\" xyz\\:{}[]0123";
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t r = 2 + rng() % 15;
        const bool labeled = rng() % 2;
        std::vector<PredictionRecord> recs;
        for (std::size_t i = 0; i < 1 + rng() % 8; ++i) {
            std::vector<double> logits(r);
            for (auto& v : logits) v = rng() % 2 ? u(rng) : std::ldexp(u(rng), ex(rng));
            std::string id;
            for (std::size_t k = 0; k < rng() % 10; ++k) id.push_back(alphabet[rng() % alphabet.size()]);
            std::optional<std::size_t> label;
            if (labeled) label = rng() % r;
            recs.emplace_back(id, logits, label);
        }
        for (auto f : {RecordFormat::ndjson, RecordFormat::csv}) {
            std::stringstream io;
            write_records(io, recs, f);
            if (read_records(io, f) != recs) {
                o.pass = false;
                o.detail = fmt("trial %d: %s records differ", trial, f == RecordFormat::csv ? "csv" : "ndjson");
                return o;
            }
        }

        CalibrationArtifact a;
        a.scorer = rng() % 2 ? ScorerKind::wdf : ScorerKind::krt;
        a.testset_size_n = 1 + rng() % 100000;
        a.total_errors_e = rng() % (a.testset_size_n + 1);
        a.error_budget_e_mu = rng() % (a.total_errors_e + 1);
        a.baseline_accuracy_p = static_cast<double>(a.testset_size_n - a.total_errors_e) /
                                static_cast<double>(a.testset_size_n);
        a.num_classes_r = 2 + rng() % 50;
        const int kind = static_cast<int>(rng() % 3);
        if (kind == 0) {
            a.confidence_level_q = a.baseline_accuracy_p > 0 ? a.baseline_accuracy_p : 0.5;
            a.threshold_mu = accept_all;
        } else {
            a.confidence_level_q = 1.0;
            a.threshold_mu = kind == 1 ? reject_all : std::ldexp(u(rng), ex(rng));
            a.degenerate = kind == 1;
        }
        if (a.confidence_level_q <= a.baseline_accuracy_p) a.threshold_mu = accept_all;
        std::stringstream io;
        write_calibration(io, a);
        if (read_calibration(io) != a) {
            o.pass = false;
            o.detail = fmt("trial %d: calibration artifact differs", trial);
            return o;
        }
    }
    o.detail = "1000 cases: ndjson, csv and calibration JSON identical after round trip";
    return o;
}

Outcome negative_control() {
    Outcome o;
    const LabeledScoredSet set(score_batch(synthetic(0.0), ScorerKind::wdf));
    const double q = 0.99;
    const auto a = calibrate(set, q);
    const auto out = split(set.items(), a.threshold_mu);
    const double explr = exploit_ratio(out);
    o.pass = a.degenerate || explr < 0.05;
    o.detail = fmt("p %.4f, q %.2f: degenerate=%s, EXPL.R %.4f (need degenerate or < 0.05)",
                   a.baseline_accuracy_p, q, a.degenerate ? "yes" : "no", explr);
    return o;
}

}  // namespace

int main() {
    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria;
    BudgetRuns budget;
    bool budget_done = false;
    const auto run_budget = [&]() -> BudgetRuns& {
        if (!budget_done) {
            budget = budget_exactness();
            budget_done = true;
        }
        return budget;
    };
    criteria.emplace_back("1 budget exactness", [&] { return run_budget().budget; });
    criteria.emplace_back("2 exploit accuracy + relative error = 1", [&] { return run_budget().identity; });
    criteria.emplace_back("3 threshold search = brute force", oracle_equivalence);
    criteria.emplace_back("4 held-out generalization", generalization);
    criteria.emplace_back("5 threshold stability under subsampling", stability);
    criteria.emplace_back("6 scorer properties", scorer_properties);
    criteria.emplace_back("7 hand values", hand_values);
    criteria.emplace_back("8 I/O round trips", io_round_trips);
    criteria.emplace_back("9 negative control", negative_control);

    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.pass) ++failures;
        std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    return failures == 0 ? 0 : 1;
}
