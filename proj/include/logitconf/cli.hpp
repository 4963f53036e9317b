#ifndef LOGITCONF_CLI_HPP
#define LOGITCONF_CLI_HPP

#include <cstdint>
#include <exception>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "logitconf/calibration.hpp"
#include "logitconf/confidence.hpp"
#include "logitconf/core.hpp"
#include "logitconf/ingestion.hpp"
#include "logitconf/metrics.hpp"
#include "logitconf/synth.hpp"

namespace logitconf::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_data = 2;
inline constexpr int exit_degenerate = 3;

struct CommonFlags {
    std::string input;
    std::string format = "ndjson";
    std::string scorer = "wdf";
    std::string output = "-";
};

struct ScoreFlags : CommonFlags {
    std::string class_names;
};

struct CalibrateFlags : CommonFlags {
    double level = 0.9;
};

struct FilterFlags : CommonFlags {
    std::string artifact;
    std::string exploit_out;
    std::string waste_out;
    std::optional<std::string> scorer_check;
};

struct EvaluateFlags : CommonFlags {
    std::vector<std::string> artifacts;
};

struct StabilityFlags : CommonFlags {
    double error_fraction = 0.1;
    std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::size_t repeats = 5;
    std::uint64_t seed = 0;
};

struct SynthFlags {
    SynthOptions options;
    std::string format = "ndjson";
    std::string output = "-";
};

namespace detail {

inline std::vector<ScoredPrediction> load_scored(const CommonFlags& f, ScorerKind kind) {
    const auto records = read_records(f.input, parse_format(f.format));
    if (records.empty()) throw DataError(f.input + ": no records");
    try {
        return score_batch(records, kind);
    } catch (const DataError& e) {
        throw DataError(f.input + ": " + e.what());
    }
}

inline LabeledScoredSet load_labeled(const CommonFlags& f, ScorerKind kind) {
    auto scored = load_scored(f, kind);
    if (!scored.front().labeled()) {
        throw DataError(f.input + ": records carry no gold labels");
    }
    return LabeledScoredSet(std::move(scored));
}

inline nlohmann::json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

inline int cmd_score(const ScoreFlags& f, std::ostream&) {
    const auto kind = parse_scorer(f.scorer);
    const auto scored = detail::load_scored(f, kind);
    std::vector<std::string> names;
    if (!f.class_names.empty()) names = read_class_names(f.class_names);

    OutputFile out(f.output);
    for (const auto& p : scored) {
        auto j = logitconf::detail::record_json(p.record);
        j["predicted_class"] = p.predicted_class;
        if (p.predicted_class < names.size()) j["predicted_name"] = names[p.predicted_class];
        j["confidence"] = p.confidence;
        j["scorer"] = std::string(to_string(p.scorer));
        out.stream() << j.dump() << '\n';
    }
    out.close();
    return exit_ok;
}

inline int cmd_calibrate(const CalibrateFlags& f, std::ostream& err) {
    const auto kind = parse_scorer(f.scorer);
    const auto set = detail::load_labeled(f, kind);
    const auto artifact = calibrate(set, f.level);
    write_calibration(artifact, f.output);

    if (artifact.confidence_level_q <= artifact.baseline_accuracy_p) {
        err << "notice: level " << f.level << " is at or below the measured accuracy "
            << artifact.baseline_accuracy_p << "; no filtering needed (accept-all threshold)\n";
    }
    if (artifact.degenerate) {
        err << "warning: degenerate calibration: even the highest-confidence tie group holds "
               "more than "
            << artifact.error_budget_e_mu << " errors; threshold set to reject all\n";
        return exit_degenerate;
    }
    return exit_ok;
}

inline int cmd_filter(const FilterFlags& f, std::ostream& err) {
    const auto artifact = read_calibration(f.artifact);
    if (f.scorer_check && parse_scorer(*f.scorer_check) != artifact.scorer) {
        throw DataError("artifact was calibrated with scorer '" +
                        std::string(to_string(artifact.scorer)) + "', not '" + *f.scorer_check +
                        "'");
    }
    const auto scored = detail::load_scored(f, artifact.scorer);
    if (scored.front().record.num_classes() != artifact.num_classes_r) {
        throw DataError(f.input + ": records have " +
                        std::to_string(scored.front().record.num_classes()) +
                        " classes but the artifact was calibrated on " +
                        std::to_string(artifact.num_classes_r));
    }
    const auto outcome = split(scored, artifact.threshold_mu);
    write_split(outcome, f.exploit_out, f.waste_out, f.output, parse_format(f.format));
    if (artifact.degenerate) {
        err << "warning: artifact is a degenerate calibration; everything went to waste\n";
    }
    return exit_ok;
}

/// Baseline accuracy against exploit accuracy and exploit ratio, one entry
/// per artifact (typically one per confidence level).
inline int cmd_evaluate(const EvaluateFlags& f, std::ostream&) {
    std::vector<CalibrationArtifact> artifacts;
    for (const auto& path : f.artifacts) artifacts.push_back(read_calibration(path));

    const auto records = read_records(f.input, parse_format(f.format));
    if (records.empty()) throw DataError(f.input + ": no records");
    if (!records.front().labeled()) throw DataError(f.input + ": records carry no gold labels");

    nlohmann::json report;
    nlohmann::json levels = nlohmann::json::array();
    std::optional<std::size_t> n;
    for (const auto& a : artifacts) {
        const LabeledScoredSet set(score_batch(records, a.scorer));
        if (set.num_classes() != a.num_classes_r) {
            throw DataError(f.input + ": class count does not match the artifact");
        }
        const auto outcome = split(set.items(), a.threshold_mu);
        if (!n) {
            n = set.size();
            report["n"] = set.size();
            report["num_classes"] = set.num_classes();
            report["accu"] = set.accuracy();
            report["macro_f1"] = macro_f1(set.items());
        }
        nlohmann::json level = {
            {"scorer", std::string(to_string(a.scorer))},
            {"confidence_level_q", a.confidence_level_q},
            {"threshold_mu", logitconf::detail::threshold_json(a.threshold_mu)},
            {"degenerate", a.degenerate},
            {"e_accu", detail::optional_json(enhanced_accuracy(outcome))},
            {"expl_r", exploit_ratio(outcome)},
            {"exploit_count", outcome.report.exploit_count},
            {"exploit_errors_e_mu", *outcome.report.exploit_errors_e_mu},
            {"exploit_macro_f1",
             outcome.exploit.empty() ? nlohmann::json(nullptr)
                                     : nlohmann::json(macro_f1(outcome.exploit))},
        };
        levels.push_back(std::move(level));
    }
    report["levels"] = std::move(levels);

    OutputFile out(f.output);
    out.stream() << report.dump(2) << '\n';
    out.close();
    return exit_ok;
}

inline int cmd_stability(const StabilityFlags& f, std::ostream& err) {
    const auto kind = parse_scorer(f.scorer);
    const auto set = detail::load_labeled(f, kind);
    const auto report = stability_experiment(set, f.fractions, f.error_fraction, f.seed, f.repeats);
    OutputFile out(f.output);
    write_stability_tsv(out.stream(), report);
    out.close();
    for (const auto& row : report.rows) {
        if (row.defined < row.cells.size()) {
            err << "notice: fraction " << row.fraction << ": " << row.cells.size() - row.defined
                << " of " << row.cells.size() << " subsamples had no usable threshold\n";
        }
    }
    return exit_ok;
}

inline int cmd_curve(const CommonFlags& f, std::ostream&) {
    const auto kind = parse_scorer(f.scorer);
    const auto scored = detail::load_scored(f, kind);
    OutputFile out(f.output);
    const auto rows = confidence_curve(scored);
    write_curve_tsv(out.stream(), rows);
    out.close();
    return exit_ok;
}

inline int cmd_synth(const SynthFlags& f, std::ostream&) {
    const auto records = generate_synthetic(f.options);
    write_records(f.output, records, parse_format(f.format));
    return exit_ok;
}

/// Parses argv and dispatches. Exit codes: 0 success, 1 usage error,
/// 2 data error, 3 degenerate calibration.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"Confidence estimation and filtering of classifier predictions from logits",
                 "logitconf"};
    app.require_subcommand(1);

    const auto add_input = [](CLI::App* cmd, CommonFlags& f, bool with_scorer) {
        cmd->add_option("--input,-i", f.input, "Record file (- for stdin)")->required();
        cmd->add_option("--format", f.format, "Record format")
            ->check(CLI::IsMember({"ndjson", "jsonl", "csv"}))
            ->capture_default_str();
        if (with_scorer) {
            cmd->add_option("--scorer", f.scorer, "Confidence function")
                ->check(CLI::IsMember({"wdf", "krt", "WDF", "KRT"}))
                ->capture_default_str();
        }
        cmd->add_option("--output,-o", f.output, "Output path (- for stdout)")->capture_default_str();
    };
    const auto unit_interval = CLI::Range(0.0, 1.0);

    ScoreFlags score_f;
    auto* score_cmd = app.add_subcommand("score", "Attach predicted class and confidence to records");
    add_input(score_cmd, score_f, true);
    score_cmd->add_option("--class-names", score_f.class_names,
                          "Sidecar file with one class name per line");

    CalibrateFlags cal_f;
    auto* cal_cmd = app.add_subcommand("calibrate", "Find the threshold for a confidence level");
    add_input(cal_cmd, cal_f, true);
    cal_cmd->add_option("--level,-q", cal_f.level, "Target confidence level q in (0, 1]")
        ->required()
        ->check([](const std::string& s) -> std::string {
            double v = 0.0;
            try {
                v = std::stod(s);
            } catch (...) {
                return "not a number";
            }
            return v > 0.0 && v <= 1.0 ? std::string() : "level must lie in (0, 1]";
        });

    FilterFlags filter_f;
    std::string filter_scorer;
    auto* filter_cmd = app.add_subcommand("filter", "Split records into exploit and waste");
    add_input(filter_cmd, filter_f, false);
    filter_cmd->add_option("--scorer", filter_scorer, "Expected scorer; must match the artifact")
        ->check(CLI::IsMember({"wdf", "krt", "WDF", "KRT"}));
    filter_cmd->add_option("--artifact,-a", filter_f.artifact, "Calibration JSON")->required();
    filter_cmd->add_option("--exploit-out", filter_f.exploit_out, "Exploit record file")->required();
    filter_cmd->add_option("--waste-out", filter_f.waste_out, "Waste record file")->required();

    EvaluateFlags eval_f;
    auto* eval_cmd = app.add_subcommand("evaluate", "Compare ACCU with E.ACCU and EXPL.R");
    add_input(eval_cmd, eval_f, false);
    eval_cmd->add_option("--artifact,-a", eval_f.artifacts, "Calibration JSON (repeatable)")
        ->required();

    StabilityFlags stab_f;
    auto* stab_cmd = app.add_subcommand("stability", "Threshold stability under subsampling");
    add_input(stab_cmd, stab_f, true);
    stab_cmd->add_option("--error-fraction", stab_f.error_fraction,
                         "Fraction of errors the threshold lets through")
        ->check(unit_interval)
        ->capture_default_str();
    stab_cmd->add_option("--fractions", stab_f.fractions, "Subsample fractions in (0, 1]")
        ->delimiter(',')
        ->check(CLI::Range(std::numeric_limits<double>::min(), 1.0));
    stab_cmd->add_option("--repeats", stab_f.repeats, "Subsamples per fraction")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    stab_cmd->add_option("--seed", stab_f.seed, "Random seed")->capture_default_str();

    CommonFlags curve_f;
    auto* curve_cmd = app.add_subcommand("curve", "Sorted confidence curve as TSV");
    add_input(curve_cmd, curve_f, true);

    SynthFlags synth_f;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled synthetic record file");
    synth_cmd->add_option("--n", synth_f.options.n, "Number of records")->capture_default_str();
    synth_cmd->add_option("--classes,-r", synth_f.options.num_classes, "Number of classes")
        ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20))
        ->capture_default_str();
    synth_cmd->add_option("--target-accuracy", synth_f.options.target_accuracy,
                          "Probability that the winner is the gold class")
        ->check(unit_interval)
        ->capture_default_str();
    synth_cmd->add_option("--margin-strength", synth_f.options.margin_strength,
                          "Mean winner margin of correct predictions")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    synth_cmd->add_option("--error-margin-ratio", synth_f.options.error_margin_ratio,
                          "Error margin scale relative to margin strength")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth_f.options.seed, "Random seed")->capture_default_str();
    synth_cmd->add_option("--format", synth_f.format, "Record format")
        ->check(CLI::IsMember({"ndjson", "jsonl", "csv"}))
        ->capture_default_str();
    synth_cmd->add_option("--output,-o", synth_f.output, "Output path (- for stdout)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*score_cmd) return cmd_score(score_f, err);
        if (*cal_cmd) return cmd_calibrate(cal_f, err);
        if (*filter_cmd) {
            if (!filter_scorer.empty()) filter_f.scorer_check = filter_scorer;
            return cmd_filter(filter_f, err);
        }
        if (*eval_cmd) return cmd_evaluate(eval_f, err);
        if (*stab_cmd) return cmd_stability(stab_f, err);
        if (*curve_cmd) return cmd_curve(curve_f, err);
        if (*synth_cmd) return cmd_synth(synth_f, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return exit_data;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_data;
    }
    return exit_usage;
}

}  // namespace logitconf::cli

#endif  // LOGITCONF_CLI_HPP
