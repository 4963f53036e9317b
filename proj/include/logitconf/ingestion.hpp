#ifndef LOGITCONF_INGESTION_HPP
#define LOGITCONF_INGESTION_HPP

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "logitconf/calibration.hpp"
#include "logitconf/core.hpp"
#include "logitconf/metrics.hpp"

namespace logitconf {

enum class RecordFormat { ndjson, csv };

inline RecordFormat parse_format(std::string_view name) {
    if (name == "ndjson" || name == "jsonl") return RecordFormat::ndjson;
    if (name == "csv") return RecordFormat::csv;
    throw UsageError("unknown record format '" + std::string(name) + "' (expected ndjson or csv)");
}

inline constexpr int calibration_schema_version = 1;

/// Shortest decimal string that parses back to exactly `v`.
inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Streams with "-" meaning stdin/stdout

class InputFile {
public:
    explicit InputFile(const std::string& path) : path_(path) {
        if (path == "-") return;
        file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
        if (!*file_) throw DataError("cannot open '" + path + "' for reading");
    }
    std::istream& stream() { return file_ ? *file_ : std::cin; }
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
    std::unique_ptr<std::ifstream> file_;
};

class OutputFile {
public:
    explicit OutputFile(const std::string& path) : path_(path) {
        if (path == "-") return;
        file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
        if (!*file_) throw DataError("cannot open '" + path + "' for writing");
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

    /// Flushes and reports any write failure with the path.
    void close() {
        stream().flush();
        if (!stream()) throw DataError("write to '" + path_ + "' failed");
        if (file_) file_->close();
    }

private:
    std::string path_;
    std::unique_ptr<std::ofstream> file_;
};

// ---------------------------------------------------------------------------
// Record reading

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && cur.empty() && !was_quoted) {
            quoted = was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
            was_quoted = false;
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw DataError("line " + std::to_string(line_no) + ": unterminated quote");
    fields.push_back(std::move(cur));
    return fields;
}

inline double parse_double(std::string_view text, std::size_t line_no) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw DataError("line " + std::to_string(line_no) + ": invalid number '" +
                        std::string(text) + "'");
    }
    if (!std::isfinite(value)) {
        throw DataError("line " + std::to_string(line_no) + ": non-finite logit '" +
                        std::string(text) + "'");
    }
    return value;
}

inline std::size_t parse_label(std::string_view text, std::size_t line_no) {
    std::size_t value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw DataError("line " + std::to_string(line_no) + ": invalid label '" +
                        std::string(text) + "'");
    }
    return value;
}

inline bool blank(std::string_view line) {
    return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace detail

/// Streaming record reader. Holds one line at a time and enforces that every
/// record has the same number of logits and that labels are either present on
/// all records or on none.
class RecordReader {
public:
    RecordReader(std::istream& in, RecordFormat format) : in_(in), format_(format) {}

    std::optional<PredictionRecord> next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (format_ == RecordFormat::csv && !header_seen_) {
                read_header(line);
                continue;
            }
            if (detail::blank(line)) continue;
            auto record = format_ == RecordFormat::ndjson ? parse_ndjson(line) : parse_csv(line);
            check_consistency(record);
            return record;
        }
        if (format_ == RecordFormat::csv && !header_seen_ && line_no_ > 0) {
            throw DataError("csv: missing header row");
        }
        return std::nullopt;
    }

    std::size_t line_number() const noexcept { return line_no_; }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw DataError("line " + std::to_string(line_no_) + ": " + what);
    }

    void read_header(const std::string& line) {
        const auto fields = detail::split_csv_line(line, line_no_);
        if (fields.size() < 3 || fields[0] != "id" || fields[1] != "label") {
            fail("csv header must be id,label,l0,...,l{r-1}");
        }
        for (std::size_t j = 2; j < fields.size(); ++j) {
            if (fields[j] != "l" + std::to_string(j - 2)) {
                fail("csv header column " + std::to_string(j) + " must be l" +
                     std::to_string(j - 2));
            }
        }
        csv_columns_ = fields.size();
        header_seen_ = true;
    }

    PredictionRecord parse_ndjson(const std::string& line) const {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail(std::string("malformed JSON: ") + e.what());
        }
        if (!j.is_object()) fail("expected a JSON object");
        if (!j.contains("id") || !j["id"].is_string()) fail("missing string field 'id'");
        if (!j.contains("logits") || !j["logits"].is_array()) fail("missing array field 'logits'");
        std::vector<double> logits;
        logits.reserve(j["logits"].size());
        for (const auto& v : j["logits"]) {
            if (!v.is_number()) fail("logits must be numbers");
            const double d = v.get<double>();
            if (!std::isfinite(d)) fail("non-finite logit");
            logits.push_back(d);
        }
        std::optional<std::size_t> label;
        if (j.contains("label") && !j["label"].is_null()) {
            const auto& l = j["label"];
            if (!l.is_number_integer() || (l.is_number_integer() && l.get<std::int64_t>() < 0)) {
                fail("label must be a non-negative integer");
            }
            label = l.get<std::size_t>();
        }
        return build(j["id"].get<std::string>(), std::move(logits), label);
    }

    PredictionRecord parse_csv(const std::string& line) const {
        const auto fields = detail::split_csv_line(line, line_no_);
        if (fields.size() != csv_columns_) {
            fail("expected " + std::to_string(csv_columns_) + " columns, got " +
                 std::to_string(fields.size()));
        }
        std::optional<std::size_t> label;
        if (!fields[1].empty()) label = detail::parse_label(fields[1], line_no_);
        std::vector<double> logits;
        logits.reserve(fields.size() - 2);
        for (std::size_t k = 2; k < fields.size(); ++k) {
            logits.push_back(detail::parse_double(fields[k], line_no_));
        }
        return build(fields[0], std::move(logits), label);
    }

    PredictionRecord build(std::string id, std::vector<double> logits,
                           std::optional<std::size_t> label) const {
        try {
            return PredictionRecord(std::move(id), std::move(logits), label);
        } catch (const DataError& e) {
            fail(e.what());
        }
    }

    void check_consistency(const PredictionRecord& record) {
        if (!num_classes_) {
            num_classes_ = record.num_classes();
            labeled_ = record.labeled();
            return;
        }
        if (record.num_classes() != *num_classes_) {
            fail("record '" + record.id() + "' has " + std::to_string(record.num_classes()) +
                 " logits, expected " + std::to_string(*num_classes_));
        }
        if (record.labeled() != labeled_) {
            fail("mixed labeled and unlabeled records");
        }
    }

    std::istream& in_;
    RecordFormat format_;
    std::size_t line_no_ = 0;
    bool header_seen_ = false;
    std::size_t csv_columns_ = 0;
    std::optional<std::size_t> num_classes_;
    bool labeled_ = false;
};

inline std::vector<PredictionRecord> read_records(std::istream& in, RecordFormat format) {
    RecordReader reader(in, format);
    std::vector<PredictionRecord> out;
    while (auto rec = reader.next()) out.push_back(std::move(*rec));
    return out;
}

inline std::vector<PredictionRecord> read_records(const std::string& path, RecordFormat format) {
    InputFile file(path);
    try {
        return read_records(file.stream(), format);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Record writing

namespace detail {

inline nlohmann::json record_json(const PredictionRecord& r) {
    nlohmann::json j;
    j["id"] = r.id();
    j["logits"] = std::vector<double>(r.logits().begin(), r.logits().end());
    if (r.label()) j["label"] = *r.label();
    return j;
}

inline std::string csv_escape_id(const std::string& id) {
    if (id.find_first_of("\r\n") != std::string::npos) {
        throw DataError("record id '" + id + "' contains a line break; not representable in csv");
    }
    if (id.find_first_of(",\"") == std::string::npos) return id;
    std::string out = "\"";
    for (char c : id) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace detail

/// Writes records one per line. CSV gets its header before the first record,
/// or on finish() when nothing was written and the class count is known.
class RecordWriter {
public:
    RecordWriter(std::ostream& out, RecordFormat format,
                 std::optional<std::size_t> num_classes = std::nullopt)
        : out_(out), format_(format), num_classes_(num_classes) {}

    void write(const PredictionRecord& r) {
        if (format_ == RecordFormat::ndjson) {
            out_ << detail::record_json(r).dump() << '\n';
            return;
        }
        write_header(r.num_classes());
        out_ << detail::csv_escape_id(r.id()) << ',';
        if (r.label()) out_ << *r.label();
        for (double v : r.logits()) out_ << ',' << format_number(v);
        out_ << '\n';
    }

    /// Scored output keeps the record fields so the file stays readable as input.
    void write(const ScoredPrediction& p) {
        if (format_ == RecordFormat::csv) {
            write(p.record);
            return;
        }
        auto j = detail::record_json(p.record);
        j["predicted_class"] = p.predicted_class;
        j["confidence"] = p.confidence;
        j["scorer"] = std::string(to_string(p.scorer));
        out_ << j.dump() << '\n';
    }

    void finish() {
        if (format_ == RecordFormat::csv && !header_written_ && num_classes_) {
            write_header(*num_classes_);
        }
    }

private:
    void write_header(std::size_t r) {
        if (header_written_) return;
        out_ << "id,label";
        for (std::size_t j = 0; j < r; ++j) out_ << ",l" << j;
        out_ << '\n';
        header_written_ = true;
    }

    std::ostream& out_;
    RecordFormat format_;
    std::optional<std::size_t> num_classes_;
    bool header_written_ = false;
};

inline void write_records(std::ostream& out, std::span<const PredictionRecord> records,
                          RecordFormat format) {
    RecordWriter w(out, format,
                   records.empty() ? std::nullopt
                                   : std::optional<std::size_t>(records.front().num_classes()));
    for (const auto& r : records) w.write(r);
    w.finish();
}

inline void write_records(const std::string& path, std::span<const PredictionRecord> records,
                          RecordFormat format) {
    OutputFile file(path);
    write_records(file.stream(), records, format);
    file.close();
}

// ---------------------------------------------------------------------------
// Calibration artifacts

namespace detail {

inline nlohmann::json threshold_json(double mu) {
    if (mu == accept_all) return "-inf";
    if (mu == reject_all) return "+inf";
    return mu;
}

inline double threshold_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "-inf") return accept_all;
        if (s == "+inf" || s == "inf") return reject_all;
        throw DataError("calibration: bad threshold string '" + s + "'");
    }
    if (!j.is_number()) throw DataError("calibration: threshold_mu must be a number or +/-inf");
    return j.get<double>();
}

template <class T>
T required(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw DataError(std::string("calibration: missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw DataError(std::string("calibration: field '") + key + "' has the wrong type");
    }
}

}  // namespace detail

inline nlohmann::json to_json(const CalibrationArtifact& a) {
    return {
        {"schema_version", calibration_schema_version},
        {"scorer", std::string(to_string(a.scorer))},
        {"confidence_level_q", a.confidence_level_q},
        {"baseline_accuracy_p", a.baseline_accuracy_p},
        {"threshold_mu", detail::threshold_json(a.threshold_mu)},
        {"error_budget_e_mu", a.error_budget_e_mu},
        {"total_errors_e", a.total_errors_e},
        {"testset_size_n", a.testset_size_n},
        {"num_classes_r", a.num_classes_r},
        {"degenerate", a.degenerate},
    };
}

inline CalibrationArtifact calibration_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw DataError("calibration: expected a JSON object");
    const auto version = detail::required<int>(j, "schema_version");
    if (version != calibration_schema_version) {
        throw DataError("calibration: unsupported schema_version " + std::to_string(version) +
                        " (expected " + std::to_string(calibration_schema_version) + ")");
    }
    CalibrationArtifact a;
    try {
        a.scorer = parse_scorer(detail::required<std::string>(j, "scorer"));
    } catch (const UsageError& e) {
        throw DataError(std::string("calibration: ") + e.what());
    }
    a.confidence_level_q = detail::required<double>(j, "confidence_level_q");
    a.baseline_accuracy_p = detail::required<double>(j, "baseline_accuracy_p");
    if (!j.contains("threshold_mu")) throw DataError("calibration: missing field 'threshold_mu'");
    a.threshold_mu = detail::threshold_from_json(j["threshold_mu"]);
    a.error_budget_e_mu = detail::required<std::uint64_t>(j, "error_budget_e_mu");
    a.total_errors_e = detail::required<std::uint64_t>(j, "total_errors_e");
    a.testset_size_n = detail::required<std::uint64_t>(j, "testset_size_n");
    a.num_classes_r = detail::required<std::uint64_t>(j, "num_classes_r");
    a.degenerate = j.value("degenerate", false);
    validate(a);
    return a;
}

inline void write_calibration(std::ostream& out, const CalibrationArtifact& a) {
    out << to_json(a).dump(2) << '\n';
}

inline void write_calibration(const CalibrationArtifact& a, const std::string& path) {
    OutputFile file(path);
    write_calibration(file.stream(), a);
    file.close();
}

inline CalibrationArtifact read_calibration(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("calibration: malformed JSON: ") + e.what());
    }
    return calibration_from_json(j);
}

inline CalibrationArtifact read_calibration(const std::string& path) {
    InputFile file(path);
    try {
        return read_calibration(file.stream());
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json to_json(const SplitReport& r) {
    nlohmann::json j = {
        {"threshold_mu", detail::threshold_json(r.threshold_mu)},
        {"exploit_count", r.exploit_count},
        {"waste_count", r.waste_count},
        {"exploit_ratio", r.exploit_ratio},
    };
    if (r.labeled()) {
        j["exploit_errors_e_mu"] = *r.exploit_errors_e_mu;
        j["exploit_successes_s_mu"] = *r.exploit_successes_s_mu;
        j["enhanced_accuracy"] =
            r.enhanced_accuracy ? nlohmann::json(*r.enhanced_accuracy) : nlohmann::json(nullptr);
        j["baseline_accuracy"] = *r.baseline_accuracy;
    }
    return j;
}

inline SplitReport split_report_from_json(const nlohmann::json& j) {
    SplitReport r;
    r.threshold_mu = detail::threshold_from_json(j.at("threshold_mu"));
    r.exploit_count = j.at("exploit_count").get<std::uint64_t>();
    r.waste_count = j.at("waste_count").get<std::uint64_t>();
    r.exploit_ratio = j.at("exploit_ratio").get<double>();
    if (j.contains("exploit_errors_e_mu")) {
        r.exploit_errors_e_mu = j.at("exploit_errors_e_mu").get<std::uint64_t>();
        r.exploit_successes_s_mu = j.at("exploit_successes_s_mu").get<std::uint64_t>();
        if (!j.at("enhanced_accuracy").is_null()) {
            r.enhanced_accuracy = j.at("enhanced_accuracy").get<double>();
        }
        r.baseline_accuracy = j.at("baseline_accuracy").get<double>();
    }
    return r;
}

/// Exploit and waste as record files in `format`, plus the report as JSON.
inline void write_split(const SplitOutcome& outcome, const std::string& exploit_path,
                        const std::string& waste_path, const std::string& report_path,
                        RecordFormat format = RecordFormat::ndjson) {
    std::optional<std::size_t> r;
    if (!outcome.exploit.empty()) r = outcome.exploit.front().record.num_classes();
    if (!outcome.waste.empty()) r = outcome.waste.front().record.num_classes();

    const auto dump = [&](const std::vector<ScoredPrediction>& items, const std::string& path) {
        OutputFile file(path);
        RecordWriter w(file.stream(), format, r);
        for (const auto& p : items) w.write(p);
        w.finish();
        file.close();
    };
    dump(outcome.exploit, exploit_path);
    dump(outcome.waste, waste_path);

    OutputFile report(report_path);
    report.stream() << to_json(outcome.report).dump(2) << '\n';
    report.close();
}

inline void write_curve_tsv(std::ostream& out, std::span<const CurveRow> rows) {
    out << "rank\tconfidence\tis_error\n";
    for (const auto& row : rows) {
        out << row.rank << '\t' << format_number(row.confidence) << '\t';
        if (row.is_error) {
            out << (*row.is_error ? 1 : 0);
        } else {
            out << "NA";
        }
        out << '\n';
    }
}

inline void write_stability_tsv(std::ostream& out, const StabilityReport& report) {
    const auto opt = [](const std::optional<double>& v) {
        return v ? format_number(*v) : std::string("NA");
    };
    out << "fraction\tsample_size\trepeats\tdefined\tmean\tstddev\tmin\tmax\t"
           "max_abs_deviation\tfull_threshold\n";
    for (const auto& row : report.rows) {
        out << format_number(row.fraction) << '\t' << row.sample_size << '\t'
            << row.cells.size() << '\t' << row.defined << '\t' << opt(row.mean) << '\t'
            << opt(row.stddev) << '\t' << opt(row.min) << '\t' << opt(row.max) << '\t'
            << opt(row.max_abs_deviation) << '\t' << opt(report.full_threshold) << '\n';
    }
}

/// Optional class-name sidecar: one name per line, line k names class k.
inline std::vector<std::string> read_class_names(const std::string& path) {
    InputFile file(path);
    std::vector<std::string> names;
    std::string line;
    while (std::getline(file.stream(), line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        names.push_back(line);
    }
    return names;
}

}  // namespace logitconf

#endif  // LOGITCONF_INGESTION_HPP
