#include "mohan/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "mohan/error.hpp"

namespace mohan {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

// getline with Windows line endings tolerated
bool next_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

std::size_t parse_index(std::string_view text, long line, const std::string& column) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError("column " + column + ": expected a non-negative integer, got \"" +
                             std::string(text) + "\"",
                         line);
    }
    return value;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    return in;
}

void check_stream_wrote(const std::ostream& out, const std::filesystem::path& path) {
    if (!out) throw IoError("failed while writing " + path.string());
}

double json_number(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) throw ParseError("missing field \"" + key + "\"");
    if (!j[key].is_number()) throw ParseError("field \"" + key + "\" must be a number");
    return j[key].get<double>();
}

// Accepts a plain number or the string "inf".
double json_number_or_inf(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) throw ParseError("missing field \"" + key + "\"");
    const auto& v = j[key];
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw ParseError("field \"" + key + "\" must be a number or \"inf\"");
    }
    if (!v.is_number()) throw ParseError("field \"" + key + "\" must be a number or \"inf\"");
    return v.get<double>();
}

nlohmann::ordered_json number_or_inf_json(double v) {
    if (std::isinf(v)) return "inf";
    return v;
}

std::array<double, FeatureVector::kFeatures> json_triple(const nlohmann::json& j,
                                                         const std::string& key) {
    if (!j.contains(key)) throw ParseError("missing field \"" + key + "\"");
    const auto& v = j[key];
    if (!v.is_array() || v.size() != FeatureVector::kFeatures) {
        throw ParseError("field \"" + key + "\" must be an array of " +
                         std::to_string(FeatureVector::kFeatures) + " numbers");
    }
    std::array<double, FeatureVector::kFeatures> out{};
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!v[i].is_number()) throw ParseError("field \"" + key + "\" must hold numbers");
        out[i] = v[i].get<double>();
    }
    return out;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw OverflowError("cannot format value");
    return std::string(buf, ptr);
}

double parse_double(std::string_view text, long line, const std::string& column) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError("column " + column + ": expected a number, got \"" + std::string(text) +
                             "\"",
                         line);
    }
    return value;
}

void write_trace(const TraceFile& trace, std::ostream& out) {
    if (trace.hops_per_server.empty()) {
        throw ValidationError("hops_per_server", "trace needs at least one server column group");
    }
    out << "# " << kTraceFormatTag << '\n';
    out << "t_s,frame_bytes";
    for (std::size_t j = 0; j < trace.hops_per_server.size(); ++j) {
        for (std::size_t k = 0; k < trace.hops_per_server[j]; ++k) {
            out << ",s" << j << "_h" << k << "_util,s" << j << "_h" << k << "_pps";
        }
    }
    out << ",served_by,observed_ms\n";

    for (std::size_t t = 0; t < trace.records.size(); ++t) {
        const TraceRecord& record = trace.records[t];
        if (record.server_count() != trace.servers()) {
            throw ValidationError("records", "record " + std::to_string(t) +
                                                 " does not match the column layout");
        }
        out << format_double(record.timestamp_s()) << ',' << format_double(record.frame_bytes());
        for (std::size_t j = 0; j < trace.servers(); ++j) {
            const auto& hops = record.paths()[j].hops();
            if (hops.size() != trace.hops_per_server[j]) {
                throw ValidationError("records", "record " + std::to_string(t) +
                                                     " does not match the column layout");
            }
            for (const FeatureVector& hop : hops) {
                if (hop.payload_bytes() != record.frame_bytes()) {
                    throw ValidationError("records",
                                          "hop payload differs from frame_bytes; the trace format "
                                          "stores one frame size per request");
                }
                out << ',' << format_double(hop.utilization()) << ','
                    << format_double(hop.arrival_rate());
            }
        }
        out << ',';
        if (record.served_by()) out << record.served_by()->value;
        out << ',';
        if (record.observed_ms()) out << format_double(*record.observed_ms());
        out << '\n';
    }
}

void write_trace(const TraceFile& trace, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_trace(trace, out);
    check_stream_wrote(out, path);
}

TraceFile read_trace(std::istream& in) {
    std::string line;
    if (!next_line(in, line)) throw ParseError("empty input, expected \"# mohan-trace/1\"", 1);
    if (line != std::string("# ") + std::string(kTraceFormatTag)) {
        throw ParseError("unrecognized format tag \"" + line + "\", expected \"# mohan-trace/1\"",
                         1);
    }
    if (!next_line(in, line)) throw ParseError("missing header row", 2);
    const std::vector<std::string> header = split_csv(line);
    if (header.size() < 6 || header[0] != "t_s" || header[1] != "frame_bytes") {
        throw ParseError("header must start with t_s,frame_bytes", 2);
    }
    if (header[header.size() - 2] != "served_by" || header.back() != "observed_ms") {
        throw ParseError("header must end with served_by,observed_ms", 2);
    }

    TraceFile trace;
    std::size_t i = 2;
    const std::size_t mid_end = header.size() - 2;
    std::size_t j = 0;
    while (i < mid_end) {
        std::size_t k = 0;
        while (i < mid_end) {
            const std::string util_name =
                "s" + std::to_string(j) + "_h" + std::to_string(k) + "_util";
            if (header[i] != util_name) break;
            const std::string pps_name =
                "s" + std::to_string(j) + "_h" + std::to_string(k) + "_pps";
            if (i + 1 >= mid_end || header[i + 1] != pps_name) {
                throw ParseError("column \"" +
                                     (i + 1 < mid_end ? header[i + 1] : std::string("<none>")) +
                                     "\" unexpected, expected \"" + pps_name + "\"",
                                 2);
            }
            i += 2;
            ++k;
        }
        if (k == 0) {
            throw ParseError("column \"" + header[i] + "\" unexpected, expected \"s" +
                                 std::to_string(j) + "_h0_util\"",
                             2);
        }
        trace.hops_per_server.push_back(k);
        ++j;
    }
    if (trace.hops_per_server.empty()) throw ParseError("trace has no server columns", 2);

    const std::size_t expected_fields = header.size();
    long line_no = 2;
    while (next_line(in, line)) {
        ++line_no;
        const std::vector<std::string> fields = split_csv(line);
        if (fields.size() != expected_fields) {
            throw ParseError("expected " + std::to_string(expected_fields) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        const double t_s = parse_double(fields[0], line_no, "t_s");
        const double frame = parse_double(fields[1], line_no, "frame_bytes");
        std::vector<PathDescriptor> paths;
        paths.reserve(trace.servers());
        std::size_t f = 2;
        try {
            for (std::size_t srv = 0; srv < trace.servers(); ++srv) {
                std::vector<FeatureVector> hops;
                hops.reserve(trace.hops_per_server[srv]);
                for (std::size_t hop = 0; hop < trace.hops_per_server[srv]; ++hop) {
                    const std::string util_col =
                        "s" + std::to_string(srv) + "_h" + std::to_string(hop) + "_util";
                    const std::string pps_col =
                        "s" + std::to_string(srv) + "_h" + std::to_string(hop) + "_pps";
                    const double util = parse_double(fields[f], line_no, util_col);
                    const double pps = parse_double(fields[f + 1], line_no, pps_col);
                    f += 2;
                    if (!(std::isfinite(util) && util >= 0.0 && util <= 1.0)) {
                        std::string msg = "column " + util_col +
                                          ": utilization must be a fraction in [0,1]";
                        if (util > 1.0 && util <= 100.0) {
                            msg += "; " + format_double(util) +
                                   " looks like a percentage, divide by 100";
                        }
                        throw ParseError(msg, line_no);
                    }
                    hops.emplace_back(frame, util, pps);
                }
                paths.emplace_back(ServerId(srv), std::move(hops));
            }
            std::optional<ServerId> served;
            std::optional<double> observed;
            if (!fields[expected_fields - 2].empty()) {
                served = ServerId(parse_index(fields[expected_fields - 2], line_no, "served_by"));
            }
            if (!fields[expected_fields - 1].empty()) {
                observed = parse_double(fields[expected_fields - 1], line_no, "observed_ms");
            }
            trace.records.emplace_back(t_s, frame, std::move(paths), served, observed);
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return trace;
}

TraceFile read_trace(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_trace(in);
}

void write_counterfactuals(const CounterfactualTable& table, std::ostream& out) {
    if (table.servers == 0) throw ValidationError("counterfactuals", "table has no servers");
    out << "# " << kCounterfactualFormatTag << '\n';
    out << "t";
    for (std::size_t j = 0; j < table.servers; ++j) out << ",s" << j << "_ms";
    out << '\n';
    for (std::size_t t = 0; t < table.latency_ms.size(); ++t) {
        const auto& row = table.latency_ms[t];
        if (row.size() != table.servers) {
            throw ValidationError("counterfactuals",
                                  "row " + std::to_string(t) + " does not match the server count");
        }
        out << t;
        for (double v : row) out << ',' << format_double(v);
        out << '\n';
    }
}

void write_counterfactuals(const CounterfactualTable& table, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_counterfactuals(table, out);
    check_stream_wrote(out, path);
}

CounterfactualTable read_counterfactuals(std::istream& in) {
    std::string line;
    if (!next_line(in, line)) throw ParseError("empty input, expected \"# mohan-cf/1\"", 1);
    if (line != std::string("# ") + std::string(kCounterfactualFormatTag)) {
        throw ParseError("unrecognized format tag \"" + line + "\", expected \"# mohan-cf/1\"", 1);
    }
    if (!next_line(in, line)) throw ParseError("missing header row", 2);
    const std::vector<std::string> header = split_csv(line);
    if (header.size() < 2 || header[0] != "t") {
        throw ParseError("header must start with t", 2);
    }
    CounterfactualTable table;
    table.servers = header.size() - 1;
    for (std::size_t j = 0; j < table.servers; ++j) {
        const std::string expected = "s" + std::to_string(j) + "_ms";
        if (header[j + 1] != expected) {
            throw ParseError("column \"" + header[j + 1] + "\" unexpected, expected \"" +
                                 expected + "\"",
                             2);
        }
    }
    long line_no = 2;
    while (next_line(in, line)) {
        ++line_no;
        const std::vector<std::string> fields = split_csv(line);
        if (fields.size() != table.servers + 1) {
            throw ParseError("expected " + std::to_string(table.servers + 1) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        const std::size_t t = parse_index(fields[0], line_no, "t");
        if (t != table.latency_ms.size()) {
            throw ParseError("column t: expected row index " +
                                 std::to_string(table.latency_ms.size()) + ", got " +
                                 std::to_string(t),
                             line_no);
        }
        std::vector<double> row;
        row.reserve(table.servers);
        for (std::size_t j = 0; j < table.servers; ++j) {
            const std::string column = "s" + std::to_string(j) + "_ms";
            const double v = parse_double(fields[j + 1], line_no, column);
            if (!(std::isfinite(v) && v > 0.0)) {
                throw ParseError("column " + column + ": latency must be positive", line_no);
            }
            row.push_back(v);
        }
        table.latency_ms.push_back(std::move(row));
    }
    return table;
}

CounterfactualTable read_counterfactuals(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_counterfactuals(in);
}

nlohmann::ordered_json model_to_json(const ModelCoefficients& model) {
    nlohmann::ordered_json j;
    j["a"] = model.a;
    j["b"] = model.b;
    j["c"] = model.c;
    j["d"] = model.d;
    j["exp_feature_index"] = model.exp_feature_index;
    j["scaler"] = {{"mean", model.scaler.mean}, {"std", model.scaler.stddev}};
    return j;
}

ModelCoefficients model_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("model must be a JSON object");
    ModelCoefficients model;
    model.a = json_triple(j, "a");
    model.b = json_triple(j, "b");
    model.c = json_number(j, "c");
    model.d = json_number(j, "d");
    if (!j.contains("exp_feature_index") || !j["exp_feature_index"].is_number_unsigned()) {
        throw ParseError("missing or invalid field \"exp_feature_index\"");
    }
    model.exp_feature_index = j["exp_feature_index"].get<std::size_t>();
    if (model.exp_feature_index >= FeatureVector::kFeatures) {
        throw ParseError("field \"exp_feature_index\" out of range");
    }
    if (!j.contains("scaler") || !j["scaler"].is_object()) {
        throw ParseError("missing field \"scaler\"");
    }
    model.scaler.mean = json_triple(j["scaler"], "mean");
    model.scaler.stddev = json_triple(j["scaler"], "std");
    for (double s : model.scaler.stddev) {
        if (!(std::isfinite(s) && s > 0.0)) {
            throw ParseError("field \"scaler.std\" entries must be positive");
        }
    }
    return model;
}

void save_model(const ModelCoefficients& model, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << model_to_json(model).dump(2) << '\n';
    check_stream_wrote(out, path);
}

ModelCoefficients load_model(const std::filesystem::path& path) {
    auto in = open_in(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    return model_from_json(j);
}

nlohmann::ordered_json config_to_json(const SelectorConfig& config) {
    nlohmann::ordered_json j;
    j["alpha"] = config.alpha;
    j["beta"] = config.beta;
    j["delta"] = number_or_inf_json(config.delta);
    j["theta"] = number_or_inf_json(config.theta_handover);
    j["initial_reliability"] = config.initial_reliability;
    return j;
}

SelectorConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("config must be a JSON object");
    SelectorConfig config;
    if (j.contains("alpha")) config.alpha = json_number(j, "alpha");
    if (j.contains("beta")) config.beta = json_number(j, "beta");
    if (j.contains("delta")) config.delta = json_number_or_inf(j, "delta");
    if (j.contains("theta")) config.theta_handover = json_number_or_inf(j, "theta");
    if (j.contains("initial_reliability")) {
        const auto& v = j["initial_reliability"];
        if (!v.is_array()) throw ParseError("field \"initial_reliability\" must be an array");
        for (const auto& r : v) {
            if (!r.is_number()) {
                throw ParseError("field \"initial_reliability\" must hold numbers");
            }
            config.initial_reliability.push_back(r.get<double>());
        }
    }
    return validate_config(config);
}

SelectorConfig load_config(const std::filesystem::path& path) {
    auto in = open_in(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    return config_from_json(j);
}

nlohmann::ordered_json log_entry_to_json(const RunLogEntry& entry) {
    nlohmann::ordered_json j;
    j["t"] = entry.t;
    j["policy"] = policy_name(entry.policy);
    j["selected"] = entry.selected.value;
    j["handover"] = entry.handover;
    j["scores"] = entry.scores;
    j["predicted"] = entry.predicted;
    j["reliability"] = entry.reliability;
    if (entry.observed_ms) {
        j["observed"] = *entry.observed_ms;
    } else {
        j["observed"] = nullptr;
    }
    j["reason"] = reason_name(entry.reason);
    return j;
}

RunLogEntry log_entry_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("log entry must be a JSON object");
    RunLogEntry entry;
    if (!j.contains("t") || !j["t"].is_number_unsigned()) {
        throw ParseError("missing or invalid field \"t\"");
    }
    entry.t = j["t"].get<std::size_t>();
    if (!j.contains("policy") || !j["policy"].is_string()) {
        throw ParseError("missing or invalid field \"policy\"");
    }
    const auto policy = policy_from_name(j["policy"].get<std::string>());
    if (!policy) throw ParseError("unknown policy \"" + j["policy"].get<std::string>() + "\"");
    entry.policy = *policy;
    if (!j.contains("selected") || !j["selected"].is_number_unsigned()) {
        throw ParseError("missing or invalid field \"selected\"");
    }
    entry.selected = ServerId(j["selected"].get<std::size_t>());
    if (!j.contains("handover") || !j["handover"].is_boolean()) {
        throw ParseError("missing or invalid field \"handover\"");
    }
    entry.handover = j["handover"].get<bool>();
    for (const char* key : {"scores", "predicted", "reliability"}) {
        if (!j.contains(key) || !j[key].is_array()) {
            throw ParseError(std::string("missing or invalid field \"") + key + "\"");
        }
    }
    entry.scores = j["scores"].get<std::vector<double>>();
    entry.predicted = j["predicted"].get<std::vector<double>>();
    entry.reliability = j["reliability"].get<std::vector<double>>();
    if (!j.contains("observed")) throw ParseError("missing field \"observed\"");
    if (j["observed"].is_null()) {
        entry.observed_ms.reset();
    } else if (j["observed"].is_number()) {
        entry.observed_ms = j["observed"].get<double>();
    } else {
        throw ParseError("field \"observed\" must be a number or null");
    }
    if (!j.contains("reason") || !j["reason"].is_string()) {
        throw ParseError("missing or invalid field \"reason\"");
    }
    const std::string reason = j["reason"].get<std::string>();
    bool matched = false;
    for (DecisionReason candidate :
         {DecisionReason::FirstDecision, DecisionReason::KeptSame, DecisionReason::HysteresisHold,
          DecisionReason::Handover, DecisionReason::BaselinePolicy}) {
        if (reason_name(candidate) == reason) {
            entry.reason = candidate;
            matched = true;
            break;
        }
    }
    if (!matched) throw ParseError("unknown reason \"" + reason + "\"");
    return entry;
}

void write_run_log(const RunLog& log, std::ostream& out) {
    for (const RunLogEntry& entry : log.entries) {
        out << log_entry_to_json(entry).dump() << '\n';
    }
}

void write_run_log(const RunLog& log, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_run_log(log, out);
    check_stream_wrote(out, path);
}

RunLog read_run_log(std::istream& in) {
    RunLog log;
    std::string line;
    long line_no = 0;
    while (next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
        }
        try {
            log.entries.push_back(log_entry_from_json(j));
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    if (!log.entries.empty()) log.policy = log.entries.front().policy;
    return log;
}

RunLog read_run_log(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_run_log(in);
}

void write_stats_csv(std::span<const std::pair<std::string, RunStats>> rows, std::ostream& out) {
    out << "policy,mean_ms,median_ms,p95_ms,handover_rate_pct,count\n";
    for (const auto& [name, stats] : rows) {
        out << name << ',' << format_double(stats.mean_ms) << ',' << format_double(stats.median_ms)
            << ',' << format_double(stats.p95_ms) << ','
            << format_double(stats.handover_rate * 100.0) << ',' << stats.count << '\n';
    }
}

void write_stats_csv(std::span<const std::pair<std::string, RunStats>> rows,
                     const std::filesystem::path& path) {
    auto out = open_out(path);
    write_stats_csv(rows, out);
    check_stream_wrote(out, path);
}

void write_cdf_csv(std::span<const std::pair<double, double>> steps, std::ostream& out) {
    out << "latency_ms,fraction\n";
    for (const auto& [latency, fraction] : steps) {
        out << format_double(latency) << ',' << format_double(fraction) << '\n';
    }
}

void write_cdf_csv(std::span<const std::pair<double, double>> steps,
                   const std::filesystem::path& path) {
    auto out = open_out(path);
    write_cdf_csv(steps, out);
    check_stream_wrote(out, path);
}

void write_sweep_csv(std::span<const SweepResult> results, std::ostream& out) {
    out << "alpha,beta,delta,theta,mean_ms,median_ms,p95_ms,hr_pct,pareto\n";
    for (const SweepResult& r : results) {
        out << format_double(r.alpha) << ',' << format_double(r.beta) << ','
            << format_double(r.delta) << ',' << format_double(r.theta) << ','
            << format_double(r.stats.mean_ms) << ',' << format_double(r.stats.median_ms) << ','
            << format_double(r.stats.p95_ms) << ','
            << format_double(r.stats.handover_rate * 100.0) << ','
            << (r.pareto ? "true" : "false") << '\n';
    }
}

void write_sweep_csv(std::span<const SweepResult> results, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_sweep_csv(results, out);
    check_stream_wrote(out, path);
}

}  // namespace mohan
