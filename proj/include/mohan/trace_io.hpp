#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mohan/evaluation.hpp"
#include "mohan/predictor.hpp"
#include "mohan/simulator.hpp"
#include "mohan/types.hpp"

namespace mohan {

inline constexpr std::string_view kTraceFormatTag = "mohan-trace/1";
inline constexpr std::string_view kCounterfactualFormatTag = "mohan-cf/1";

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

// Strict full-token parse; throws ParseError naming the line and column.
double parse_double(std::string_view text, long line, const std::string& column);

// A trace as stored on disk: the per-server hop counts fix the column
// layout, and every record must match it.
struct TraceFile {
    std::vector<std::size_t> hops_per_server;
    std::vector<TraceRecord> records;

    std::size_t servers() const noexcept { return hops_per_server.size(); }
};

void write_trace(const TraceFile& trace, std::ostream& out);
void write_trace(const TraceFile& trace, const std::filesystem::path& path);
TraceFile read_trace(std::istream& in);
TraceFile read_trace(const std::filesystem::path& path);

void write_counterfactuals(const CounterfactualTable& table, std::ostream& out);
void write_counterfactuals(const CounterfactualTable& table, const std::filesystem::path& path);
CounterfactualTable read_counterfactuals(std::istream& in);
CounterfactualTable read_counterfactuals(const std::filesystem::path& path);

nlohmann::ordered_json model_to_json(const ModelCoefficients& model);
ModelCoefficients model_from_json(const nlohmann::json& j);
void save_model(const ModelCoefficients& model, const std::filesystem::path& path);
ModelCoefficients load_model(const std::filesystem::path& path);

// delta and theta may be +inf, which JSON cannot hold as a number; they
// serialize as the string "inf".
nlohmann::ordered_json config_to_json(const SelectorConfig& config);
SelectorConfig config_from_json(const nlohmann::json& j);
SelectorConfig load_config(const std::filesystem::path& path);

nlohmann::ordered_json log_entry_to_json(const RunLogEntry& entry);
RunLogEntry log_entry_from_json(const nlohmann::json& j);

// Decision log: one JSON object per line.
void write_run_log(const RunLog& log, std::ostream& out);
void write_run_log(const RunLog& log, const std::filesystem::path& path);
RunLog read_run_log(std::istream& in);
RunLog read_run_log(const std::filesystem::path& path);

void write_stats_csv(std::span<const std::pair<std::string, RunStats>> rows, std::ostream& out);
void write_stats_csv(std::span<const std::pair<std::string, RunStats>> rows,
                     const std::filesystem::path& path);

void write_cdf_csv(std::span<const std::pair<double, double>> steps, std::ostream& out);
void write_cdf_csv(std::span<const std::pair<double, double>> steps,
                   const std::filesystem::path& path);

void write_sweep_csv(std::span<const SweepResult> results, std::ostream& out);
void write_sweep_csv(std::span<const SweepResult> results, const std::filesystem::path& path);

}  // namespace mohan
