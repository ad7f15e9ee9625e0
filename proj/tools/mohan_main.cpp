#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mohan/error.hpp"
#include "mohan/evaluation.hpp"
#include "mohan/predictor.hpp"
#include "mohan/simulator.hpp"
#include "mohan/trace_io.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel g_log_level = LogLevel::Info;

void init_log_level() {
    const char* env = std::getenv("MOHAN_LOG_LEVEL");
    if (env == nullptr) return;
    const std::string value(env);
    if (value == "error") {
        g_log_level = LogLevel::Error;
    } else if (value == "warn") {
        g_log_level = LogLevel::Warn;
    } else if (value == "info") {
        g_log_level = LogLevel::Info;
    } else if (value == "debug") {
        g_log_level = LogLevel::Debug;
    } else {
        std::cerr << "[warn] unknown MOHAN_LOG_LEVEL \"" << value << "\", using info\n";
    }
}

void log_at(LogLevel level, const std::string& tag, const std::string& message) {
    if (level <= g_log_level) std::cerr << '[' << tag << "] " << message << '\n';
}

void log_info(const std::string& message) { log_at(LogLevel::Info, "info", message); }
void log_debug(const std::string& message) { log_at(LogLevel::Debug, "debug", message); }

// Selector knobs shared by run, sweep and replay: config file first, then
// individual flags on top.
struct ConfigArgs {
    std::string config_path;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<double> delta;
    std::optional<double> theta;
};

void add_config_flags(CLI::App& cmd, ConfigArgs& args) {
    cmd.add_option("--config", args.config_path, "selector config JSON file");
    cmd.add_option("--alpha", args.alpha, "latency weight in the composite score, [0,1]");
    cmd.add_option("--beta", args.beta, "reliability memory factor, [0,1]");
    cmd.add_option("--delta", args.delta, "prediction tolerance, >= 0 (inf allowed)");
    cmd.add_option("--theta", args.theta, "handover hysteresis threshold, >= 0 (inf allowed)");
}

mohan::SelectorConfig resolve_config(const ConfigArgs& args, mohan::SelectorConfig base) {
    if (!args.config_path.empty()) base = mohan::load_config(args.config_path);
    if (args.alpha) base.alpha = *args.alpha;
    if (args.beta) base.beta = *args.beta;
    if (args.delta) base.delta = *args.delta;
    if (args.theta) base.theta_handover = *args.theta;
    return mohan::validate_config(base);
}

mohan::Scenario lookup_scenario(const std::string& name) {
    if (name == "standard") return mohan::standard_scenario();
    throw mohan::ValidationError("scenario",
                                 "unknown scenario \"" + name + "\"; available: standard");
}

std::vector<mohan::Policy> resolve_policies(const std::string& name) {
    if (name == "all") {
        return {mohan::Policy::Mohan, mohan::Policy::Nearest, mohan::Policy::RoundRobin,
                mohan::Policy::LowestLatency};
    }
    const auto policy = mohan::policy_from_name(name);
    if (!policy) {
        throw mohan::ValidationError(
            "policy", "unknown policy \"" + name +
                          "\"; use mohan, nearest, roundrobin, lowestlatency or all");
    }
    return {*policy};
}

void write_manifest(const fs::path& path, ordered_json manifest) {
    std::ofstream out(path);
    if (!out) throw mohan::IoError("cannot write " + path.string());
    out << manifest.dump(2) << '\n';
    if (!out) throw mohan::IoError("failed while writing " + path.string());
    log_debug("wrote " + path.string());
}

ordered_json base_manifest(const std::string& command, std::uint64_t seed) {
    ordered_json manifest;
    manifest["command"] = command;
    manifest["seed"] = seed;
    return manifest;
}

// Runs the chosen policies over shared artifacts and writes the decision
// logs, per-policy latency CDFs and the summary table into out_dir.
void run_policies_and_report(const std::vector<mohan::Policy>& policies,
                             const mohan::SelectorConfig& config,
                             const mohan::Topology& topology,
                             std::span<const mohan::TraceRecord> records,
                             const mohan::CounterfactualTable& counterfactuals,
                             const mohan::ModelCoefficients* model, const fs::path& out_dir,
                             ordered_json manifest) {
    std::vector<std::pair<std::string, mohan::RunStats>> table;
    std::vector<std::string> outputs;
    for (const mohan::Policy policy : policies) {
        const std::string name = mohan::policy_name(policy);
        const bool needs_model =
            policy == mohan::Policy::Mohan || policy == mohan::Policy::LowestLatency;
        if (needs_model && model == nullptr) {
            throw mohan::ValidationError(
                "model", "missing model for prediction-based policy \"" + name +
                             "\"; pass --model or restrict --policy");
        }
        const mohan::RunLog log = mohan::run_experiment(policy, config, topology, records,
                                                        counterfactuals, model);
        const fs::path log_path = out_dir / ("log_" + name + ".jsonl");
        mohan::write_run_log(log, log_path);
        outputs.push_back(log_path.string());

        const fs::path cdf_path = out_dir / ("cdf_" + name + ".csv");
        mohan::write_cdf_csv(mohan::cdf(log), cdf_path);
        outputs.push_back(cdf_path.string());

        table.emplace_back(name, mohan::compute_stats(log));
        log_info("policy " + name + ": mean " + mohan::format_double(table.back().second.mean_ms) +
                 " ms, p95 " + mohan::format_double(table.back().second.p95_ms) + " ms");
    }
    const fs::path stats_path = out_dir / "stats.csv";
    mohan::write_stats_csv(table, stats_path);
    outputs.push_back(stats_path.string());
    mohan::write_stats_csv(table, std::cout);

    manifest["config"] = mohan::config_to_json(config);
    manifest["outputs"] = outputs;
    write_manifest(out_dir / "manifest.json", std::move(manifest));
}

int cmd_generate(const std::string& scenario_name, std::uint64_t seed, std::size_t requests,
                 const std::string& out_path, const std::string& cf_path,
                 const std::string& collect_name) {
    mohan::Scenario scenario = lookup_scenario(scenario_name);
    if (requests > 0) scenario.requests = requests;

    mohan::CollectMode mode;
    if (collect_name == "roundrobin") {
        mode = mohan::CollectMode::RoundRobin;
    } else if (collect_name == "nearest") {
        mode = mohan::CollectMode::Nearest;
    } else if (collect_name == "random") {
        mode = mohan::CollectMode::Random;
    } else if (collect_name == "none") {
        mode = mohan::CollectMode::None;
    } else {
        throw mohan::ValidationError("collect", "unknown mode \"" + collect_name +
                                                    "\"; use roundrobin, nearest, random or none");
    }

    mohan::GeneratedTrace trace = mohan::scenario_trace(scenario, seed);
    const mohan::CounterfactualTable counterfactuals =
        mohan::scenario_counterfactuals(scenario, trace, seed);
    trace.records = mohan::apply_collection(trace.records, counterfactuals, mode,
                                            scenario.topology.nearest, seed);

    mohan::TraceFile file;
    file.hops_per_server = scenario.topology.hops_per_server;
    file.records = std::move(trace.records);
    mohan::write_trace(file, fs::path(out_path));
    log_info("wrote " + std::to_string(file.records.size()) + " records to " + out_path);

    std::vector<std::string> outputs{out_path};
    if (!cf_path.empty()) {
        mohan::write_counterfactuals(counterfactuals, fs::path(cf_path));
        outputs.push_back(cf_path);
        log_info("wrote counterfactual table to " + cf_path);
    }

    ordered_json manifest = base_manifest("generate", seed);
    manifest["scenario"] = scenario_name;
    manifest["requests"] = scenario.requests;
    manifest["collect"] = collect_name;
    manifest["outputs"] = outputs;
    write_manifest(fs::path(out_path + ".manifest.json"), std::move(manifest));
    return 0;
}

int cmd_fit(const std::string& trace_path, const std::string& out_path, std::uint64_t seed,
            double holdout) {
    const mohan::TraceFile trace = mohan::read_trace(fs::path(trace_path));
    std::vector<mohan::FitSample> samples;
    for (const mohan::TraceRecord& record : trace.records) {
        if (!record.served_by()) continue;
        samples.push_back(mohan::FitSample{record.paths()[record.served_by()->value].hops(),
                                           *record.observed_ms()});
    }
    log_info("trace " + trace_path + ": " + std::to_string(trace.records.size()) + " records, " +
             std::to_string(samples.size()) + " served");

    mohan::FitOptions options;
    options.seed = seed;
    options.holdout_fraction = holdout;
    const mohan::FitReport report = mohan::fit_paths(samples, options);

    mohan::save_model(report.coefficients, fs::path(out_path));
    std::cout << "model " << out_path << " r_squared " << mohan::format_double(report.r_squared)
              << " holdout_rmse_ms " << mohan::format_double(report.holdout_rmse) << " converged "
              << (report.converged ? "true" : "false") << '\n';

    ordered_json manifest = base_manifest("fit", seed);
    manifest["trace"] = trace_path;
    manifest["samples"] = samples.size();
    manifest["holdout_fraction"] = holdout;
    manifest["r_squared"] = report.r_squared;
    manifest["training_rmse_ms"] = report.training_rmse;
    manifest["holdout_rmse_ms"] = report.holdout_rmse;
    manifest["converged"] = report.converged;
    manifest["outputs"] = {out_path};
    write_manifest(fs::path(out_path + ".manifest.json"), std::move(manifest));
    return 0;
}

int cmd_run(const std::string& scenario_name, std::uint64_t seed, std::size_t requests,
            const std::string& policy_name, const ConfigArgs& config_args,
            const std::string& out_dir_path) {
    mohan::Scenario scenario = lookup_scenario(scenario_name);
    if (requests > 0) scenario.requests = requests;
    scenario.config = resolve_config(config_args, scenario.config);

    const std::vector<mohan::Policy> policies = resolve_policies(policy_name);

    const fs::path out_dir(out_dir_path);
    fs::create_directories(out_dir);

    log_info("preparing scenario \"" + scenario_name + "\" with seed " + std::to_string(seed));
    const mohan::ScenarioArtifacts artifacts = mohan::prepare_scenario(scenario, seed);
    log_info("fitted model: r_squared " + mohan::format_double(artifacts.fit.r_squared) +
             ", holdout rmse " + mohan::format_double(artifacts.fit.holdout_rmse) + " ms");

    mohan::save_model(artifacts.fit.coefficients, out_dir / "model.json");

    ordered_json manifest = base_manifest("run", seed);
    manifest["scenario"] = scenario_name;
    manifest["requests"] = scenario.requests;
    manifest["policy"] = policy_name;
    run_policies_and_report(policies, scenario.config, scenario.topology,
                            artifacts.trace.records, artifacts.counterfactuals,
                            &artifacts.fit.coefficients, out_dir, std::move(manifest));
    return 0;
}

int cmd_sweep(const std::string& scenario_name, std::uint64_t seed, std::size_t requests,
              const ConfigArgs& config_args, std::vector<double> alphas,
              std::vector<double> betas, std::vector<double> deltas, std::vector<double> thetas,
              const std::string& out_path) {
    mohan::Scenario scenario = lookup_scenario(scenario_name);
    if (requests > 0) scenario.requests = requests;
    scenario.config = resolve_config(config_args, scenario.config);

    mohan::SweepGrid grid;
    if (!alphas.empty()) grid.alphas = std::move(alphas);
    if (!betas.empty()) grid.betas = std::move(betas);
    if (!deltas.empty()) grid.deltas = std::move(deltas);
    if (!thetas.empty()) grid.thetas = std::move(thetas);

    log_info("sweeping " +
             std::to_string(grid.alphas.size() * grid.betas.size() * grid.deltas.size() *
                            grid.thetas.size()) +
             " grid points");
    const std::vector<mohan::SweepResult> results = mohan::sweep(grid, scenario, seed);
    mohan::write_sweep_csv(results, fs::path(out_path));
    mohan::write_sweep_csv(results, std::cout);

    ordered_json manifest = base_manifest("sweep", seed);
    manifest["scenario"] = scenario_name;
    manifest["requests"] = scenario.requests;
    manifest["alphas"] = grid.alphas;
    manifest["betas"] = grid.betas;
    manifest["deltas"] = grid.deltas;
    manifest["thetas"] = grid.thetas;
    manifest["outputs"] = {out_path};
    write_manifest(fs::path(out_path + ".manifest.json"), std::move(manifest));
    return 0;
}

int cmd_replay(const std::string& trace_path, const std::string& cf_path,
               const std::string& model_path, std::size_t nearest,
               const std::string& policy_name, const ConfigArgs& config_args,
               const std::string& out_dir_path) {
    const mohan::TraceFile trace = mohan::read_trace(fs::path(trace_path));
    const mohan::CounterfactualTable counterfactuals =
        mohan::read_counterfactuals(fs::path(cf_path));
    if (counterfactuals.servers != trace.servers()) {
        throw mohan::ValidationError("cf", "counterfactual table has " +
                                               std::to_string(counterfactuals.servers) +
                                               " servers, trace has " +
                                               std::to_string(trace.servers()));
    }
    if (counterfactuals.latency_ms.size() < trace.records.size()) {
        throw mohan::ValidationError("cf", "counterfactual table covers fewer requests than "
                                           "the trace");
    }

    std::optional<mohan::ModelCoefficients> model;
    if (!model_path.empty()) model = mohan::load_model(fs::path(model_path));

    mohan::Topology topology;
    topology.servers = trace.servers();
    topology.hops_per_server = trace.hops_per_server;
    topology.nearest = mohan::ServerId(nearest);

    const mohan::SelectorConfig config = resolve_config(config_args, mohan::SelectorConfig{});
    const std::vector<mohan::Policy> policies = resolve_policies(policy_name);

    const fs::path out_dir(out_dir_path);
    fs::create_directories(out_dir);

    ordered_json manifest = base_manifest("replay", 0);
    manifest.erase("seed");
    manifest["trace"] = trace_path;
    manifest["cf"] = cf_path;
    if (!model_path.empty()) manifest["model"] = model_path;
    manifest["policy"] = policy_name;
    run_policies_and_report(policies, config, topology, trace.records, counterfactuals,
                            model ? &*model : nullptr, out_dir, std::move(manifest));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    init_log_level();

    CLI::App app{"edge server selection: simulate, fit, run, sweep, replay"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    std::string scenario_name = "standard";
    std::size_t requests = 0;  // 0 keeps the scenario default

    // generate
    auto* generate = app.add_subcommand("generate", "generate a monitored request trace");
    std::string gen_out;
    std::string gen_cf;
    std::string gen_collect = "roundrobin";
    generate->add_option("--seed", seed, "run seed")->capture_default_str();
    generate->add_option("--scenario", scenario_name, "scenario name")->capture_default_str();
    generate->add_option("--requests", requests, "request count (0 keeps the scenario default)");
    generate->add_option("--out", gen_out, "trace CSV output path")->required();
    generate->add_option("--cf", gen_cf, "also write the counterfactual latency table here");
    generate->add_option("--collect", gen_collect,
                         "how served_by/observed_ms get filled: roundrobin, nearest, random, none")
        ->capture_default_str();

    // fit
    auto* fit = app.add_subcommand("fit", "fit the latency model on a trace's served rows");
    std::string fit_trace;
    std::string fit_out;
    double fit_holdout = 0.2;
    fit->add_option("--trace", fit_trace, "input trace CSV")->required();
    fit->add_option("--out", fit_out, "model JSON output path")->required();
    fit->add_option("--seed", seed, "holdout split and multi-start seed")->capture_default_str();
    fit->add_option("--holdout", fit_holdout, "holdout fraction")->capture_default_str();

    // run
    auto* run = app.add_subcommand("run", "simulate a scenario and compare policies");
    std::string run_policy = "all";
    std::string run_out;
    ConfigArgs run_config;
    run->add_option("--scenario", scenario_name, "scenario name (required)");
    run->add_option("--seed", seed, "run seed")->capture_default_str();
    run->add_option("--requests", requests, "request count (0 keeps the scenario default)");
    run->add_option("--policy", run_policy, "mohan, nearest, roundrobin, lowestlatency or all")
        ->capture_default_str();
    add_config_flags(*run, run_config);
    run->add_option("--out", run_out, "output directory")->required();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "grid-sweep selector parameters");
    std::vector<double> sweep_alphas;
    std::vector<double> sweep_betas;
    std::vector<double> sweep_deltas;
    std::vector<double> sweep_thetas;
    std::string sweep_out;
    ConfigArgs sweep_config;
    sweep->add_option("--scenario", scenario_name, "scenario name")->capture_default_str();
    sweep->add_option("--seed", seed, "run seed")->capture_default_str();
    sweep->add_option("--requests", requests, "request count (0 keeps the scenario default)");
    sweep->add_option("--alpha", sweep_alphas, "alpha values")->delimiter(',');
    sweep->add_option("--beta", sweep_betas, "beta values")->delimiter(',');
    sweep->add_option("--delta", sweep_deltas, "delta values")->delimiter(',');
    sweep->add_option("--theta", sweep_thetas, "theta values")->delimiter(',');
    sweep->add_option("--config", sweep_config.config_path, "selector config JSON file");
    sweep->add_option("--out", sweep_out, "sweep CSV output path")->required();

    // replay
    auto* replay = app.add_subcommand("replay", "drive policies over an existing trace");
    std::string replay_trace;
    std::string replay_cf;
    std::string replay_model;
    std::size_t replay_nearest = 0;
    std::string replay_policy = "all";
    std::string replay_out;
    ConfigArgs replay_config;
    replay->add_option("--trace", replay_trace, "input trace CSV")->required();
    replay->add_option("--cf", replay_cf, "counterfactual latency table CSV")->required();
    replay->add_option("--model", replay_model, "model JSON (needed by mohan and lowestlatency)");
    replay->add_option("--nearest", replay_nearest, "index of the nearest server")
        ->capture_default_str();
    replay->add_option("--policy", replay_policy,
                       "mohan, nearest, roundrobin, lowestlatency or all")
        ->capture_default_str();
    add_config_flags(*replay, replay_config);
    replay->add_option("--out", replay_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            return cmd_generate(scenario_name, seed, requests, gen_out, gen_cf, gen_collect);
        }
        if (fit->parsed()) {
            return cmd_fit(fit_trace, fit_out, seed, fit_holdout);
        }
        if (run->parsed()) {
            if (run->count("--scenario") == 0) {
                throw mohan::ValidationError(
                    "scenario", "required; run simulates a scenario. To drive policies over an "
                                "existing trace use the replay subcommand");
            }
            return cmd_run(scenario_name, seed, requests, run_policy, run_config, run_out);
        }
        if (sweep->parsed()) {
            return cmd_sweep(scenario_name, seed, requests, sweep_config, sweep_alphas,
                             sweep_betas, sweep_deltas, sweep_thetas, sweep_out);
        }
        if (replay->parsed()) {
            return cmd_replay(replay_trace, replay_cf, replay_model, replay_nearest,
                              replay_policy, replay_config, replay_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
