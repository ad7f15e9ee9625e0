#include "mohan/simulator.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "mohan/error.hpp"
#include "mohan/rng.hpp"

namespace mohan {
namespace {

constexpr std::uint64_t kTraceTag = 0x7261ce;
constexpr std::uint64_t kCounterfactualTag = 0xcf;
constexpr std::uint64_t kFitTag = 0xf17;
constexpr std::uint64_t kCollectTag = 0xc0;

constexpr double kFrameBytesLo = 400000.0;
constexpr double kFrameBytesHi = 600000.0;
constexpr double kMeanGapSeconds = 0.1;

bool finite_range(const ValueRange& r) {
    return std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi;
}

}  // namespace

void validate_topology(const Topology& topology) {
    if (topology.servers < 2) {
        throw ValidationError("servers", "need at least 2 candidate servers");
    }
    if (topology.hops_per_server.size() != topology.servers) {
        throw ValidationError("hops_per_server",
                              "expected one hop count per server, got " +
                                  std::to_string(topology.hops_per_server.size()) + " for " +
                                  std::to_string(topology.servers) + " servers");
    }
    for (std::size_t j = 0; j < topology.servers; ++j) {
        if (topology.hops_per_server[j] < 1) {
            throw ValidationError("hops_per_server",
                                  "server " + std::to_string(j) + " has zero hops");
        }
    }
    if (topology.nearest.value >= topology.servers) {
        throw ValidationError("nearest", "server index " + std::to_string(topology.nearest.value) +
                                             " out of range");
    }
}

void validate_load_process(const LoadProcess& load) {
    for (std::size_t s = 0; s < 3; ++s) {
        double row_sum = 0.0;
        for (double p : load.transition[s]) {
            if (!std::isfinite(p) || p < 0.0) {
                throw ValidationError("transition",
                                      "row " + std::to_string(s) + " has a negative or non-finite entry");
            }
            row_sum += p;
        }
        if (std::abs(row_sum - 1.0) > 1e-12) {
            throw ValidationError("transition",
                                  "row " + std::to_string(s) + " sums to " + std::to_string(row_sum) +
                                      ", expected 1");
        }
        if (!finite_range(load.utilization[s]) || load.utilization[s].lo < 0.0 ||
            load.utilization[s].hi > 1.0) {
            throw ValidationError("utilization",
                                  "state " + std::to_string(s) + " range must lie inside [0,1]");
        }
        if (!finite_range(load.arrival_rate[s]) || load.arrival_rate[s].lo < 0.0) {
            throw ValidationError("arrival_rate",
                                  "state " + std::to_string(s) + " range must be non-negative");
        }
    }
}

LoadProcess default_load_process() {
    LoadProcess load;
    load.transition = {{{0.90, 0.08, 0.02},  //
                        {0.20, 0.70, 0.10},
                        {0.30, 0.30, 0.40}}};
    load.utilization = {ValueRange{0.05, 0.35}, ValueRange{0.30, 0.70}, ValueRange{0.50, 0.90}};
    load.arrival_rate = {ValueRange{200.0, 800.0}, ValueRange{800.0, 2000.0},
                         ValueRange{1500.0, 3500.0}};
    return load;
}

void validate_ground_truth(const GroundTruth& truth) {
    if (!std::isfinite(truth.sigma_noise) || truth.sigma_noise < 0.0) {
        throw ValidationError("sigma_noise", "must be finite and non-negative");
    }
    if (!std::isfinite(truth.burst_penalty) || truth.burst_penalty < 1.0) {
        throw ValidationError("burst_penalty", "must be finite and at least 1");
    }
    if (truth.true_coefficients.exp_feature_index >= FeatureVector::kFeatures) {
        throw ValidationError("exp_feature_index", "out of range");
    }
}

GeneratedTrace generate_trace(const Topology& topology, const LoadProcess& load,
                              const GroundTruth& truth, std::size_t requests,
                              std::uint64_t seed) {
    std::vector<LoadProcess> per_server(topology.servers, load);
    return generate_trace(topology, per_server, truth, requests, seed);
}

GeneratedTrace generate_trace(const Topology& topology,
                              std::span<const LoadProcess> load_per_server,
                              const GroundTruth& truth, std::size_t requests,
                              std::uint64_t seed) {
    validate_topology(topology);
    validate_ground_truth(truth);
    if (load_per_server.size() != topology.servers) {
        throw ValidationError("load_per_server",
                              "expected one load process per server, got " +
                                  std::to_string(load_per_server.size()));
    }
    for (const LoadProcess& load : load_per_server) validate_load_process(load);
    if (requests == 0) {
        throw ValidationError("requests", "must be at least 1");
    }

    Rng rng(seed);
    GeneratedTrace out;
    out.records.reserve(requests);
    out.states.reserve(requests);

    // Every hop chain starts Calm and evolves independently.
    std::vector<std::vector<LoadState>> current(topology.servers);
    for (std::size_t j = 0; j < topology.servers; ++j) {
        current[j].assign(topology.hops_per_server[j], LoadState::Calm);
    }

    double now_s = 0.0;
    for (std::size_t t = 0; t < requests; ++t) {
        const double frame =
            static_cast<double>(rng.uniform_int(static_cast<std::uint64_t>(kFrameBytesLo),
                                                static_cast<std::uint64_t>(kFrameBytesHi)));
        now_s += rng.exponential(kMeanGapSeconds);

        std::vector<PathDescriptor> paths;
        paths.reserve(topology.servers);
        for (std::size_t j = 0; j < topology.servers; ++j) {
            const LoadProcess& load = load_per_server[j];
            std::vector<FeatureVector> hops;
            hops.reserve(topology.hops_per_server[j]);
            for (std::size_t k = 0; k < topology.hops_per_server[j]; ++k) {
                if (t > 0) {
                    const auto s = static_cast<std::size_t>(current[j][k]);
                    current[j][k] = static_cast<LoadState>(rng.categorical(load.transition[s]));
                }
                const auto s = static_cast<std::size_t>(current[j][k]);
                const double util = rng.uniform(load.utilization[s].lo, load.utilization[s].hi);
                const double pps = rng.uniform(load.arrival_rate[s].lo, load.arrival_rate[s].hi);
                hops.emplace_back(frame, util, pps);
            }
            paths.emplace_back(ServerId(j), std::move(hops));
        }
        out.records.emplace_back(now_s, frame, std::move(paths));
        out.states.push_back(current);
    }
    return out;
}

double observe(const GroundTruth& truth, const PathDescriptor& path,
               std::span<const LoadState> hop_states, double noise_factor) {
    if (hop_states.size() != path.hops().size()) {
        throw ValidationError("hop_states", "expected one load state per hop");
    }
    if (!std::isfinite(noise_factor) || noise_factor <= 0.0) {
        throw ValidationError("noise_factor", "must be finite and positive");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < path.hops().size(); ++k) {
        double hop_ms = predict_hop(truth.true_coefficients, path.hops()[k]);
        if (hop_states[k] == LoadState::Burst) hop_ms *= truth.burst_penalty;
        total += hop_ms;
    }
    total *= noise_factor;
    if (!std::isfinite(total) || total <= 0.0) {
        throw OverflowError("simulated latency must be positive and finite");
    }
    return total;
}

CounterfactualTable materialize_counterfactuals(const GroundTruth& truth,
                                                const GeneratedTrace& trace,
                                                std::uint64_t seed) {
    validate_ground_truth(truth);
    if (trace.states.size() != trace.records.size()) {
        throw ValidationError("trace", "state history does not cover every record");
    }
    CounterfactualTable table;
    table.latency_ms.reserve(trace.records.size());
    Rng rng(seed);
    for (std::size_t t = 0; t < trace.records.size(); ++t) {
        const TraceRecord& record = trace.records[t];
        if (t == 0) {
            table.servers = record.server_count();
        } else if (record.server_count() != table.servers) {
            throw ValidationError("trace", "record " + std::to_string(t) +
                                               " changes the server count");
        }
        std::vector<double> row;
        row.reserve(table.servers);
        for (std::size_t j = 0; j < table.servers; ++j) {
            const double noise = rng.lognormal(truth.sigma_noise);
            row.push_back(observe(truth, record.paths()[j], trace.states[t][j], noise));
        }
        table.latency_ms.push_back(std::move(row));
    }
    return table;
}

RunLog run_experiment(Policy policy, const SelectorConfig& raw_config, const Topology& topology,
                      std::span<const TraceRecord> records,
                      const CounterfactualTable& counterfactuals,
                      const ModelCoefficients* model) {
    validate_topology(topology);
    const SelectorConfig config = validate_config(raw_config);
    if (counterfactuals.servers != topology.servers) {
        throw ValidationError("counterfactuals", "server count does not match the topology");
    }
    if (counterfactuals.latency_ms.size() < records.size()) {
        throw ValidationError("counterfactuals", "table covers fewer requests than the trace");
    }
    const bool needs_model = policy == Policy::Mohan || policy == Policy::LowestLatency;
    if (needs_model && model == nullptr) {
        throw ValidationError("model",
                              "missing model for prediction-based policy \"" +
                                  policy_name(policy) + "\"");
    }

    RunLog log;
    log.policy = policy;
    log.entries.reserve(records.size());

    SelectorState selector;
    ReliabilityState reliability(config, topology.servers);
    std::optional<ObservationFeedback> feedback;

    for (std::size_t t = 0; t < records.size(); ++t) {
        const TraceRecord& record = records[t];
        if (record.server_count() != topology.servers) {
            throw ValidationError("records", "record " + std::to_string(t) +
                                                 " does not match the topology");
        }
        std::vector<double> predictions;
        if (model != nullptr) {
            predictions.reserve(topology.servers);
            for (const PathDescriptor& path : record.paths()) {
                predictions.push_back(predict_end_to_end(*model, path));
            }
        }

        const Decision decision = step(policy, config, topology.nearest, selector, reliability,
                                       predictions, feedback);
        feedback.reset();

        const double observed = counterfactuals.latency_ms[t][decision.selected.value];

        RunLogEntry entry;
        entry.t = t;
        entry.policy = policy;
        entry.selected = decision.selected;
        entry.handover = decision.handover;
        entry.scores = decision.scores;
        entry.predicted = decision.predicted;
        entry.reliability = reliability.scores();  // state the decision was made with
        entry.observed_ms = observed;
        entry.reason = decision.reason;
        log.entries.push_back(std::move(entry));

        if (model != nullptr) {
            const double predicted = predictions[decision.selected.value];
            if (policy == Policy::Mohan) {
                // consumed by the reliability update at the start of the next step
                feedback = ObservationFeedback{decision.selected, observed, predicted};
            } else {
                // baselines never read reliability; tracked anyway so their logs
                // expose the same diagnostic columns
                reliability.update(decision.selected, observed, predicted);
            }
        }
    }
    return log;
}

Scenario standard_scenario() {
    Scenario scenario;
    scenario.topology.servers = 2;
    scenario.topology.hops_per_server = {2, 2};
    scenario.topology.nearest = ServerId(0);

    // Server 0: the physically nearest server. Moderate steady load and
    // essentially burst-free, so parking on it is safe but never fast.
    LoadProcess steady;
    steady.transition = {{{0.955, 0.044, 0.001},  //
                          {0.350, 0.640, 0.010},
                          {0.600, 0.350, 0.050}}};
    steady.utilization = {ValueRange{0.15, 0.40}, ValueRange{0.38, 0.72}, ValueRange{0.45, 0.80}};
    steady.arrival_rate = {ValueRange{400.0, 1000.0}, ValueRange{1000.0, 2100.0},
                           ValueRange{1400.0, 2600.0}};

    // Server 1: lightly loaded most of the time, so it predicts faster, but
    // its congestion episodes are deep and sticky, and they barely move the
    // monitored features (the burst ranges sit inside the busy ranges), so a
    // latency model cannot see them coming. Only the hidden burst multiplier
    // carries the damage.
    LoadProcess bursty;
    bursty.transition = {{{0.938, 0.050, 0.012},  //
                          {0.280, 0.640, 0.080},
                          {0.050, 0.070, 0.880}}};
    bursty.utilization = {ValueRange{0.02, 0.15}, ValueRange{0.25, 0.55}, ValueRange{0.30, 0.55}};
    bursty.arrival_rate = {ValueRange{150.0, 550.0}, ValueRange{700.0, 1500.0},
                           ValueRange{800.0, 1500.0}};

    scenario.load_per_server = {steady, bursty};

    GroundTruth truth;
    truth.true_coefficients.a = {3.2e-5, 6.0, 0.004};
    truth.true_coefficients.b = {2.0e-7, 0.35, 2.5e-4};
    truth.true_coefficients.c = 0.08;
    truth.true_coefficients.d = 1.1;
    truth.true_coefficients.exp_feature_index = 1;
    truth.sigma_noise = 0.08;
    truth.burst_penalty = 2.0;
    scenario.truth = truth;

    scenario.requests = 5000;
    scenario.config = SelectorConfig{};
    scenario.fit_options = FitOptions{};
    return scenario;
}

GeneratedTrace scenario_trace(const Scenario& scenario, std::uint64_t seed) {
    return generate_trace(scenario.topology, scenario.load_per_server, scenario.truth,
                          scenario.requests, derive_seed(seed, kTraceTag));
}

CounterfactualTable scenario_counterfactuals(const Scenario& scenario, const GeneratedTrace& trace,
                                             std::uint64_t seed) {
    return materialize_counterfactuals(scenario.truth, trace,
                                       derive_seed(seed, kCounterfactualTag));
}

std::vector<TraceRecord> apply_collection(std::span<const TraceRecord> records,
                                          const CounterfactualTable& counterfactuals,
                                          CollectMode mode, ServerId nearest, std::uint64_t seed) {
    if (counterfactuals.latency_ms.size() < records.size()) {
        throw ValidationError("counterfactuals", "table covers fewer requests than the trace");
    }
    if (nearest.value >= counterfactuals.servers) {
        throw ValidationError("nearest", "server index out of range");
    }
    std::vector<TraceRecord> out;
    out.reserve(records.size());
    Rng rng(derive_seed(seed, kCollectTag));
    for (std::size_t t = 0; t < records.size(); ++t) {
        std::size_t j = 0;
        switch (mode) {
            case CollectMode::None:
                out.push_back(records[t]);
                continue;
            case CollectMode::RoundRobin:
                j = t % counterfactuals.servers;
                break;
            case CollectMode::Nearest:
                j = nearest.value;
                break;
            case CollectMode::Random:
                j = static_cast<std::size_t>(rng.uniform_int(0, counterfactuals.servers - 1));
                break;
        }
        out.emplace_back(records[t].timestamp_s(), records[t].frame_bytes(), records[t].paths(),
                         ServerId(j), counterfactuals.latency_ms[t][j]);
    }
    return out;
}

ScenarioArtifacts prepare_scenario(const Scenario& scenario, std::uint64_t seed) {
    GeneratedTrace trace = scenario_trace(scenario, seed);
    CounterfactualTable counterfactuals = scenario_counterfactuals(scenario, trace, seed);
    trace.records = apply_collection(trace.records, counterfactuals, CollectMode::RoundRobin,
                                     scenario.topology.nearest, seed);

    std::vector<FitSample> samples;
    samples.reserve(trace.records.size());
    for (const TraceRecord& record : trace.records) {
        samples.push_back(FitSample{record.paths()[record.served_by()->value].hops(),
                                    *record.observed_ms()});
    }
    FitOptions options = scenario.fit_options;
    options.seed = derive_seed(seed, kFitTag);
    FitReport fit = fit_paths(samples, options);

    return ScenarioArtifacts{std::move(trace), std::move(counterfactuals), std::move(fit)};
}

}  // namespace mohan
