#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mohan/predictor.hpp"
#include "mohan/selector.hpp"
#include "mohan/types.hpp"

namespace mohan {

// Shape of one run's network: J edge servers, a fixed hop count per server
// path, and the server considered physically nearest to the client.
struct Topology {
    std::size_t servers = 2;
    std::vector<std::size_t> hops_per_server = {2, 2};
    ServerId nearest{0};
};

// Throws ValidationError unless servers >= 2, hop counts are consistent and
// >= 1, and nearest is in range.
void validate_topology(const Topology& topology);

enum class LoadState { Calm, Busy, Burst };

struct ValueRange {
    double lo = 0.0;
    double hi = 0.0;
};

// Markov-modulated background load for one hop: a three-state chain plus
// per-state sampling ranges for utilization and packet arrival rate.
struct LoadProcess {
    std::array<std::array<double, 3>, 3> transition;
    std::array<ValueRange, 3> utilization;
    std::array<ValueRange, 3> arrival_rate;
};

void validate_load_process(const LoadProcess& load);

// A calm-biased default with sporadic multi-step congestion episodes.
LoadProcess default_load_process();

// The latent data-generating model: observed latencies come from this model
// plus a hidden burst multiplier and multiplicative lognormal noise.
struct GroundTruth {
    ModelCoefficients true_coefficients;
    double sigma_noise = 0.0;
    double burst_penalty = 1.0;
};

void validate_ground_truth(const GroundTruth& truth);

// Trace plus the hidden per-request, per-server, per-hop load states the
// generator walked through (needed to materialize observed latencies).
struct GeneratedTrace {
    std::vector<TraceRecord> records;                        // served_by empty
    std::vector<std::vector<std::vector<LoadState>>> states; // [t][server][hop]
};

// Draws `requests` monitored requests: frame sizes uniform in
// [400000, 600000] bytes, exponential inter-request gaps, and per-hop
// (utilization, arrival rate) sampled from each hop's evolving load state.
// Deterministic given the seed. The single-process overload drives every
// hop with the same parameters; the span overload takes one process per
// server.
GeneratedTrace generate_trace(const Topology& topology, const LoadProcess& load,
                              const GroundTruth& truth, std::size_t requests, std::uint64_t seed);
GeneratedTrace generate_trace(const Topology& topology, std::span<const LoadProcess> load_per_server,
                              const GroundTruth& truth, std::size_t requests, std::uint64_t seed);

// Ground-truth end-to-end latency for one path: per-hop model latency with
// the burst multiplier on hops currently in Burst, times the caller-supplied
// noise factor. Result must come out positive.
double observe(const GroundTruth& truth, const PathDescriptor& path,
               std::span<const LoadState> hop_states, double noise_factor);

// Pre-materialized observed latencies, one per (request, server): every
// policy replayed over the table faces identical counterfactual draws.
struct CounterfactualTable {
    std::size_t servers = 0;
    std::vector<std::vector<double>> latency_ms;  // [t][server]
};

CounterfactualTable materialize_counterfactuals(const GroundTruth& truth,
                                                const GeneratedTrace& trace, std::uint64_t seed);

// One decision plus the latency that selection observed.
struct RunLogEntry {
    std::size_t t = 0;
    Policy policy = Policy::Mohan;
    ServerId selected;
    bool handover = false;
    std::vector<double> scores;
    std::vector<double> predicted;
    std::vector<double> reliability;
    std::optional<double> observed_ms;
    DecisionReason reason = DecisionReason::FirstDecision;
};

struct RunLog {
    Policy policy = Policy::Mohan;
    std::vector<RunLogEntry> entries;
};

// Replays a policy over a trace with pre-materialized counterfactual
// latencies. `model` may be null for policies that need no predictions
// (nearest, roundrobin); their log then carries empty score/prediction
// arrays and an untouched reliability snapshot.
RunLog run_experiment(Policy policy, const SelectorConfig& config, const Topology& topology,
                      std::span<const TraceRecord> records,
                      const CounterfactualTable& counterfactuals, const ModelCoefficients* model);

// A complete simulated experiment: topology, per-server load, latent truth,
// request count, selector config, and fit settings for the self-trained
// prediction model.
struct Scenario {
    Topology topology;
    std::vector<LoadProcess> load_per_server;
    GroundTruth truth;
    std::size_t requests = 5000;
    SelectorConfig config;
    FitOptions fit_options;
};

// The built-in congested scenario: two servers, two hops each, a steady
// nearest server and a faster but burst-prone alternative.
Scenario standard_scenario();

// Scenario-level generation with the seed derivations shared by every
// entry point, so a trace generated standalone matches the one a full run
// uses internally for the same seed.
GeneratedTrace scenario_trace(const Scenario& scenario, std::uint64_t seed);
CounterfactualTable scenario_counterfactuals(const Scenario& scenario, const GeneratedTrace& trace,
                                             std::uint64_t seed);

// How the collection pass picks the serving server for each trace record.
enum class CollectMode { None, RoundRobin, Nearest, Random };

// Fills served_by/observed_ms from the counterfactual table, producing the
// training rows a fit needs. None returns the records untouched.
std::vector<TraceRecord> apply_collection(std::span<const TraceRecord> records,
                                          const CounterfactualTable& counterfactuals,
                                          CollectMode mode, ServerId nearest, std::uint64_t seed);

// Everything needed to run policies over a scenario: the collection trace
// (served round-robin so every server contributes training rows), the
// counterfactual table, and the model fitted on the collection rows.
struct ScenarioArtifacts {
    GeneratedTrace trace;  // records carry collection served_by/observed_ms
    CounterfactualTable counterfactuals;
    FitReport fit;
};

ScenarioArtifacts prepare_scenario(const Scenario& scenario, std::uint64_t seed);

}  // namespace mohan
