#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mohan/simulator.hpp"

namespace mohan {

// Summary of one policy run over the observed end-to-end latencies.
// handover_rate is a fraction in [0,1]: handovers over opportunities
// (decision count minus one).
struct RunStats {
    double mean_ms = 0.0;
    double median_ms = 0.0;
    double p95_ms = 0.0;
    double handover_rate = 0.0;
    std::size_t count = 0;
};

// Percentile of already-sorted data under exclusive linear interpolation:
// rank h = p * (n + 1), clamped to the extremes.
double percentile_sorted(std::span<const double> sorted, double p);

RunStats compute_stats(const RunLog& log);

// Empirical CDF over observed latencies: one (value, fraction) step per
// distinct value, non-decreasing, ending exactly at 1.0.
std::vector<std::pair<double, double>> cdf(const RunLog& log);

struct SweepGrid {
    std::vector<double> alphas{0.5};
    std::vector<double> betas{0.9};
    std::vector<double> deltas{0.2};
    std::vector<double> thetas{0.05};
};

struct SweepResult {
    double alpha = 0.0;
    double beta = 0.0;
    double delta = 0.0;
    double theta = 0.0;
    RunStats stats;
    bool pareto = false;
};

// Marks the entries not dominated on (p95_ms, handover_rate), both minimized.
void mark_pareto(std::vector<SweepResult>& results);

// Runs the selection policy over the full factorial grid, every point facing
// the same trace, counterfactual table and fitted model. Row order is the
// nesting alpha > beta > delta > theta.
std::vector<SweepResult> sweep(const SweepGrid& grid, const Scenario& scenario,
                               std::uint64_t seed);
std::vector<SweepResult> sweep(const SweepGrid& grid, const Scenario& scenario,
                               const ScenarioArtifacts& artifacts);

}  // namespace mohan
