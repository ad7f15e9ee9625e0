#include "mohan/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "mohan/error.hpp"

namespace mohan {

double percentile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) {
        throw ValidationError("sorted", "percentile of an empty sample");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ValidationError("p", "percentile rank out of [0,1]");
    }
    const auto n = sorted.size();
    const double h = p * static_cast<double>(n + 1);
    if (h <= 1.0) return sorted.front();
    if (h >= static_cast<double>(n)) return sorted.back();
    const auto k = static_cast<std::size_t>(h);  // 1-based lower rank
    const double frac = h - static_cast<double>(k);
    return sorted[k - 1] + frac * (sorted[k] - sorted[k - 1]);
}

RunStats compute_stats(const RunLog& log) {
    std::vector<double> observed;
    observed.reserve(log.entries.size());
    std::size_t handovers = 0;
    for (const RunLogEntry& entry : log.entries) {
        if (!entry.observed_ms) {
            throw ValidationError("log", "entry without an observed latency");
        }
        observed.push_back(*entry.observed_ms);
        if (entry.handover) ++handovers;
    }
    if (observed.empty()) {
        throw ValidationError("log", "no decisions to summarize");
    }

    RunStats stats;
    stats.count = observed.size();
    double sum = 0.0;
    for (double v : observed) sum += v;
    stats.mean_ms = sum / static_cast<double>(observed.size());

    std::sort(observed.begin(), observed.end());
    stats.median_ms = percentile_sorted(observed, 0.5);
    stats.p95_ms = percentile_sorted(observed, 0.95);

    stats.handover_rate = observed.size() > 1
                              ? static_cast<double>(handovers) /
                                    static_cast<double>(observed.size() - 1)
                              : 0.0;
    return stats;
}

std::vector<std::pair<double, double>> cdf(const RunLog& log) {
    std::vector<double> observed;
    observed.reserve(log.entries.size());
    for (const RunLogEntry& entry : log.entries) {
        if (!entry.observed_ms) {
            throw ValidationError("log", "entry without an observed latency");
        }
        observed.push_back(*entry.observed_ms);
    }
    if (observed.empty()) {
        throw ValidationError("log", "no decisions to summarize");
    }
    std::sort(observed.begin(), observed.end());

    std::vector<std::pair<double, double>> steps;
    const auto n = static_cast<double>(observed.size());
    for (std::size_t i = 0; i < observed.size(); ++i) {
        // ties collapse into the last occurrence
        if (i + 1 < observed.size() && observed[i + 1] == observed[i]) continue;
        steps.emplace_back(observed[i], static_cast<double>(i + 1) / n);
    }
    steps.back().second = 1.0;  // exact, independent of the division above
    return steps;
}

void mark_pareto(std::vector<SweepResult>& results) {
    for (SweepResult& candidate : results) {
        candidate.pareto = true;
        for (const SweepResult& other : results) {
            const bool no_worse = other.stats.p95_ms <= candidate.stats.p95_ms &&
                                  other.stats.handover_rate <= candidate.stats.handover_rate;
            const bool better = other.stats.p95_ms < candidate.stats.p95_ms ||
                                other.stats.handover_rate < candidate.stats.handover_rate;
            if (no_worse && better) {
                candidate.pareto = false;
                break;
            }
        }
    }
}

std::vector<SweepResult> sweep(const SweepGrid& grid, const Scenario& scenario,
                               std::uint64_t seed) {
    return sweep(grid, scenario, prepare_scenario(scenario, seed));
}

std::vector<SweepResult> sweep(const SweepGrid& grid, const Scenario& scenario,
                               const ScenarioArtifacts& artifacts) {
    if (grid.alphas.empty() || grid.betas.empty() || grid.deltas.empty() || grid.thetas.empty()) {
        throw ValidationError("grid", "every swept parameter needs at least one value");
    }
    std::vector<SweepResult> results;
    results.reserve(grid.alphas.size() * grid.betas.size() * grid.deltas.size() *
                    grid.thetas.size());
    for (double alpha : grid.alphas) {
        for (double beta : grid.betas) {
            for (double delta : grid.deltas) {
                for (double theta : grid.thetas) {
                    SelectorConfig config = scenario.config;
                    config.alpha = alpha;
                    config.beta = beta;
                    config.delta = delta;
                    config.theta_handover = theta;
                    const RunLog log = run_experiment(
                        Policy::Mohan, config, scenario.topology, artifacts.trace.records,
                        artifacts.counterfactuals, &artifacts.fit.coefficients);
                    SweepResult result;
                    result.alpha = alpha;
                    result.beta = beta;
                    result.delta = delta;
                    result.theta = theta;
                    result.stats = compute_stats(log);
                    results.push_back(result);
                }
            }
        }
    }
    mark_pareto(results);
    return results;
}

}  // namespace mohan
