#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mohan/error.hpp"
#include "mohan/evaluation.hpp"
#include "mohan/rng.hpp"
#include "mohan/simulator.hpp"

using namespace mohan;

namespace {

RunLog log_from(const std::vector<double>& latencies, const std::vector<bool>& handovers = {}) {
    RunLog log;
    log.policy = Policy::Mohan;
    for (std::size_t t = 0; t < latencies.size(); ++t) {
        RunLogEntry e;
        e.t = t;
        e.policy = log.policy;
        e.selected = ServerId(0);
        e.handover = t < handovers.size() && handovers[t];
        e.observed_ms = latencies[t];
        e.reason = t == 0 ? DecisionReason::FirstDecision : DecisionReason::KeptSame;
        log.entries.push_back(std::move(e));
    }
    return log;
}

// brute-force re-computation, written independently of the library
double brute_percentile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    const double rank = p * (static_cast<double>(values.size()) + 1.0);
    if (rank <= 1.0) return values.front();
    if (rank >= static_cast<double>(values.size())) return values.back();
    const auto lower = static_cast<std::size_t>(std::floor(rank));
    const double weight = rank - static_cast<double>(lower);
    return values[lower - 1] * (1.0 - weight) + values[lower] * weight;
}

struct BruteStats {
    double mean, median, p95, hr;
};

BruteStats brute_stats(const RunLog& log) {
    std::vector<double> v;
    double handovers = 0;
    for (const auto& e : log.entries) {
        v.push_back(*e.observed_ms);
        handovers += e.handover ? 1 : 0;
    }
    double sum = 0;
    for (double x : v) sum += x;
    BruteStats b;
    b.mean = sum / static_cast<double>(v.size());
    b.median = brute_percentile(v, 0.5);
    b.p95 = brute_percentile(v, 0.95);
    b.hr = v.size() > 1 ? handovers / static_cast<double>(v.size() - 1) : 0.0;
    return b;
}

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(1e-12, std::abs(b)); }

}  // namespace

TEST_CASE("percentiles interpolate between closest ranks") {
    const std::vector<double> five{10, 20, 30, 40, 50};
    CHECK(percentile_sorted(five, 0.5) == 30.0);
    CHECK(percentile_sorted(five, 0.95) == 50.0);  // rank 5.7 clamps to the top
    CHECK(percentile_sorted(five, 0.0) == 10.0);
    CHECK(percentile_sorted(five, 1.0) == 50.0);

    std::vector<double> hundred(100);
    for (int i = 0; i < 100; ++i) hundred[i] = i + 1;
    // rank 0.95 * 101 = 95.95 between the 95th and 96th order statistics
    CHECK(percentile_sorted(hundred, 0.95) == doctest::Approx(95.95).epsilon(1e-12));

    CHECK_THROWS_AS(percentile_sorted({}, 0.5), ValidationError);
    CHECK_THROWS_AS(percentile_sorted(five, 1.5), ValidationError);
}

TEST_CASE("stats of a small log match hand arithmetic") {
    const auto log = log_from({10, 20, 30, 40, 50}, {false, true, false, false, false});
    const RunStats s = compute_stats(log);
    CHECK(s.mean_ms == 30.0);
    CHECK(s.median_ms == 30.0);
    CHECK(s.p95_ms == 50.0);
    CHECK(s.handover_rate == 0.25);  // 1 of 4 post-first decisions
    CHECK(s.count == 5);
}

TEST_CASE("a constant distribution collapses every statistic") {
    const auto log = log_from(std::vector<double>(100, 7.0));
    const RunStats s = compute_stats(log);
    CHECK(s.mean_ms == 7.0);
    CHECK(s.median_ms == 7.0);
    CHECK(s.p95_ms == 7.0);
    CHECK(s.handover_rate == 0.0);
}

TEST_CASE("a single decision has no handover opportunities") {
    const RunStats s = compute_stats(log_from({42.0}));
    CHECK(s.handover_rate == 0.0);
    CHECK(s.count == 1);
}

TEST_CASE("stats reject empty or unserved logs") {
    CHECK_THROWS_AS(compute_stats(RunLog{}), ValidationError);
    RunLog holey = log_from({1.0, 2.0});
    holey.entries[1].observed_ms.reset();
    CHECK_THROWS_AS(compute_stats(holey), ValidationError);
}

TEST_CASE("stats agree with brute force on random logs") {
    Rng rng(501);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(0, 400));
        std::vector<double> lat(n);
        std::vector<bool> ho(n, false);
        for (std::size_t t = 0; t < n; ++t) {
            lat[t] = rng.uniform(0.1, 200.0);
            ho[t] = t > 0 && rng.uniform01() < 0.3;
        }
        const auto log = log_from(lat, ho);
        const RunStats got = compute_stats(log);
        const BruteStats want = brute_stats(log);
        REQUIRE(rel_gap(got.mean_ms, want.mean) < 1e-9);
        REQUIRE(rel_gap(got.median_ms, want.median) < 1e-9);
        REQUIRE(rel_gap(got.p95_ms, want.p95) < 1e-9);
        REQUIRE(std::abs(got.handover_rate - want.hr) < 1e-9);
    }
}

TEST_CASE("the three-point ecdf") {
    const auto steps = cdf(log_from({1, 2, 3}));
    REQUIRE(steps.size() == 3);
    CHECK(steps[0] == std::pair<double, double>{1.0, 1.0 / 3.0});
    CHECK(steps[1] == std::pair<double, double>{2.0, 2.0 / 3.0});
    CHECK(steps[2].first == 3.0);
    CHECK(steps[2].second == 1.0);
}

TEST_CASE("tied values collapse into one step with the summed mass") {
    const auto steps = cdf(log_from({5, 5, 7}));
    REQUIRE(steps.size() == 2);
    CHECK(steps[0] == std::pair<double, double>{5.0, 2.0 / 3.0});
    CHECK(steps[1].first == 7.0);
    CHECK(steps[1].second == 1.0);
}

TEST_CASE("the ecdf is non-decreasing and ends at exactly one") {
    Rng rng(502);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(0, 300));
        std::vector<double> lat(n);
        for (auto& v : lat) v = std::round(rng.uniform(1.0, 30.0));  // force ties
        const auto steps = cdf(log_from(lat));
        REQUIRE(steps.back().second == 1.0);
        for (std::size_t i = 1; i < steps.size(); ++i) {
            REQUIRE(steps[i].first > steps[i - 1].first);
            REQUIRE(steps[i].second > steps[i - 1].second);
        }
    }
    CHECK_THROWS_AS(cdf(RunLog{}), ValidationError);
}

TEST_CASE("pareto marking keeps exactly the undominated points") {
    auto point = [](double p95, double hr) {
        SweepResult r;
        r.stats.p95_ms = p95;
        r.stats.handover_rate = hr;
        return r;
    };

    SUBCASE("a singleton is trivially on the frontier") {
        std::vector<SweepResult> one{point(10, 0.5)};
        mark_pareto(one);
        CHECK(one[0].pareto);
    }

    SUBCASE("a dominated point is flagged off") {
        std::vector<SweepResult> pts{point(10, 0.5), point(12, 0.3), point(11, 0.6)};
        mark_pareto(pts);
        CHECK(pts[0].pareto);
        CHECK(pts[1].pareto);
        CHECK(!pts[2].pareto);
    }

    SUBCASE("identical points do not dominate each other") {
        std::vector<SweepResult> pts{point(10, 0.5), point(10, 0.5)};
        mark_pareto(pts);
        CHECK(pts[0].pareto);
        CHECK(pts[1].pareto);
    }

    SUBCASE("random grids agree with an independent dominance scan") {
        Rng rng(503);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<SweepResult> pts;
            const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(0, 30));
            for (std::size_t i = 0; i < n; ++i)
                pts.push_back(point(rng.uniform(10, 20), rng.uniform01()));
            mark_pareto(pts);
            for (std::size_t i = 0; i < n; ++i) {
                bool dominated = false;
                for (std::size_t j = 0; j < n; ++j) {
                    if (i == j) continue;
                    const bool le = pts[j].stats.p95_ms <= pts[i].stats.p95_ms &&
                                    pts[j].stats.handover_rate <= pts[i].stats.handover_rate;
                    const bool lt = pts[j].stats.p95_ms < pts[i].stats.p95_ms ||
                                    pts[j].stats.handover_rate < pts[i].stats.handover_rate;
                    if (le && lt) dominated = true;
                }
                REQUIRE(pts[i].pareto == !dominated);
            }
            bool any = false;
            for (const auto& p : pts) any = any || p.pareto;
            REQUIRE(any);  // the frontier is never empty
        }
    }
}

TEST_CASE("sweeps over the standard scenario") {
    const Scenario scenario = standard_scenario();
    const ScenarioArtifacts artifacts = prepare_scenario(scenario, 1);

    SUBCASE("handover rate is non-increasing in theta") {
        SweepGrid grid;
        grid.thetas = {0.0, 0.05, 0.1};
        const auto results = sweep(grid, scenario, artifacts);
        REQUIRE(results.size() == 3);
        CHECK(results[0].theta == 0.0);
        CHECK(results[2].theta == 0.1);
        CHECK(results[0].stats.handover_rate >= results[1].stats.handover_rate);
        CHECK(results[1].stats.handover_rate >= results[2].stats.handover_rate);
    }

    SUBCASE("handover rate is non-decreasing in alpha") {
        SweepGrid grid;
        grid.alphas = {0.2, 0.5, 0.8};
        const auto results = sweep(grid, scenario, artifacts);
        REQUIRE(results.size() == 3);
        CHECK(results[0].stats.handover_rate <= results[1].stats.handover_rate);
        CHECK(results[1].stats.handover_rate <= results[2].stats.handover_rate);
    }

    SUBCASE("a single grid point is its own frontier") {
        const auto results = sweep(SweepGrid{}, scenario, artifacts);
        REQUIRE(results.size() == 1);
        CHECK(results[0].pareto);
        CHECK(results[0].alpha == 0.5);
        CHECK(results[0].beta == 0.9);
        CHECK(results[0].delta == 0.2);
        CHECK(results[0].theta == 0.05);
    }

    SUBCASE("rows follow the alpha-beta-delta-theta nesting") {
        SweepGrid grid;
        grid.alphas = {0.2, 0.5};
        grid.thetas = {0.05, 0.1};
        const auto results = sweep(grid, scenario, artifacts);
        REQUIRE(results.size() == 4);
        CHECK(results[0].alpha == 0.2);
        CHECK(results[0].theta == 0.05);
        CHECK(results[1].alpha == 0.2);
        CHECK(results[1].theta == 0.1);
        CHECK(results[2].alpha == 0.5);
        CHECK(results[2].theta == 0.05);
        CHECK(results[3].alpha == 0.5);
        CHECK(results[3].theta == 0.1);
    }

    SUBCASE("sweeping twice reproduces identical statistics") {
        SweepGrid grid;
        grid.thetas = {0.0, 0.05};
        const auto a = sweep(grid, scenario, artifacts);
        const auto b = sweep(grid, scenario, artifacts);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            REQUIRE(a[i].stats.mean_ms == b[i].stats.mean_ms);
            REQUIRE(a[i].stats.median_ms == b[i].stats.median_ms);
            REQUIRE(a[i].stats.p95_ms == b[i].stats.p95_ms);
            REQUIRE(a[i].stats.handover_rate == b[i].stats.handover_rate);
        }
    }

    SUBCASE("an empty grid is rejected") {
        SweepGrid grid;
        grid.alphas = {};
        CHECK_THROWS_AS(sweep(grid, scenario, artifacts), ValidationError);
    }
}
