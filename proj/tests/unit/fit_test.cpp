#include <doctest.h>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mohan/error.hpp"
#include "mohan/predictor.hpp"
#include "mohan/rng.hpp"

using namespace mohan;

namespace {

// Raw-unit ground truth over a realistic feature domain. The family is
// closed under the fitter's internal rescaling, so it is recoverable.
ModelCoefficients truth_model() {
    ModelCoefficients m;
    m.a = {3.2e-5, 6.0, 0.004};
    m.b = {2.0e-7, 0.35, 2.5e-4};
    m.c = 0.08;
    m.d = 1.1;
    m.exp_feature_index = 1;
    return m;
}

FeatureVector draw_features(Rng& rng) {
    return FeatureVector(rng.uniform(400000.0, 600000.0), rng.uniform(0.05, 0.95),
                         rng.uniform(200.0, 3000.0));
}

std::vector<std::pair<FeatureVector, double>> make_samples(std::size_t n, std::uint64_t seed,
                                                           double noise_lo, double noise_hi) {
    const auto truth = truth_model();
    Rng rng(seed);
    std::vector<std::pair<FeatureVector, double>> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const FeatureVector x = draw_features(rng);
        const double y = predict_hop(truth, x) * rng.uniform(noise_lo, noise_hi);
        out.emplace_back(x, y);
    }
    return out;
}

}  // namespace

TEST_CASE("noise-free data is recovered to 1e-6 relative predictions") {
    const auto samples = make_samples(500, 71, 1.0, 1.0);
    FitOptions options;
    options.seed = 5;
    const FitReport report = fit(samples, options);
    CHECK(report.converged);

    const auto truth = truth_model();
    double worst = 0.0;
    for (const auto& [x, y] : samples) {
        const double got = predict_hop(report.coefficients, x);
        const double want = predict_hop(truth, x);
        worst = std::max(worst, std::abs(got - want) / want);
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("five percent multiplicative noise still yields a strong holdout fit") {
    const auto samples = make_samples(2000, 72, 0.95, 1.05);
    FitOptions options;
    options.seed = 6;
    const FitReport report = fit(samples, options);

    CHECK(report.r_squared >= 0.95);

    // injected noise floor: rms of the perturbation actually applied
    const auto truth = truth_model();
    double floor_sq = 0.0;
    for (const auto& [x, y] : samples) {
        const double clean = predict_hop(truth, x);
        floor_sq += (y - clean) * (y - clean);
    }
    const double noise_floor = std::sqrt(floor_sq / static_cast<double>(samples.size()));
    CHECK(report.holdout_rmse <= 2.0 * noise_floor);
}

TEST_CASE("constant latency over constant features is fit exactly") {
    std::vector<std::pair<FeatureVector, double>> samples(
        100, {FeatureVector(1000.0, 0.5, 500.0), 5.0});
    FitOptions options;
    options.seed = 7;
    const FitReport report = fit(samples, options);
    CHECK(report.converged);
    CHECK(report.training_rmse <= 1e-6);
    CHECK(predict_hop(report.coefficients, FeatureVector(1000.0, 0.5, 500.0)) ==
          doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("too few samples is a named precondition failure") {
    const auto samples = make_samples(10, 73, 1.0, 1.0);
    try {
        fit(samples);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("insufficient training data") != std::string::npos);
    }
}

TEST_CASE("non-positive observations are rejected") {
    auto samples = make_samples(60, 74, 1.0, 1.0);
    samples[30].second = 0.0;
    CHECK_THROWS_AS(fit(samples), ValidationError);
    samples[30].second = -4.0;
    CHECK_THROWS_AS(fit(samples), ValidationError);
}

TEST_CASE("fitted coefficients keep the denominator above its floor") {
    for (std::uint64_t seed : {81ULL, 82ULL, 83ULL}) {
        const auto samples = make_samples(300, seed, 0.9, 1.1);
        FitOptions options;
        options.seed = seed;
        const FitReport report = fit(samples, options);
        const auto& m = report.coefficients;
        for (const auto& [x, y] : samples) {
            const auto z = m.scaler.scale(x);
            const double den = 1.0 + m.b[0] * z[0] + m.b[1] * z[1] + m.b[2] * z[2] + m.c;
            CHECK(den >= kDenominatorFloor);
        }
    }
}

TEST_CASE("fitting is deterministic in the options seed") {
    const auto samples = make_samples(400, 75, 0.95, 1.05);
    FitOptions options;
    options.seed = 11;
    const FitReport r1 = fit(samples, options);
    const FitReport r2 = fit(samples, options);
    CHECK(r1.coefficients == r2.coefficients);
    CHECK(r1.training_rmse == r2.training_rmse);
    CHECK(r1.holdout_rmse == r2.holdout_rmse);
    CHECK(r1.r_squared == r2.r_squared);
    CHECK(r1.iterations == r2.iterations);
}

TEST_CASE("multi-hop path sums are recovered from end-to-end observations") {
    const auto truth = truth_model();
    Rng rng(76);
    std::vector<FitSample> samples;
    samples.reserve(600);
    for (int i = 0; i < 600; ++i) {
        FitSample s;
        s.hops = {draw_features(rng), draw_features(rng)};
        for (const auto& h : s.hops) s.observed_ms += predict_hop(truth, h);
        samples.push_back(std::move(s));
    }
    FitOptions options;
    options.seed = 12;
    const FitReport report = fit_paths(samples, options);
    CHECK(report.converged);

    double worst = 0.0;
    for (const auto& s : samples) {
        const PathDescriptor path(ServerId(0), s.hops);
        const double got = predict_end_to_end(report.coefficients, path);
        worst = std::max(worst, std::abs(got - s.observed_ms) / s.observed_ms);
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("the report exposes a holdout evaluated on unseen rows") {
    const auto samples = make_samples(1000, 77, 0.95, 1.05);
    FitOptions options;
    options.seed = 13;
    options.holdout_fraction = 0.2;
    const FitReport report = fit(samples, options);
    CHECK(report.holdout_rmse >= 0.0);
    CHECK(report.r_squared <= 1.0);
    // with noise injected the holdout cannot be a perfect fit
    CHECK(report.holdout_rmse > 0.0);
}
