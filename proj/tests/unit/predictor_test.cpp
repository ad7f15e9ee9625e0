#include <doctest.h>

#include <cmath>
#include <vector>

#include "mohan/error.hpp"
#include "mohan/predictor.hpp"
#include "mohan/rng.hpp"

using namespace mohan;

namespace {

// Independent evaluation of the per-hop delay model, written longhand so a
// bug in the library formula cannot hide in both places.
double hop_reference(const ModelCoefficients& m, const FeatureVector& x) {
    double z[3];
    for (int k = 0; k < 3; ++k) z[k] = (x[k] - m.scaler.mean[k]) / m.scaler.stddev[k];
    const double numerator = m.a[0] * z[0] + m.a[1] * z[1] + m.a[2] * z[2];
    const double denominator = 1.0 + m.b[0] * z[0] + m.b[1] * z[1] + m.b[2] * z[2] + m.c;
    return numerator / denominator * std::exp(m.d * z[m.exp_feature_index]);
}

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

ModelCoefficients plain(const std::array<double, 3>& a, const std::array<double, 3>& b, double c,
                        double d, std::size_t exp_idx = 1) {
    ModelCoefficients m;
    m.a = a;
    m.b = b;
    m.c = c;
    m.d = d;
    m.exp_feature_index = exp_idx;
    return m;
}

}  // namespace

TEST_CASE("identity numerator, unit denominator, neutral exponent") {
    const auto m = plain({1, 0, 0}, {0, 0, 0}, 0.0, 0.0);
    CHECK(predict_hop(m, FeatureVector(10, 0.5, 100)) == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("zero numerator predicts zero") {
    const auto m = plain({0, 0, 0}, {0.1, 0.2, 0.05}, 0.5, 0.01);
    CHECK(predict_hop(m, FeatureVector(3, 0.4, 2)) == 0.0);
}

TEST_CASE("fixed-point agreement with the longhand formula") {
    const auto m = plain({2, 1, 0.5}, {0.1, 0.2, 0.05}, 0.5, 0.01, 1);
    const FeatureVector x(3, 0.4, 2);
    const double got = predict_hop(m, x);
    const double want = hop_reference(m, x);
    CHECK(rel_err(got, want) < 1e-12);
    // spot value: (2*3 + 0.4 + 0.5*2) / (1 + 0.3 + 0.08 + 0.1 + 0.5) * e^0.004
    CHECK(got == doctest::Approx(7.4 / 1.98 * std::exp(0.004)).epsilon(1e-12));
}

TEST_CASE("randomized agreement with the longhand formula") {
    Rng rng(2024);
    int checked = 0;
    for (int trial = 0; trial < 3000 && checked < 1200; ++trial) {
        ModelCoefficients m;
        for (int k = 0; k < 3; ++k) {
            m.a[k] = rng.uniform(-5.0, 5.0);
            m.b[k] = rng.uniform(-0.3, 0.3);
            m.scaler.mean[k] = rng.uniform(-1.0, 1.0);
            m.scaler.stddev[k] = rng.uniform(0.5, 3.0);
        }
        m.c = rng.uniform(-0.3, 2.0);
        m.d = rng.uniform(-1.0, 1.0);
        m.exp_feature_index = static_cast<std::size_t>(rng.uniform_int(0, 2));
        const FeatureVector x(rng.uniform(0.0, 10.0), rng.uniform01(), rng.uniform(0.0, 10.0));

        double want;
        try {
            want = hop_reference(m, x);
        } catch (...) {
            continue;
        }
        double z[3];
        for (int k = 0; k < 3; ++k) z[k] = (x[k] - m.scaler.mean[k]) / m.scaler.stddev[k];
        const double den = 1.0 + m.b[0] * z[0] + m.b[1] * z[1] + m.b[2] * z[2] + m.c;
        if (den < kDenominatorFloor || !std::isfinite(want)) continue;

        CHECK(rel_err(predict_hop(m, x), want) < 1e-12);
        ++checked;
    }
    CHECK(checked >= 1000);
}

TEST_CASE("a vanishing denominator raises a singularity") {
    // denominator = 1 + c = 1e-7 < floor
    const auto m = plain({1, 0, 0}, {0, 0, 0}, -1.0 + 1e-7, 0.0);
    CHECK_THROWS_AS(predict_hop(m, FeatureVector(1, 0.5, 1)), SingularityError);
    try {
        predict_hop(m, FeatureVector(1, 0.5, 1));
    } catch (const SingularityError& e) {
        CHECK(e.denominator() == doctest::Approx(1e-7).epsilon(1e-6));
    }
}

TEST_CASE("a non-finite prediction raises an overflow") {
    const auto m = plain({1, 0, 0}, {0, 0, 0}, 0.0, 1000.0, 2);
    CHECK_THROWS_AS(predict_hop(m, FeatureVector(1, 0.5, 5000)), OverflowError);
}

TEST_CASE("end-to-end is the left-to-right sum of hops") {
    const auto m = plain({1, 0, 0}, {0, 0, 0}, 0.0, 0.0);

    SUBCASE("two identical hops double the latency") {
        const FeatureVector hop(10, 0.5, 100);
        const PathDescriptor path(ServerId(0), {hop, hop});
        CHECK(predict_end_to_end(m, path) == doctest::Approx(20.0).epsilon(1e-15));
    }

    SUBCASE("a single hop reduces to predict_hop") {
        const FeatureVector hop(7, 0.3, 50);
        const PathDescriptor path(ServerId(0), {hop});
        CHECK(predict_end_to_end(m, path) == predict_hop(m, hop));
    }

    SUBCASE("heterogeneous hops sum against the longhand formula") {
        const auto full = plain({2, 1, 0.5}, {0.1, 0.2, 0.05}, 0.5, 0.01, 1);
        const std::vector<FeatureVector> hops{FeatureVector(3, 0.4, 2), FeatureVector(1, 0.9, 7),
                                              FeatureVector(8, 0.1, 0.5)};
        const PathDescriptor path(ServerId(0), hops);
        double want = 0.0;
        for (const auto& h : hops) want += hop_reference(full, h);
        CHECK(rel_err(predict_end_to_end(full, path), want) < 1e-12);
    }
}

TEST_CASE("end-to-end follows the left-to-right running sum bitwise") {
    const auto m = plain({2, 1, 0.5}, {0.1, 0.2, 0.05}, 0.5, 0.01, 1);
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<FeatureVector> hops;
        const auto n = rng.uniform_int(1, 6);
        for (std::uint64_t i = 0; i < n; ++i)
            hops.emplace_back(rng.uniform(0, 10), rng.uniform01(), rng.uniform(0, 10));
        double running = 0.0;
        for (const auto& h : hops) running += predict_hop(m, h);
        CHECK(predict_end_to_end(m, PathDescriptor(ServerId(0), hops)) == running);
    }
}

TEST_CASE("end-to-end distributes over concatenation") {
    const auto m = plain({2, 1, 0.5}, {0.1, 0.2, 0.05}, 0.5, 0.01, 1);
    Rng rng(98);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<FeatureVector> h1, h2;
        const auto n1 = rng.uniform_int(1, 4), n2 = rng.uniform_int(1, 4);
        for (std::uint64_t i = 0; i < n1; ++i)
            h1.emplace_back(rng.uniform(0, 10), rng.uniform01(), rng.uniform(0, 10));
        for (std::uint64_t i = 0; i < n2; ++i)
            h2.emplace_back(rng.uniform(0, 10), rng.uniform01(), rng.uniform(0, 10));
        std::vector<FeatureVector> joined = h1;
        joined.insert(joined.end(), h2.begin(), h2.end());

        const double t1 = predict_end_to_end(m, PathDescriptor(ServerId(0), h1));
        const double t2 = predict_end_to_end(m, PathDescriptor(ServerId(0), h2));
        const double tj = predict_end_to_end(m, PathDescriptor(ServerId(0), joined));
        if (n2 == 1) {
            // appending one hop extends the running sum, so this is bitwise
            CHECK(tj == t1 + t2);
        } else {
            // longer right parts re-associate the sum; only rounding differs
            CHECK(rel_err(tj, t1 + t2) < 1e-15);
        }
    }
}

TEST_CASE("per-hop errors carry the failing hop index") {
    const auto good = plain({1, 0, 0}, {0, 0, 0}, 0.0, 0.0);
    auto bad = good;
    bad.b = {0, -2.0, 0};  // denominator 1 - 2*util goes negative at util 0.9
    const PathDescriptor path(ServerId(0),
                              {FeatureVector(1, 0.1, 1), FeatureVector(1, 0.9, 1)});
    CHECK_NOTHROW(predict_end_to_end(good, path));
    try {
        predict_end_to_end(bad, path);
        FAIL("expected a singularity");
    } catch (const SingularityError& e) {
        CHECK(std::string(e.what()).find("hop 1") != std::string::npos);
    }
}

TEST_CASE("with a bare numerator the slope in each feature is its weight") {
    const auto m = plain({3.5, -1.25, 0.75}, {0, 0, 0}, 0.0, 0.0);
    const FeatureVector base(5, 0.5, 20);
    const double eps = 1e-4;
    for (int i = 0; i < 3; ++i) {
        double lo[3] = {base[0], base[1], base[2]};
        double hi[3] = {base[0], base[1], base[2]};
        lo[i] -= eps;
        hi[i] += eps;
        const double y_lo = predict_hop(m, FeatureVector(lo[0], lo[1], lo[2]));
        const double y_hi = predict_hop(m, FeatureVector(hi[0], hi[1], hi[2]));
        const double slope = (y_hi - y_lo) / (2 * eps);
        CHECK(rel_err(slope, m.a[i]) < 1e-9);
    }
}

TEST_CASE("the exponential factor is exp(d times the load feature)") {
    // silence feature 1 everywhere except the exponent
    const auto m = plain({2, 0, 0.5}, {0.1, 0, 0.05}, 0.5, 0.7, 1);
    for (double v : {0.1, 0.35, 0.8, 1.0}) {
        const double y_v = predict_hop(m, FeatureVector(3, v, 2));
        const double y_0 = predict_hop(m, FeatureVector(3, 0.0, 2));
        CHECK(rel_err(y_v / y_0, std::exp(m.d * v)) < 1e-9);
    }
}

TEST_CASE("the stored scaler is applied before the formula") {
    auto m = plain({1, 1, 1}, {0, 0, 0}, 0.0, 0.0);
    m.scaler.mean = {0, 0, 0};
    m.scaler.stddev = {2, 4, 8};
    // z = (10/2, 0.8/4, 16/8) = (5, 0.2, 2), numerator sums to 7.2
    CHECK(predict_hop(m, FeatureVector(10, 0.8, 16)) == doctest::Approx(7.2).epsilon(1e-15));
}

TEST_CASE("an invalid exponent index or scaler is rejected") {
    auto m = plain({1, 0, 0}, {0, 0, 0}, 0.0, 0.0);
    m.exp_feature_index = 3;
    CHECK_THROWS_AS(predict_hop(m, FeatureVector(1, 0.5, 1)), ValidationError);
    m.exp_feature_index = 1;
    m.scaler.stddev = {1, 0, 1};
    CHECK_THROWS_AS(predict_hop(m, FeatureVector(1, 0.5, 1)), ValidationError);
}
