#include <doctest.h>

#include <limits>

#include "mohan/error.hpp"
#include "mohan/types.hpp"

using namespace mohan;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("feature vector checks its units") {
    const FeatureVector x(500000.0, 0.5, 1200.0);
    CHECK(x.payload_bytes() == 500000.0);
    CHECK(x.utilization() == 0.5);
    CHECK(x.arrival_rate() == 1200.0);
    CHECK(x[0] == 500000.0);
    CHECK(x[1] == 0.5);
    CHECK(x[2] == 1200.0);

    CHECK_THROWS_AS(FeatureVector(-1.0, 0.5, 100.0), ValidationError);
    CHECK_THROWS_AS(FeatureVector(10.0, -0.1, 100.0), ValidationError);
    CHECK_THROWS_AS(FeatureVector(10.0, 1.5, 100.0), ValidationError);
    CHECK_THROWS_AS(FeatureVector(10.0, 0.5, -100.0), ValidationError);
    CHECK_THROWS_AS(FeatureVector(kInf, 0.5, 100.0), ValidationError);

    // boundary values are admissible
    CHECK_NOTHROW(FeatureVector(0.0, 0.0, 0.0));
    CHECK_NOTHROW(FeatureVector(0.0, 1.0, 0.0));
}

TEST_CASE("path descriptor needs at least one hop") {
    CHECK_THROWS_AS(PathDescriptor(ServerId(0), {}), ValidationError);
    const PathDescriptor p(ServerId(1), {FeatureVector(1.0, 0.1, 2.0)});
    CHECK(p.server() == ServerId(1));
    CHECK(p.hops().size() == 1);
}

TEST_CASE("the shipped defaults make a valid config") {
    SelectorConfig c;
    c.alpha = 0.5;
    c.beta = 0.9;
    c.delta = 0.2;
    c.theta_handover = 0.05;
    c.initial_reliability = {1.0};
    CHECK_NOTHROW(validate_config(c));
}

TEST_CASE("all lower bounds are admissible") {
    SelectorConfig c;
    c.alpha = 0.0;
    c.beta = 0.0;
    c.delta = 0.0;
    c.theta_handover = 0.0;
    c.initial_reliability = {0.0};
    CHECK_NOTHROW(validate_config(c));
}

TEST_CASE("config validation names the violated field") {
    SelectorConfig c;

    c.alpha = 1.2;
    CHECK_THROWS_WITH_AS(validate_config(c), "alpha out of [0,1]", ValidationError);
    c.alpha = 0.5;

    c.beta = -0.1;
    CHECK_THROWS_WITH_AS(validate_config(c), "beta out of [0,1]", ValidationError);
    c.beta = 0.9;

    c.delta = -1.0;
    CHECK_THROWS_AS(validate_config(c), ValidationError);
    c.delta = 0.2;

    c.theta_handover = -0.05;
    CHECK_THROWS_AS(validate_config(c), ValidationError);
    c.theta_handover = 0.05;

    c.initial_reliability = {0.5, 1.7};
    CHECK_THROWS_AS(validate_config(c), ValidationError);
}

TEST_CASE("delta and theta admit infinity") {
    SelectorConfig c;
    c.delta = kInf;
    c.theta_handover = kInf;
    CHECK_NOTHROW(validate_config(c));
}

TEST_CASE("initial reliability defaults, broadcasts, or maps per server") {
    SelectorConfig c;
    CHECK(initial_reliability_for(c, 3, 0) == 1.0);
    CHECK(initial_reliability_for(c, 3, 2) == 1.0);

    c.initial_reliability = {0.7};
    CHECK(initial_reliability_for(c, 3, 1) == 0.7);

    c.initial_reliability = {0.1, 0.2, 0.3};
    CHECK(initial_reliability_for(c, 3, 0) == 0.1);
    CHECK(initial_reliability_for(c, 3, 2) == 0.3);

    c.initial_reliability = {0.1, 0.2};
    CHECK_THROWS_AS(initial_reliability_for(c, 3, 0), ValidationError);
}

TEST_CASE("trace records tie served_by and observed latency together") {
    std::vector<PathDescriptor> paths;
    paths.emplace_back(ServerId(0), std::vector<FeatureVector>{FeatureVector(1.0, 0.1, 2.0)});
    paths.emplace_back(ServerId(1), std::vector<FeatureVector>{FeatureVector(1.0, 0.2, 3.0)});

    CHECK_NOTHROW(TraceRecord(0.0, 500000.0, paths));
    CHECK_NOTHROW(TraceRecord(0.5, 500000.0, paths, ServerId(1), 42.0));

    // one without the other is rejected
    CHECK_THROWS_AS(TraceRecord(0.0, 500000.0, paths, ServerId(0), std::nullopt), ValidationError);
    CHECK_THROWS_AS(TraceRecord(0.0, 500000.0, paths, std::nullopt, 42.0), ValidationError);
    // observed latency must be positive
    CHECK_THROWS_AS(TraceRecord(0.0, 500000.0, paths, ServerId(0), 0.0), ValidationError);
    CHECK_THROWS_AS(TraceRecord(0.0, 500000.0, paths, ServerId(0), -1.0), ValidationError);
    // served_by must be a real server
    CHECK_THROWS_AS(TraceRecord(0.0, 500000.0, paths, ServerId(2), 42.0), ValidationError);
    // no empty path set, no negative timestamp
    CHECK_THROWS_AS(TraceRecord(0.0, 500000.0, {}), ValidationError);
    CHECK_THROWS_AS(TraceRecord(-1.0, 500000.0, paths), ValidationError);
}

TEST_CASE("paths must cover servers in index order") {
    std::vector<PathDescriptor> swapped;
    swapped.emplace_back(ServerId(1), std::vector<FeatureVector>{FeatureVector(1.0, 0.1, 2.0)});
    swapped.emplace_back(ServerId(0), std::vector<FeatureVector>{FeatureVector(1.0, 0.2, 3.0)});
    CHECK_THROWS_AS(TraceRecord(0.0, 500000.0, swapped), ValidationError);

    std::vector<PathDescriptor> duplicated;
    duplicated.emplace_back(ServerId(0), std::vector<FeatureVector>{FeatureVector(1.0, 0.1, 2.0)});
    duplicated.emplace_back(ServerId(0), std::vector<FeatureVector>{FeatureVector(1.0, 0.2, 3.0)});
    CHECK_THROWS_AS(TraceRecord(0.0, 500000.0, duplicated), ValidationError);
}
