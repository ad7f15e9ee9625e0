#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mohan/types.hpp"

namespace mohan {

// Lower bound for the rational-model denominator, enforced at fit time and
// checked on every prediction.
inline constexpr double kDenominatorFloor = 1e-6;

// Minimum number of samples fit() accepts.
inline constexpr std::size_t kMinTrainingSamples = 50;

// Per-feature affine transform applied inside predict; fitted models store
// the normalization of their training data so callers always pass raw-unit
// features. Fitting uses a pure rescaling (mean 0, stddev = per-feature RMS):
// the rational form has no numerator intercept, so mean-centering would pin
// the prediction to zero at the training centroid.
struct FeatureScaler {
    std::array<double, FeatureVector::kFeatures> mean{0.0, 0.0, 0.0};
    std::array<double, FeatureVector::kFeatures> stddev{1.0, 1.0, 1.0};

    std::array<double, FeatureVector::kFeatures> scale(const FeatureVector& x) const noexcept {
        return {(x[0] - mean[0]) / stddev[0], (x[1] - mean[1]) / stddev[1],
                (x[2] - mean[2]) / stddev[2]};
    }

    friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;
};

// Coefficients of the per-hop delay model
//   y(x) = (sum_i a_i z_i) / (1 + sum_j b_j z_j + c) * exp(d * z_e)
// where z is the scaled feature vector and e = exp_feature_index.
struct ModelCoefficients {
    std::array<double, FeatureVector::kFeatures> a{0.0, 0.0, 0.0};
    std::array<double, FeatureVector::kFeatures> b{0.0, 0.0, 0.0};
    double c = 0.0;
    double d = 0.0;
    std::size_t exp_feature_index = 1;
    FeatureScaler scaler;

    friend bool operator==(const ModelCoefficients&, const ModelCoefficients&) = default;
};

// Predicted one-hop latency in milliseconds.
// Throws SingularityError when the denominator drops below kDenominatorFloor
// and OverflowError when the result is not finite.
double predict_hop(const ModelCoefficients& coeffs, const FeatureVector& x);

// Predicted end-to-end latency: the left-to-right sum of per-hop predictions.
// Per-hop errors are rethrown annotated with the failing hop index.
double predict_end_to_end(const ModelCoefficients& coeffs, const PathDescriptor& path);

// One training sample: the hops of the served path and the observed
// end-to-end latency. A plain (feature, latency) pair is the one-hop case.
struct FitSample {
    std::vector<FeatureVector> hops;
    double observed_ms = 0.0;
};

struct FitOptions {
    double holdout_fraction = 0.2;
    std::uint64_t seed = 0;
    int max_iterations = 500;
    double relative_tolerance = 1e-10;
    int starts = 16;
    std::size_t exp_feature_index = 1;
};

struct FitReport {
    ModelCoefficients coefficients;
    double training_rmse = 0.0;
    double holdout_rmse = 0.0;
    double r_squared = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Least-squares fit of the per-hop model on (feature, observed) pairs via
// damped Gauss-Newton with deterministic multi-starts. The returned
// coefficients keep the denominator above kDenominatorFloor on every
// training point.
FitReport fit(std::span<const std::pair<FeatureVector, double>> training,
              const FitOptions& options = {});

// Same fit driven through end-to-end sums: each sample's residual is the sum
// of per-hop predictions minus the observed path latency. This is what trace
// data provides, where only end-to-end latency is measurable.
FitReport fit_paths(std::span<const FitSample> training, const FitOptions& options = {});

}  // namespace mohan
