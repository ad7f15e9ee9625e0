#include "mohan/predictor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mohan/rng.hpp"

namespace mohan {

namespace {

constexpr std::size_t kParams = 8;  // a0 a1 a2 b0 b1 b2 c d
constexpr double kPenaltyWeight = 1e9;
constexpr std::uint64_t kSplitTag = 0x5e117;
constexpr std::uint64_t kStartsTag = 0x57a275;

double denominator(const ModelCoefficients& m,
                   const std::array<double, FeatureVector::kFeatures>& z) {
    return 1.0 + m.b[0] * z[0] + m.b[1] * z[1] + m.b[2] * z[2] + m.c;
}

double numerator(const ModelCoefficients& m,
                 const std::array<double, FeatureVector::kFeatures>& z) {
    return m.a[0] * z[0] + m.a[1] * z[1] + m.a[2] * z[2];
}

[[noreturn]] void throw_singular(const FeatureVector& x, double den) {
    std::ostringstream os;
    os << "denominator " << den << " below floor " << kDenominatorFloor << " at features ("
       << x.payload_bytes() << ", " << x.utilization() << ", " << x.arrival_rate() << ")";
    throw SingularityError(os.str(), den);
}

// Parameter vector -> coefficient struct, scaler and exp index fixed.
ModelCoefficients unpack(const Eigen::Matrix<double, kParams, 1>& p, std::size_t exp_index,
                         const FeatureScaler& scaler) {
    ModelCoefficients m;
    m.a = {p[0], p[1], p[2]};
    m.b = {p[3], p[4], p[5]};
    m.c = p[6];
    m.d = p[7];
    m.exp_feature_index = exp_index;
    m.scaler = scaler;
    return m;
}

struct ScaledSample {
    std::vector<std::array<double, FeatureVector::kFeatures>> hops;
    double y = 0.0;
};

// Model value and gradient at one scaled hop. Returns false when the
// evaluation is numerically unusable (zero or non-finite denominator).
bool hop_value_grad(const Eigen::Matrix<double, kParams, 1>& p, std::size_t exp_index,
                    const std::array<double, FeatureVector::kFeatures>& z, double& value,
                    Eigen::Matrix<double, kParams, 1>* grad) {
    const double num = p[0] * z[0] + p[1] * z[1] + p[2] * z[2];
    const double den = 1.0 + p[3] * z[0] + p[4] * z[1] + p[5] * z[2] + p[6];
    if (den == 0.0 || !std::isfinite(den)) return false;
    const double e = std::exp(p[7] * z[exp_index]);
    value = num / den * e;
    if (!std::isfinite(value)) return false;
    if (grad) {
        const double eod = e / den;
        (*grad)[0] = z[0] * eod;
        (*grad)[1] = z[1] * eod;
        (*grad)[2] = z[2] * eod;
        const double common = -num * eod / den;
        (*grad)[3] = z[0] * common;
        (*grad)[4] = z[1] * common;
        (*grad)[5] = z[2] * common;
        (*grad)[6] = common;
        (*grad)[7] = value * z[exp_index];
    }
    return true;
}

// Sum of squared residuals plus the denominator-positivity penalty.
// Returns +inf when any hop evaluation is unusable, so such steps are
// rejected by the damping loop.
double objective(const Eigen::Matrix<double, kParams, 1>& p, std::size_t exp_index,
                 std::span<const ScaledSample> samples) {
    const double kappa2 = kPenaltyWeight;
    double total = 0.0;
    for (const auto& s : samples) {
        double pred = 0.0;
        for (const auto& z : s.hops) {
            double v;
            if (!hop_value_grad(p, exp_index, z, v, nullptr))
                return std::numeric_limits<double>::infinity();
            pred += v;
            const double den = 1.0 + p[3] * z[0] + p[4] * z[1] + p[5] * z[2] + p[6];
            const double gap = kDenominatorFloor - den;
            if (gap > 0.0) total += kappa2 * gap * gap;
        }
        const double r = pred - s.y;
        total += r * r;
        if (!std::isfinite(total)) return std::numeric_limits<double>::infinity();
    }
    return total;
}

struct StartResult {
    Eigen::Matrix<double, kParams, 1> p;
    double objective = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    bool feasible = false;
};

bool denominator_feasible(const Eigen::Matrix<double, kParams, 1>& p,
                          std::span<const ScaledSample> samples) {
    for (const auto& s : samples)
        for (const auto& z : s.hops) {
            const double den = 1.0 + p[3] * z[0] + p[4] * z[1] + p[5] * z[2] + p[6];
            if (!(den >= kDenominatorFloor)) return false;
        }
    return true;
}

StartResult levenberg_marquardt(Eigen::Matrix<double, kParams, 1> p, std::size_t exp_index,
                                std::span<const ScaledSample> fit_samples,
                                std::span<const ScaledSample> all_samples,
                                const FitOptions& options) {
    using Vec = Eigen::Matrix<double, kParams, 1>;
    using Mat = Eigen::Matrix<double, kParams, kParams>;
    const double kappa = std::sqrt(kPenaltyWeight);

    StartResult result;
    double f = objective(p, exp_index, fit_samples);
    double lambda = 1e-3;
    int it = 0;
    for (; it < options.max_iterations && std::isfinite(f); ++it) {
        Mat jtj = Mat::Zero();
        Vec jtr = Vec::Zero();
        for (const auto& s : fit_samples) {
            double pred = 0.0;
            Vec grad_sum = Vec::Zero();
            bool usable = true;
            for (const auto& z : s.hops) {
                double v;
                Vec g;
                if (!hop_value_grad(p, exp_index, z, v, &g)) {
                    usable = false;
                    break;
                }
                pred += v;
                grad_sum += g;
                const double den = 1.0 + p[3] * z[0] + p[4] * z[1] + p[5] * z[2] + p[6];
                const double gap = kDenominatorFloor - den;
                if (gap > 0.0) {
                    // penalty residual kappa*gap with d(gap)/db_j = -z_j, d/dc = -1
                    Vec pg = Vec::Zero();
                    pg[3] = -kappa * z[0];
                    pg[4] = -kappa * z[1];
                    pg[5] = -kappa * z[2];
                    pg[6] = -kappa;
                    jtj += pg * pg.transpose();
                    jtr += pg * (kappa * gap);
                }
            }
            if (!usable) continue;
            const double r = pred - s.y;
            jtj += grad_sum * grad_sum.transpose();
            jtr += grad_sum * r;
        }

        bool improved = false;
        for (int attempt = 0; attempt < 40 && lambda <= 1e14; ++attempt) {
            Mat damped = jtj;
            for (std::size_t k = 0; k < kParams; ++k)
                damped(k, k) += lambda * std::max(jtj(k, k), 1e-12);
            const Vec step = damped.ldlt().solve(-jtr);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Vec candidate = p + step;
            const double f_try = objective(candidate, exp_index, fit_samples);
            if (f_try < f) {
                const double drop = f - f_try;
                if (drop <= options.relative_tolerance * std::max(f, 1e-30))
                    result.converged = true;
                p = candidate;
                f = f_try;
                lambda = std::max(lambda * 0.1, 1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!improved) {
            // damping maxed out with no downhill step: stationary for our
            // purposes, as long as the objective is finite
            result.converged = std::isfinite(f);
            ++it;
            break;
        }
        if (result.converged) {
            ++it;
            break;
        }
    }
    result.p = p;
    result.objective = f;
    result.iterations = it;
    result.feasible = denominator_feasible(p, all_samples);
    return result;
}

// Pure rescaling, no centering: the rational form has no numerator
// intercept, so centering would pin the prediction to zero at the training
// centroid and the family could no longer represent the data. Dividing by
// the root mean square brings every feature to O(1), which is all the
// conditioning the solver needs.
FeatureScaler compute_scaler(std::span<const FitSample> samples,
                             std::span<const std::size_t> fit_indices) {
    FeatureScaler scaler;
    std::array<double, 3> sumsq{0, 0, 0};
    std::size_t count = 0;
    for (std::size_t idx : fit_indices)
        for (const auto& hop : samples[idx].hops) {
            for (std::size_t k = 0; k < 3; ++k) sumsq[k] += hop[k] * hop[k];
            ++count;
        }
    for (std::size_t k = 0; k < 3; ++k) {
        const double rms = std::sqrt(sumsq[k] / static_cast<double>(count));
        scaler.mean[k] = 0.0;
        scaler.stddev[k] = rms > 1e-12 ? rms : 1.0;  // all-zero feature passes through
    }
    return scaler;
}

double rmse_over(const ModelCoefficients& m, std::span<const FitSample> samples,
                 std::span<const std::size_t> indices) {
    if (indices.empty()) return 0.0;
    double ss = 0.0;
    for (std::size_t idx : indices) {
        double pred = 0.0;
        for (const auto& hop : samples[idx].hops) pred += predict_hop(m, hop);
        const double r = pred - samples[idx].observed_ms;
        ss += r * r;
    }
    return std::sqrt(ss / static_cast<double>(indices.size()));
}

double r_squared_over(const ModelCoefficients& m, std::span<const FitSample> samples,
                      std::span<const std::size_t> indices) {
    if (indices.empty()) return 1.0;
    double mean_y = 0.0;
    for (std::size_t idx : indices) mean_y += samples[idx].observed_ms;
    mean_y /= static_cast<double>(indices.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t idx : indices) {
        double pred = 0.0;
        for (const auto& hop : samples[idx].hops) pred += predict_hop(m, hop);
        ss_res += (pred - samples[idx].observed_ms) * (pred - samples[idx].observed_ms);
        ss_tot += (samples[idx].observed_ms - mean_y) * (samples[idx].observed_ms - mean_y);
    }
    if (ss_tot <= 0.0) return ss_res <= 1e-18 ? 1.0 : 0.0;
    return 1.0 - ss_res / ss_tot;
}

}  // namespace

double predict_hop(const ModelCoefficients& coeffs, const FeatureVector& x) {
    if (coeffs.exp_feature_index >= FeatureVector::kFeatures)
        throw ValidationError("exp_feature_index", "must be in {0,1,2}");
    for (double sd : coeffs.scaler.stddev)
        if (!(sd > 0.0)) throw ValidationError("scaler.std", "must be > 0");
    const auto z = coeffs.scaler.scale(x);
    const double den = denominator(coeffs, z);
    if (!(den >= kDenominatorFloor)) throw_singular(x, den);
    const double y = numerator(coeffs, z) / den * std::exp(coeffs.d * z[coeffs.exp_feature_index]);
    if (!std::isfinite(y)) throw OverflowError("prediction is not finite");
    return y;
}

double predict_end_to_end(const ModelCoefficients& coeffs, const PathDescriptor& path) {
    double total = 0.0;
    const auto& hops = path.hops();
    for (std::size_t k = 0; k < hops.size(); ++k) {
        try {
            total += predict_hop(coeffs, hops[k]);
        } catch (const SingularityError& e) {
            throw SingularityError("hop " + std::to_string(k) + ": " + e.what(), e.denominator());
        } catch (const OverflowError& e) {
            throw OverflowError("hop " + std::to_string(k) + ": " + e.what());
        }
    }
    if (!std::isfinite(total)) throw OverflowError("end-to-end prediction is not finite");
    return total;
}

FitReport fit(std::span<const std::pair<FeatureVector, double>> training,
              const FitOptions& options) {
    std::vector<FitSample> samples;
    samples.reserve(training.size());
    for (const auto& [x, y] : training) samples.push_back({{x}, y});
    return fit_paths(samples, options);
}

FitReport fit_paths(std::span<const FitSample> training, const FitOptions& options) {
    if (training.size() < kMinTrainingSamples)
        throw ValidationError("training",
                              "insufficient training data: need at least " +
                                  std::to_string(kMinTrainingSamples) + " samples, got " +
                                  std::to_string(training.size()));
    for (const auto& s : training) {
        if (s.hops.empty()) throw ValidationError("training", "sample with no hops");
        if (!(std::isfinite(s.observed_ms) && s.observed_ms > 0.0))
            throw ValidationError("training", "observed latencies must be > 0");
    }
    if (options.exp_feature_index >= FeatureVector::kFeatures)
        throw ValidationError("exp_feature_index", "must be in {0,1,2}");
    if (!(options.holdout_fraction >= 0.0 && options.holdout_fraction < 1.0))
        throw ValidationError("holdout_fraction", "out of [0,1)");

    const std::size_t n = training.size();

    // deterministic shuffle, then split off the holdout tail
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng split_rng(derive_seed(options.seed, kSplitTag));
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(split_rng.uniform_int(0, i));
        std::swap(order[i], order[j]);
    }
    std::size_t holdout_n = static_cast<std::size_t>(
        std::llround(options.holdout_fraction * static_cast<double>(n)));
    holdout_n = std::min(holdout_n, n - 1);
    std::vector<std::size_t> fit_idx(order.begin(), order.end() - holdout_n);
    std::vector<std::size_t> holdout_idx(order.end() - holdout_n, order.end());

    const FeatureScaler scaler = compute_scaler(training, fit_idx);

    auto scale_subset = [&](std::span<const std::size_t> indices) {
        std::vector<ScaledSample> out;
        out.reserve(indices.size());
        for (std::size_t idx : indices) {
            ScaledSample s;
            s.y = training[idx].observed_ms;
            s.hops.reserve(training[idx].hops.size());
            for (const auto& hop : training[idx].hops) s.hops.push_back(scaler.scale(hop));
            out.push_back(std::move(s));
        }
        return out;
    };
    std::vector<std::size_t> all_idx(n);
    std::iota(all_idx.begin(), all_idx.end(), std::size_t{0});
    const std::vector<ScaledSample> fit_scaled = scale_subset(fit_idx);
    const std::vector<ScaledSample> all_scaled = scale_subset(all_idx);

    // start 1: least-squares a on summed scaled features, b = c = d = 0
    Eigen::Matrix3d xtx = Eigen::Matrix3d::Zero();
    Eigen::Vector3d xty = Eigen::Vector3d::Zero();
    double y_sum = 0.0, y_sumsq = 0.0;
    for (const auto& s : fit_scaled) {
        Eigen::Vector3d zsum = Eigen::Vector3d::Zero();
        for (const auto& z : s.hops) zsum += Eigen::Vector3d(z[0], z[1], z[2]);
        xtx += zsum * zsum.transpose();
        xty += zsum * s.y;
        y_sum += s.y;
        y_sumsq += s.y * s.y;
    }
    for (int k = 0; k < 3; ++k) xtx(k, k) += 1e-9;
    const Eigen::Vector3d a0 = xtx.ldlt().solve(xty);
    const double y_mean = y_sum / static_cast<double>(fit_scaled.size());
    const double y_sd =
        std::sqrt(std::max(0.0, y_sumsq / static_cast<double>(fit_scaled.size()) - y_mean * y_mean));

    Eigen::Matrix<double, kParams, 1> base = Eigen::Matrix<double, kParams, 1>::Zero();
    base[0] = a0[0];
    base[1] = a0[1];
    base[2] = a0[2];

    Rng start_rng(derive_seed(options.seed, kStartsTag));
    StartResult best;
    bool have_best = false;
    int starts = std::max(1, options.starts);
    for (int s = 0; s < starts; ++s) {
        Eigen::Matrix<double, kParams, 1> p = base;
        if (s > 0) {
            for (int k = 0; k < 3; ++k)
                p[k] = base[k] * (1.0 + 0.5 * start_rng.normal()) +
                       0.1 * (y_sd + 1e-6) * start_rng.normal();
            for (int k = 3; k < 6; ++k) p[k] = 0.3 * start_rng.normal();
            p[6] = 0.3 * start_rng.normal();
            p[7] = 0.3 * start_rng.normal();
        }
        StartResult r = levenberg_marquardt(p, options.exp_feature_index, fit_scaled, all_scaled,
                                            options);
        // keep the best feasible start; ties resolved by start order
        if (r.feasible && (!have_best || r.objective < best.objective)) {
            best = r;
            have_best = true;
        }
    }

    FitReport report;
    if (!have_best) {
        // every start ended infeasible; return the always-feasible linear
        // initialization (denominator identically 1) as a diagnosed failure
        best.p = base;
        best.objective = objective(base, options.exp_feature_index, fit_scaled);
        best.converged = false;
        best.iterations = 0;
        report.converged = false;
    } else {
        report.converged = best.converged;
    }
    report.coefficients = unpack(best.p, options.exp_feature_index, scaler);
    report.iterations = best.iterations;
    report.training_rmse = rmse_over(report.coefficients, training, fit_idx);
    const auto& eval_idx = holdout_idx.empty() ? fit_idx : holdout_idx;
    report.holdout_rmse = rmse_over(report.coefficients, training, eval_idx);
    report.r_squared = r_squared_over(report.coefficients, training, eval_idx);
    return report;
}

}  // namespace mohan
