#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "mohan/error.hpp"
#include "mohan/evaluation.hpp"
#include "mohan/predictor.hpp"
#include "mohan/reliability.hpp"
#include "mohan/selector.hpp"
#include "mohan/simulator.hpp"
#include "mohan/trace_io.hpp"

namespace py = pybind11;
using namespace mohan;

namespace {

Policy policy_or_throw(const std::string& token) {
    const auto policy = policy_from_name(token);
    if (!policy) throw ValidationError("policy", "unknown policy '" + token + "'");
    return *policy;
}

Scenario scenario_with(const std::optional<SelectorConfig>& config,
                       std::optional<std::size_t> requests) {
    Scenario scenario = standard_scenario();
    if (config) scenario.config = validate_config(*config);
    if (requests) scenario.requests = *requests;
    return scenario;
}

}  // namespace

PYBIND11_MODULE(_mohan, m) {
    m.doc() = "Edge server selection: latency prediction, adaptive reliability, "
              "hysteresis handover and the simulated evaluation harness.";
    m.attr("__version__") = "0.1.0";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const ParseError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const IoError& e) {
            PyErr_SetString(PyExc_OSError, e.what());
        } catch (const SingularityError& e) {
            PyErr_SetString(PyExc_ArithmeticError, e.what());
        } catch (const OverflowError& e) {
            PyErr_SetString(PyExc_OverflowError, e.what());
        }
    });

    py::class_<FeatureVector>(m, "FeatureVector")
        .def(py::init<double, double, double>(), py::arg("payload_bytes"),
             py::arg("utilization"), py::arg("arrival_rate"))
        .def_property_readonly("payload_bytes", &FeatureVector::payload_bytes)
        .def_property_readonly("utilization", &FeatureVector::utilization)
        .def_property_readonly("arrival_rate", &FeatureVector::arrival_rate)
        .def("__getitem__",
             [](const FeatureVector& x, std::size_t i) {
                 if (i >= FeatureVector::kFeatures) throw py::index_error();
                 return x[i];
             })
        .def("__len__", [](const FeatureVector&) { return FeatureVector::kFeatures; })
        .def("__repr__", [](const FeatureVector& x) {
            std::ostringstream out;
            out << "FeatureVector(" << x.payload_bytes() << ", " << x.utilization() << ", "
                << x.arrival_rate() << ")";
            return out.str();
        });

    py::class_<PathDescriptor>(m, "PathDescriptor")
        .def(py::init([](std::size_t server, std::vector<FeatureVector> hops) {
                 return PathDescriptor(ServerId(server), std::move(hops));
             }),
             py::arg("server"), py::arg("hops"))
        .def_property_readonly("server",
                               [](const PathDescriptor& p) { return p.server().value; })
        .def_property_readonly("hops", &PathDescriptor::hops);

    py::class_<FeatureScaler>(m, "FeatureScaler")
        .def(py::init<>())
        .def_readwrite("mean", &FeatureScaler::mean)
        .def_readwrite("stddev", &FeatureScaler::stddev);

    py::class_<ModelCoefficients>(m, "ModelCoefficients")
        .def(py::init<>())
        .def_readwrite("a", &ModelCoefficients::a)
        .def_readwrite("b", &ModelCoefficients::b)
        .def_readwrite("c", &ModelCoefficients::c)
        .def_readwrite("d", &ModelCoefficients::d)
        .def_readwrite("exp_feature_index", &ModelCoefficients::exp_feature_index)
        .def_readwrite("scaler", &ModelCoefficients::scaler)
        .def("__eq__", [](const ModelCoefficients& lhs,
                          const ModelCoefficients& rhs) { return lhs == rhs; })
        .def("dumps", [](const ModelCoefficients& model) { return model_to_json(model).dump(2); })
        .def_static("loads", [](const std::string& text) {
            try {
                return model_from_json(nlohmann::json::parse(text));
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(e.what());
            }
        });

    py::class_<SelectorConfig>(m, "SelectorConfig")
        .def(py::init([](double alpha, double beta, double delta, double theta,
                         std::vector<double> initial_reliability) {
                 SelectorConfig config;
                 config.alpha = alpha;
                 config.beta = beta;
                 config.delta = delta;
                 config.theta_handover = theta;
                 config.initial_reliability = std::move(initial_reliability);
                 return validate_config(config);
             }),
             py::arg("alpha") = 0.5, py::arg("beta") = 0.9, py::arg("delta") = 0.2,
             py::arg("theta") = 0.05, py::arg("initial_reliability") = std::vector<double>{})
        .def_readwrite("alpha", &SelectorConfig::alpha)
        .def_readwrite("beta", &SelectorConfig::beta)
        .def_readwrite("delta", &SelectorConfig::delta)
        .def_readwrite("theta", &SelectorConfig::theta_handover)
        .def_readwrite("initial_reliability", &SelectorConfig::initial_reliability)
        .def("dumps", [](const SelectorConfig& config) { return config_to_json(config).dump(2); })
        .def_static("loads", [](const std::string& text) {
            try {
                return config_from_json(nlohmann::json::parse(text));
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(e.what());
            }
        });

    py::class_<FitReport>(m, "FitReport")
        .def_readonly("coefficients", &FitReport::coefficients)
        .def_readonly("training_rmse", &FitReport::training_rmse)
        .def_readonly("holdout_rmse", &FitReport::holdout_rmse)
        .def_readonly("r_squared", &FitReport::r_squared)
        .def_readonly("iterations", &FitReport::iterations)
        .def_readonly("converged", &FitReport::converged);

    py::class_<RunStats>(m, "RunStats")
        .def_readonly("mean_ms", &RunStats::mean_ms)
        .def_readonly("median_ms", &RunStats::median_ms)
        .def_readonly("p95_ms", &RunStats::p95_ms)
        .def_readonly("handover_rate", &RunStats::handover_rate)
        .def_readonly("count", &RunStats::count)
        .def("__repr__", [](const RunStats& s) {
            std::ostringstream out;
            out << "RunStats(mean_ms=" << s.mean_ms << ", median_ms=" << s.median_ms
                << ", p95_ms=" << s.p95_ms << ", handover_rate=" << s.handover_rate
                << ", count=" << s.count << ")";
            return out.str();
        });

    py::class_<SweepResult>(m, "SweepResult")
        .def_readonly("alpha", &SweepResult::alpha)
        .def_readonly("beta", &SweepResult::beta)
        .def_readonly("delta", &SweepResult::delta)
        .def_readonly("theta", &SweepResult::theta)
        .def_readonly("stats", &SweepResult::stats)
        .def_readonly("pareto", &SweepResult::pareto);

    py::class_<Decision>(m, "Decision")
        .def_property_readonly("selected", [](const Decision& d) { return d.selected.value; })
        .def_readonly("scores", &Decision::scores)
        .def_readonly("predicted", &Decision::predicted)
        .def_readonly("handover", &Decision::handover)
        .def_property_readonly("reason", [](const Decision& d) { return reason_name(d.reason); });

    py::class_<ReliabilityState>(m, "ReliabilityState")
        .def(py::init([](const SelectorConfig& config, std::size_t servers) {
                 return ReliabilityState(validate_config(config), servers);
             }),
             py::arg("config"), py::arg("servers"))
        .def("update",
             [](ReliabilityState& state, std::size_t server, double observed_ms,
                double predicted_ms) { state.update(ServerId(server), observed_ms, predicted_ms); },
             py::arg("server"), py::arg("observed_ms"), py::arg("predicted_ms"))
        .def_property_readonly("scores", &ReliabilityState::scores)
        .def_property_readonly("update_counts", &ReliabilityState::update_counts)
        .def_property_readonly("beta", &ReliabilityState::beta)
        .def_property_readonly("delta", &ReliabilityState::delta);

    m.def("predict_hop", &predict_hop, py::arg("model"), py::arg("features"),
          "Predicted one-hop latency in milliseconds.");
    m.def("predict_end_to_end", &predict_end_to_end, py::arg("model"), py::arg("path"),
          "Predicted end-to-end latency: left-to-right sum of per-hop predictions.");

    m.def("fit",
          [](const std::vector<std::pair<FeatureVector, double>>& samples,
             double holdout_fraction, std::uint64_t seed, int max_iterations,
             double relative_tolerance, int starts, std::size_t exp_feature_index) {
              FitOptions options;
              options.holdout_fraction = holdout_fraction;
              options.seed = seed;
              options.max_iterations = max_iterations;
              options.relative_tolerance = relative_tolerance;
              options.starts = starts;
              options.exp_feature_index = exp_feature_index;
              return fit(samples, options);
          },
          py::arg("samples"), py::arg("holdout_fraction") = 0.2, py::arg("seed") = 0,
          py::arg("max_iterations") = 500, py::arg("relative_tolerance") = 1e-10,
          py::arg("starts") = 16, py::arg("exp_feature_index") = 1,
          "Least-squares fit of the per-hop model on (features, observed_ms) pairs.");

    m.def("match_indicator", &match_indicator, py::arg("observed_ms"), py::arg("predicted_ms"),
          py::arg("delta"),
          "1 when observed <= (1 + delta) * predicted, equality included.");

    m.def("composite_score",
          [](const std::vector<double>& predicted, const std::vector<double>& reliability,
             double alpha) { return composite_score(predicted, reliability, alpha); },
          py::arg("predicted"), py::arg("reliability"), py::arg("alpha"),
          "Composite scores alpha * T_j / T_max + (1 - alpha) * (1 - R_j).");

    m.def("mohan_select",
          [](const std::vector<double>& scores, double theta, std::optional<std::size_t> previous) {
              SelectorState state;
              if (previous) state.previous = ServerId(*previous);
              return mohan_select(state, scores, theta);
          },
          py::arg("scores"), py::arg("theta"), py::arg("previous") = std::nullopt,
          "Hysteresis-moderated argmin over composite scores.");

    m.def("run_standard",
          [](const std::string& policy, std::uint64_t seed,
             const std::optional<SelectorConfig>& config, std::optional<std::size_t> requests) {
              const Scenario scenario = scenario_with(config, requests);
              const ScenarioArtifacts artifacts = prepare_scenario(scenario, seed);
              const RunLog log = run_experiment(policy_or_throw(policy), scenario.config,
                                                scenario.topology, artifacts.trace.records,
                                                artifacts.counterfactuals,
                                                &artifacts.fit.coefficients);
              return compute_stats(log);
          },
          py::arg("policy"), py::arg("seed"), py::arg("config") = std::nullopt,
          py::arg("requests") = std::nullopt,
          "Run one policy over the built-in scenario and summarize the observed latencies.");

    m.def("sweep_standard",
          [](std::uint64_t seed, const std::vector<double>& alphas,
             const std::vector<double>& betas, const std::vector<double>& deltas,
             const std::vector<double>& thetas, const std::optional<SelectorConfig>& config,
             std::optional<std::size_t> requests) {
              const Scenario scenario = scenario_with(config, requests);
              SweepGrid grid;
              if (!alphas.empty()) grid.alphas = alphas;
              if (!betas.empty()) grid.betas = betas;
              if (!deltas.empty()) grid.deltas = deltas;
              if (!thetas.empty()) grid.thetas = thetas;
              return sweep(grid, scenario, seed);
          },
          py::arg("seed"), py::arg("alphas") = std::vector<double>{},
          py::arg("betas") = std::vector<double>{}, py::arg("deltas") = std::vector<double>{},
          py::arg("thetas") = std::vector<double>{}, py::arg("config") = std::nullopt,
          py::arg("requests") = std::nullopt,
          "Full-factorial parameter sweep over the built-in scenario, Pareto-marked.");

    m.def("policies", [] {
        return std::vector<std::string>{
            policy_name(Policy::Mohan), policy_name(Policy::Nearest),
            policy_name(Policy::RoundRobin), policy_name(Policy::LowestLatency)};
    });
}
