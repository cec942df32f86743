#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mardid/error.hpp"
#include "mardid/estimators.hpp"
#include "mardid/numerics.hpp"
#include "mardid/simulation.hpp"

#include <cmath>
#include <limits>

namespace py = pybind11;
using namespace mardid;

namespace {

// NaN marks a missing outcome; indicators default to "observed unless NaN".
Dataset dataset_from_arrays(const Eigen::MatrixXd& x, const std::vector<int>& a, const std::vector<double>& y0,
                            const std::vector<double>& y1, const std::string& regime,
                            std::optional<std::vector<std::string>> names) {
  const auto n = static_cast<std::size_t>(x.rows());
  require(a.size() == n && y0.size() == n && y1.size() == n, ErrorKind::DimensionMismatch,
          "x, a, y0 and y1 must have the same number of rows");
  std::vector<ObservedSample> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = rows[i];
    s.x.resize(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index k = 0; k < x.cols(); ++k) s.x[static_cast<std::size_t>(k)] = x(static_cast<Eigen::Index>(i), k);
    s.a = a[i];
    s.r0 = std::isnan(y0[i]) ? 0 : 1;
    s.r1 = std::isnan(y1[i]) ? 0 : 1;
    if (s.r0) s.y0 = y0[i];
    if (s.r1) s.y1 = y1[i];
  }
  return Dataset(std::move(rows), parse_regime(regime), names.value_or(std::vector<std::string>{}));
}

std::vector<double> outcome_column(const Dataset& d, bool pre) {
  std::vector<double> out(d.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& y = pre ? d[i].y0 : d[i].y1;
    if (y) out[i] = *y;
  }
  return out;
}

FeatureMap map_named(const std::string& name) {
  if (name == "raw") return FeatureMap::raw();
  if (name == "z-to-x") return FeatureMap::z_to_x();
  fail(ErrorKind::InvalidArgument, "unknown feature map '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_mardid, m) {
  m.doc() = "Cross-fitted ATT estimation for difference-in-differences with missing outcomes";

  py::register_exception<Error>(m, "MardidError", PyExc_ValueError);

  py::class_<LinearModel>(m, "LinearModel")
      .def_readonly("coefficients", &LinearModel::coefficients)
      .def_readonly("converged", &LinearModel::converged)
      .def_readonly("iterations", &LinearModel::iterations)
      .def_readonly("score_norm", &LinearModel::score_norm);

  m.def(
      "fit_ols",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::optional<Eigen::VectorXd> w) {
        return solve_least_squares(DesignMatrix(x), y, w);
      },
      py::arg("x"), py::arg("y"), py::arg("weights") = py::none());
  m.def(
      "fit_logistic",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y) { return fit_logistic(DesignMatrix(x), y); },
      py::arg("x"), py::arg("y"));

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&dataset_from_arrays), py::arg("x"), py::arg("a"), py::arg("y0"), py::arg("y1"),
           py::arg("regime") = "pre-simple", py::arg("names") = py::none())
      .def_static(
          "load_csv",
          [](const std::filesystem::path& path, const std::string& regime) {
            return load_csv(path, CsvSchema{}, parse_regime(regime));
          },
          py::arg("path"), py::arg("regime") = "pre-simple")
      .def("to_csv", [](const Dataset& d) { return format_csv(d); })
      .def("__len__", &Dataset::size)
      .def_property_readonly("dim", &Dataset::dim)
      .def_property_readonly("regime", [](const Dataset& d) { return std::string(to_string(d.regime())); })
      .def_property_readonly("names", &Dataset::covariate_names)
      .def_property_readonly("a",
                             [](const Dataset& d) {
                               std::vector<int> a(d.size());
                               for (std::size_t i = 0; i < d.size(); ++i) a[i] = d[i].a;
                               return a;
                             })
      .def_property_readonly("y0", [](const Dataset& d) { return outcome_column(d, true); })
      .def_property_readonly("y1", [](const Dataset& d) { return outcome_column(d, false); });

  py::class_<EfficiencyGap>(m, "EfficiencyGap")
      .def_readonly("terms", &EfficiencyGap::terms)
      .def_property_readonly("total", &EfficiencyGap::total);

  py::class_<EstimateResult>(m, "EstimateResult")
      .def_property_readonly("regime", [](const EstimateResult& r) { return std::string(to_string(r.regime)); })
      .def_readonly("n", &EstimateResult::n)
      .def_readonly("folds", &EstimateResult::folds)
      .def_readonly("theta_hat", &EstimateResult::theta_hat)
      .def_readonly("theta_fold_average", &EstimateResult::theta_fold_average)
      .def_readonly("std_err", &EstimateResult::std_err)
      .def_readonly("ci_lo", &EstimateResult::ci_lo)
      .def_readonly("ci_hi", &EstimateResult::ci_hi)
      .def_readonly("fold_estimates", &EstimateResult::fold_estimates)
      .def_readonly("p_hat", &EstimateResult::p_hat)
      .def_readonly("if_values", &EstimateResult::if_values)
      .def_readonly("fold_of", &EstimateResult::fold_of)
      .def_readonly("equation_residual", &EstimateResult::equation_residual)
      .def_readonly("efficiency_gap", &EstimateResult::efficiency_gap)
      .def_readonly("warnings", &EstimateResult::warnings);

  m.def(
      "estimate",
      [](const Dataset& data, int folds, std::uint64_t seed, double clip, double alpha, const std::string& eta_mode,
         const std::string& mu_map, const std::string& pi_map, const std::string& gamma_map,
         const std::string& eta_map) {
        EstimatorConfig config;
        config.regime = data.regime();
        config.folds = folds;
        config.seed = seed;
        config.alpha = alpha;
        config.nuisance.clip = clip;
        config.nuisance.eta_mode = parse_eta_mode(eta_mode);
        config.nuisance.mu_map = map_named(mu_map);
        config.nuisance.pi_map = map_named(pi_map);
        config.nuisance.gamma_map = map_named(gamma_map);
        config.nuisance.eta_map = map_named(eta_map);
        py::gil_scoped_release release;
        return cross_fit_att(data, config);
      },
      py::arg("data"), py::arg("folds") = 5, py::arg("seed") = 0, py::arg("clip") = 0.01, py::arg("alpha") = 0.05,
      py::arg("eta_mode") = "augmented", py::arg("mu_map") = "raw", py::arg("pi_map") = "raw",
      py::arg("gamma_map") = "raw", py::arg("eta_map") = "raw");

  m.def(
      "generate",
      [](std::size_t n, const std::string& regime, std::uint64_t seed, std::uint64_t rep, double theta_star,
         const std::string& centering) {
        DgpConfig config;
        config.n = n;
        config.regime = parse_regime(regime);
        config.seed = seed;
        config.theta_star = theta_star;
        config.centering = parse_centering(centering);
        return generate(config, rep).data;
      },
      py::arg("n") = 2000, py::arg("regime") = "pre-simple", py::arg("seed") = 0, py::arg("rep") = 0,
      py::arg("theta_star") = 5.0, py::arg("centering") = "centered");

  py::class_<ScenarioMetrics>(m, "ScenarioMetrics")
      .def_readonly("mae", &ScenarioMetrics::mae)
      .def_readonly("bias", &ScenarioMetrics::bias)
      .def_readonly("mse", &ScenarioMetrics::mse)
      .def_readonly("rmse", &ScenarioMetrics::rmse)
      .def_readonly("sd", &ScenarioMetrics::sd)
      .def_readonly("coverage", &ScenarioMetrics::coverage)
      .def_readonly("completed", &ScenarioMetrics::completed)
      .def_readonly("failures", &ScenarioMetrics::failures);

  py::class_<ScenarioResult>(m, "ScenarioResult")
      .def_readonly("label", &ScenarioResult::label)
      .def_readonly("flags", &ScenarioResult::flags)
      .def_readonly("metrics", &ScenarioResult::metrics)
      .def_readonly("valid", &ScenarioResult::valid)
      .def_property_readonly("theta_hats", [](const ScenarioResult& s) {
        std::vector<double> out;
        for (const auto& r : s.reps) {
          if (r.ok) out.push_back(r.theta_hat);
        }
        return out;
      });

  py::class_<SimulationReport>(m, "SimulationReport")
      .def_readonly("scenarios", &SimulationReport::scenarios)
      .def_property_readonly("regime", [](const SimulationReport& r) { return std::string(to_string(r.regime)); })
      .def("to_markdown", &format_report_markdown)
      .def("to_csv", &format_report_csv)
      .def("reps_csv", &format_reps_csv);

  m.def(
      "simulate",
      [](const std::string& regime, const std::string& scenario, std::size_t n, std::size_t reps, int folds,
         std::uint64_t seed, unsigned jobs, const std::string& centering) {
        MonteCarloConfig config;
        config.n = n;
        config.reps = reps;
        config.folds = folds;
        config.seed = seed;
        config.jobs = jobs;
        config.centering = parse_centering(centering);
        const auto grid = select_scenarios(parse_regime(regime), scenario);
        py::gil_scoped_release release;
        return run_monte_carlo(grid, config);
      },
      py::arg("regime") = "pre-simple", py::arg("scenario") = "all", py::arg("n") = 2000, py::arg("reps") = 100,
      py::arg("folds") = 5, py::arg("seed") = 0, py::arg("jobs") = 1, py::arg("centering") = "centered");
}
