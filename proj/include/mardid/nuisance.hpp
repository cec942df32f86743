#pragma once

// Nuisance functions of the influence-function estimators:
//   outcome regressions  mu_t(x, a)          E[Y_t | X, A=a] (among units with Y_t observed)
//                        mu_t(x, y_s, a)     same, additionally given the other period's outcome (hard regimes)
//   propensity           pi(x)               P(A=1 | X)
//   missingness          gamma(x[, y_s], a)  P(R_t=1 | X[, Y_s], A=a)
//   nested regression    eta_t(x, 0)         E[mu_t(x, Y_s, 0) | X, A=0]
//
// Every working model is linear (identity or logit link) in the output of a
// FeatureMap. A nonparametric alternative for eta integrates mu_t(x, y, 0)
// against an estimate of p(y | x, A=0), e.g. an orthonormal-basis
// conditional density expansion; it is not implemented here.

#include "mardid/data.hpp"
#include "mardid/numerics.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mardid {

enum class EtaMode { Plain, Augmented };

std::string_view to_string(EtaMode mode);
EtaMode parse_eta_mode(std::string_view name);

struct NuisanceSpec {
  FeatureMap mu_map = FeatureMap::raw();
  FeatureMap pi_map = FeatureMap::raw();
  FeatureMap gamma_map = FeatureMap::raw();
  FeatureMap eta_map = FeatureMap::raw();
  EtaMode eta_mode = EtaMode::Augmented;
  double clip = 0.01;
  LogisticOptions logistic{};

  /// Maps are covariate-only: outcome inputs are added per regime by the fitter.
  void validate() const;
};

/// Nuisance values at one sample. Which fields are meaningful depends on the regime:
///
///   pre-simple   mu0_t, mu0_c = mu0(x, a); mu1_c = mu1(x, 0); gamma_t, gamma_c = P(R0=1|x,a)
///   pre-hard     mu0_t, mu0_c = mu0(x, y1, a); mu1_c; gamma_* = P(R0=1|x,y1,a); eta = eta0(x, 0);
///                mu0_c_xonly = E[Y0|x, A=0, R0=1] (diagnostics only)
///   post-simple  mu1_t, mu1_c = mu1(x, a); mu0_c = mu0(x, 0); gamma_* = P(R1=1|x,a)
///   post-hard    mu1_t, mu1_c = mu1(x, y0, a); mu0_c; gamma_* = P(R1=1|x,y0,a); eta = eta1(x, 0)
///   both-simple  mu0_*, mu1_*; gamma_* = P(R0=1|x,a); gamma1_* = P(R1=1|x,a)
///
/// Probabilities are used as given; NuisanceSet::evaluate clips them.
struct NuisanceValues {
  double mu0_t = 0.0;
  double mu0_c = 0.0;
  double mu1_t = 0.0;
  double mu1_c = 0.0;
  double pi = 0.5;
  double gamma_t = 1.0;
  double gamma_c = 1.0;
  double gamma1_t = 1.0;
  double gamma1_c = 1.0;
  double eta = 0.0;
  double mu0_c_xonly = 0.0;

  NuisanceValues clipped(double xi) const;
};

double clip_probability(double p, double xi);

/// Anything that can produce nuisance values per sample: fitted sets, the
/// simulation's true functions, or test doubles.
class NuisanceModel {
 public:
  virtual ~NuisanceModel() = default;
  virtual NuisanceValues evaluate(const ObservedSample& sample) const = 0;
};

/// Linear/logistic model together with the feature map that produced its inputs.
struct FittedModel {
  LinearModel model;
  FeatureMap map;
  std::string name;

  double operator()(const ObservedSample& sample) const;
};

using SampleFunction = std::function<double(const ObservedSample&)>;

class NuisanceSet final : public NuisanceModel {
 public:
  Regime regime = Regime::PreSimple;
  double clip = 0.01;
  // Indexed by treatment arm.
  std::optional<FittedModel> mu0[2];
  std::optional<FittedModel> mu1[2];
  std::optional<FittedModel> gamma[2];   // the missing outcome's indicator (R0 in both-simple)
  std::optional<FittedModel> gamma1[2];  // both-simple only: R1
  std::optional<FittedModel> pi;
  std::optional<FittedModel> eta;
  std::optional<FittedModel> mu0_control_xonly;
  std::vector<std::string> warnings;  // non-converged logistic fits

  NuisanceValues evaluate(const ObservedSample& sample) const override;
};

/// Fits all nuisances of `data.regime()`. Outcome, propensity and missingness
/// models use `main_rows`; the nested regression (hard regimes) uses
/// `eta_rows` only. Throws EmptyCell naming the empty subpopulation and
/// FitFailure (with the cell name) when a fit is rank deficient.
NuisanceSet fit_nuisances(const Dataset& data, std::span<const std::size_t> main_rows,
                          std::span<const std::size_t> eta_rows, const NuisanceSpec& spec);

/// Nested regression of mu(x, Y_other, 0) onto eta_map among controls in `rows`.
FittedModel fit_nested_plain(const Dataset& data, std::span<const std::size_t> rows, const SampleFunction& mu_control,
                             const FeatureMap& eta_map);

/// Nested regression of the pseudo-outcome mu + R (Y - mu) / gamma among
/// controls in `rows`; gamma is clipped to [xi, 1 - xi] before dividing.
FittedModel fit_nested_augmented(const Dataset& data, std::span<const std::size_t> rows,
                                 const SampleFunction& mu_control, const SampleFunction& gamma_control,
                                 const FeatureMap& eta_map, double clip);

/// Test-side instrumentation for the nested-regression oracle property.
struct OracleDiagnostics {
  double oracle_risk = 0.0;   // mean squared error of the oracle regression of the true mu against true eta
  double product_bias = 0.0;  // mean of (mu_hat - mu)(gamma_hat - gamma) / gamma_hat over controls
};

OracleDiagnostics oracle_diagnostics(const Dataset& data, std::span<const std::size_t> rows,
                                     const SampleFunction& mu_hat, const SampleFunction& mu_true,
                                     const SampleFunction& gamma_hat, const SampleFunction& gamma_true,
                                     const SampleFunction& eta_true, const FeatureMap& eta_map);

}  // namespace mardid
