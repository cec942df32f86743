#pragma once

#include "mardid/data.hpp"
#include "mardid/nuisance.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mardid {

// ---------------------------------------------------------------------------
// Efficient influence functions. Each takes nuisance values as given (clip
// them first), a candidate ATT and the estimate of E[A]. All are affine in
// theta with slope -A / p_hat. Correction terms for a missing outcome are
// skipped when its indicator is 0, so an absent outcome is never read.

/// Outcome-independent missingness of Y0.
double eif_pre_simple(const ObservedSample& s, const NuisanceValues& v, double theta, double p_hat);
/// Missingness of Y0 that may depend on Y1; uses the nested regression eta.
double eif_pre_hard(const ObservedSample& s, const NuisanceValues& v, double theta, double p_hat);
/// Fully observed panel (the classical doubly robust DiD influence function).
double eif_complete(const ObservedSample& s, const NuisanceValues& v, double theta, double p_hat);
double eif_post_simple(const ObservedSample& s, const NuisanceValues& v, double theta, double p_hat);
double eif_post_hard(const ObservedSample& s, const NuisanceValues& v, double theta, double p_hat);
/// Independent outcome-independent missingness of both Y0 and Y1.
double eif_both_simple(const ObservedSample& s, const NuisanceValues& v, double theta, double p_hat);

double eif(Regime regime, const ObservedSample& s, const NuisanceValues& v, double theta, double p_hat);

// ---------------------------------------------------------------------------
// Efficiency loss relative to the fully observed panel.

struct EfficiencyGap {
  /// pre-simple: {treated-arm Y0 term, control-arm Y0 term}
  /// pre-hard:   {treated-arm term, control-arm term, nested-regression term}
  std::vector<double> terms;
  double total() const;
};

/// Plug-in of the variance decomposition Var(phi) - Var(phi_complete) on
/// `rows`. Conditional variances of Y0 are squared-residual regressions on
/// `variance_map` (plus y1 under pre-hard), floored at zero.
EfficiencyGap efficiency_gap(const Dataset& data, std::span<const std::size_t> rows, const NuisanceModel& nuisances,
                             double p_hat, const FeatureMap& variance_map);
EfficiencyGap efficiency_gap(const Dataset& data, const NuisanceModel& nuisances, double p_hat,
                             const FeatureMap& variance_map);

// ---------------------------------------------------------------------------
// Cross-fitted estimation.

struct EstimatorConfig {
  Regime regime = Regime::PreSimple;
  int folds = 5;
  std::uint64_t seed = 0;
  NuisanceSpec nuisance{};
  double alpha = 0.05;
  bool efficiency_diagnostics = true;

  void validate() const;
};

struct EstimateResult {
  Regime regime = Regime::PreSimple;
  std::size_t n = 0;
  int folds = 0;
  double theta_hat = 0.0;           // root of the pooled estimating equation
  double theta_fold_average = 0.0;  // (1/J) * sum of per-fold estimates
  double std_err = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::vector<double> fold_estimates;
  std::vector<std::size_t> fold_sizes;
  std::vector<std::size_t> fold_treated;
  std::vector<double> p_hat;      // per fold
  std::vector<double> if_values;  // per sample, at theta_hat
  std::vector<int> fold_of;       // per sample
  double equation_residual = 0.0; // sum_i phi_i(theta_hat)
  double residual_scale = 0.0;    // mean |phi_i(0)|
  std::optional<EfficiencyGap> efficiency_gap;
  std::vector<std::string> warnings;
};

/// Builds fold-local nuisances. `main_rows` trains outcome, propensity and
/// missingness models; `eta_rows` (empty outside hard regimes) trains the
/// nested regression.
using NuisanceFactory = std::function<std::shared_ptr<const NuisanceModel>(
    const Dataset& data, std::span<const std::size_t> main_rows, std::span<const std::size_t> eta_rows, int fold)>;

NuisanceFactory default_nuisance_factory(const NuisanceSpec& spec);

/// Cross-fitted ATT. Throws RegimeMismatch, InvalidFoldCount, EmptyCell
/// (including an evaluation fold without treated units) and FitFailure.
EstimateResult cross_fit_att(const Dataset& data, const EstimatorConfig& config);
EstimateResult cross_fit_att(const Dataset& data, const EstimatorConfig& config, const NuisanceFactory& factory);

/// Two-sided standard normal critical value z_{1 - alpha/2}.
double normal_critical_value(double alpha);

}  // namespace mardid
