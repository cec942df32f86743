#include "mardid/estimators.hpp"

#include "mardid/error.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <numeric>

namespace mardid {

namespace {

double need(const std::optional<double>& y, const char* what) {
  if (!y) fail(ErrorKind::MissingInput, std::string("influence function needs ") + what);
  return *y;
}

void check_p(double p_hat) {
  require(p_hat > 0.0 && p_hat <= 1.0, ErrorKind::InvalidArgument, "p_hat must lie in (0, 1]");
}

/// A/p * treated - (1-A) pi / ((1-pi) p) * control - A/p * theta, evaluating only the live block.
template <class Treated, class Control>
double combine(const ObservedSample& s, const NuisanceValues& v, double theta, double p, Treated treated,
               Control control) {
  check_p(p);
  const double wt = s.a / p;
  double phi = 0.0;
  if (s.a == 1) {
    phi = wt * treated();
  } else {
    const double wc = v.pi / ((1.0 - v.pi) * p);
    phi = -wc * control();
  }
  const double out = phi - wt * theta;
  if (!std::isfinite(out)) fail(ErrorKind::NonFiniteResult, "influence function is not finite");
  return out;
}

// R (Y - mu) / gamma, zero when the outcome is unobserved.
double correction(int r, const std::optional<double>& y, double mu, double gamma) {
  return r == 1 ? (*y - mu) / gamma : 0.0;
}

class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

double eif_pre_simple(const ObservedSample& s, const NuisanceValues& v, double theta, double p_hat) {
  const double y1 = need(s.y1, "y1");
  return combine(
      s, v, theta, p_hat,
      [&] { return y1 - (v.mu0_t + correction(s.r0, s.y0, v.mu0_t, v.gamma_t)) - v.mu1_c + v.mu0_c; },
      [&] { return y1 - correction(s.r0, s.y0, v.mu0_c, v.gamma_c) - v.mu1_c; });
}

double eif_pre_hard(const ObservedSample& s, const NuisanceValues& v, double theta, double p_hat) {
  const double y1 = need(s.y1, "y1");
  return combine(
      s, v, theta, p_hat,
      [&] { return y1 - (v.mu0_t + correction(s.r0, s.y0, v.mu0_t, v.gamma_t)) - v.mu1_c + v.eta; },
      [&] { return y1 - (v.mu0_c + correction(s.r0, s.y0, v.mu0_c, v.gamma_c)) - v.mu1_c + v.eta; });
}

double eif_complete(const ObservedSample& s, const NuisanceValues& v, double theta, double p_hat) {
  const double y0 = need(s.y0, "y0");
  const double y1 = need(s.y1, "y1");
  const auto block = [&] { return y1 - y0 - v.mu1_c + v.mu0_c; };
  return combine(s, v, theta, p_hat, block, block);
}

double eif_post_simple(const ObservedSample& s, const NuisanceValues& v, double theta, double p_hat) {
  const double y0 = need(s.y0, "y0");
  return combine(
      s, v, theta, p_hat,
      [&] { return (v.mu1_t + correction(s.r1, s.y1, v.mu1_t, v.gamma_t)) - y0 - v.mu1_c + v.mu0_c; },
      [&] { return correction(s.r1, s.y1, v.mu1_c, v.gamma_c) - y0 + v.mu0_c; });
}

double eif_post_hard(const ObservedSample& s, const NuisanceValues& v, double theta, double p_hat) {
  const double y0 = need(s.y0, "y0");
  return combine(
      s, v, theta, p_hat,
      [&] { return (v.mu1_t + correction(s.r1, s.y1, v.mu1_t, v.gamma_t)) - y0 - v.eta + v.mu0_c; },
      [&] { return (v.mu1_c + correction(s.r1, s.y1, v.mu1_c, v.gamma_c)) - y0 - v.eta + v.mu0_c; });
}

double eif_both_simple(const ObservedSample& s, const NuisanceValues& v, double theta, double p_hat) {
  return combine(
      s, v, theta, p_hat,
      [&] {
        return (v.mu1_t + correction(s.r1, s.y1, v.mu1_t, v.gamma1_t)) -
               (v.mu0_t + correction(s.r0, s.y0, v.mu0_t, v.gamma_t)) - (v.mu1_c - v.mu0_c);
      },
      [&] { return correction(s.r1, s.y1, v.mu1_c, v.gamma1_c) - correction(s.r0, s.y0, v.mu0_c, v.gamma_c); });
}

double eif(Regime regime, const ObservedSample& s, const NuisanceValues& v, double theta, double p_hat) {
  switch (regime) {
    case Regime::PreSimple: return eif_pre_simple(s, v, theta, p_hat);
    case Regime::PreHard: return eif_pre_hard(s, v, theta, p_hat);
    case Regime::PostSimple: return eif_post_simple(s, v, theta, p_hat);
    case Regime::PostHard: return eif_post_hard(s, v, theta, p_hat);
    case Regime::BothSimple: return eif_both_simple(s, v, theta, p_hat);
  }
  fail(ErrorKind::InvalidArgument, "unknown regime");
}

// ---------------------------------------------------------------------------

double EfficiencyGap::total() const { return std::accumulate(terms.begin(), terms.end(), 0.0); }

EfficiencyGap efficiency_gap(const Dataset& data, std::span<const std::size_t> rows, const NuisanceModel& nuisances,
                             double p_hat, const FeatureMap& variance_map) {
  const Regime regime = data.regime();
  require(regime == Regime::PreSimple || regime == Regime::PreHard, ErrorKind::RegimeMismatch,
          "efficiency gap is defined for pre-missing regimes");
  require(!rows.empty(), ErrorKind::EmptyCell, "efficiency gap: no rows");
  check_p(p_hat);
  const bool hard = regime == Regime::PreHard;
  const FeatureMap vmap = hard ? variance_map.with_outcome(OutcomeInput::Y1) : variance_map;

  std::vector<NuisanceValues> values;
  values.reserve(rows.size());
  for (auto i : rows) values.push_back(nuisances.evaluate(data[i]));

  // Conditional variance of Y0 per arm from squared residuals among observed units.
  std::optional<LinearModel> variance_model[2];
  for (int a = 0; a < 2; ++a) {
    std::vector<std::size_t> cell;
    std::vector<double> sq;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& s = data[rows[k]];
      if (s.a != a || s.r0 != 1) continue;
      const double mu = a == 1 ? values[k].mu0_t : values[k].mu0_c;
      cell.push_back(rows[k]);
      sq.push_back((*s.y0 - mu) * (*s.y0 - mu));
    }
    if (cell.empty()) fail(ErrorKind::EmptyCell, "efficiency gap: no observed Y0 in arm A=" + std::to_string(a));
    const auto design = build_design(vmap, data, cell);
    variance_model[a] = solve_least_squares(design, Eigen::Map<const Eigen::VectorXd>(sq.data(), static_cast<Eigen::Index>(sq.size())));
  }

  const double p2 = p_hat * p_hat;
  double t_treated = 0.0, t_control = 0.0;
  double nested_mean = 0.0, nested_sq = 0.0;
  std::vector<double> buf;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& s = data[rows[k]];
    const auto& v = values[k];
    write_features(vmap, s, std::nullopt, buf);
    const double var1 = std::max(0.0, predict_row(*variance_model[1], buf));
    const double var0 = std::max(0.0, predict_row(*variance_model[0], buf));
    t_treated += v.pi * var1 / p2 * (1.0 - v.gamma_t) / v.gamma_t;
    t_control += v.pi * v.pi * var0 / ((1.0 - v.pi) * p2) * (1.0 - v.gamma_c) / v.gamma_c;
    if (hard) {
      const double weight = s.a / p_hat - (1 - s.a) * v.pi / ((1.0 - v.pi) * p_hat);
      const double term = weight * (v.eta - v.mu0_c_xonly);
      nested_mean += term;
      nested_sq += term * term;
    }
  }
  const auto n = static_cast<double>(rows.size());
  EfficiencyGap gap;
  gap.terms = {t_treated / n, t_control / n};
  if (hard) {
    nested_mean /= n;
    gap.terms.push_back(std::max(0.0, nested_sq / n - nested_mean * nested_mean));
  }
  return gap;
}

EfficiencyGap efficiency_gap(const Dataset& data, const NuisanceModel& nuisances, double p_hat,
                             const FeatureMap& variance_map) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return efficiency_gap(data, rows, nuisances, p_hat, variance_map);
}

// ---------------------------------------------------------------------------

void EstimatorConfig::validate() const {
  if (folds < 2) fail(ErrorKind::InvalidFoldCount, "need J >= 2, got " + std::to_string(folds));
  require(alpha > 0.0 && alpha < 1.0, ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  nuisance.validate();
}

double normal_critical_value(double alpha) {
  require(alpha > 0.0 && alpha < 1.0, ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - alpha / 2.0);
}

NuisanceFactory default_nuisance_factory(const NuisanceSpec& spec) {
  return [spec](const Dataset& data, std::span<const std::size_t> main_rows, std::span<const std::size_t> eta_rows,
                int) -> std::shared_ptr<const NuisanceModel> {
    return std::make_shared<NuisanceSet>(fit_nuisances(data, main_rows, eta_rows, spec));
  };
}

EstimateResult cross_fit_att(const Dataset& data, const EstimatorConfig& config) {
  return cross_fit_att(data, config, default_nuisance_factory(config.nuisance));
}

EstimateResult cross_fit_att(const Dataset& data, const EstimatorConfig& config, const NuisanceFactory& factory) {
  config.validate();
  if (config.regime != data.regime()) {
    fail(ErrorKind::RegimeMismatch, "data regime " + std::string(to_string(data.regime())) + " != configured " +
                                        std::string(to_string(config.regime)));
  }
  const std::size_t n = data.size();
  const auto plan = make_folds(n, config.folds, config.seed);
  const int J = plan.folds();
  const bool hard = hard_regime(config.regime);

  EstimateResult res;
  res.regime = config.regime;
  res.n = n;
  res.folds = J;
  res.fold_of = plan.assignment();
  res.if_values.assign(n, 0.0);

  std::vector<double> phi0(n, 0.0);
  std::vector<double> slope(n, 0.0);  // A_i / p_hat_j
  EfficiencyGap pooled_gap;
  bool have_gap = config.efficiency_diagnostics && pre_missing(config.regime);

  for (int j = 0; j < J; ++j) {
    const auto eval = plan.evaluation(j);
    std::size_t treated = 0;
    for (auto i : eval) treated += static_cast<std::size_t>(data[i].a);
    if (treated == 0) fail(ErrorKind::EmptyCell, "evaluation fold " + std::to_string(j) + " has no treated units");
    const double p_hat = static_cast<double>(treated) / static_cast<double>(eval.size());

    const auto main_rows = hard ? plan.main_training(j) : plan.training(j);
    const auto eta_rows = hard ? plan.eta_training(j) : std::vector<std::size_t>{};
    std::shared_ptr<const NuisanceModel> nuisances;
    try {
      nuisances = factory(data, main_rows, eta_rows, j);
    } catch (const Error& e) {
      throw Error(e.kind(), "fold " + std::to_string(j) + ": " + e.what());
    }
    if (const auto* set = dynamic_cast<const NuisanceSet*>(nuisances.get())) {
      for (const auto& w : set->warnings) res.warnings.push_back("fold " + std::to_string(j) + ": " + w);
    }

    KahanSum fold_sum;
    for (auto i : eval) {
      const auto& s = data[i];
      phi0[i] = eif(config.regime, s, nuisances->evaluate(s), 0.0, p_hat);
      slope[i] = s.a / p_hat;
      fold_sum.add(phi0[i]);
    }
    res.fold_estimates.push_back(fold_sum.value() / static_cast<double>(eval.size()));
    res.fold_sizes.push_back(eval.size());
    res.fold_treated.push_back(treated);
    res.p_hat.push_back(p_hat);

    if (have_gap) {
      try {
        const auto gap = efficiency_gap(data, eval, *nuisances, p_hat, config.nuisance.mu_map);
        const double w = static_cast<double>(eval.size()) / static_cast<double>(n);
        if (pooled_gap.terms.empty()) pooled_gap.terms.assign(gap.terms.size(), 0.0);
        for (std::size_t t = 0; t < gap.terms.size(); ++t) pooled_gap.terms[t] += w * gap.terms[t];
      } catch (const Error& e) {
        res.warnings.push_back("efficiency gap unavailable: " + std::string(e.what()));
        have_gap = false;
      }
    }
  }

  // phi_i(theta) = phi_i(0) - slope_i * theta; the pooled equation is linear in theta.
  KahanSum num, den, abs_sum;
  for (std::size_t i = 0; i < n; ++i) {
    num.add(phi0[i]);
    den.add(slope[i]);
    abs_sum.add(std::abs(phi0[i]));
  }
  res.theta_hat = num.value() / den.value();
  res.theta_fold_average =
      std::accumulate(res.fold_estimates.begin(), res.fold_estimates.end(), 0.0) / static_cast<double>(J);

  KahanSum resid, sq;
  for (std::size_t i = 0; i < n; ++i) {
    res.if_values[i] = phi0[i] - slope[i] * res.theta_hat;
    resid.add(res.if_values[i]);
  }
  res.equation_residual = resid.value();
  res.residual_scale = abs_sum.value() / static_cast<double>(n);
  const double mean_if = res.equation_residual / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) sq.add((res.if_values[i] - mean_if) * (res.if_values[i] - mean_if));
  const double variance = sq.value() / static_cast<double>(n);
  res.std_err = std::sqrt(variance / static_cast<double>(n));
  if (!(res.std_err > 0.0) || !std::isfinite(res.theta_hat)) {
    fail(ErrorKind::NonFiniteResult, "degenerate influence-function variance");
  }
  const double z = normal_critical_value(config.alpha);
  res.ci_lo = res.theta_hat - z * res.std_err;
  res.ci_hi = res.theta_hat + z * res.std_err;
  if (have_gap) res.efficiency_gap = std::move(pooled_gap);
  return res;
}

}  // namespace mardid
