#include "mardid/nuisance.hpp"

#include "mardid/error.hpp"

#include <algorithm>
#include <cmath>

namespace mardid {

std::string_view to_string(EtaMode mode) { return mode == EtaMode::Plain ? "plain" : "augmented"; }

EtaMode parse_eta_mode(std::string_view name) {
  if (name == "plain") return EtaMode::Plain;
  if (name == "augmented") return EtaMode::Augmented;
  fail(ErrorKind::InvalidArgument, "unknown eta mode '" + std::string(name) + "'");
}

void NuisanceSpec::validate() const {
  require(clip > 0.0 && clip < 0.5, ErrorKind::InvalidArgument, "clip must lie in (0, 0.5)");
  for (const auto* m : {&mu_map, &pi_map, &gamma_map, &eta_map}) {
    require(m->outcome == OutcomeInput::None, ErrorKind::InvalidArgument,
            "nuisance feature maps must be covariate-only; outcome inputs are added per regime");
  }
}

double clip_probability(double p, double xi) { return std::clamp(p, xi, 1.0 - xi); }

NuisanceValues NuisanceValues::clipped(double xi) const {
  NuisanceValues v = *this;
  v.pi = clip_probability(pi, xi);
  v.gamma_t = clip_probability(gamma_t, xi);
  v.gamma_c = clip_probability(gamma_c, xi);
  v.gamma1_t = clip_probability(gamma1_t, xi);
  v.gamma1_c = clip_probability(gamma1_c, xi);
  return v;
}

double FittedModel::operator()(const ObservedSample& sample) const {
  thread_local std::vector<double> buf;
  write_features(map, sample, std::nullopt, buf);
  return predict_row(model, buf);
}

namespace {

using Predicate = std::function<bool(const ObservedSample&)>;

std::vector<std::size_t> select(const Dataset& data, std::span<const std::size_t> rows, const Predicate& keep) {
  std::vector<std::size_t> out;
  for (auto i : rows)
    if (keep(data[i])) out.push_back(i);
  return out;
}

FittedModel fit_regression(const std::string& name, const FeatureMap& map, const Dataset& data,
                           std::span<const std::size_t> rows, const SampleFunction& target) {
  if (rows.empty()) fail(ErrorKind::EmptyCell, name + ": no training units in this cell");
  try {
    const auto design = build_design(map, data, rows);
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) y[static_cast<Eigen::Index>(k)] = target(data[rows[k]]);
    return FittedModel{solve_least_squares(design, y), map, name};
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::EmptyCell || e.kind() == ErrorKind::MissingInput) throw;
    throw Error(ErrorKind::FitFailure, name + " (" + std::to_string(rows.size()) + " units): " + e.what());
  }
}

FittedModel fit_classifier(const std::string& name, const FeatureMap& map, const Dataset& data,
                           std::span<const std::size_t> rows, const std::function<int(const ObservedSample&)>& label,
                           const LogisticOptions& options, std::vector<std::string>& warnings) {
  if (rows.empty()) fail(ErrorKind::EmptyCell, name + ": no training units in this cell");
  try {
    const auto design = build_design(map, data, rows);
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) y[static_cast<Eigen::Index>(k)] = label(data[rows[k]]);
    auto model = fit_logistic(design, y, options);
    if (!model.converged) {
      warnings.push_back(name + ": logistic fit did not converge (score norm " + std::to_string(model.score_norm) +
                         ", " + std::to_string(model.iterations) + " iterations)");
    }
    return FittedModel{std::move(model), map, name};
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::EmptyCell || e.kind() == ErrorKind::MissingInput) throw;
    throw Error(ErrorKind::FitFailure, name + " (" + std::to_string(rows.size()) + " units): " + e.what());
  }
}

double y0_of(const ObservedSample& s) { return *s.y0; }
double y1_of(const ObservedSample& s) { return *s.y1; }

}  // namespace

NuisanceValues NuisanceSet::evaluate(const ObservedSample& s) const {
  NuisanceValues v;
  if (mu0[1]) v.mu0_t = (*mu0[1])(s);
  if (mu0[0]) v.mu0_c = (*mu0[0])(s);
  if (mu1[1]) v.mu1_t = (*mu1[1])(s);
  if (mu1[0]) v.mu1_c = (*mu1[0])(s);
  if (pi) v.pi = (*pi)(s);
  if (gamma[1]) v.gamma_t = (*gamma[1])(s);
  if (gamma[0]) v.gamma_c = (*gamma[0])(s);
  if (gamma1[1]) v.gamma1_t = (*gamma1[1])(s);
  if (gamma1[0]) v.gamma1_c = (*gamma1[0])(s);
  if (eta) v.eta = (*eta)(s);
  if (mu0_control_xonly) v.mu0_c_xonly = (*mu0_control_xonly)(s);
  return v.clipped(clip);
}

NuisanceSet fit_nuisances(const Dataset& data, std::span<const std::size_t> main_rows,
                          std::span<const std::size_t> eta_rows, const NuisanceSpec& spec) {
  spec.validate();
  const Regime regime = data.regime();
  NuisanceSet set;
  set.regime = regime;
  set.clip = spec.clip;

  auto arm = [&](int a) { return select(data, main_rows, [a](const ObservedSample& s) { return s.a == a; }); };
  auto arm_observed0 = [&](int a) {
    return select(data, main_rows, [a](const ObservedSample& s) { return s.a == a && s.r0 == 1; });
  };
  auto arm_observed1 = [&](int a) {
    return select(data, main_rows, [a](const ObservedSample& s) { return s.a == a && s.r1 == 1; });
  };
  const auto treated = arm(1);
  const auto controls = arm(0);
  if (treated.empty()) fail(ErrorKind::EmptyCell, "training rows contain no treated units");
  if (controls.empty()) fail(ErrorKind::EmptyCell, "training rows contain no control units");

  set.pi = fit_classifier("pi(x)", spec.pi_map, data, main_rows, [](const ObservedSample& s) { return s.a; },
                          spec.logistic, set.warnings);

  const auto r0_label = [](const ObservedSample& s) { return s.r0; };
  const auto r1_label = [](const ObservedSample& s) { return s.r1; };
  const char* arm_tag[2] = {"0", "1"};

  switch (regime) {
    case Regime::PreSimple:
    case Regime::PreHard: {
      const bool hard = regime == Regime::PreHard;
      const auto mu_map = hard ? spec.mu_map.with_outcome(OutcomeInput::Y1) : spec.mu_map;
      const auto gamma_map = hard ? spec.gamma_map.with_outcome(OutcomeInput::Y1) : spec.gamma_map;
      for (int a = 0; a < 2; ++a) {
        const std::string suffix = hard ? std::string("(x,y1,") + arm_tag[a] + ")" : std::string("(x,") + arm_tag[a] + ")";
        set.mu0[a] = fit_regression("mu0" + suffix + " on {A=" + arm_tag[a] + ",R0=1}", mu_map, data, arm_observed0(a),
                                    y0_of);
        set.gamma[a] = fit_classifier("gamma" + suffix + " on {A=" + arm_tag[a] + "}", gamma_map, data,
                                      a == 1 ? treated : controls, r0_label, spec.logistic, set.warnings);
      }
      set.mu1[0] = fit_regression("mu1(x,0) on {A=0}", spec.mu_map, data, controls, y1_of);
      if (hard) {
        set.mu0_control_xonly =
            fit_regression("mu0(x,0) on {A=0,R0=1}", spec.mu_map, data, arm_observed0(0), y0_of);
        const auto& mu = *set.mu0[0];
        const auto& gm = *set.gamma[0];
        set.eta = spec.eta_mode == EtaMode::Plain
                      ? fit_nested_plain(data, eta_rows, mu, spec.eta_map)
                      : fit_nested_augmented(data, eta_rows, mu, gm, spec.eta_map, spec.clip);
      }
      break;
    }
    case Regime::PostSimple:
    case Regime::PostHard: {
      const bool hard = regime == Regime::PostHard;
      const auto mu_map = hard ? spec.mu_map.with_outcome(OutcomeInput::Y0) : spec.mu_map;
      const auto gamma_map = hard ? spec.gamma_map.with_outcome(OutcomeInput::Y0) : spec.gamma_map;
      for (int a = 0; a < 2; ++a) {
        const std::string suffix = hard ? std::string("(x,y0,") + arm_tag[a] + ")" : std::string("(x,") + arm_tag[a] + ")";
        set.mu1[a] = fit_regression("mu1" + suffix + " on {A=" + arm_tag[a] + ",R1=1}", mu_map, data, arm_observed1(a),
                                    y1_of);
        set.gamma[a] = fit_classifier("gamma" + suffix + " on {A=" + arm_tag[a] + "}", gamma_map, data,
                                      a == 1 ? treated : controls, r1_label, spec.logistic, set.warnings);
      }
      set.mu0[0] = fit_regression("mu0(x,0) on {A=0}", spec.mu_map, data, controls, y0_of);
      if (hard) {
        const auto& mu = *set.mu1[0];
        const auto& gm = *set.gamma[0];
        set.eta = spec.eta_mode == EtaMode::Plain
                      ? fit_nested_plain(data, eta_rows, mu, spec.eta_map)
                      : fit_nested_augmented(data, eta_rows, mu, gm, spec.eta_map, spec.clip);
      }
      break;
    }
    case Regime::BothSimple: {
      for (int a = 0; a < 2; ++a) {
        const std::string tag = arm_tag[a];
        set.mu0[a] = fit_regression("mu0(x," + tag + ") on {A=" + tag + ",R0=1}", spec.mu_map, data, arm_observed0(a),
                                    y0_of);
        set.mu1[a] = fit_regression("mu1(x," + tag + ") on {A=" + tag + ",R1=1}", spec.mu_map, data, arm_observed1(a),
                                    y1_of);
        const auto& rows = a == 1 ? treated : controls;
        set.gamma[a] = fit_classifier("gamma0(x," + tag + ") on {A=" + tag + "}", spec.gamma_map, data, rows, r0_label,
                                      spec.logistic, set.warnings);
        set.gamma1[a] = fit_classifier("gamma1(x," + tag + ") on {A=" + tag + "}", spec.gamma_map, data, rows, r1_label,
                                       spec.logistic, set.warnings);
      }
      break;
    }
  }
  return set;
}

namespace {

struct MissingSide {
  bool pre;  // true: Y0/R0 is the missing outcome, Y1 is always observed
};

MissingSide missing_side(const Dataset& data) {
  require(pre_missing(data.regime()) || post_missing(data.regime()),
          ErrorKind::RegimeMismatch, "nested regression needs a pre- or post-missing regime");
  return {pre_missing(data.regime())};
}

std::vector<std::size_t> nested_rows(const Dataset& data, std::span<const std::size_t> rows, bool pre) {
  auto out = select(data, rows, [pre](const ObservedSample& s) { return s.a == 0 && (pre ? s.r1 == 1 : s.r0 == 1); });
  if (out.empty()) fail(ErrorKind::EmptyCell, "nested regression: no control units in the eta half");
  return out;
}

}  // namespace

FittedModel fit_nested_plain(const Dataset& data, std::span<const std::size_t> rows, const SampleFunction& mu_control,
                             const FeatureMap& eta_map) {
  const auto side = missing_side(data);
  const auto controls = nested_rows(data, rows, side.pre);
  return fit_regression(side.pre ? "eta0(x,0) plain" : "eta1(x,0) plain", eta_map, data, controls, mu_control);
}

FittedModel fit_nested_augmented(const Dataset& data, std::span<const std::size_t> rows,
                                 const SampleFunction& mu_control, const SampleFunction& gamma_control,
                                 const FeatureMap& eta_map, double clip) {
  const auto side = missing_side(data);
  const auto controls = nested_rows(data, rows, side.pre);
  const bool pre = side.pre;
  auto pseudo = [&](const ObservedSample& s) {
    const double mu = mu_control(s);
    const int r = pre ? s.r0 : s.r1;
    if (r == 0) return mu;
    const double y = pre ? *s.y0 : *s.y1;
    return mu + (y - mu) / clip_probability(gamma_control(s), clip);
  };
  return fit_regression(pre ? "eta0(x,0) augmented" : "eta1(x,0) augmented", eta_map, data, controls, pseudo);
}

OracleDiagnostics oracle_diagnostics(const Dataset& data, std::span<const std::size_t> rows,
                                     const SampleFunction& mu_hat, const SampleFunction& mu_true,
                                     const SampleFunction& gamma_hat, const SampleFunction& gamma_true,
                                     const SampleFunction& eta_true, const FeatureMap& eta_map) {
  const auto side = missing_side(data);
  const auto controls = nested_rows(data, rows, side.pre);
  const auto oracle = fit_nested_plain(data, controls, mu_true, eta_map);
  OracleDiagnostics d;
  for (auto i : controls) {
    const auto& s = data[i];
    const double err = oracle(s) - eta_true(s);
    d.oracle_risk += err * err;
    const double gh = gamma_hat(s);
    d.product_bias += (mu_hat(s) - mu_true(s)) * (gh - gamma_true(s)) / gh;
  }
  d.oracle_risk /= static_cast<double>(controls.size());
  d.product_bias /= static_cast<double>(controls.size());
  return d;
}

}  // namespace mardid
