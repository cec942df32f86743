#include "helpers.hpp"

#include "mardid/estimators.hpp"
#include "mardid/random.hpp"
#include "mardid/simulation.hpp"

#include <cmath>
#include <numeric>

using namespace mardid;
using Catch::Approx;

namespace {

constexpr Regime kAllRegimes[] = {Regime::PreSimple, Regime::PreHard, Regime::PostSimple, Regime::PostHard,
                                  Regime::BothSimple};

ObservedSample unit(int a, int r0, double y0, int r1, double y1) {
  ObservedSample s;
  s.x = {0.0};
  s.a = a;
  s.r0 = r0;
  s.r1 = r1;
  if (r0) s.y0 = y0;
  if (r1) s.y1 = y1;
  return s;
}

NuisanceValues random_values(RandomSource& rng) {
  NuisanceValues v;
  v.mu0_t = rng.normal();
  v.mu0_c = rng.normal();
  v.mu1_t = rng.normal();
  v.mu1_c = rng.normal();
  v.pi = 0.1 + 0.8 * rng.uniform();
  v.gamma_t = 0.1 + 0.9 * rng.uniform();
  v.gamma_c = 0.1 + 0.9 * rng.uniform();
  v.gamma1_t = 0.1 + 0.9 * rng.uniform();
  v.gamma1_c = 0.1 + 0.9 * rng.uniform();
  v.eta = rng.normal();
  return v;
}

// Wraps another model and overrides selected values.
class Override final : public NuisanceModel {
 public:
  Override(std::shared_ptr<const NuisanceModel> inner, std::function<void(const ObservedSample&, NuisanceValues&)> edit)
      : inner_(std::move(inner)), edit_(std::move(edit)) {}
  NuisanceValues evaluate(const ObservedSample& s) const override {
    auto v = inner_->evaluate(s);
    edit_(s, v);
    return v;
  }

 private:
  std::shared_ptr<const NuisanceModel> inner_;
  std::function<void(const ObservedSample&, NuisanceValues&)> edit_;
};

NuisanceFactory unit_gamma_factory(const NuisanceSpec& spec) {
  return [spec](const Dataset& d, std::span<const std::size_t> main_rows, std::span<const std::size_t> eta_rows, int) {
    auto inner = std::make_shared<NuisanceSet>(fit_nuisances(d, main_rows, eta_rows, spec));
    return std::make_shared<Override>(inner, [](const ObservedSample&, NuisanceValues& v) {
      v.gamma_t = v.gamma_c = v.gamma1_t = v.gamma1_c = 1.0;
    });
  };
}

NuisanceFactory truth_factory(Regime regime, double clip = 0.0) {
  return [regime, clip](const Dataset&, std::span<const std::size_t>, std::span<const std::size_t>, int) {
    return std::make_shared<TrueNuisances>(regime, 5.0, Centering::Centered, clip);
  };
}

bool close(double a, double b, double rel = 1e-12) { return std::abs(a - b) <= rel * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("influence functions on hand-worked units") {
  NuisanceValues v;
  v.mu0_t = 1.5;
  v.mu0_c = 1.0;
  v.mu1_c = 2.0;
  v.pi = 0.6;
  v.gamma_t = 0.5;
  v.gamma_c = 0.8;
  v.eta = 1.2;
  const double p = 0.5;

  const auto treated = unit(1, 1, 2.0, 1, 5.0);
  // 5 - (1.5 + 0.5 / 0.5) - 2 + 1 = 1.5, scaled by 1 / p
  REQUIRE(eif_pre_simple(treated, v, 0.0, p) == Approx(3.0).margin(1e-14));
  REQUIRE(eif_pre_simple(treated, v, 1.5, p) == Approx(0.0).margin(1e-14));
  REQUIRE(eif_complete(treated, v, 0.0, p) == Approx(4.0).margin(1e-14));
  REQUIRE(eif_pre_hard(treated, v, 0.0, p) == Approx(3.4).margin(1e-14));

  NuisanceValues vc = v;
  vc.mu1_c = 3.0;
  // control weight pi / ((1 - pi) p) = 3
  const auto control = unit(0, 1, 2.0, 1, 4.0);
  REQUIRE(eif_pre_simple(control, vc, 0.0, p) == Approx(0.75).margin(1e-14));
  REQUIRE(eif_pre_simple(control, vc, 9.0, p) == Approx(0.75).margin(1e-14));
  REQUIRE(eif_pre_hard(control, vc, 0.0, p) == Approx(0.15).margin(1e-13));
  const auto control_missing = unit(0, 0, 0.0, 1, 4.0);
  REQUIRE(eif_pre_simple(control_missing, vc, 0.0, p) == Approx(-3.0).margin(1e-14));

  REQUIRE_THROWS_KIND(eif_pre_simple(unit(1, 1, 1.0, 0, 0.0), v, 0.0, p), ErrorKind::MissingInput);
  REQUIRE_THROWS_KIND(eif_complete(control_missing, v, 0.0, p), ErrorKind::MissingInput);
  REQUIRE_THROWS_KIND(eif_pre_simple(treated, v, 0.0, 0.0), ErrorKind::InvalidArgument);
  NuisanceValues degenerate = v;
  degenerate.pi = 1.0;
  REQUIRE_THROWS_KIND(eif_pre_simple(control, degenerate, 0.0, p), ErrorKind::NonFiniteResult);
}

TEST_CASE("influence functions are affine in theta with slope -A / p") {
  RandomSource rng(12);
  for (int k = 0; k < 500; ++k) {
    const auto v = random_values(rng);
    const int a = rng.bernoulli(0.5) ? 1 : 0;
    const auto s = unit(a, 1, rng.normal(), 1, rng.normal());
    const double p = 0.2 + 0.6 * rng.uniform();
    const double theta = 10.0 * rng.normal();
    for (Regime r : kAllRegimes) {
      const double at0 = eif(r, s, v, 0.0, p);
      REQUIRE(eif(r, s, v, theta, p) == at0 - (a / p) * theta);
    }
  }
}

TEST_CASE("missing-outcome influence functions reduce to the complete-data one") {
  RandomSource rng(13);
  for (int k = 0; k < 500; ++k) {
    auto v = random_values(rng);
    const int a = rng.bernoulli(0.4) ? 1 : 0;
    const auto s = unit(a, 1, rng.normal(), 1, rng.normal());
    const double p = 0.3;
    const double complete = eif_complete(s, v, 0.7, p);

    v.gamma_t = v.gamma_c = v.gamma1_t = v.gamma1_c = 1.0;
    REQUIRE(close(eif_pre_simple(s, v, 0.7, p), complete));
    REQUIRE(close(eif_post_simple(s, v, 0.7, p), complete));
    REQUIRE(close(eif_both_simple(s, v, 0.7, p), complete));

    // pre-hard with mu0 free of y1 and eta equal to the control outcome regression
    auto hard = random_values(rng);
    hard.eta = hard.mu0_c;
    REQUIRE(close(eif_pre_hard(s, hard, 0.7, p), eif_pre_simple(s, hard, 0.7, p)));

    // post-hard with eta equal to the control post-period regression
    auto post = random_values(rng);
    post.eta = post.mu1_c;
    REQUIRE(close(eif_post_hard(s, post, 0.7, p), eif_post_simple(s, post, 0.7, p)));
  }
}

TEST_CASE("cross-fitted estimators collapse to the complete-data estimator under full observation") {
  const auto sim = generate(DgpConfig{.n = 600, .seed = 21}, 0);
  const Dataset full = sim.complete();
  EstimatorConfig config;
  config.seed = 4;
  config.efficiency_diagnostics = false;

  const auto pre = cross_fit_att(full, config, unit_gamma_factory(config.nuisance));
  config.regime = Regime::PostSimple;
  const auto post = cross_fit_att(full.with_regime(Regime::PostSimple), config, unit_gamma_factory(config.nuisance));
  config.regime = Regime::BothSimple;
  const auto both = cross_fit_att(full.with_regime(Regime::BothSimple), config, unit_gamma_factory(config.nuisance));

  // complete-data estimate computed directly on the same folds
  const auto plan = make_folds(full.size(), config.folds, config.seed);
  double num = 0.0, den = 0.0;
  for (int j = 0; j < plan.folds(); ++j) {
    const auto eval = plan.evaluation(j);
    const auto train = plan.training(j);
    const auto set = fit_nuisances(full, train, {}, config.nuisance);
    double treated = 0.0;
    for (auto i : eval) treated += full[i].a;
    const double p = treated / static_cast<double>(eval.size());
    for (auto i : eval) {
      num += eif_complete(full[i], set.evaluate(full[i]), 0.0, p);
      den += full[i].a / p;
    }
  }
  const double complete = num / den;
  REQUIRE(std::abs(pre.theta_hat - complete) < 1e-12 * std::abs(complete));
  REQUIRE(std::abs(post.theta_hat - complete) < 1e-12 * std::abs(complete));
  REQUIRE(std::abs(both.theta_hat - complete) < 1e-12 * std::abs(complete));
}

TEST_CASE("cross-fitted pre-hard equals pre-simple with outcome-free nuisances") {
  const auto sim = generate(DgpConfig{.n = 500, .seed = 22}, 0);
  EstimatorConfig config;
  config.efficiency_diagnostics = false;
  const auto simple = cross_fit_att(sim.data, config, truth_factory(Regime::PreSimple, 0.01));
  config.regime = Regime::PreHard;
  const auto hard = cross_fit_att(sim.data.with_regime(Regime::PreHard), config, truth_factory(Regime::PreSimple, 0.01));
  REQUIRE(std::abs(hard.theta_hat - simple.theta_hat) < 1e-12 * std::abs(simple.theta_hat));
}

TEST_CASE("cross-fitted estimate with correct models") {
  const auto sim = generate(DgpConfig{.n = 2000, .seed = 1}, 0);
  EstimatorConfig config;
  config.seed = 1;
  const auto res = cross_fit_att(sim.data, config);
  REQUIRE(std::abs(res.theta_hat - 5.0) <= 0.5);
  REQUIRE(res.std_err > 0.0);
  REQUIRE(res.ci_hi - res.theta_hat == Approx(res.theta_hat - res.ci_lo).epsilon(1e-12));
  REQUIRE(res.ci_hi - res.ci_lo == Approx(2.0 * 1.959963984540054 * res.std_err).epsilon(1e-12));
  REQUIRE(std::abs(res.equation_residual) <= 1e-10 * res.n * res.residual_scale);
  REQUIRE(res.fold_estimates.size() == 5);
  REQUIRE(std::accumulate(res.fold_sizes.begin(), res.fold_sizes.end(), std::size_t{0}) == 2000);
  REQUIRE(res.efficiency_gap.has_value());
  REQUIRE(res.efficiency_gap->total() > 0.0);

  // identical inputs give identical output
  const auto again = cross_fit_att(sim.data, config);
  REQUIRE(again.theta_hat == res.theta_hat);
  REQUIRE(again.if_values == res.if_values);
}

TEST_CASE("cross-fitting errors") {
  const auto sim = generate(DgpConfig{.n = 200, .seed = 23}, 0);
  EstimatorConfig config;
  config.folds = 1;
  REQUIRE_THROWS_KIND(cross_fit_att(sim.data, config), ErrorKind::InvalidFoldCount);
  config.folds = 201;
  REQUIRE_THROWS_KIND(cross_fit_att(sim.data, config), ErrorKind::InvalidFoldCount);
  config.folds = 5;
  config.regime = Regime::PostSimple;
  REQUIRE_THROWS_KIND(cross_fit_att(sim.data, config), ErrorKind::RegimeMismatch);

  // a single treated unit leaves some evaluation fold without treated units
  auto rows = sim.complete().samples();
  bool kept = false;
  for (auto& s : rows) {
    if (s.a == 1 && kept) s.a = 0;
    if (s.a == 1) kept = true;
  }
  const Dataset lonely(std::move(rows), Regime::PreSimple, sim.data.covariate_names());
  REQUIRE_THROWS_KIND(cross_fit_att(lonely, EstimatorConfig{}), ErrorKind::EmptyCell);
}

TEST_CASE("efficiency gap vanishes without missingness") {
  const auto sim = generate(DgpConfig{.n = 1000, .seed = 24}, 0);
  const auto truth = std::make_shared<TrueNuisances>(Regime::PreSimple);
  const Override no_missing(truth, [](const ObservedSample&, NuisanceValues& v) { v.gamma_t = v.gamma_c = 1.0; });
  const auto gap = efficiency_gap(sim.data, no_missing, 0.5, FeatureMap::raw());
  REQUIRE(gap.terms.size() == 2);
  REQUIRE(gap.total() == 0.0);

  const auto with_missing = efficiency_gap(sim.data, *truth, 0.5, FeatureMap::raw());
  REQUIRE(with_missing.terms[0] > 0.0);
  REQUIRE(with_missing.terms[1] > 0.0);
  REQUIRE_THROWS_KIND(efficiency_gap(sim.complete().with_regime(Regime::PostSimple), *truth, 0.5, FeatureMap::raw()),
                      ErrorKind::RegimeMismatch);
}

TEST_CASE("influence function is mean zero at the truth") {
  for (Regime r : {Regime::PreSimple, Regime::PreHard, Regime::PostSimple, Regime::PostHard, Regime::BothSimple}) {
    const auto sim = generate(DgpConfig{.n = 100000, .regime = r, .seed = 25}, 0);
    const TrueNuisances truth(r);
    double p = 0.0;
    for (const auto& s : sim.data.samples()) p += s.a;
    p /= static_cast<double>(sim.data.size());
    double sum = 0.0, sq = 0.0;
    for (const auto& s : sim.data.samples()) {
      const double phi = eif(r, s, truth.evaluate(s), 5.0, p);
      sum += phi;
      sq += phi * phi;
    }
    const double n = static_cast<double>(sim.data.size());
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    INFO(to_string(r) << ": mean " << mean << ", se " << se);
    REQUIRE(std::abs(mean) < 4.0 * se);
  }
}
