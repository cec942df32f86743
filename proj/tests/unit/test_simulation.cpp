#include "helpers.hpp"

#include "mardid/simulation.hpp"

#include <cmath>
#include <set>
#include <sstream>

using namespace mardid;
using Catch::Approx;

TEST_CASE("simulated covariates and treatment have the documented moments") {
  const auto sim = generate(DgpConfig{.n = 1000000, .seed = 3}, 0);
  double mean_a = 0.0, mean_x2 = 0.0;
  for (std::size_t i = 0; i < sim.data.size(); ++i) {
    mean_a += sim.data[i].a;
    mean_x2 += transform_z_to_x(sim.oracle.z[i])[1];
  }
  mean_a /= 1e6;
  mean_x2 /= 1e6;
  // P(A=1) = 1/2 by symmetry of Z; E[X2] = 10 + E[z1 / (1 + exp(z1))] = 10 - 0.20802...
  REQUIRE(std::abs(mean_a - 0.5) < 0.003);
  REQUIRE(std::abs(mean_x2 - 10.0) < 0.25);
}

TEST_CASE("every unit has treatment effect exactly theta") {
  const auto sim = generate(DgpConfig{.n = 500, .theta_star = 3.25, .seed = 4}, 2);
  for (std::size_t i = 0; i < sim.data.size(); ++i)
    REQUIRE(sim.oracle.y1_treated[i] - sim.oracle.y1_untreated[i] == Approx(3.25).margin(1e-12));
  REQUIRE(sim.sample_att() == Approx(3.25).margin(1e-12));
}

TEST_CASE("as-written outcome-dependent missingness almost never hides Y0") {
  const auto sim = generate(DgpConfig{.n = 10000, .regime = Regime::PreHard, .centering = Centering::AsWritten,
                                      .seed = 5},
                            0);
  std::size_t missing = 0;
  for (const auto& s : sim.data.samples()) missing += s.r0 == 0;
  REQUIRE(static_cast<double>(missing) / 1e4 < 0.001);

  const auto centered = generate(DgpConfig{.n = 10000, .regime = Regime::PreHard, .seed = 5}, 0);
  std::size_t missing_c = 0;
  for (const auto& s : centered.data.samples()) missing_c += s.r0 == 0;
  REQUIRE(missing_c > 1000);
}

TEST_CASE("missingness lands on the right period") {
  for (Regime r : {Regime::PreSimple, Regime::PreHard, Regime::PostSimple, Regime::PostHard, Regime::BothSimple}) {
    const auto sim = generate(DgpConfig{.n = 2000, .regime = r, .seed = 6}, 0);
    std::size_t m0 = 0, m1 = 0;
    for (const auto& s : sim.data.samples()) {
      m0 += s.r0 == 0;
      m1 += s.r1 == 0;
    }
    INFO(to_string(r));
    REQUIRE((m0 > 0) == (r != Regime::PostSimple && r != Regime::PostHard));
    REQUIRE((m1 > 0) == (r == Regime::PostSimple || r == Regime::PostHard || r == Regime::BothSimple));
  }
}

TEST_CASE("replications are regenerated from their own stream") {
  const DgpConfig config{.n = 100, .seed = 9};
  REQUIRE(generate(config, 3).data.samples() == generate(config, 3).data.samples());
  REQUIRE_FALSE(generate(config, 3).data.samples() == generate(config, 4).data.samples());
  REQUIRE_FALSE(generate(config, 3, 1).data.samples() == generate(config, 3, 2).data.samples());
  REQUIRE_THROWS_KIND(generate(DgpConfig{.n = 10}, 0), ErrorKind::InvalidArgument);
}

TEST_CASE("scenario grids and labels") {
  const auto simple = scenario_grid(Regime::PreSimple);
  REQUIRE(simple.size() == 8);
  REQUIRE(simple.front().label() == "mu+pi+gamma+");
  REQUIRE(simple.back().label() == "mu-pi-gamma-");
  const auto hard = scenario_grid(Regime::PreHard);
  REQUIRE(hard.size() == 16);
  REQUIRE(hard[1].label() == "mu+gamma+pi+eta-");
  std::set<std::uint64_t> codes;
  for (const auto& s : hard) codes.insert(s.code());
  for (const auto& s : simple) codes.insert(s.code());
  REQUIRE(codes.size() == 24);

  REQUIRE(select_scenarios(Regime::PreSimple, "1**").size() == 4);
  REQUIRE(select_scenarios(Regime::PreHard, "1*01").size() == 2);
  REQUIRE(select_scenarios(Regime::PreSimple, "all").size() == 8);
  REQUIRE_THROWS_KIND(select_scenarios(Regime::PreSimple, "11"), ErrorKind::InvalidArgument);
  REQUIRE_THROWS_KIND(select_scenarios(Regime::PreSimple, "1x1"), ErrorKind::InvalidArgument);

  const auto flags = parse_label("mu+gamma-pi+eta-");
  REQUIRE(flags.size() == 4);
  REQUIRE(flags[1] == std::pair<std::string, bool>{"gamma", false});
  REQUIRE_THROWS_KIND(parse_label("+mu"), ErrorKind::SchemaError);
  REQUIRE_THROWS_KIND(parse_label("mu+pi"), ErrorKind::SchemaError);
}

TEST_CASE("monte carlo configuration errors") {
  MonteCarloConfig config;
  config.reps = 0;
  REQUIRE_THROWS_KIND(run_monte_carlo(scenario_grid(Regime::PreSimple), config), ErrorKind::InvalidArgument);
  config.reps = 2;
  REQUIRE_THROWS_KIND(run_monte_carlo({}, config), ErrorKind::InvalidArgument);
  config.folds = 1;
  REQUIRE_THROWS_KIND(run_monte_carlo(scenario_grid(Regime::PreSimple), config), ErrorKind::InvalidFoldCount);
}

TEST_CASE("report tables have one row per scenario") {
  MonteCarloConfig config;
  config.n = 300;
  config.reps = 3;
  config.seed = 2;
  const auto report = run_monte_carlo(scenario_grid(Regime::PreSimple), config);
  const auto csv = format_report_csv(report);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 9);
  REQUIRE(csv.rfind("scenario,mu,pi,gamma,mae,bias,rmse,mse,sd,coverage,reps,failures\n", 0) == 0);
  const auto reps = format_reps_csv(report);
  REQUIRE(std::count(reps.begin(), reps.end(), '\n') == 1 + 8 * 3);
  const auto md = format_report_markdown(report);
  REQUIRE(md.find("# Simulation results: pre-simple") != std::string::npos);

  config.reps = 1;
  const auto hard = run_monte_carlo(scenario_grid(Regime::PreHard), config);
  const auto hard_csv = format_report_csv(hard);
  REQUIRE(std::count(hard_csv.begin(), hard_csv.end(), '\n') == 17);

  // rebuilding from the replication table reproduces the metrics
  const auto rebuilt = report_from_reps_csv(reps, Regime::PreSimple, 5.0);
  REQUIRE(rebuilt.scenarios.size() == 8);
  for (std::size_t k = 0; k < 8; ++k) {
    REQUIRE(rebuilt.scenarios[k].label == report.scenarios[k].label);
    REQUIRE(rebuilt.scenarios[k].metrics.mae == Approx(report.scenarios[k].metrics.mae).epsilon(1e-12));
    REQUIRE(rebuilt.scenarios[k].metrics.coverage == report.scenarios[k].metrics.coverage);
  }
  REQUIRE_THROWS_KIND(report_from_reps_csv("scenario,rep,theta_hat,std_err,covered\n", Regime::PreSimple, 5.0),
                      ErrorKind::SchemaError);
  REQUIRE_THROWS_KIND(report_from_reps_csv(reps.substr(0, reps.size() - 4), Regime::PreSimple, 5.0),
                      ErrorKind::SchemaError);
}

TEST_CASE("monte carlo output does not depend on the worker count") {
  MonteCarloConfig config;
  config.n = 200;
  config.reps = 6;
  config.seed = 8;
  const auto grid = select_scenarios(Regime::PreSimple, "1*1");
  config.jobs = 1;
  const auto one = run_monte_carlo(grid, config);
  config.jobs = 3;
  const auto three = run_monte_carlo(grid, config);
  REQUIRE(format_reps_csv(one) == format_reps_csv(three));
  REQUIRE(format_report_csv(one) == format_report_csv(three));
}

TEST_CASE("scenario metrics") {
  std::vector<ReplicationResult> reps(4);
  const double thetas[] = {4.0, 6.0, 5.5, 7.0};
  for (int k = 0; k < 4; ++k) {
    reps[k].rep = k;
    reps[k].ok = true;
    reps[k].theta_hat = thetas[k];
    reps[k].covered = k % 2 == 0;
  }
  ReplicationResult failed;
  failed.rep = 4;
  reps.push_back(failed);
  const auto m = summarize(reps, 5.0);
  REQUIRE(m.completed == 4);
  REQUIRE(m.failures == 1);
  REQUIRE(m.mae == Approx((1.0 + 1.0 + 0.5 + 2.0) / 4.0));
  REQUIRE(m.bias == Approx(0.625));
  REQUIRE(m.mse == Approx((1.0 + 1.0 + 0.25 + 4.0) / 4.0));
  REQUIRE(m.rmse == Approx(std::sqrt(m.mse)));
  REQUIRE(m.mse == Approx(m.bias * m.bias + m.sd * m.sd));
  REQUIRE(m.coverage == 0.5);

  const auto none = summarize({failed}, 5.0);
  REQUIRE(std::isnan(none.mae));
  REQUIRE(none.completed == 0);
}

namespace {

// Table-level consistency: pre-simple needs mu, pre-hard needs mu and eta.
bool expect_consistent(const ScenarioSpec& s) { return s.mu && (s.regime != Regime::PreHard || s.eta); }

// |theta_hat - 5| for every scenario, all fit on one n = 1e5 draw.
std::vector<std::pair<ScenarioSpec, double>> large_n_deviations(Regime regime) {
  const auto sim = generate(DgpConfig{.n = 100000, .regime = regime, .seed = 11}, 0);
  std::vector<std::pair<ScenarioSpec, double>> out;
  for (const auto& s : scenario_grid(regime)) {
    EstimatorConfig config;
    config.regime = regime;
    config.seed = 11;
    config.nuisance = s.nuisance_spec(0.01, EtaMode::Augmented);
    config.efficiency_diagnostics = false;
    out.emplace_back(s, std::abs(cross_fit_att(sim.data, config).theta_hat - 5.0));
  }
  return out;
}

void check_multiple_robustness(Regime regime) {
  const auto deviations = large_n_deviations(regime);
  const double reference = deviations.front().second;
  for (const auto& [s, dev] : deviations) {
    INFO(s.label() << " deviation " << dev << ", all correct " << reference);
    if (expect_consistent(s)) CHECK(dev <= 3.0 * reference);
    if (!s.mu && !s.pi && !s.gamma && (!s.eta || s.regime != Regime::PreHard)) CHECK(dev > 0.5);
  }
}

}  // namespace

TEST_CASE("multiple robustness at large n: pre-simple") { check_multiple_robustness(Regime::PreSimple); }

TEST_CASE("multiple robustness at large n: pre-hard") { check_multiple_robustness(Regime::PreHard); }
