#include "mardid/simulation.hpp"

#include "mardid/error.hpp"
#include "mardid/random.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

namespace mardid {

namespace {

constexpr double kPropensity[4] = {-1.0, 0.5, -0.25, -0.1};
constexpr double kObserve[4] = {-0.25, -0.1, -0.5, 0.3};
constexpr double kObserveTreated = -0.2;
constexpr double kObserveOutcome = 0.3;

double dot4(const double* coef, std::span<const double> z) {
  return coef[0] * z[0] + coef[1] * z[1] + coef[2] * z[2] + coef[3] * z[3];
}

std::span<const double> z_of(const ObservedSample& s) {
  require(s.x.size() >= 4, ErrorKind::DimensionMismatch, "simulation truth needs four covariates");
  return {s.x.data(), 4};
}

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits = 3) {
  if (!std::isfinite(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail(ErrorKind::IoError, "failed writing " + path.string());
}

}  // namespace

std::string_view to_string(Centering c) { return c == Centering::Centered ? "centered" : "as-written"; }

Centering parse_centering(std::string_view name) {
  if (name == "centered") return Centering::Centered;
  if (name == "as-written") return Centering::AsWritten;
  fail(ErrorKind::InvalidArgument, "unknown centering '" + std::string(name) + "' (expected centered or as-written)");
}

void DgpConfig::validate() const {
  require(n >= 50, ErrorKind::InvalidArgument, "simulation needs n >= 50");
  require(std::isfinite(theta_star), ErrorKind::InvalidArgument, "theta_star must be finite");
}

// ---------------------------------------------------------------------------

TrueNuisances::TrueNuisances(Regime regime, double theta_star, Centering centering, double clip)
    : regime_(regime), theta_(theta_star), centering_(centering), clip_(clip) {
  require(clip >= 0.0 && clip < 0.5, ErrorKind::InvalidArgument, "clip must lie in [0, 0.5)");
}

double TrueNuisances::outcome_mean(std::span<const double> z) {
  return kOutcomeIntercept + 27.4 * z[0] + 13.7 * (z[1] + z[2] + z[3]);
}

double TrueNuisances::propensity(std::span<const double> z) { return logistic(dot4(kPropensity, z)); }

double TrueNuisances::observe_probability(std::span<const double> z, int a, std::optional<double> other) const {
  double eta = dot4(kObserve, z) + kObserveTreated * a;
  if (hard_regime(regime_)) {
    require(other.has_value(), ErrorKind::MissingInput, "hard-regime missingness needs the conditioning outcome");
    const double shift = centering_ == Centering::Centered ? kOutcomeIntercept : 0.0;
    eta += kObserveOutcome * (*other - shift);
  }
  return logistic(eta);
}

// E[Y0 | Z, A=0, R0=1] under pre-hard. Among controls Y1 ~ N(m, 2) and
// E[Y0 | Y1] = (m + Y1) / 2, so with Y1 = m + sqrt(2) u this is
// m + E[g(u) u / sqrt(2)] / E[g(u)] for standard normal u.
double TrueNuisances::control_mean_observed(std::span<const double> z) const {
  const double m = outcome_mean(z);
  const double root2 = std::sqrt(2.0);
  const auto density = [](double u) { return std::exp(-0.5 * u * u); };
  const auto g = [&](double u) { return observe_probability(z, 0, m + root2 * u); };
  using Rule = boost::math::quadrature::gauss<double, 61>;
  const double mass = Rule::integrate([&](double u) { return density(u) * g(u); }, -10.0, 10.0);
  const double first = Rule::integrate([&](double u) { return density(u) * g(u) * u; }, -10.0, 10.0);
  return m + first / mass / root2;
}

NuisanceValues TrueNuisances::evaluate(const ObservedSample& sample) const {
  const auto z = z_of(sample);
  const double m = outcome_mean(z);
  NuisanceValues v;
  v.mu0_t = v.mu0_c = m;
  v.mu1_t = m + theta_;
  v.mu1_c = m;
  v.pi = propensity(z);
  v.eta = m;
  v.mu0_c_xonly = m;
  switch (regime_) {
    case Regime::PreSimple:
    case Regime::PostSimple:
      v.gamma_t = observe_probability(z, 1);
      v.gamma_c = observe_probability(z, 0);
      break;
    case Regime::BothSimple:
      v.gamma_t = v.gamma1_t = observe_probability(z, 1);
      v.gamma_c = v.gamma1_c = observe_probability(z, 0);
      break;
    case Regime::PreHard: {
      require(sample.y1.has_value(), ErrorKind::MissingInput, "pre-hard truth needs y1");
      const double y1 = *sample.y1;
      v.mu0_t = 0.5 * (m - theta_) + 0.5 * y1;
      v.mu0_c = 0.5 * m + 0.5 * y1;
      v.gamma_t = observe_probability(z, 1, y1);
      v.gamma_c = observe_probability(z, 0, y1);
      v.mu0_c_xonly = control_mean_observed(z);
      break;
    }
    case Regime::PostHard: {
      require(sample.y0.has_value(), ErrorKind::MissingInput, "post-hard truth needs y0");
      const double y0 = *sample.y0;
      v.mu1_t = y0 + theta_;
      v.mu1_c = y0;
      v.gamma_t = observe_probability(z, 1, y0);
      v.gamma_c = observe_probability(z, 0, y0);
      break;
    }
  }
  return v.clipped(clip_);
}

// ---------------------------------------------------------------------------

double SimulatedData::sample_att() const {
  double sum = 0.0;
  std::size_t treated = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].a != 1) continue;
    sum += oracle.y1_treated[i] - oracle.y1_untreated[i];
    ++treated;
  }
  require(treated > 0, ErrorKind::EmptyGroup, "no treated units");
  return sum / static_cast<double>(treated);
}

Dataset SimulatedData::complete() const {
  std::vector<ObservedSample> rows;
  rows.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    ObservedSample s = data[i];
    s.r0 = s.r1 = 1;
    s.y0 = oracle.y0[i];
    s.y1 = oracle.y1(i, s.a);
    rows.push_back(std::move(s));
  }
  return Dataset(std::move(rows), Regime::PreSimple, data.covariate_names());
}

SimulatedData generate(const DgpConfig& config, std::uint64_t rep, std::uint64_t scenario_code) {
  config.validate();
  RandomSource rng(config.seed, stream_key(scenario_code, rep));
  const TrueNuisances truth(config.regime, config.theta_star, config.centering);
  const Regime regime = config.regime;

  OracleView oracle;
  std::vector<ObservedSample> rows;
  rows.reserve(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    std::array<double, 4> z{};
    for (auto& zk : z) zk = rng.normal();
    const double pi = TrueNuisances::propensity(z);
    const int a = rng.uniform() < pi ? 1 : 0;
    const double y0 = TrueNuisances::outcome_mean(z) + rng.normal();
    const double y1_untreated = y0 + rng.normal();
    const double y1_treated = y1_untreated + config.theta_star;
    const double y1 = a == 1 ? y1_treated : y1_untreated;
    // Both indicator draws are always consumed so the stream layout does not depend on the regime.
    const double u0 = rng.uniform();
    const double u1 = rng.uniform();

    double g0 = 1.0, g1 = 1.0;
    if (regime == Regime::PreSimple || regime == Regime::BothSimple) g0 = truth.observe_probability(z, a);
    if (regime == Regime::PreHard) g0 = truth.observe_probability(z, a, y1);
    if (regime == Regime::PostSimple || regime == Regime::BothSimple) g1 = truth.observe_probability(z, a);
    if (regime == Regime::PostHard) g1 = truth.observe_probability(z, a, y0);

    ObservedSample s;
    s.x.assign(z.begin(), z.end());
    s.a = a;
    s.r0 = u0 < g0 ? 1 : 0;
    s.r1 = u1 < g1 ? 1 : 0;
    if (s.r0 == 1) s.y0 = y0;
    if (s.r1 == 1) s.y1 = y1;
    rows.push_back(std::move(s));

    oracle.z.push_back(z);
    oracle.y0.push_back(y0);
    oracle.y1_untreated.push_back(y1_untreated);
    oracle.y1_treated.push_back(y1_treated);
    oracle.propensity.push_back(pi);
    oracle.gamma0.push_back(g0);
    oracle.gamma1.push_back(g1);
  }
  return {Dataset(std::move(rows), regime, {"z1", "z2", "z3", "z4"}), std::move(oracle)};
}

// ---------------------------------------------------------------------------

std::vector<std::string> ScenarioSpec::flag_names() const {
  if (hard_regime(regime)) return {"mu", "gamma", "pi", "eta"};
  return {"mu", "pi", "gamma"};
}

std::vector<bool> ScenarioSpec::flags() const {
  if (hard_regime(regime)) return {mu, gamma, pi, eta};
  return {mu, pi, gamma};
}

std::string ScenarioSpec::label() const {
  const auto names = flag_names();
  const auto values = flags();
  std::string out;
  for (std::size_t k = 0; k < names.size(); ++k) out += names[k] + (values[k] ? "+" : "-");
  return out;
}

std::uint64_t ScenarioSpec::code() const {
  const bool e = hard_regime(regime) && eta;
  return static_cast<std::uint64_t>(regime) * 16 + (mu ? 8 : 0) + (gamma ? 4 : 0) + (pi ? 2 : 0) + (e ? 1 : 0);
}

NuisanceSpec ScenarioSpec::nuisance_spec(double clip, EtaMode eta_mode) const {
  const auto pick = [](bool correct) { return correct ? FeatureMap::raw() : FeatureMap::z_to_x(); };
  NuisanceSpec spec;
  spec.mu_map = pick(mu);
  spec.pi_map = pick(pi);
  spec.gamma_map = pick(gamma);
  spec.eta_map = pick(!hard_regime(regime) || eta);
  spec.eta_mode = eta_mode;
  spec.clip = clip;
  return spec;
}

std::vector<ScenarioSpec> scenario_grid(Regime regime) {
  std::vector<ScenarioSpec> grid;
  const bool hard = hard_regime(regime);
  for (bool mu : {true, false}) {
    for (bool gamma : {true, false}) {
      for (bool pi : {true, false}) {
        if (hard) {
          for (bool eta : {true, false}) grid.push_back({regime, mu, pi, gamma, eta});
        } else {
          grid.push_back({regime, mu, pi, gamma, true});
        }
      }
    }
  }
  return grid;
}

std::vector<ScenarioSpec> select_scenarios(Regime regime, std::string_view pattern) {
  auto grid = scenario_grid(regime);
  if (pattern == "all") return grid;
  const std::size_t width = grid.front().flags().size();
  require(pattern.size() == width && pattern.find_first_not_of("10*") == std::string_view::npos,
          ErrorKind::InvalidArgument,
          "scenario pattern must be 'all' or " + std::to_string(width) + " characters of 1/0/* (got '" +
              std::string(pattern) + "')");
  std::vector<ScenarioSpec> out;
  for (const auto& s : grid) {
    const auto f = s.flags();
    bool keep = true;
    for (std::size_t k = 0; k < width; ++k) {
      if (pattern[k] != '*' && (pattern[k] == '1') != f[k]) keep = false;
    }
    if (keep) out.push_back(s);
  }
  return out;
}

std::vector<std::pair<std::string, bool>> parse_label(std::string_view label) {
  std::vector<std::pair<std::string, bool>> out;
  std::string name;
  for (char ch : label) {
    if (ch == '+' || ch == '-') {
      require(!name.empty(), ErrorKind::SchemaError, "malformed scenario label '" + std::string(label) + "'");
      out.emplace_back(name, ch == '+');
      name.clear();
    } else {
      name += ch;
    }
  }
  require(name.empty() && !out.empty(), ErrorKind::SchemaError, "malformed scenario label '" + std::string(label) + "'");
  return out;
}

// ---------------------------------------------------------------------------

void MonteCarloConfig::validate() const {
  require(reps >= 1, ErrorKind::InvalidArgument, "reps must be at least 1");
  require(n >= 50, ErrorKind::InvalidArgument, "simulation needs n >= 50");
  if (folds < 2) fail(ErrorKind::InvalidFoldCount, "need J >= 2, got " + std::to_string(folds));
  require(clip > 0.0 && clip < 0.5, ErrorKind::InvalidArgument, "clip must lie in (0, 0.5)");
  require(alpha > 0.0 && alpha < 1.0, ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  require(std::isfinite(theta_star), ErrorKind::InvalidArgument, "theta_star must be finite");
  require(failure_budget >= 0.0 && failure_budget < 1.0, ErrorKind::InvalidArgument, "failure budget must lie in [0, 1)");
}

ScenarioMetrics summarize(const std::vector<ReplicationResult>& reps, double theta_star) {
  ScenarioMetrics m;
  double sum_abs = 0.0, sum_err = 0.0, sum_sq = 0.0, sum_theta = 0.0, covered = 0.0;
  for (const auto& r : reps) {
    if (!r.ok) {
      ++m.failures;
      continue;
    }
    const double e = r.theta_hat - theta_star;
    sum_abs += std::abs(e);
    sum_err += e;
    sum_sq += e * e;
    sum_theta += r.theta_hat;
    covered += r.covered ? 1.0 : 0.0;
    ++m.completed;
  }
  if (m.completed == 0) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    m.mae = m.bias = m.mse = m.rmse = m.sd = m.coverage = nan;
    return m;
  }
  const auto k = static_cast<double>(m.completed);
  m.mae = sum_abs / k;
  m.bias = sum_err / k;
  m.mse = sum_sq / k;
  m.rmse = std::sqrt(m.mse);
  m.coverage = covered / k;
  const double mean = sum_theta / k;
  double dev = 0.0;
  for (const auto& r : reps) {
    if (r.ok) dev += (r.theta_hat - mean) * (r.theta_hat - mean);
  }
  m.sd = std::sqrt(dev / k);
  return m;
}

namespace {

bool within_budget(const ScenarioMetrics& m, double budget) {
  const auto total = static_cast<double>(m.completed + m.failures);
  return m.completed > 0 && static_cast<double>(m.failures) <= budget * total;
}

ReplicationResult run_replication(const ScenarioSpec& scenario, std::size_t rep, const MonteCarloConfig& config) {
  ReplicationResult out;
  out.rep = rep;
  try {
    DgpConfig dgp;
    dgp.n = config.n;
    dgp.theta_star = config.theta_star;
    dgp.regime = scenario.regime;
    dgp.centering = config.centering;
    dgp.seed = config.seed;
    const auto sim = generate(dgp, rep, scenario.code());

    EstimatorConfig est;
    est.regime = scenario.regime;
    est.folds = config.folds;
    est.seed = stream_key(config.seed, scenario.code(), rep);
    est.nuisance = scenario.nuisance_spec(config.clip, config.eta_mode);
    est.alpha = config.alpha;
    est.efficiency_diagnostics = false;
    const auto res = cross_fit_att(sim.data, est);

    out.ok = true;
    out.theta_hat = res.theta_hat;
    out.std_err = res.std_err;
    out.covered = res.ci_lo <= config.theta_star && config.theta_star <= res.ci_hi;
    out.equation_residual = res.equation_residual;
    out.residual_scale = res.residual_scale;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

}  // namespace

bool SimulationReport::all_valid() const {
  for (const auto& s : scenarios) {
    if (!s.valid) return false;
  }
  return true;
}

SimulationReport run_monte_carlo(const std::vector<ScenarioSpec>& grid, const MonteCarloConfig& config) {
  config.validate();
  require(!grid.empty(), ErrorKind::InvalidArgument, "scenario grid is empty");
  const Regime regime = grid.front().regime;
  for (const auto& s : grid) {
    require(s.regime == regime, ErrorKind::RegimeMismatch, "all scenarios of one run must share a regime");
  }

  const std::size_t tasks = grid.size() * config.reps;
  std::vector<ReplicationResult> results(tasks);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      results[t] = run_replication(grid[t / config.reps], t % config.reps, config);
    }
  };
  unsigned jobs = config.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.jobs;
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, tasks));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
  }

  SimulationReport report;
  report.regime = regime;
  report.theta_star = config.theta_star;
  report.config = config;
  for (std::size_t s = 0; s < grid.size(); ++s) {
    ScenarioResult sr;
    sr.label = grid[s].label();
    sr.flags = parse_label(sr.label);
    sr.reps.assign(results.begin() + static_cast<std::ptrdiff_t>(s * config.reps),
                   results.begin() + static_cast<std::ptrdiff_t>((s + 1) * config.reps));
    sr.metrics = summarize(sr.reps, config.theta_star);
    sr.valid = within_budget(sr.metrics, config.failure_budget);
    report.scenarios.push_back(std::move(sr));
  }
  return report;
}

// ---------------------------------------------------------------------------

std::string format_report_csv(const SimulationReport& report) {
  require(!report.scenarios.empty(), ErrorKind::InvalidArgument, "report has no scenarios");
  std::ostringstream out;
  out << "scenario";
  for (const auto& [name, _] : report.scenarios.front().flags) out << ',' << name;
  out << ",mae,bias,rmse,mse,sd,coverage,reps,failures\n";
  for (const auto& s : report.scenarios) {
    out << s.label;
    for (const auto& [_, value] : s.flags) out << ',' << (value ? 1 : 0);
    const auto& m = s.metrics;
    out << ',' << num(m.mae) << ',' << num(m.bias) << ',' << num(m.rmse) << ',' << num(m.mse) << ',' << num(m.sd)
        << ',' << num(m.coverage) << ',' << s.reps.size() << ',' << m.failures << '\n';
  }
  return out.str();
}

std::string format_reps_csv(const SimulationReport& report) {
  require(!report.scenarios.empty(), ErrorKind::InvalidArgument, "report has no scenarios");
  std::ostringstream out;
  out << "scenario,rep,theta_hat,std_err,covered\n";
  for (const auto& s : report.scenarios) {
    for (const auto& r : s.reps) {
      out << s.label << ',' << r.rep << ',';
      if (r.ok) out << num(r.theta_hat) << ',' << num(r.std_err) << ',' << (r.covered ? 1 : 0);
      else out << ",,";
      out << '\n';
    }
  }
  return out.str();
}

std::string format_report_markdown(const SimulationReport& report) {
  require(!report.scenarios.empty(), ErrorKind::InvalidArgument, "report has no scenarios");
  std::ostringstream out;
  out << "# Simulation results: " << to_string(report.regime) << "\n\n";
  if (report.config) {
    const auto& c = *report.config;
    out << "n = " << c.n << ", reps = " << c.reps << ", folds = " << c.folds << ", seed = " << c.seed
        << ", theta* = " << num(c.theta_star) << ", clip = " << num(c.clip) << ", alpha = " << num(c.alpha)
        << ", eta mode = " << to_string(c.eta_mode) << ", centering = " << to_string(c.centering) << "\n\n";
  } else {
    out << "Rendered from a replication table, theta* = " << num(report.theta_star) << "\n\n";
  }
  const auto& first = report.scenarios.front().flags;
  out << '|';
  for (const auto& [name, _] : first) out << ' ' << name << " correct |";
  out << " MAE | bias | RMSE | MSE | SD | coverage | reps | failures |\n|";
  for (std::size_t k = 0; k < first.size() + 8; ++k) out << (k < first.size() ? ":-:|" : "--:|");
  out << '\n';
  for (const auto& s : report.scenarios) {
    out << '|';
    for (const auto& [_, value] : s.flags) out << ' ' << (value ? "✓" : "✗") << " |";
    const auto& m = s.metrics;
    out << ' ' << fixed(m.mae) << " | " << fixed(m.bias) << " | " << fixed(m.rmse) << " | " << fixed(m.mse) << " | "
        << fixed(m.sd) << " | " << fixed(m.coverage) << " | " << s.reps.size() << " | " << m.failures
        << (s.valid ? "" : " (invalid)") << " |\n";
  }
  return out.str();
}

SimulationReport report_from_reps_csv(std::string_view text, Regime regime, double theta_star, double failure_budget) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < text.size();) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    pos = end + 1;
  }
  require(!lines.empty(), ErrorKind::SchemaError, "replication table is empty");
  require(lines.front() == "scenario,rep,theta_hat,std_err,covered", ErrorKind::SchemaError,
          "replication table header must be 'scenario,rep,theta_hat,std_err,covered'");
  require(lines.size() > 1, ErrorKind::SchemaError, "no replications in table");

  const auto parse_num = [](std::string_view cell, std::size_t line_no, auto& value) {
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    require(res.ec == std::errc() && res.ptr == cell.data() + cell.size(), ErrorKind::SchemaError,
            "line " + std::to_string(line_no) + ": bad number '" + std::string(cell) + "'");
  };

  std::vector<std::string> order;
  std::map<std::string, std::vector<ReplicationResult>> groups;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    std::vector<std::string_view> cells;
    std::string_view rest = lines[k];
    for (;;) {
      const auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    require(cells.size() == 5, ErrorKind::SchemaError,
            "line " + std::to_string(k + 1) + ": expected 5 fields, got " + std::to_string(cells.size()));
    const std::string label(cells[0]);
    parse_label(label);
    ReplicationResult r;
    parse_num(cells[1], k + 1, r.rep);
    if (cells[2].empty()) {
      require(cells[3].empty() && cells[4].empty(), ErrorKind::SchemaError,
              "line " + std::to_string(k + 1) + ": failed replication with partial values");
      r.ok = false;
    } else {
      int covered = 0;
      parse_num(cells[2], k + 1, r.theta_hat);
      parse_num(cells[3], k + 1, r.std_err);
      parse_num(cells[4], k + 1, covered);
      require(covered == 0 || covered == 1, ErrorKind::SchemaError,
              "line " + std::to_string(k + 1) + ": covered must be 0 or 1");
      r.ok = true;
      r.covered = covered == 1;
    }
    auto [it, inserted] = groups.try_emplace(label);
    if (inserted) order.push_back(label);
    it->second.push_back(r);
  }

  SimulationReport report;
  report.regime = regime;
  report.theta_star = theta_star;
  for (const auto& label : order) {
    ScenarioResult sr;
    sr.label = label;
    sr.flags = parse_label(label);
    sr.reps = std::move(groups[label]);
    sr.metrics = summarize(sr.reps, theta_star);
    sr.valid = within_budget(sr.metrics, failure_budget);
    if (!report.scenarios.empty()) {
      const auto& ref = report.scenarios.front().flags;
      bool same = ref.size() == sr.flags.size();
      for (std::size_t k = 0; same && k < ref.size(); ++k) same = ref[k].first == sr.flags[k].first;
      require(same, ErrorKind::SchemaError, "scenario labels disagree on their flag set");
    }
    report.scenarios.push_back(std::move(sr));
  }
  return report;
}

ReportFiles emit_report(const SimulationReport& report, const std::filesystem::path& dir) {
  require(!report.scenarios.empty(), ErrorKind::InvalidArgument, "report has no scenarios");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
  const std::string tag(to_string(report.regime));
  ReportFiles files{dir / ("report_" + tag + ".csv"), dir / ("reps_" + tag + ".csv"), dir / ("report_" + tag + ".md")};
  write_file(files.report_csv, format_report_csv(report));
  write_file(files.reps_csv, format_reps_csv(report));
  write_file(files.markdown, format_report_markdown(report));
  return files;
}

}  // namespace mardid
