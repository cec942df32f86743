#include "mardid/cli.hpp"

#include "mardid/error.hpp"
#include "mardid/estimators.hpp"
#include "mardid/simulation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace mardid {

namespace {

using nlohmann::json;

// Every subcommand reads from one settings block so that a single JSON
// config file can serve all of them.
struct Settings {
  std::string config;
  std::string data;
  std::string out;
  std::string if_out;
  std::string regime = "pre-simple";
  std::string eta_mode = "augmented";
  std::string centering = "centered";
  std::string scenario = "all";
  std::string mu_map = "raw";
  std::string pi_map = "raw";
  std::string gamma_map = "raw";
  std::string eta_map = "raw";
  std::vector<std::string> covariates;
  std::string col_a = "a";
  std::string col_r0 = "r0";
  std::string col_y0 = "y0";
  std::string col_r1 = "r1";
  std::string col_y1 = "y1";
  int folds = 5;
  std::uint64_t seed = 0;
  double clip = 0.01;
  double alpha = 0.05;
  double theta_star = 5.0;
  std::size_t n = 2000;
  std::size_t reps = 500;
  std::size_t rep = 0;
  unsigned jobs = 1;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyCell:
    case ErrorKind::FitFailure:
    case ErrorKind::RankDeficient:
    case ErrorKind::NonFiniteResult:
    case ErrorKind::InvalidProbability:
      return kExitEstimation;
    default:
      return kExitUsage;
  }
}

std::string env_name(const std::string& flag) {
  std::string name = "MARDID_";
  for (char c : flag) name += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return name;
}

// JSON config keys mirror the long flag names.
using Setter = std::function<void(Settings&, const json&)>;

template <class T>
Setter set_number(T Settings::*field) {
  return [field](Settings& s, const json& v) {
    if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw UsageError("expected a non-negative integer");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw UsageError("expected an integer");
    } else {
      if (!v.is_number()) throw UsageError("expected a number");
    }
    s.*field = v.get<T>();
  };
}

Setter set_string(std::string Settings::*field) {
  return [field](Settings& s, const json& v) {
    if (!v.is_string()) throw UsageError("expected a string");
    s.*field = v.get<std::string>();
  };
}

const std::map<std::string, Setter>& config_keys() {
  static const std::map<std::string, Setter> keys = {
      {"data", set_string(&Settings::data)},
      {"out", set_string(&Settings::out)},
      {"if-out", set_string(&Settings::if_out)},
      {"regime", set_string(&Settings::regime)},
      {"eta-mode", set_string(&Settings::eta_mode)},
      {"y1-centering", set_string(&Settings::centering)},
      {"scenario", set_string(&Settings::scenario)},
      {"mu-map", set_string(&Settings::mu_map)},
      {"pi-map", set_string(&Settings::pi_map)},
      {"gamma-map", set_string(&Settings::gamma_map)},
      {"eta-map", set_string(&Settings::eta_map)},
      {"covariates",
       [](Settings& s, const json& v) {
         if (!v.is_array()) throw UsageError("expected an array of column names");
         s.covariates.clear();
         for (const auto& c : v) {
           if (!c.is_string()) throw UsageError("expected an array of column names");
           s.covariates.push_back(c.get<std::string>());
         }
       }},
      {"col-a", set_string(&Settings::col_a)},
      {"col-r0", set_string(&Settings::col_r0)},
      {"col-y0", set_string(&Settings::col_y0)},
      {"col-r1", set_string(&Settings::col_r1)},
      {"col-y1", set_string(&Settings::col_y1)},
      {"folds", set_number(&Settings::folds)},
      {"seed", set_number(&Settings::seed)},
      {"clip", set_number(&Settings::clip)},
      {"alpha", set_number(&Settings::alpha)},
      {"theta-star", set_number(&Settings::theta_star)},
      {"n", set_number(&Settings::n)},
      {"reps", set_number(&Settings::reps)},
      {"rep", set_number(&Settings::rep)},
      {"jobs", set_number(&Settings::jobs)},
  };
  return keys;
}

void apply_config_file(const std::string& path, Settings& s) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw UsageError("config file must hold a JSON object");
  const auto& keys = config_keys();
  for (const auto& [key, value] : doc.items()) {
    const auto it = keys.find(key);
    if (it == keys.end()) throw UsageError("unknown config key '" + key + "'");
    try {
      it->second(s, value);
    } catch (const UsageError& e) {
      throw UsageError("config key '" + key + "': " + e.what());
    }
  }
}

// Finds --config before the real parse so file values sit beneath flags and env vars.
std::string find_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) path = args[k + 1];
    if (args[k].rfind("--config=", 0) == 0) path = args[k].substr(9);
  }
  if (path.empty()) {
    if (const char* env = std::getenv("MARDID_CONFIG")) path = env;
  }
  return path;
}

FeatureMap parse_map(const std::string& name) {
  if (name == "raw") return FeatureMap::raw();
  if (name == "z-to-x") return FeatureMap::z_to_x();
  throw UsageError("unknown feature map '" + name + "' (expected raw or z-to-x)");
}

json settings_echo(const Settings& s, bool simulation) {
  json j = {{"regime", s.regime},       {"folds", s.folds}, {"seed", s.seed},
            {"clip", s.clip},           {"alpha", s.alpha}, {"eta_mode", s.eta_mode}};
  if (simulation) {
    j["y1_centering"] = s.centering;
    j["n"] = s.n;
    j["reps"] = s.reps;
    j["scenario"] = s.scenario;
    j["theta_star"] = s.theta_star;
  } else {
    j["maps"] = {{"mu", s.mu_map}, {"pi", s.pi_map}, {"gamma", s.gamma_map}, {"eta", s.eta_map}};
  }
  return j;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void log(std::ostream& err, const std::string& msg) { err << "mardid: " << msg << '\n'; }

// ---------------------------------------------------------------------------

int cmd_estimate(const Settings& s, std::ostream& out, std::ostream& err) {
  if (s.data.empty()) throw UsageError("estimate needs --data");
  const Regime regime = parse_regime(s.regime);

  CsvSchema schema;
  schema.covariates = s.covariates;
  schema.a = s.col_a;
  schema.r0 = s.col_r0;
  schema.y0 = s.col_y0;
  schema.r1 = s.col_r1;
  schema.y1 = s.col_y1;
  const Dataset data = load_csv(s.data, schema, regime);
  log(err, "loaded " + std::to_string(data.size()) + " rows with " + std::to_string(data.dim()) + " covariates");

  EstimatorConfig config;
  config.regime = regime;
  config.folds = s.folds;
  config.seed = s.seed;
  config.alpha = s.alpha;
  config.nuisance.mu_map = parse_map(s.mu_map);
  config.nuisance.pi_map = parse_map(s.pi_map);
  config.nuisance.gamma_map = parse_map(s.gamma_map);
  config.nuisance.eta_map = parse_map(s.eta_map);
  config.nuisance.eta_mode = parse_eta_mode(s.eta_mode);
  config.nuisance.clip = s.clip;
  config.validate();

  const auto res = cross_fit_att(data, config);
  for (const auto& w : res.warnings) log(err, "warning: " + w);

  json diag = {
      {"theta_fold_average", res.theta_fold_average},
      {"fold_estimates", res.fold_estimates},
      {"fold_sizes", res.fold_sizes},
      {"fold_treated", res.fold_treated},
      {"p_hat", res.p_hat},
      {"equation_residual", res.equation_residual},
      {"residual_scale", res.residual_scale},
      {"warnings", res.warnings},
  };
  if (res.efficiency_gap) {
    diag["efficiency_gap"] = {{"terms", res.efficiency_gap->terms}, {"total", res.efficiency_gap->total()}};
  } else {
    diag["efficiency_gap"] = nullptr;
  }
  json result = {
      {"theta_hat", res.theta_hat}, {"std_err", res.std_err},      {"ci_lo", res.ci_lo},
      {"ci_hi", res.ci_hi},         {"n", res.n},                  {"J", res.folds},
      {"regime", to_string(regime)}, {"diagnostics", diag},        {"settings", settings_echo(s, false)},
  };
  const std::string text = result.dump(2) + "\n";
  out << text;
  if (!s.out.empty()) {
    std::ofstream f(s.out);
    if (!f || !(f << text)) fail(ErrorKind::IoError, "cannot write '" + s.out + "'");
  }
  if (!s.if_out.empty()) {
    std::ofstream f(s.if_out);
    if (!f) fail(ErrorKind::IoError, "cannot write '" + s.if_out + "'");
    f << "row,fold,a,phi\n";
    char buf[64];
    for (std::size_t i = 0; i < res.n; ++i) {
      const auto r = std::to_chars(buf, buf + sizeof buf, res.if_values[i]);
      f << i << ',' << res.fold_of[i] << ',' << data[i].a << ',' << std::string_view(buf, r.ptr - buf) << '\n';
    }
    if (!f) fail(ErrorKind::IoError, "write failed for '" + s.if_out + "'");
  }
  return kExitOk;
}

int cmd_simulate(const Settings& s, std::ostream& out, std::ostream& err) {
  const Regime regime = parse_regime(s.regime);
  MonteCarloConfig config;
  config.n = s.n;
  config.reps = s.reps;
  config.folds = s.folds;
  config.seed = s.seed;
  config.jobs = s.jobs;
  config.theta_star = s.theta_star;
  config.centering = parse_centering(s.centering);
  config.clip = s.clip;
  config.alpha = s.alpha;
  config.eta_mode = parse_eta_mode(s.eta_mode);
  config.validate();
  const auto grid = select_scenarios(regime, s.scenario);
  if (grid.empty()) throw UsageError("scenario pattern '" + s.scenario + "' selects nothing");

  log(err, "running " + std::to_string(grid.size()) + " scenarios x " + std::to_string(s.reps) +
               " replications on " + std::to_string(s.jobs) + " worker(s)");
  const auto report = run_monte_carlo(grid, config);
  const std::filesystem::path dir = s.out.empty() ? std::filesystem::path(".") : std::filesystem::path(s.out);
  const auto files = emit_report(report, dir);

  json meta = {{"settings", settings_echo(s, true)}, {"scenarios", json::array()}};
  for (const auto& sc : report.scenarios) {
    const auto& m = sc.metrics;
    meta["scenarios"].push_back({{"scenario", sc.label},
                                 {"mae", finite_or_null(m.mae)},
                                 {"bias", finite_or_null(m.bias)},
                                 {"rmse", finite_or_null(m.rmse)},
                                 {"mse", finite_or_null(m.mse)},
                                 {"sd", finite_or_null(m.sd)},
                                 {"coverage", finite_or_null(m.coverage)},
                                 {"reps", sc.reps.size()},
                                 {"failures", m.failures},
                                 {"valid", sc.valid}});
    for (const auto& r : sc.reps) {
      if (!r.ok) log(err, sc.label + " rep " + std::to_string(r.rep) + " failed: " + r.error);
    }
  }
  const auto meta_path = dir / ("meta_" + std::string(to_string(regime)) + ".json");
  {
    std::ofstream f(meta_path);
    if (!f || !(f << meta.dump(2) << '\n')) fail(ErrorKind::IoError, "cannot write '" + meta_path.string() + "'");
  }
  log(err, "wrote " + files.report_csv.string() + ", " + files.reps_csv.string() + ", " + files.markdown.string() +
               ", " + meta_path.string());
  out << format_report_markdown(report);

  if (!report.all_valid()) {
    for (const auto& sc : report.scenarios) {
      if (!sc.valid) log(err, "scenario " + sc.label + " exceeded its failure budget");
    }
    return kExitScenario;
  }
  return kExitOk;
}

int cmd_report(const Settings& s, std::ostream& out, std::ostream& err) {
  if (s.data.empty()) throw UsageError("report needs --data <reps csv>");
  std::ifstream in(s.data, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + s.data + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const auto report = report_from_reps_csv(buf.str(), parse_regime(s.regime), s.theta_star);
  const std::string md = format_report_markdown(report);
  out << md;
  if (!s.out.empty()) {
    std::ofstream f(s.out);
    if (!f || !(f << md)) fail(ErrorKind::IoError, "cannot write '" + s.out + "'");
    log(err, "wrote " + s.out);
  }
  return kExitOk;
}

int cmd_generate(const Settings& s, std::ostream& out, std::ostream& err) {
  DgpConfig config;
  config.n = s.n;
  config.theta_star = s.theta_star;
  config.regime = parse_regime(s.regime);
  config.centering = parse_centering(s.centering);
  config.seed = s.seed;
  const auto sim = generate(config, s.rep);
  if (s.out.empty()) {
    out << format_csv(sim.data);
  } else {
    write_csv(sim.data, s.out);
    log(err, "wrote " + std::to_string(sim.data.size()) + " rows to " + s.out);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"Cross-fitted ATT estimation for difference-in-differences with missing outcomes", "mardid"};
  app.require_subcommand(1);

  const auto common = [&](CLI::App* sub) {
    const auto env = [](CLI::Option* o, const std::string& flag) { o->envname(env_name(flag)); };
    env(sub->add_option("--config", s.config, "JSON file with defaults (keys are long flag names)"), "config");
    env(sub->add_option("--regime", s.regime, "pre-simple, pre-hard, post-simple, post-hard or both"), "regime");
    env(sub->add_option("--folds", s.folds, "cross-fitting folds J"), "folds");
    env(sub->add_option("--seed", s.seed, "random seed"), "seed");
    env(sub->add_option("--clip", s.clip, "probability clip xi"), "clip");
    env(sub->add_option("--alpha", s.alpha, "1 - confidence level"), "alpha");
    env(sub->add_option("--eta-mode", s.eta_mode, "plain or augmented nested regression"), "eta-mode");
    env(sub->add_option("--out", s.out, "output path (directory for simulate)"), "out");
  };

  auto* estimate = app.add_subcommand("estimate", "estimate the ATT from a CSV file");
  common(estimate);
  estimate->add_option("--data", s.data, "input CSV")->envname(env_name("data"));
  estimate->add_option("--if-out", s.if_out, "write per-sample influence values to this CSV")->envname(env_name("if-out"));
  estimate->add_option("--covariates", s.covariates, "covariate columns (default: all non-role columns)")
      ->delimiter(',')
      ->envname(env_name("covariates"));
  for (auto [flag, field] : {std::pair{"col-a", &s.col_a}, {"col-r0", &s.col_r0}, {"col-y0", &s.col_y0},
                             {"col-r1", &s.col_r1}, {"col-y1", &s.col_y1}}) {
    estimate->add_option(std::string("--") + flag, *field, "column name")->envname(env_name(flag));
  }
  for (auto [flag, field] : {std::pair{"mu-map", &s.mu_map}, {"pi-map", &s.pi_map}, {"gamma-map", &s.gamma_map},
                             {"eta-map", &s.eta_map}}) {
    estimate->add_option(std::string("--") + flag, *field, "raw or z-to-x")->envname(env_name(flag));
  }

  auto* simulate = app.add_subcommand("simulate", "run the Monte Carlo study");
  common(simulate);
  simulate->add_option("--n", s.n, "sample size per replication")->envname(env_name("n"));
  simulate->add_option("--reps", s.reps, "replications per scenario")->envname(env_name("reps"));
  simulate->add_option("--scenario", s.scenario, "'all' or a 1/0/* pattern in table column order")
      ->envname(env_name("scenario"));
  simulate->add_option("--y1-centering", s.centering, "as-written or centered")->envname(env_name("y1-centering"));
  simulate->add_option("--jobs", s.jobs, "worker threads (0 = all cores)")->envname(env_name("jobs"));
  simulate->add_option("--theta-star", s.theta_star, "true ATT")->envname(env_name("theta-star"));

  auto* report = app.add_subcommand("report", "render a markdown table from a reps CSV");
  common(report);
  report->add_option("--data", s.data, "reps CSV written by simulate")->envname(env_name("data"));
  report->add_option("--theta-star", s.theta_star, "true ATT")->envname(env_name("theta-star"));

  auto* gen = app.add_subcommand("generate", "write one simulated dataset as CSV");
  common(gen);
  gen->add_option("--n", s.n, "sample size")->envname(env_name("n"));
  gen->add_option("--rep", s.rep, "replication index")->envname(env_name("rep"));
  gen->add_option("--y1-centering", s.centering, "as-written or centered")->envname(env_name("y1-centering"));
  gen->add_option("--theta-star", s.theta_star, "true ATT")->envname(env_name("theta-star"));

  try {
    if (const auto path = find_config(args); !path.empty()) apply_config_file(path, s);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    log(err, std::string("error: ") + e.what());
    return kExitUsage;
  }

  try {
    if (estimate->parsed()) return cmd_estimate(s, out, err);
    if (simulate->parsed()) return cmd_simulate(s, out, err);
    if (report->parsed()) return cmd_report(s, out, err);
    return cmd_generate(s, out, err);
  } catch (const UsageError& e) {
    log(err, std::string("error: ") + e.what());
    return kExitUsage;
  } catch (const Error& e) {
    log(err, std::string("error: ") + e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    log(err, std::string("unexpected error: ") + e.what());
    return kExitEstimation;
  }
}

}  // namespace mardid
