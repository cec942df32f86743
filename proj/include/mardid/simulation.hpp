#pragma once

// Monte Carlo laboratory: a Kang-Schafer style data-generating process with
// latent Gaussian covariates Z, observed nonlinear transforms X, and
// missingness in one or both periods.
//
// Simulated datasets expose Z as the covariate columns (z1..z4). A nuisance
// model is "correct" when it uses those columns directly and "misspecified"
// when it sees them only through the z-to-x transform.

#include "mardid/data.hpp"
#include "mardid/estimators.hpp"
#include "mardid/nuisance.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mardid {

/// How Y1 (pre-hard) or Y0 (post-hard) enters the missingness logit.
/// AsWritten uses the raw outcome, which saturates the logit; Centered
/// subtracts the outcome intercept 210.
enum class Centering { AsWritten, Centered };

std::string_view to_string(Centering c);
Centering parse_centering(std::string_view name);

struct DgpConfig {
  std::size_t n = 2000;
  double theta_star = 5.0;
  Regime regime = Regime::PreSimple;
  Centering centering = Centering::Centered;
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr double kOutcomeIntercept = 210.0;

/// Ground truth retained next to the public dataset.
struct OracleView {
  std::vector<std::array<double, 4>> z;
  std::vector<double> y0;            // never blanked
  std::vector<double> y1_untreated;  // Y1(0)
  std::vector<double> y1_treated;    // Y1(1)
  std::vector<double> propensity;    // P(A=1 | Z)
  std::vector<double> gamma0;        // P(R0=1 | ...) at the realised values (1 when Y0 is never missing)
  std::vector<double> gamma1;        // P(R1=1 | ...)

  /// Observed Y1 by consistency.
  double y1(std::size_t i, int a) const { return a == 1 ? y1_treated[i] : y1_untreated[i]; }
};

struct SimulatedData {
  Dataset data;
  OracleView oracle;

  /// Mean of Y1(1) - Y1(0) among treated units.
  double sample_att() const;
  /// The same units with both outcomes revealed (regime PreSimple, R0 = R1 = 1).
  Dataset complete() const;
};

/// One draw of the process. The stream is keyed by (seed, scenario_code, rep),
/// so every replication can be regenerated in isolation.
SimulatedData generate(const DgpConfig& config, std::uint64_t rep, std::uint64_t scenario_code = 0);

/// Population nuisance functions of the process, evaluated on samples whose
/// covariates are Z. `clip` = 0 leaves probabilities unclipped.
class TrueNuisances final : public NuisanceModel {
 public:
  TrueNuisances(Regime regime, double theta_star = 5.0, Centering centering = Centering::Centered, double clip = 0.0);

  NuisanceValues evaluate(const ObservedSample& sample) const override;

  static double outcome_mean(std::span<const double> z);  // E[Y0 | Z]
  static double propensity(std::span<const double> z);
  /// Missingness probability for the missing period; `other` is the
  /// conditioning outcome under hard regimes.
  double observe_probability(std::span<const double> z, int a, std::optional<double> other = std::nullopt) const;

 private:
  double control_mean_observed(std::span<const double> z) const;

  Regime regime_;
  double theta_;
  Centering centering_;
  double clip_;
};

// ---------------------------------------------------------------------------

/// Which nuisances are fit on correct (Z) features. `eta` is meaningful only
/// under hard regimes.
struct ScenarioSpec {
  Regime regime = Regime::PreSimple;
  bool mu = true;
  bool pi = true;
  bool gamma = true;
  bool eta = true;

  /// e.g. "mu+pi-gamma+" or "mu+gamma+pi-eta+" (flags in table column order).
  std::string label() const;
  /// Column names in table order: {mu, pi, gamma} or {mu, gamma, pi, eta}.
  std::vector<std::string> flag_names() const;
  std::vector<bool> flags() const;
  std::uint64_t code() const;
  NuisanceSpec nuisance_spec(double clip, EtaMode eta_mode) const;

  bool operator==(const ScenarioSpec&) const = default;
};

/// Every combination for the regime, in table row order (8 or 16 rows).
std::vector<ScenarioSpec> scenario_grid(Regime regime);
/// Filters the grid by "all" or a pattern of 1/0/* per flag in table column order.
std::vector<ScenarioSpec> select_scenarios(Regime regime, std::string_view pattern);
/// Parses the flags of a label produced by ScenarioSpec::label().
std::vector<std::pair<std::string, bool>> parse_label(std::string_view label);

struct MonteCarloConfig {
  std::size_t n = 2000;
  std::size_t reps = 500;
  int folds = 5;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  double theta_star = 5.0;
  Centering centering = Centering::Centered;
  double clip = 0.01;
  double alpha = 0.05;
  EtaMode eta_mode = EtaMode::Augmented;
  double failure_budget = 0.05;

  void validate() const;
};

struct ReplicationResult {
  std::size_t rep = 0;
  bool ok = false;
  double theta_hat = 0.0;
  double std_err = 0.0;
  bool covered = false;
  double equation_residual = 0.0;
  double residual_scale = 0.0;
  std::string error;
};

struct ScenarioMetrics {
  double mae = 0.0;
  double bias = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  double sd = 0.0;  // 1/R normalisation, so mse = bias^2 + sd^2
  double coverage = 0.0;
  std::size_t completed = 0;
  std::size_t failures = 0;
};

/// Metrics over the successful replications (NaN when none succeeded).
ScenarioMetrics summarize(const std::vector<ReplicationResult>& reps, double theta_star);

struct ScenarioResult {
  std::string label;
  std::vector<std::pair<std::string, bool>> flags;
  std::vector<ReplicationResult> reps;
  ScenarioMetrics metrics;
  bool valid = true;  // failures within budget
};

struct SimulationReport {
  Regime regime = Regime::PreSimple;
  double theta_star = 5.0;
  std::optional<MonteCarloConfig> config;  // absent when rebuilt from a replication table
  std::vector<ScenarioResult> scenarios;

  bool all_valid() const;
};

/// Runs every scenario x replication. Results do not depend on `jobs`.
SimulationReport run_monte_carlo(const std::vector<ScenarioSpec>& grid, const MonteCarloConfig& config);

/// Rebuilds a report from a long-format replication table (see format_reps_csv).
SimulationReport report_from_reps_csv(std::string_view text, Regime regime, double theta_star,
                                      double failure_budget = 0.05);

std::string format_report_csv(const SimulationReport& report);
std::string format_reps_csv(const SimulationReport& report);
std::string format_report_markdown(const SimulationReport& report);

struct ReportFiles {
  std::filesystem::path report_csv;
  std::filesystem::path reps_csv;
  std::filesystem::path markdown;
};

/// Writes report_<regime>.csv, reps_<regime>.csv and report_<regime>.md into `dir`.
ReportFiles emit_report(const SimulationReport& report, const std::filesystem::path& dir);

}  // namespace mardid
