#pragma once

#include "mardid/numerics.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mardid {

/// Which outcome can be missing and what the missingness may depend on.
/// "simple": R independent of outcomes given (X, A). "hard": R may also
/// depend on the always-observed outcome of the other period.
enum class Regime { PreSimple, PreHard, PostSimple, PostHard, BothSimple };

std::string_view to_string(Regime regime);
/// Accepts the canonical names plus "both" for BothSimple.
Regime parse_regime(std::string_view name);

inline bool pre_missing(Regime r) { return r == Regime::PreSimple || r == Regime::PreHard; }
inline bool post_missing(Regime r) { return r == Regime::PostSimple || r == Regime::PostHard; }
inline bool hard_regime(Regime r) { return r == Regime::PreHard || r == Regime::PostHard; }

/// One unit: covariates, treatment, observation indicators and whatever
/// outcomes were observed. Outcomes are present exactly when their
/// indicator is 1.
struct ObservedSample {
  std::vector<double> x;
  int a = 0;
  int r0 = 1;
  std::optional<double> y0;
  int r1 = 1;
  std::optional<double> y1;

  /// Throws ConsistencyError / SchemaError when the record breaks its invariants.
  void validate() const;

  bool operator==(const ObservedSample&) const = default;
};

class Dataset {
 public:
  Dataset(std::vector<ObservedSample> samples, Regime regime, std::vector<std::string> covariate_names = {});

  std::size_t size() const noexcept { return samples_.size(); }
  std::size_t dim() const noexcept { return p_; }
  Regime regime() const noexcept { return regime_; }
  const std::vector<ObservedSample>& samples() const noexcept { return samples_; }
  const ObservedSample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<std::string>& covariate_names() const noexcept { return names_; }

  /// Same samples reinterpreted under another regime (revalidated).
  Dataset with_regime(Regime regime) const;

 private:
  std::vector<ObservedSample> samples_;
  std::size_t p_ = 0;
  Regime regime_;
  std::vector<std::string> names_;
};

/// Maps CSV headers onto roles. Empty covariates means "every column that is
/// not one of the role columns, in file order". Missing r0/r1 columns mean
/// the indicator is 1 for every row.
struct CsvSchema {
  std::vector<std::string> covariates;
  std::string a = "a";
  std::string r0 = "r0";
  std::string y0 = "y0";
  std::string r1 = "r1";
  std::string y1 = "y1";
};

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema, Regime regime);
Dataset parse_csv(std::string_view text, const CsvSchema& schema, Regime regime);
void write_csv(const Dataset& data, const std::filesystem::path& path);
std::string format_csv(const Dataset& data);

/// Cross-fitting partition. Fold ids are 0-based. Each fold's training
/// complement is further split into two halves; the "eta half" trains the
/// nested regression, the other half the remaining nuisances.
class FoldPlan {
 public:
  FoldPlan(std::vector<int> assignment, int folds, std::vector<std::vector<std::uint8_t>> eta_half);

  int folds() const noexcept { return folds_; }
  std::size_t size() const noexcept { return assignment_.size(); }
  const std::vector<int>& assignment() const noexcept { return assignment_; }

  std::vector<std::size_t> evaluation(int fold) const;
  std::vector<std::size_t> training(int fold) const;
  std::vector<std::size_t> eta_training(int fold) const;
  /// Training complement minus the eta half.
  std::vector<std::size_t> main_training(int fold) const;
  std::span<const std::uint8_t> eta_mask(int fold) const { return eta_half_.at(static_cast<std::size_t>(fold)); }

  bool operator==(const FoldPlan&) const = default;

 private:
  std::vector<int> assignment_;
  int folds_;
  std::vector<std::vector<std::uint8_t>> eta_half_;
};

/// Random balanced partition of n units into J folds (sizes differ by at
/// most one). Throws InvalidFoldCount unless 2 <= J <= n.
FoldPlan make_folds(std::size_t n, int folds, std::uint64_t seed);

enum class OutcomeInput { None, Y0, Y1 };

/// Turns a sample into a regression feature row. An intercept is always
/// first; an outcome, when requested, is appended last and enters linearly.
struct FeatureMap {
  enum class Kind {
    RawColumns,  // the selected covariate columns (all when empty)
    ZToX,        // the four nonlinear transforms of the first four covariates
  };

  Kind kind = Kind::RawColumns;
  std::vector<std::size_t> columns;
  OutcomeInput outcome = OutcomeInput::None;

  static FeatureMap raw(std::vector<std::size_t> columns = {}) { return {Kind::RawColumns, std::move(columns)}; }
  static FeatureMap z_to_x() { return {Kind::ZToX, {}}; }

  FeatureMap with_outcome(OutcomeInput input) const {
    FeatureMap m = *this;
    m.outcome = input;
    return m;
  }

  std::size_t width(std::size_t covariate_dim) const;
  std::string describe() const;

  bool operator==(const FeatureMap&) const = default;
};

/// Feature row for one sample. `extra` overrides the outcome the map asks
/// for; otherwise it is read from the sample (MissingInput when absent).
std::vector<double> apply_feature_map(const FeatureMap& map, const ObservedSample& sample,
                                      std::optional<double> extra = std::nullopt);

/// Appends the row into `out` (cleared first). Allocation-free once `out` has capacity.
void write_features(const FeatureMap& map, const ObservedSample& sample, std::optional<double> extra,
                    std::vector<double>& out);

DesignMatrix build_design(const FeatureMap& map, const Dataset& data, std::span<const std::size_t> rows);

/// The z-to-x covariate transform on a 4-vector.
std::array<double, 4> transform_z_to_x(std::span<const double> z);

}  // namespace mardid
