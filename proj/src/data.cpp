#include "mardid/data.hpp"

#include "mardid/error.hpp"
#include "mardid/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace mardid {

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::PreSimple: return "pre-simple";
    case Regime::PreHard: return "pre-hard";
    case Regime::PostSimple: return "post-simple";
    case Regime::PostHard: return "post-hard";
    case Regime::BothSimple: return "both-simple";
  }
  return "unknown";
}

Regime parse_regime(std::string_view name) {
  if (name == "pre-simple") return Regime::PreSimple;
  if (name == "pre-hard") return Regime::PreHard;
  if (name == "post-simple") return Regime::PostSimple;
  if (name == "post-hard") return Regime::PostHard;
  if (name == "both-simple" || name == "both") return Regime::BothSimple;
  fail(ErrorKind::InvalidArgument, "unknown regime '" + std::string(name) + "'");
}

void ObservedSample::validate() const {
  require(a == 0 || a == 1, ErrorKind::SchemaError, "treatment must be 0 or 1");
  require(r0 == 0 || r0 == 1, ErrorKind::SchemaError, "r0 must be 0 or 1");
  require(r1 == 0 || r1 == 1, ErrorKind::SchemaError, "r1 must be 0 or 1");
  require(y0.has_value() == (r0 == 1), ErrorKind::ConsistencyError,
          r0 == 1 ? "r0 = 1 but y0 is missing" : "r0 = 0 but y0 is present");
  require(y1.has_value() == (r1 == 1), ErrorKind::ConsistencyError,
          r1 == 1 ? "r1 = 1 but y1 is missing" : "r1 = 0 but y1 is present");
  require(std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); }), ErrorKind::SchemaError,
          "non-finite covariate");
  require(!y0 || std::isfinite(*y0), ErrorKind::SchemaError, "non-finite y0");
  require(!y1 || std::isfinite(*y1), ErrorKind::SchemaError, "non-finite y1");
}

Dataset::Dataset(std::vector<ObservedSample> samples, Regime regime, std::vector<std::string> covariate_names)
    : samples_(std::move(samples)), regime_(regime), names_(std::move(covariate_names)) {
  require(!samples_.empty(), ErrorKind::EmptyGroup, "dataset has no samples");
  p_ = samples_.front().x.size();
  if (names_.empty()) {
    for (std::size_t j = 0; j < p_; ++j) names_.push_back("x" + std::to_string(j + 1));
  }
  require(names_.size() == p_, ErrorKind::SchemaError, "covariate name count differs from covariate dimension");
  std::size_t treated = 0;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    try {
      s.validate();
      require(s.x.size() == p_, ErrorKind::SchemaError, "covariate dimension differs between samples");
      if (pre_missing(regime_)) require(s.r1 == 1, ErrorKind::ConsistencyError, "pre-missing regime requires r1 = 1");
      if (post_missing(regime_)) require(s.r0 == 1, ErrorKind::ConsistencyError, "post-missing regime requires r0 = 1");
    } catch (const Error& e) {
      throw Error(e.kind(), "sample " + std::to_string(i) + ": " + e.what());
    }
    treated += static_cast<std::size_t>(s.a);
  }
  require(treated > 0, ErrorKind::EmptyGroup, "no treated units");
  require(treated < samples_.size(), ErrorKind::EmptyGroup, "no control units");
}

Dataset Dataset::with_regime(Regime regime) const { return Dataset(samples_, regime, names_); }

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_real(std::string_view cell, std::size_t line, std::string_view column) {
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    fail(ErrorKind::SchemaError, "line " + std::to_string(line) + ", column '" + std::string(column) +
                                     "': not a finite number: '" + std::string(cell) + "'");
  }
  return v;
}

int parse_indicator(std::string_view cell, std::size_t line, std::string_view column) {
  if (cell == "0") return 0;
  if (cell == "1") return 1;
  fail(ErrorKind::SchemaError, "line " + std::to_string(line) + ", column '" + std::string(column) +
                                   "': expected 0 or 1, got '" + std::string(cell) + "'");
}

std::string format_real(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Dataset parse_csv(std::string_view text, const CsvSchema& schema, Regime regime) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    auto line = text.substr(start, pos - start);
    if (!trim(line).empty()) lines.push_back(line);
    start = pos + 1;
  }
  require(!lines.empty(), ErrorKind::SchemaError, "empty file (header required)");
  const auto header = split(lines.front());
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t j = 0; j < header.size(); ++j) {
    require(index.emplace(header[j], j).second, ErrorKind::SchemaError, "duplicate column '" + std::string(header[j]) + "'");
  }
  auto column = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
    const auto it = index.find(name);
    if (it == index.end()) {
      require(!required, ErrorKind::SchemaError, "missing column '" + name + "'");
      return std::nullopt;
    }
    return it->second;
  };
  const auto a_col = *column(schema.a, true);
  const auto r0_col = column(schema.r0, false);
  const auto y0_col = *column(schema.y0, true);
  const auto r1_col = column(schema.r1, false);
  const auto y1_col = *column(schema.y1, true);

  std::vector<std::size_t> x_cols;
  std::vector<std::string> x_names;
  if (schema.covariates.empty()) {
    const std::vector<std::string_view> roles{schema.a, schema.r0, schema.y0, schema.r1, schema.y1};
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (std::find(roles.begin(), roles.end(), header[j]) == roles.end()) {
        x_cols.push_back(j);
        x_names.emplace_back(header[j]);
      }
    }
  } else {
    for (const auto& name : schema.covariates) {
      x_cols.push_back(*column(name, true));
      x_names.push_back(name);
    }
  }
  require(!x_cols.empty(), ErrorKind::SchemaError, "no covariate columns");

  std::vector<ObservedSample> samples;
  samples.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto cells = split(lines[li]);
    const std::size_t line_no = li + 1;
    require(cells.size() == header.size(), ErrorKind::SchemaError,
            "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " cells, got " +
                std::to_string(cells.size()));
    ObservedSample s;
    s.x.reserve(x_cols.size());
    for (std::size_t k = 0; k < x_cols.size(); ++k) s.x.push_back(parse_real(cells[x_cols[k]], line_no, x_names[k]));
    s.a = parse_indicator(cells[a_col], line_no, schema.a);
    s.r0 = r0_col ? parse_indicator(cells[*r0_col], line_no, schema.r0) : 1;
    s.r1 = r1_col ? parse_indicator(cells[*r1_col], line_no, schema.r1) : 1;
    const auto y0_cell = cells[y0_col];
    const auto y1_cell = cells[y1_col];
    if (s.r0 == 0 && !y0_cell.empty())
      fail(ErrorKind::ConsistencyError, "line " + std::to_string(line_no) + ": r0 = 0 but y0 is nonempty");
    if (s.r0 == 1 && y0_cell.empty())
      fail(ErrorKind::ConsistencyError, "line " + std::to_string(line_no) + ": r0 = 1 but y0 is empty");
    if (s.r1 == 0 && !y1_cell.empty())
      fail(ErrorKind::ConsistencyError, "line " + std::to_string(line_no) + ": r1 = 0 but y1 is nonempty");
    if (s.r1 == 1 && y1_cell.empty())
      fail(ErrorKind::ConsistencyError, "line " + std::to_string(line_no) + ": r1 = 1 but y1 is empty");
    if (s.r0 == 1) s.y0 = parse_real(y0_cell, line_no, schema.y0);
    if (s.r1 == 1) s.y1 = parse_real(y1_cell, line_no, schema.y1);
    samples.push_back(std::move(s));
  }
  return Dataset(std::move(samples), regime, std::move(x_names));
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema, Regime regime) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema, regime);
}

std::string format_csv(const Dataset& data) {
  std::string out;
  for (const auto& name : data.covariate_names()) out += name + ",";
  out += "a,r0,y0,r1,y1\n";
  for (const auto& s : data.samples()) {
    for (double v : s.x) out += format_real(v) + ",";
    out += std::to_string(s.a) + "," + std::to_string(s.r0) + "," + (s.y0 ? format_real(*s.y0) : "") + "," +
           std::to_string(s.r1) + "," + (s.y1 ? format_real(*s.y1) : "") + "\n";
  }
  return out;
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::IoError, "cannot write '" + path.string() + "'");
  out << format_csv(data);
  require(out.good(), ErrorKind::IoError, "write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Folds

FoldPlan::FoldPlan(std::vector<int> assignment, int folds, std::vector<std::vector<std::uint8_t>> eta_half)
    : assignment_(std::move(assignment)), folds_(folds), eta_half_(std::move(eta_half)) {
  require(static_cast<int>(eta_half_.size()) == folds_, ErrorKind::InvalidArgument, "one eta mask per fold required");
}

std::vector<std::size_t> FoldPlan::evaluation(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment_.size(); ++i)
    if (assignment_[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::training(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment_.size(); ++i)
    if (assignment_[i] != fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::eta_training(int fold) const {
  const auto mask = eta_mask(fold);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::main_training(int fold) const {
  const auto mask = eta_mask(fold);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment_.size(); ++i)
    if (assignment_[i] != fold && !mask[i]) out.push_back(i);
  return out;
}

FoldPlan make_folds(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2 || static_cast<std::size_t>(folds) > n) {
    fail(ErrorKind::InvalidFoldCount,
         "need 2 <= J <= n, got J = " + std::to_string(folds) + ", n = " + std::to_string(n));
  }
  RandomSource rng(seed, stream_key(0x666f6c6473ull, n, static_cast<std::uint64_t>(folds)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  std::vector<int> assignment(n);
  for (std::size_t k = 0; k < n; ++k) assignment[order[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));

  std::vector<std::vector<std::uint8_t>> eta(static_cast<std::size_t>(folds), std::vector<std::uint8_t>(n, 0));
  for (int j = 0; j < folds; ++j) {
    bool flag = true;
    for (std::size_t k = 0; k < n; ++k) {
      const auto i = order[k];
      if (assignment[i] == j) continue;
      eta[static_cast<std::size_t>(j)][i] = flag ? 1 : 0;
      flag = !flag;
    }
  }
  return FoldPlan(std::move(assignment), folds, std::move(eta));
}

// ---------------------------------------------------------------------------
// Feature maps

std::array<double, 4> transform_z_to_x(std::span<const double> z) {
  require(z.size() >= 4, ErrorKind::MissingInput, "z-to-x transform needs four covariates");
  const double c = z[0] * z[2] / 25.0 + 0.6;
  const double s = z[1] + z[3] + 20.0;
  return {std::exp(z[0] / 2.0), z[1] / (1.0 + std::exp(z[0])) + 10.0, c * c * c, s * s};
}

std::size_t FeatureMap::width(std::size_t covariate_dim) const {
  std::size_t w = 1;
  if (kind == Kind::ZToX) {
    w += 4;
  } else {
    w += columns.empty() ? covariate_dim : columns.size();
  }
  if (outcome != OutcomeInput::None) ++w;
  return w;
}

std::string FeatureMap::describe() const {
  std::string d;
  if (kind == Kind::ZToX) {
    d = "z-to-x";
  } else if (columns.empty()) {
    d = "raw";
  } else {
    d = "raw[";
    for (std::size_t k = 0; k < columns.size(); ++k) d += (k ? "," : "") + std::to_string(columns[k]);
    d += "]";
  }
  if (outcome == OutcomeInput::Y0) d += "+y0";
  if (outcome == OutcomeInput::Y1) d += "+y1";
  return d;
}

void write_features(const FeatureMap& map, const ObservedSample& sample, std::optional<double> extra,
                    std::vector<double>& out) {
  out.clear();
  out.push_back(1.0);
  if (map.kind == FeatureMap::Kind::ZToX) {
    const auto x = transform_z_to_x(sample.x);
    out.insert(out.end(), x.begin(), x.end());
  } else if (map.columns.empty()) {
    out.insert(out.end(), sample.x.begin(), sample.x.end());
  } else {
    for (auto c : map.columns) {
      require(c < sample.x.size(), ErrorKind::DimensionMismatch, "feature column out of range");
      out.push_back(sample.x[c]);
    }
  }
  if (map.outcome != OutcomeInput::None) {
    if (!extra) {
      const auto& y = map.outcome == OutcomeInput::Y0 ? sample.y0 : sample.y1;
      if (!y) fail(ErrorKind::MissingInput, std::string("feature map needs ") +
                                                (map.outcome == OutcomeInput::Y0 ? "y0" : "y1") + " but it is missing");
      extra = y;
    }
    out.push_back(*extra);
  }
}

std::vector<double> apply_feature_map(const FeatureMap& map, const ObservedSample& sample, std::optional<double> extra) {
  std::vector<double> out;
  write_features(map, sample, extra, out);
  return out;
}

DesignMatrix build_design(const FeatureMap& map, const Dataset& data, std::span<const std::size_t> rows) {
  const auto width = static_cast<Eigen::Index>(map.width(data.dim()));
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), width);
  std::vector<double> buf;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    write_features(map, data[rows[k]], std::nullopt, buf);
    for (Eigen::Index j = 0; j < width; ++j) m(static_cast<Eigen::Index>(k), j) = buf[static_cast<std::size_t>(j)];
  }
  return DesignMatrix(std::move(m));
}

}  // namespace mardid
