#include "mardid/numerics.hpp"

#include "mardid/error.hpp"

#include <algorithm>
#include <cmath>

namespace mardid {

namespace {

constexpr double kRankTolerance = 1e-10;

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) fail(ErrorKind::InvalidArgument, std::string(what) + " contains non-finite values");
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - softplus(eta[i]);
  return ll;
}

Eigen::VectorXd solve_qr(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < a.cols()) {
    fail(ErrorKind::RankDeficient, "design has rank " + std::to_string(qr.rank()) + " < " +
                                       std::to_string(a.cols()) + " columns");
  }
  return qr.solve(b);
}

}  // namespace

DesignMatrix::DesignMatrix(Eigen::MatrixXd values, std::vector<std::string> column_names)
    : values_(std::move(values)), names_(std::move(column_names)) {
  require(values_.cols() >= 1, ErrorKind::DimensionMismatch, "design needs at least one column");
  require(names_.empty() || static_cast<Eigen::Index>(names_.size()) == values_.cols(),
          ErrorKind::DimensionMismatch, "column name count does not match design width");
  check_finite(values_, "design");
}

DesignMatrix DesignMatrix::from_rows(const std::vector<std::vector<double>>& rows,
                                     std::vector<std::string> column_names) {
  require(!rows.empty(), ErrorKind::DimensionMismatch, "design needs at least one row");
  const auto p = rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == p, ErrorKind::DimensionMismatch, "ragged design rows");
    for (std::size_t j = 0; j < p; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return DesignMatrix(std::move(m), std::move(column_names));
}

double logistic(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

LinearModel solve_least_squares(const DesignMatrix& design, const Eigen::VectorXd& response,
                                const std::optional<Eigen::VectorXd>& weights) {
  const auto n = design.rows();
  require(response.size() == n, ErrorKind::DimensionMismatch, "response length differs from design rows");
  check_finite(response, "response");
  Eigen::MatrixXd a = design.values();
  Eigen::VectorXd b = response;
  if (weights) {
    require(weights->size() == n, ErrorKind::DimensionMismatch, "weight length differs from design rows");
    require((weights->array() >= 0.0).all() && weights->allFinite(), ErrorKind::InvalidArgument,
            "weights must be finite and nonnegative");
    require(weights->sum() > 0.0, ErrorKind::InvalidArgument, "weights are all zero");
    const Eigen::ArrayXd root = weights->array().sqrt();
    a.array().colwise() *= root;
    b.array() *= root;
  }
  if (n < design.cols()) fail(ErrorKind::RankDeficient, "fewer rows than columns");

  LinearModel model;
  model.link = Link::Identity;
  model.coefficients = solve_qr(a, b);
  return model;
}

LinearModel fit_logistic(const DesignMatrix& design, const Eigen::VectorXd& labels,
                         const LogisticOptions& options) {
  const auto n = design.rows();
  const auto p = design.cols();
  require(labels.size() == n, ErrorKind::DimensionMismatch, "label length differs from design rows");
  require(options.max_iter >= 1, ErrorKind::InvalidArgument, "max_iter must be >= 1");
  require(options.tol > 0.0, ErrorKind::InvalidArgument, "tol must be positive");
  for (Eigen::Index i = 0; i < n; ++i) {
    require(labels[i] == 0.0 || labels[i] == 1.0, ErrorKind::InvalidArgument, "labels must be 0 or 1");
  }
  if (n < p) fail(ErrorKind::RankDeficient, "fewer rows than columns");
  const double positives = labels.sum();
  const bool both_classes = positives > 0.0 && positives < static_cast<double>(n);

  const Eigen::MatrixXd& x = design.values();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double ll = log_likelihood(eta, labels);

  auto mean_score = [&](const Eigen::VectorXd& lin) {
    Eigen::VectorXd resid(n);
    for (Eigen::Index i = 0; i < n; ++i) resid[i] = labels[i] - logistic(lin[i]);
    return Eigen::VectorXd(x.transpose() * resid / static_cast<double>(n));
  };

  LinearModel model;
  model.link = Link::Logit;
  model.converged = false;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    const Eigen::VectorXd score = mean_score(eta);
    if (score.lpNorm<Eigen::Infinity>() <= options.tol) {
      model.converged = both_classes;
      break;
    }
    // Working response / weights of the Newton step.
    Eigen::VectorXd w(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pi = logistic(eta[i]);
      w[i] = std::max(pi * (1.0 - pi), options.prob_floor);
      z[i] = eta[i] + (labels[i] - pi) / w[i];
    }
    const Eigen::ArrayXd root = w.array().sqrt();
    Eigen::MatrixXd a = x;
    a.array().colwise() *= root;
    const Eigen::VectorXd target = (z.array() * root).matrix();
    const Eigen::VectorXd proposal = solve_qr(a, target);

    // Step halving keeps the likelihood monotone.
    Eigen::VectorXd step = proposal - beta;
    Eigen::VectorXd next_beta = proposal;
    Eigen::VectorXd next_eta = x * next_beta;
    double next_ll = log_likelihood(next_eta, labels);
    for (int halving = 0; halving < 30 && !(next_ll >= ll - 1e-12 * std::abs(ll)); ++halving) {
      step *= 0.5;
      next_beta = beta + step;
      next_eta = x * next_beta;
      next_ll = log_likelihood(next_eta, labels);
    }
    if (step.lpNorm<Eigen::Infinity>() <= 1e-15 * (1.0 + beta.lpNorm<Eigen::Infinity>())) {
      beta = next_beta;
      eta = next_eta;
      ++iter;
      break;
    }
    beta = std::move(next_beta);
    eta = std::move(next_eta);
    ll = next_ll;
  }
  const Eigen::VectorXd final_score = mean_score(eta);
  model.score_norm = final_score.lpNorm<Eigen::Infinity>();
  if (model.score_norm <= options.tol && both_classes) model.converged = true;
  // A fit that reproduces every label has separated the classes: the score
  // vanishes only because the coefficients have run off to infinity.
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) worst = std::max(worst, std::abs(labels[i] - logistic(eta[i])));
  if (worst < 1e-6) model.converged = false;
  model.iterations = iter;
  model.coefficients = std::move(beta);
  return model;
}

Eigen::VectorXd predict(const LinearModel& model, const DesignMatrix& design) {
  require(design.cols() == model.coefficients.size(), ErrorKind::DimensionMismatch,
          "design width " + std::to_string(design.cols()) + " != coefficient count " +
              std::to_string(model.coefficients.size()));
  Eigen::VectorXd lin = design.values() * model.coefficients;
  if (model.link == Link::Logit) lin = lin.unaryExpr([](double v) { return logistic(v); });
  return lin;
}

double predict_row(const LinearModel& model, std::span<const double> row) {
  require(static_cast<Eigen::Index>(row.size()) == model.coefficients.size(), ErrorKind::DimensionMismatch,
          "feature length differs from coefficient count");
  double lin = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) lin += row[j] * model.coefficients[static_cast<Eigen::Index>(j)];
  return model.link == Link::Logit ? logistic(lin) : lin;
}

}  // namespace mardid
