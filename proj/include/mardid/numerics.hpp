#pragma once

// Dense fitting kernel: weighted least squares and logistic regression (IRLS).

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mardid {

/// Row-indexed design matrix with optional column labels. Values must be finite.
class DesignMatrix {
 public:
  DesignMatrix() = default;
  explicit DesignMatrix(Eigen::MatrixXd values, std::vector<std::string> column_names = {});

  static DesignMatrix from_rows(const std::vector<std::vector<double>>& rows,
                                std::vector<std::string> column_names = {});

  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const std::vector<std::string>& column_names() const noexcept { return names_; }

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> names_;
};

enum class Link { Identity, Logit };

struct LinearModel {
  Eigen::VectorXd coefficients;
  Link link = Link::Identity;
  // Logistic fits only: whether the score fell below tolerance, and the
  // last iterate's score norm. Least-squares fits are always converged.
  bool converged = true;
  int iterations = 0;
  double score_norm = 0.0;
};

/// Minimizes sum_i w_i (y_i - x_i'b)^2 with a column-pivoted QR. Throws
/// RankDeficient when the weighted design loses rank at relative tolerance
/// 1e-10, DimensionMismatch on length errors.
LinearModel solve_least_squares(const DesignMatrix& design, const Eigen::VectorXd& response,
                                const std::optional<Eigen::VectorXd>& weights = std::nullopt);

struct LogisticOptions {
  int max_iter = 100;
  double tol = 1e-8;          // on the infinity norm of the mean score X'(y - p)/n
  double prob_floor = 1e-10;  // lower bound on p(1-p) in the working weights
};

/// Bernoulli maximum likelihood under the logit link. Never throws on
/// separation or non-convergence: the last iterate is returned with
/// converged = false.
LinearModel fit_logistic(const DesignMatrix& design, const Eigen::VectorXd& labels,
                         const LogisticOptions& options = {});

Eigen::VectorXd predict(const LinearModel& model, const DesignMatrix& design);

/// Single-row prediction used on hot evaluation paths.
double predict_row(const LinearModel& model, std::span<const double> row);

double logistic(double eta);
double logit(double p);

}  // namespace mardid
