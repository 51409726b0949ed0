#include <cmath>

#include <Eigen/Dense>

#include "discern/error.hpp"
#include "discern/stats/special.hpp"
#include "discern/stats/stats.hpp"

namespace discern::stats {

namespace {

// Relative pivot threshold below which a column counts as linearly dependent.
constexpr double kRankTolerance = 1e-10;

Coefficient make_coefficient(std::string name, double beta, double se, double df) {
  Coefficient c;
  c.name = std::move(name);
  c.beta = beta;
  c.standard_error = se;
  if (se > 0) {
    c.t = beta / se;
    c.p_two_tailed = student_t_two_tailed_p(c.t, df);
  } else {
    // exact fit
    c.t = beta == 0 ? 0.0 : std::copysign(INFINITY, beta);
    c.p_two_tailed = beta == 0 ? 1.0 : 0.0;
  }
  return c;
}

}  // namespace

RegressionResult ols_regression(std::span<const Predictor> predictors, std::span<const double> outcome,
                                bool standardized) {
  const std::size_t n = outcome.size();
  const std::size_t p = predictors.size();
  if (p == 0) throw ValidationError("ols_regression: no predictors");
  for (const auto& pred : predictors) {
    if (pred.values.size() != n)
      throw ValidationError("ols_regression: predictor '" + pred.name + "' has " + std::to_string(pred.values.size()) +
                            " values, outcome has " + std::to_string(n));
  }
  if (n <= p + 1)
    throw ValidationError("ols_regression: need more than " + std::to_string(p + 1) + " observations, got " +
                          std::to_string(n));

  const std::size_t cols = p + 1;
  Eigen::MatrixXd x(n, cols);
  Eigen::VectorXd y(n);
  x.col(0).setOnes();

  std::vector<std::string> names{"intercept"};
  for (std::size_t j = 0; j < p; ++j) {
    names.push_back(predictors[j].name);
    std::vector<double> column(predictors[j].values.begin(), predictors[j].values.end());
    if (standardized) {
      try {
        column = zscore(column);
      } catch (const DegenerateError&) {
        throw SingularDesignError("ols_regression: predictor '" + predictors[j].name +
                                  "' is constant (collinear with the intercept)");
      }
    }
    for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = column[i];
  }
  {
    std::vector<double> column(outcome.begin(), outcome.end());
    if (standardized) column = zscore(column);
    for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = column[i];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> pivoted(x);
  pivoted.setThreshold(kRankTolerance);
  if (static_cast<std::size_t>(pivoted.rank()) < cols) {
    std::string culprits;
    const auto& perm = pivoted.colsPermutation().indices();
    for (auto k = pivoted.rank(); k < static_cast<Eigen::Index>(cols); ++k) {
      if (!culprits.empty()) culprits += ", ";
      culprits += names[static_cast<std::size_t>(perm(k))];
    }
    throw SingularDesignError("ols_regression: design matrix is rank deficient; collinear column(s): " + culprits);
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(static_cast<Eigen::Index>(cols)).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(cols),
                                                                       static_cast<Eigen::Index>(cols)));
  const Eigen::MatrixXd xtx_inv = r_inv * r_inv.transpose();

  const Eigen::VectorXd residual = y - x * beta;
  const double rss = residual.squaredNorm();
  const double df = static_cast<double>(n - cols);
  const double sigma2 = rss / df;
  const double y_mean = y.mean();
  const double tss = (y.array() - y_mean).square().sum();

  RegressionResult out;
  out.n = n;
  out.df_residual = n - cols;
  out.standardized = standardized;
  out.r_squared = tss > 0 ? 1.0 - rss / tss : 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double se = std::sqrt(std::max(0.0, sigma2 * xtx_inv(jj, jj)));
    auto coef = make_coefficient(names[j], beta(jj), se, df);
    if (j == 0) out.intercept = std::move(coef);
    else out.coefficients.push_back(std::move(coef));
  }
  return out;
}

}  // namespace discern::stats
