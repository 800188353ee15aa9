#pragma once

#include <optional>
#include <vector>

#include "uoivar/varcore.hpp"

namespace uoivar {

struct LassoOptions {
  int max_iter = 10000;  // coordinate-descent sweeps per column
  double tol = 1e-7;     // largest coordinate update that counts as converged
  bool penalize_intercept = false;
  std::optional<Matrix> warm_start;

  void validate() const;
};

/// Strictly decreasing positive regularization strengths.
class LambdaPath {
 public:
  LambdaPath() = default;
  explicit LambdaPath(std::vector<double> values);

  const std::vector<double>& values() const& noexcept { return values_; }
  std::vector<double> values() && { return std::move(values_); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double operator[](std::size_t k) const { return values_[k]; }

 private:
  std::vector<double> values_;
};

struct LassoFit {
  Matrix coef;  // (DM+1) x M
  bool converged = true;
  int sweeps = 0;
};

/// Minimizes (1/N) ||Y - U B||_F^2 + lambda ||vec B||_1 by cyclic coordinate
/// descent, one response column at a time. The intercept row is excluded
/// from the penalty unless opts.penalize_intercept.
LassoFit lasso_fit(const RegressionForm& reg, double lambda, const LassoOptions& opts = {});

/// Solves the whole path, warm-starting each lambda from the previous solution.
std::vector<LassoFit> lasso_path_fit(const RegressionForm& reg, const LambdaPath& path,
                                     const LassoOptions& opts = {});

/// Smallest lambda with an empty penalized support.
double lambda_max(const RegressionForm& reg, bool penalize_intercept = false);

/// K log-spaced values from lambda_max down to lambda_max * min_ratio.
LambdaPath lambda_path(const RegressionForm& reg, int k, double min_ratio = 1e-3,
                       bool penalize_intercept = false);

double lasso_objective(const RegressionForm& reg, const Matrix& b, double lambda,
                       bool penalize_intercept = false);

/// Largest violation of the LASSO optimality conditions, measured on the
/// gradient g_ij = (2/N) u_i^T (y_j - U b_j).
double kkt_violation(const RegressionForm& reg, const Matrix& b, double lambda,
                     bool penalize_intercept = false);

/// Unrestricted least squares. Throws SingularDesign if U is rank deficient.
Matrix ols_full(const RegressionForm& reg);

struct RestrictedFit {
  Matrix coef;
  /// Columns whose restricted design was rank deficient (minimum-norm solution used).
  int rank_deficient_columns = 0;
};

/// Least squares with B constrained to zero outside support (intercepts always free).
RestrictedFit ols_restricted(const RegressionForm& reg, const Support& support);

/// Residual covariance (Y - U B)^T (Y - U B) / (N - 1), exactly symmetric.
Matrix estimate_sigma(const RegressionForm& reg, const Matrix& b);

/// Contiguous row folds: fold v holds rows [v N / V, (v + 1) N / V).
std::vector<std::vector<Index>> contiguous_folds(Index n_rows, int n_folds);

struct CvFit {
  Matrix coef;
  std::size_t chosen_index = 0;
  std::vector<double> cv_error;  // mean held-out MSE per lambda
};

/// LASSO with the penalty chosen by V-fold cross-validation over contiguous
/// row blocks; ties go to the larger lambda. Refits on all rows.
CvFit lasso_cv(const RegressionForm& reg, const LambdaPath& path, int n_folds = 5,
               const LassoOptions& opts = {});

}  // namespace uoivar
