#include "uoivar/solvers.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "uoivar/errors.hpp"

namespace uoivar {

void LassoOptions::validate() const {
  if (max_iter < 1) throw InvalidArgument("max_iter must be at least 1");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
}

LambdaPath::LambdaPath(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw InvalidArgument("lambda path is empty");
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!(values_[k] > 0.0) || !std::isfinite(values_[k])) throw InvalidArgument("lambda values must be positive");
    if (k > 0 && !(values_[k] < values_[k - 1])) throw InvalidArgument("lambda path must be strictly decreasing");
  }
}

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// Quadratic form of the per-column problem:
//   (1/N) ||y_k - X b||^2 = yy_k - 2 c_k^T b + b^T G b
// where X is either the centered lag block (free intercept) or the raw U.
class GramProblem {
 public:
  GramProblem(const RegressionForm& reg, bool penalize_intercept)
      : penalize_intercept_(penalize_intercept) {
    const double n = static_cast<double>(reg.n_rows());
    const Matrix& u = reg.u();
    const Matrix& y = reg.y();
    if (penalize_intercept_) {
      gram_ = (u.transpose() * u) / n;
      cross_ = (u.transpose() * y) / n;
    } else {
      xbar_ = u.rightCols(u.cols() - 1).colwise().mean().transpose();
      ybar_ = y.colwise().mean().transpose();
      const Matrix xc = u.rightCols(u.cols() - 1).rowwise() - xbar_.transpose();
      const Matrix yc = y.rowwise() - ybar_.transpose();
      gram_ = (xc.transpose() * xc) / n;
      cross_ = (xc.transpose() * yc) / n;
    }
    find_parallel_columns();
  }

  Index n_coords() const { return gram_.rows(); }
  const Matrix& cross() const { return cross_; }

  struct ColumnFit {
    Vector b;
    bool converged;
    int sweeps;
  };

  ColumnFit solve_column(Index k, double lambda, Vector b, const LassoOptions& opts) const {
    const Index p = n_coords();
    const double half = 0.5 * lambda;
    Vector r = cross_.col(k) - gram_ * b;  // r_j = c_j - (G b)_j; gradient is -2 r

    std::vector<unsigned char> skip = shadowed_;
    for (Index j = 0; j < p; ++j)
      if (b(j) != 0.0) skip[static_cast<std::size_t>(j)] = 0;

    std::vector<Index> active;
    std::vector<unsigned char> in_active(static_cast<std::size_t>(p), 0);
    auto refresh_active = [&] {
      for (Index j = 0; j < p; ++j) {
        if (b(j) != 0.0 && !in_active[static_cast<std::size_t>(j)]) {
          in_active[static_cast<std::size_t>(j)] = 1;
          active.push_back(j);
        }
      }
      std::sort(active.begin(), active.end());
    };

    auto update = [&](Index j) {
      const double gjj = gram_(j, j);
      if (gjj <= 0.0 || skip[static_cast<std::size_t>(j)]) return 0.0;  // constant or shadowed column
      const double z = r(j) + gjj * b(j);
      const double next = soft_threshold(z, half) / gjj;
      const double delta = next - b(j);
      if (delta != 0.0) {
        r.noalias() -= gram_.col(j) * delta;
        b(j) = next;
      }
      return std::abs(delta);
    };

#ifndef NDEBUG
    auto objective = [&] { return -2.0 * cross_.col(k).dot(b) + b.dot(gram_ * b) + lambda * b.lpNorm<1>(); };
    double last_obj = objective();
    auto check_descent = [&] {
      const double obj = objective();
      assert(obj <= last_obj + 1e-10 * (1.0 + std::abs(last_obj)));
      last_obj = obj;
    };
#else
    auto check_descent = [] {};
#endif

    int sweeps = 0;
    while (sweeps < opts.max_iter) {
      double max_delta = 0.0;
      for (Index j = 0; j < p; ++j) max_delta = std::max(max_delta, update(j));
      ++sweeps;
      check_descent();
      if (max_delta < opts.tol) {
        r = cross_.col(k) - gram_ * b;
        const Index bad = first_kkt_violation(k, b, r, lambda, opts.tol);
        if (bad < 0) return {std::move(b), true, sweeps};
        skip[static_cast<std::size_t>(bad)] = 0;
        continue;
      }
      refresh_active();
      while (sweeps < opts.max_iter) {
        double inner = 0.0;
        for (Index j : active) inner = std::max(inner, update(j));
        ++sweeps;
        check_descent();
        if (inner < opts.tol) break;
      }
    }
    return {std::move(b), false, sweeps};
  }

  Matrix assemble(const Matrix& coords) const {
    if (penalize_intercept_) return coords;
    Matrix b(coords.rows() + 1, coords.cols());
    b.bottomRows(coords.rows()) = coords;
    b.row(0) = (ybar_ - coords.transpose() * xbar_).transpose();
    return b;
  }

  Vector warm_column(const std::optional<Matrix>& warm, Index k) const {
    if (!warm) return Vector::Zero(n_coords());
    return warm->col(k).tail(n_coords());
  }

 private:
  // Index of the first coordinate violating optimality, or -1.
  Index first_kkt_violation(Index k, const Vector& b, const Vector& r, double lambda, double tol) const {
    for (Index j = 0; j < n_coords(); ++j) {
      const double g = 2.0 * r(j);
      const double viol = b(j) == 0.0 ? std::max(0.0, std::abs(g) - lambda)
                                      : std::abs(g - std::copysign(lambda, b(j)));
      const double floor = 1e3 * std::numeric_limits<double>::epsilon() *
                           (std::abs(cross_(j, k)) + gram_.row(j).cwiseAbs().dot(b.cwiseAbs()));
      if (viol > std::max(tol, floor)) return j;
    }
    return -1;
  }

  // Coordinate descent only shifts weight between exactly parallel columns in
  // steps proportional to lambda. The optimum puts all of it on the longest
  // column of each parallel group, so the others start out frozen at zero.
  void find_parallel_columns() {
    const Index p = n_coords();
    shadowed_.assign(static_cast<std::size_t>(p), 0);
    for (Index j = 0; j < p; ++j) {
      if (gram_(j, j) <= 0.0) continue;
      for (Index i = 0; i < p; ++i) {
        if (i == j || gram_(i, i) <= 0.0) continue;
        const double prod = gram_(i, i) * gram_(j, j);
        const bool parallel = gram_(i, j) * gram_(i, j) >= (1.0 - 1e-12) * prod;
        const bool longer = gram_(i, i) > gram_(j, j) || (gram_(i, i) == gram_(j, j) && i < j);
        if (parallel && longer) {
          shadowed_[static_cast<std::size_t>(j)] = 1;
          break;
        }
      }
    }
  }

  bool penalize_intercept_;
  Matrix gram_;
  Matrix cross_;
  Vector xbar_;
  Vector ybar_;
  std::vector<unsigned char> shadowed_;
};

void check_warm_start(const RegressionForm& reg, const LassoOptions& opts) {
  if (opts.warm_start && (opts.warm_start->rows() != reg.coef_rows() || opts.warm_start->cols() != reg.m())) {
    throw InvalidArgument("warm start has the wrong shape");
  }
}

}  // namespace

std::vector<LassoFit> lasso_path_fit(const RegressionForm& reg, const LambdaPath& path, const LassoOptions& opts) {
  opts.validate();
  check_warm_start(reg, opts);
  const GramProblem problem(reg, opts.penalize_intercept);
  const Index p = problem.n_coords();
  const std::size_t k_len = path.size();

  std::vector<Matrix> coords(k_len, Matrix(p, reg.m()));
  std::vector<LassoFit> fits(k_len);
  for (Index col = 0; col < reg.m(); ++col) {
    Vector b = problem.warm_column(opts.warm_start, col);
    for (std::size_t k = 0; k < k_len; ++k) {
      auto fit = problem.solve_column(col, path[k], std::move(b), opts);
      coords[k].col(col) = fit.b;
      fits[k].converged = fits[k].converged && fit.converged;
      fits[k].sweeps = std::max(fits[k].sweeps, fit.sweeps);
      b = std::move(fit.b);
    }
  }
  for (std::size_t k = 0; k < k_len; ++k) fits[k].coef = problem.assemble(coords[k]);
  return fits;
}

LassoFit lasso_fit(const RegressionForm& reg, double lambda, const LassoOptions& opts) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be non-negative");
  opts.validate();
  check_warm_start(reg, opts);
  const GramProblem problem(reg, opts.penalize_intercept);
  Matrix coords(problem.n_coords(), reg.m());
  LassoFit out;
  for (Index col = 0; col < reg.m(); ++col) {
    auto fit = problem.solve_column(col, lambda, problem.warm_column(opts.warm_start, col), opts);
    coords.col(col) = fit.b;
    out.converged = out.converged && fit.converged;
    out.sweeps = std::max(out.sweeps, fit.sweeps);
  }
  out.coef = problem.assemble(coords);
  return out;
}

double lambda_max(const RegressionForm& reg, bool penalize_intercept) {
  const GramProblem problem(reg, penalize_intercept);
  return 2.0 * problem.cross().cwiseAbs().maxCoeff();
}

LambdaPath lambda_path(const RegressionForm& reg, int k, double min_ratio, bool penalize_intercept) {
  if (k < 2) throw InvalidArgument("lambda path needs at least 2 values");
  if (!(min_ratio > 0.0 && min_ratio < 1.0)) throw InvalidArgument("min_ratio must lie in (0, 1)");
  const double top = lambda_max(reg, penalize_intercept);
  if (!(top > 0.0)) throw DataError("response has no variation to penalize (lambda_max = 0)");
  std::vector<double> values(static_cast<std::size_t>(k));
  const double log_ratio = std::log(min_ratio);
  for (int i = 0; i < k; ++i) values[static_cast<std::size_t>(i)] = top * std::exp(log_ratio * i / (k - 1));
  values.front() = top;
  values.back() = top * min_ratio;
  return LambdaPath(std::move(values));
}

double lasso_objective(const RegressionForm& reg, const Matrix& b, double lambda, bool penalize_intercept) {
  const double n = static_cast<double>(reg.n_rows());
  const double rss = (reg.y() - reg.u() * b).squaredNorm();
  const Index first = penalize_intercept ? 0 : 1;
  return rss / n + lambda * b.bottomRows(b.rows() - first).lpNorm<1>();
}

double kkt_violation(const RegressionForm& reg, const Matrix& b, double lambda, bool penalize_intercept) {
  const double n = static_cast<double>(reg.n_rows());
  const Matrix grad = (2.0 / n) * (reg.u().transpose() * (reg.y() - reg.u() * b));
  double worst = 0.0;
  for (Index j = 0; j < b.cols(); ++j) {
    for (Index i = 0; i < b.rows(); ++i) {
      const double g = grad(i, j);
      double viol;
      if (i == 0 && !penalize_intercept) viol = std::abs(g);
      else if (b(i, j) == 0.0) viol = std::max(0.0, std::abs(g) - lambda);
      else viol = std::abs(g - std::copysign(lambda, b(i, j)));
      worst = std::max(worst, viol);
    }
  }
  return worst;
}

Matrix ols_full(const RegressionForm& reg) {
  Eigen::ColPivHouseholderQR<Matrix> qr(reg.u());
  if (qr.rank() < reg.u().cols()) {
    const auto diag = qr.matrixR().diagonal().cwiseAbs();
    const double smallest = diag(diag.size() - 1);
    const double cond = smallest > 0.0 ? diag(0) / smallest : std::numeric_limits<double>::infinity();
    throw SingularDesign("design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                             std::to_string(reg.u().cols()) + ")",
                         cond);
  }
  return qr.solve(reg.y());
}

RestrictedFit ols_restricted(const RegressionForm& reg, const Support& support) {
  if (support.rows() != reg.coef_rows() || support.cols() != reg.m()) {
    throw InvalidArgument("support shape does not match the regression");
  }
  RestrictedFit out{Matrix::Zero(reg.coef_rows(), reg.m()), 0};
  const Matrix& u = reg.u();
  std::vector<Index> cols;
  for (Index j = 0; j < reg.m(); ++j) {
    cols.assign(1, 0);
    for (Index i = 1; i < reg.coef_rows(); ++i)
      if (support.contains(i, j)) cols.push_back(i);
    Matrix sub(u.rows(), static_cast<Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Index>(c)) = u.col(cols[c]);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(sub);
    if (cod.rank() < sub.cols()) ++out.rank_deficient_columns;
    const Vector sol = cod.solve(reg.y().col(j));
    for (std::size_t c = 0; c < cols.size(); ++c) out.coef(cols[c], j) = sol(static_cast<Index>(c));
  }
  return out;
}

Matrix estimate_sigma(const RegressionForm& reg, const Matrix& b) {
  if (b.rows() != reg.coef_rows() || b.cols() != reg.m()) throw InvalidArgument("coefficient shape mismatch");
  const Matrix resid = reg.y() - reg.u() * b;
  const double denom = static_cast<double>(std::max<Index>(reg.n_rows() - 1, 1));
  Matrix s = (resid.transpose() * resid) / denom;
  return (0.5 * (s + s.transpose())).eval();
}

std::vector<std::vector<Index>> contiguous_folds(Index n_rows, int n_folds) {
  if (n_folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
  if (n_rows < n_folds) throw InsufficientData("fewer rows than cross-validation folds");
  std::vector<std::vector<Index>> folds(static_cast<std::size_t>(n_folds));
  for (int v = 0; v < n_folds; ++v) {
    const Index lo = v * n_rows / n_folds, hi = (v + 1) * n_rows / n_folds;
    for (Index r = lo; r < hi; ++r) folds[static_cast<std::size_t>(v)].push_back(r);
  }
  return folds;
}

CvFit lasso_cv(const RegressionForm& reg, const LambdaPath& path, int n_folds, const LassoOptions& opts) {
  const auto folds = contiguous_folds(reg.n_rows(), n_folds);
  std::vector<double> sse(path.size(), 0.0);
  for (const auto& fold : folds) {
    std::vector<Index> train;
    std::vector<unsigned char> held(static_cast<std::size_t>(reg.n_rows()), 0);
    for (Index r : fold) held[static_cast<std::size_t>(r)] = 1;
    for (Index r = 0; r < reg.n_rows(); ++r)
      if (!held[static_cast<std::size_t>(r)]) train.push_back(r);
    const RegressionForm train_reg = reg.select_rows(train);
    const RegressionForm test_reg = reg.select_rows(fold);
    LassoOptions cold = opts;
    cold.warm_start.reset();
    const auto fits = lasso_path_fit(train_reg, path, cold);
    for (std::size_t k = 0; k < path.size(); ++k)
      sse[k] += (test_reg.y() - test_reg.u() * fits[k].coef).squaredNorm();
  }
  CvFit out;
  const double denom = static_cast<double>(reg.n_rows() * reg.m());
  for (double s : sse) out.cv_error.push_back(s / denom);
  for (std::size_t k = 1; k < out.cv_error.size(); ++k)
    if (out.cv_error[k] < out.cv_error[out.chosen_index]) out.chosen_index = k;

  std::vector<double> prefix(path.values().begin(), path.values().begin() + static_cast<long>(out.chosen_index) + 1);
  auto fits = lasso_path_fit(reg, LambdaPath(std::move(prefix)), opts);
  out.coef = std::move(fits.back().coef);
  return out;
}

}  // namespace uoivar
