#include "uoivar/varcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uoivar/errors.hpp"

namespace uoivar {

namespace {

constexpr double kStabilityMargin = 1e-9;

bool all_finite(const Matrix& x) { return x.allFinite(); }

}  // namespace

// ---------------------------------------------------------------------------
// VarParams

VarParams::VarParams(Vector nu, std::vector<Matrix> a, Matrix sigma)
    : nu_(std::move(nu)), a_(std::move(a)), sigma_(std::move(sigma)) {
  const Index m = nu_.size();
  if (m < 1) throw InvalidArgument("VAR dimension must be at least 1");
  if (a_.empty()) throw InvalidArgument("VAR order must be at least 1");
  for (std::size_t d = 0; d < a_.size(); ++d) {
    if (a_[d].rows() != m || a_[d].cols() != m) {
      throw InvalidArgument("transition matrix A_" + std::to_string(d + 1) + " is not " +
                            std::to_string(m) + "x" + std::to_string(m));
    }
    if (!all_finite(a_[d])) throw InvalidArgument("non-finite entry in A_" + std::to_string(d + 1));
  }
  if (!nu_.allFinite()) throw InvalidArgument("non-finite intercept");
  if (sigma_.rows() != m || sigma_.cols() != m) throw InvalidArgument("sigma has the wrong shape");
  if (!all_finite(sigma_)) throw InvalidArgument("non-finite entry in sigma");
  const double scale = std::max(1.0, sigma_.cwiseAbs().maxCoeff());
  if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidArgument("sigma is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma_, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  // relative tolerance: tiny isotropic noise (sigma = 1e-12 I) is still valid
  if (!(hi > 0.0) || lo <= 1e-10 * hi) throw InvalidArgument("sigma is not positive definite");
}

Matrix VarParams::coefficients() const {
  const Index m = this->m();
  Matrix b(d() * m + 1, m);
  b.row(0) = nu_.transpose();
  for (int d = 0; d < this->d(); ++d) b.middleRows(1 + d * m, m) = a_[d].transpose();
  return b;
}

VarParams VarParams::from_coefficients(const Matrix& b, int d, Matrix sigma) {
  const Index m = b.cols();
  if (d < 1 || b.rows() != d * m + 1) throw InvalidArgument("coefficient matrix is not (DM+1) x M");
  std::vector<Matrix> a;
  for (int k = 0; k < d; ++k) a.push_back(b.middleRows(1 + k * m, m).transpose());
  return VarParams(b.row(0).transpose(), std::move(a), std::move(sigma));
}

// ---------------------------------------------------------------------------
// TimeSeries

TimeSeries::TimeSeries(Matrix data, std::vector<std::string> labels)
    : data_(std::move(data)), labels_(std::move(labels)) {
  if (data_.cols() < 1) throw DataError("time series has no columns");
  if (!data_.allFinite()) throw DataError("time series contains non-finite values");
  if (labels_.empty()) {
    for (Index j = 0; j < data_.cols(); ++j) labels_.push_back("x" + std::to_string(j + 1));
  } else if (static_cast<Index>(labels_.size()) != data_.cols()) {
    throw DataError("label count does not match column count");
  }
}

// ---------------------------------------------------------------------------
// RegressionForm

RegressionForm::RegressionForm(Matrix y, Matrix u, int d) : y_(std::move(y)), u_(std::move(u)), d_(d) {
  if (d_ < 1) throw InvalidArgument("lag order must be at least 1");
  if (y_.rows() < 1 || y_.rows() != u_.rows()) throw InvalidArgument("y and u row counts differ");
  if (u_.cols() != d_ * y_.cols() + 1) throw InvalidArgument("u must have D*M + 1 columns");
  if ((u_.col(0).array() != 1.0).any()) throw InvalidArgument("first column of u must be all ones");
  if (!y_.allFinite() || !u_.allFinite()) throw DataError("regression data contains non-finite values");
}

RegressionForm RegressionForm::select_rows(const std::vector<Index>& rows) const {
  Matrix y(static_cast<Index>(rows.size()), y_.cols());
  Matrix u(static_cast<Index>(rows.size()), u_.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    y.row(static_cast<Index>(r)) = y_.row(rows[r]);
    u.row(static_cast<Index>(r)) = u_.row(rows[r]);
  }
  return RegressionForm(std::move(y), std::move(u), d_);
}

// ---------------------------------------------------------------------------
// Support

Support::Support(Index rows, Index cols)
    : rows_(rows), cols_(cols), mask_(static_cast<std::size_t>(rows * cols), 0) {
  if (rows < 1 || cols < 1) throw InvalidArgument("support dimensions must be positive");
}

Support Support::intercepts(Index rows, Index cols) {
  Support s(rows, cols);
  for (Index j = 0; j < cols; ++j) s.insert(0, j);
  return s;
}

Support Support::full(Index rows, Index cols) {
  Support s(rows, cols);
  std::fill(s.mask_.begin(), s.mask_.end(), 1);
  return s;
}

Support Support::of(const Matrix& b, double tol) {
  Support s(b.rows(), b.cols());
  for (Index j = 0; j < b.cols(); ++j)
    for (Index i = 0; i < b.rows(); ++i)
      if (std::abs(b(i, j)) > tol) s.insert(i, j);
  return s;
}

void Support::check(Index i, Index j) const {
  if (i < 0 || i >= rows_ || j < 0 || j >= cols_) throw InvalidArgument("support index out of range");
}

bool Support::contains(Index i, Index j) const {
  check(i, j);
  return mask_[static_cast<std::size_t>(j * rows_ + i)] != 0;
}

void Support::insert(Index i, Index j) {
  check(i, j);
  mask_[static_cast<std::size_t>(j * rows_ + i)] = 1;
}

void Support::erase(Index i, Index j) {
  check(i, j);
  mask_[static_cast<std::size_t>(j * rows_ + i)] = 0;
}

Index Support::size() const { return std::count(mask_.begin(), mask_.end(), 1); }

Index Support::penalized_size() const {
  Index n = 0;
  for (Index j = 0; j < cols_; ++j)
    for (Index i = 1; i < rows_; ++i) n += mask_[static_cast<std::size_t>(j * rows_ + i)];
  return n;
}

Support Support::with_intercepts() const {
  Support s = *this;
  for (Index j = 0; j < cols_; ++j) s.insert(0, j);
  return s;
}

Support Support::penalized_part() const {
  Support s = *this;
  for (Index j = 0; j < cols_; ++j) s.erase(0, j);
  return s;
}

bool Support::is_subset_of(const Support& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) return false;
  for (std::size_t k = 0; k < mask_.size(); ++k)
    if (mask_[k] && !other.mask_[k]) return false;
  return true;
}

std::vector<std::pair<Index, Index>> Support::entries() const {
  std::vector<std::pair<Index, Index>> out;
  for (Index i = 0; i < rows_; ++i)
    for (Index j = 0; j < cols_; ++j)
      if (mask_[static_cast<std::size_t>(j * rows_ + i)]) out.emplace_back(i, j);
  return out;
}

Support intersect(const Support& a, const Support& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("support shapes differ");
  Support s(a.rows(), a.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (a.contains(i, j) && b.contains(i, j)) s.insert(i, j);
  return s;
}

Support unite(const Support& a, const Support& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("support shapes differ");
  Support s = a;
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (b.contains(i, j)) s.insert(i, j);
  return s;
}

// ---------------------------------------------------------------------------
// Stability

Matrix companion_matrix(const std::vector<Matrix>& a) {
  if (a.empty()) throw InvalidArgument("VAR order must be at least 1");
  const Index m = a.front().rows();
  const Index d = static_cast<Index>(a.size());
  Matrix c = Matrix::Zero(d * m, d * m);
  for (Index k = 0; k < d; ++k) {
    if (a[k].rows() != m || a[k].cols() != m) throw InvalidArgument("transition matrices differ in shape");
    c.block(0, k * m, m, m) = a[k];
  }
  if (d > 1) c.bottomLeftCorner((d - 1) * m, (d - 1) * m).setIdentity();
  return c;
}

double spectral_radius(const std::vector<Matrix>& a) {
  const Matrix c = companion_matrix(a);
  Eigen::EigenSolver<Matrix> eig(c, false);
  if (eig.info() != Eigen::Success) throw NumericalError("eigenvalue computation failed");
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

StabilityReport check_stability(const VarParams& params) {
  const double rho = spectral_radius(params.a());
  return {rho < 1.0 - kStabilityMargin, rho};
}

Vector stationary_mean(const VarParams& params) {
  Matrix lhs = Matrix::Identity(params.m(), params.m());
  for (const auto& ad : params.a()) lhs -= ad;
  return lhs.partialPivLu().solve(params.nu());
}

int default_burn_in(const VarParams& params) {
  const auto report = check_stability(params);
  if (!report.stable) throw InvalidArgument("cannot choose a burn-in for an unstable process");
  return 10 * params.d() * static_cast<int>(std::ceil(1.0 / (1.0 - report.spectral_radius)));
}

// ---------------------------------------------------------------------------
// Simulation

TimeSeries simulate(const VarParams& params, Index t_len, int burn_in, RngStream& stream) {
  if (t_len < 1) throw InvalidArgument("series length must be at least 1");
  if (burn_in < 0) throw InvalidArgument("burn-in must be non-negative");
  if (!check_stability(params).stable) throw InvalidArgument("refusing to simulate an unstable VAR process");
  Eigen::LLT<Matrix> llt(params.sigma());
  if (llt.info() != Eigen::Success) throw NumericalError("Cholesky factorization of sigma failed");
  const Matrix chol = llt.matrixL();

  const Index m = params.m();
  const int d = params.d();
  const Vector mean = stationary_mean(params);
  // history[0] is the most recent observation
  std::vector<Vector> history(static_cast<std::size_t>(d), mean);

  const Index total = burn_in + t_len + 1;
  Matrix out(t_len + 1, m);
  Vector z(m);
  for (Index t = 0; t < total; ++t) {
    for (Index i = 0; i < m; ++i) z(i) = stream.normal();
    Vector x = params.nu() + chol * z;
    for (int k = 0; k < d; ++k) x.noalias() += params.a()[k] * history[k];
    std::rotate(history.rbegin(), history.rbegin() + 1, history.rend());
    history[0] = x;
    if (t >= burn_in) out.row(t - burn_in) = x.transpose();
  }
  return TimeSeries(std::move(out));
}

// ---------------------------------------------------------------------------
// Regression form

RegressionForm build_regression(const TimeSeries& series, int d) {
  if (d < 1) throw InvalidArgument("lag order must be at least 1");
  const Index t_last = series.rows() - 1;  // T
  if (t_last < d) {
    throw InsufficientData("series with " + std::to_string(series.rows()) + " rows is too short for lag " +
                           std::to_string(d));
  }
  const Index m = series.dim();
  const Index n = t_last - d + 1;
  const Matrix& x = series.data();
  Matrix y(n, m);
  Matrix u(n, d * m + 1);
  for (Index r = 0; r < n; ++r) {
    const Index t = t_last - r;
    y.row(r) = x.row(t);
    u(r, 0) = 1.0;
    for (int k = 1; k <= d; ++k) u.block(r, 1 + (k - 1) * m, 1, m) = x.row(t - k);
  }
  return RegressionForm(std::move(y), std::move(u), d);
}

// ---------------------------------------------------------------------------
// Random sparse processes

Matrix block_diag_sigma(Index m, const BlockDiagSpec& spec) {
  if (spec.block_size < 1) throw InvalidArgument("sigma block size must be at least 1");
  Matrix sigma = Matrix::Zero(m, m);
  for (Index start = 0; start < m; start += spec.block_size) {
    const Index len = std::min(spec.block_size, m - start);
    sigma.block(start, start, len, len).setConstant(spec.offdiag_value);
    for (Index i = 0; i < len; ++i) sigma(start + i, start + i) = spec.diag_value;
  }
  return sigma;
}

Index sparse_nonzero_count(const SparseVarSpec& spec) {
  const Index total = static_cast<Index>(spec.d) * spec.m * spec.m;
  if (spec.nonzeros) {
    if (*spec.nonzeros < 0 || *spec.nonzeros > total) throw InvalidArgument("nonzero count out of range");
    return *spec.nonzeros;
  }
  if (!(spec.sparsity >= 0.0 && spec.sparsity <= 1.0)) throw InvalidArgument("sparsity must lie in [0, 1]");
  // guard against (1 - 0.95) * 400 = 20.000000000000018
  return static_cast<Index>(std::ceil((1.0 - spec.sparsity) * static_cast<double>(total) - 1e-9));
}

namespace {

double draw_magnitude(MagnitudeDist dist, RngStream& stream) {
  switch (dist) {
    case MagnitudeDist::exp_away_from_zero: {
      // density proportional to exp(kappa |v|) on [0.1, 1], random sign
      constexpr double kappa = 3.0, lo = 0.1, hi = 1.0;
      const double ea = std::exp(kappa * lo), eb = std::exp(kappa * hi);
      const double v = std::log(ea + stream.uniform() * (eb - ea)) / kappa;
      return stream.uniform() < 0.5 ? -v : v;
    }
    case MagnitudeDist::laplace0: {
      const double u = stream.uniform() - 0.5;
      const double v = -std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
      return v;
    }
    case MagnitudeDist::uniform_pm1:
      return 2.0 * stream.uniform() - 1.0;
  }
  throw InvalidArgument("unknown magnitude distribution");
}

std::vector<Matrix> scaled(const std::vector<Matrix>& a, double c) {
  std::vector<Matrix> out;
  out.reserve(a.size());
  for (const auto& m : a) out.push_back(c * m);
  return out;
}

// Common factor c with rho(c A) = target, or nullopt if no such factor is found.
std::optional<double> rescale_factor(const std::vector<Matrix>& a, double target) {
  double max_abs = 0.0;
  for (const auto& m : a) max_abs = std::max(max_abs, m.cwiseAbs().maxCoeff());
  if (max_abs == 0.0) return std::nullopt;
  if (spectral_radius(a) <= 1e-6 * max_abs) return std::nullopt;  // nilpotent

  double lo = 0.0, hi = 1.0;
  int doublings = 0;
  while (spectral_radius(scaled(a, hi)) < target) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 60) return std::nullopt;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (spectral_radius(scaled(a, mid)) < target) lo = mid;
    else hi = mid;
  }
  const double c = 0.5 * (lo + hi);
  if (std::abs(spectral_radius(scaled(a, c)) - target) > 1e-6) return std::nullopt;
  return c;
}

}  // namespace

SparseVarDraw random_sparse_var(const SparseVarSpec& spec, RngStream& stream) {
  if (spec.m < 1 || spec.d < 1) throw InvalidArgument("dimension and order must be at least 1");
  if (!(spec.target_rho > 0.0 && spec.target_rho < 1.0)) throw InvalidArgument("target_rho must lie in (0, 1)");
  const Index m = spec.m;
  const Index per_lag = m * m;
  const Index total = per_lag * spec.d;
  const Index count = sparse_nonzero_count(spec);
  Matrix sigma = block_diag_sigma(m, spec.sigma);

  if (count == 0) {
    std::vector<Matrix> a(static_cast<std::size_t>(spec.d), Matrix::Zero(m, m));
    return {VarParams(Vector::Zero(m), std::move(a), std::move(sigma)), true};
  }

  constexpr int kAttempts = 10;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    // partial Fisher-Yates over flat positions
    std::vector<Index> pos(static_cast<std::size_t>(total));
    std::iota(pos.begin(), pos.end(), Index{0});
    for (Index k = 0; k < count; ++k) {
      const auto pick = k + static_cast<Index>(stream.uniform_index(static_cast<std::size_t>(total - k - 1)));
      std::swap(pos[static_cast<std::size_t>(k)], pos[static_cast<std::size_t>(pick)]);
    }
    std::vector<Matrix> a(static_cast<std::size_t>(spec.d), Matrix::Zero(m, m));
    for (Index k = 0; k < count; ++k) {
      const Index p = pos[static_cast<std::size_t>(k)];
      const Index lag = p / per_lag, within = p % per_lag;
      a[static_cast<std::size_t>(lag)](within / m, within % m) = draw_magnitude(spec.magnitude, stream);
    }
    const auto c = rescale_factor(a, spec.target_rho);
    if (!c) continue;
    return {VarParams(Vector::Zero(m), scaled(a, *c), std::move(sigma)), false};
  }
  throw NumericalError("could not rescale a random sparse VAR to the target spectral radius after " +
                       std::to_string(kAttempts) + " draws");
}

// ---------------------------------------------------------------------------
// Preprocessing

TimeSeries difference(const TimeSeries& series, int order) {
  if (order < 1) throw InvalidArgument("difference order must be at least 1");
  // rows are X_0..X_T; an order of T or more leaves fewer than two observations
  if (order >= series.rows() - 1) {
    throw InsufficientData("difference order " + std::to_string(order) + " needs more than " +
                           std::to_string(series.rows()) + " rows");
  }
  Matrix x = series.data();
  for (int k = 0; k < order; ++k) {
    const Index n = x.rows() - 1;
    x = (x.bottomRows(n) - x.topRows(n)).eval();
  }
  return TimeSeries(std::move(x), series.labels());
}

void require_nondegenerate(const TimeSeries& series) {
  const Matrix& x = series.data();
  for (Index j = 0; j < x.cols(); ++j) {
    if ((x.col(j).array() == x(0, j)).all()) {
      throw DataError("column '" + series.labels()[static_cast<std::size_t>(j)] + "' has zero variance");
    }
  }
}

MagnitudeDist parse_magnitude_dist(const std::string& name) {
  if (name == "exp_away_from_zero") return MagnitudeDist::exp_away_from_zero;
  if (name == "laplace0") return MagnitudeDist::laplace0;
  if (name == "uniform_pm1") return MagnitudeDist::uniform_pm1;
  throw InvalidArgument("unknown magnitude distribution '" + name + "'");
}

std::string to_string(MagnitudeDist dist) {
  switch (dist) {
    case MagnitudeDist::exp_away_from_zero: return "exp_away_from_zero";
    case MagnitudeDist::laplace0: return "laplace0";
    case MagnitudeDist::uniform_pm1: return "uniform_pm1";
  }
  return "unknown";
}

}  // namespace uoivar
