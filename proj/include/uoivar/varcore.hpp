#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uoivar/rng.hpp"

namespace uoivar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Parameters of a Gaussian VAR(D) process
///   X_t = nu + sum_d A_d X_{t-d} + eps_t,  eps_t ~ N(0, sigma).
///
/// Construction validates shapes, finiteness and positive definiteness of
/// sigma. Stability is deliberately not enforced; use check_stability().
class VarParams {
 public:
  VarParams(Vector nu, std::vector<Matrix> a, Matrix sigma);

  Index m() const noexcept { return nu_.size(); }
  int d() const noexcept { return static_cast<int>(a_.size()); }

  const Vector& nu() const noexcept { return nu_; }
  const std::vector<Matrix>& a() const noexcept { return a_; }
  const Matrix& sigma() const noexcept { return sigma_; }

  /// Stacked regression coefficients B = [nu^T; A_1^T; ...; A_D^T], shape (DM+1) x M.
  Matrix coefficients() const;

  static VarParams from_coefficients(const Matrix& b, int d, Matrix sigma);

 private:
  Vector nu_;
  std::vector<Matrix> a_;
  Matrix sigma_;
};

/// Observations X_0..X_T stored row-wise, (T+1) x M.
class TimeSeries {
 public:
  explicit TimeSeries(Matrix data, std::vector<std::string> labels = {});

  Index rows() const noexcept { return data_.rows(); }
  Index dim() const noexcept { return data_.cols(); }
  const Matrix& data() const noexcept { return data_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

 private:
  Matrix data_;
  std::vector<std::string> labels_;
};

/// The multivariate regression Y = U B + E built from a series.
///
/// Row r of y is X_{T-r}; row r of u is (1, X_{T-r-1}^T, ..., X_{T-r-D}^T).
class RegressionForm {
 public:
  RegressionForm(Matrix y, Matrix u, int d);

  const Matrix& y() const noexcept { return y_; }
  const Matrix& u() const noexcept { return u_; }
  Index n_rows() const noexcept { return y_.rows(); }
  int d() const noexcept { return d_; }
  Index m() const noexcept { return y_.cols(); }
  Index coef_rows() const noexcept { return u_.cols(); }
  /// Length of vec(B), M (DM + 1).
  Index q() const noexcept { return m() * coef_rows(); }

  /// Regression restricted to the given rows (in the given order).
  RegressionForm select_rows(const std::vector<Index>& rows) const;

 private:
  Matrix y_;
  Matrix u_;
  int d_;
};

/// A set of (row, column) positions of B declared nonzero.
///
/// Row 0 is the intercept row. "Penalized" positions are rows 1..DM.
class Support {
 public:
  Support() = default;
  Support(Index rows, Index cols);

  static Support intercepts(Index rows, Index cols);
  static Support full(Index rows, Index cols);
  /// Every exactly-nonzero entry of b (|b_ij| > tol).
  static Support of(const Matrix& b, double tol = 0.0);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }

  bool contains(Index i, Index j) const;
  void insert(Index i, Index j);
  void erase(Index i, Index j);

  Index size() const;
  Index penalized_size() const;
  bool penalized_empty() const { return penalized_size() == 0; }

  Support with_intercepts() const;
  Support penalized_part() const;
  bool is_subset_of(const Support& other) const;

  /// Entries in (row, col) lexicographic order.
  std::vector<std::pair<Index, Index>> entries() const;

  friend bool operator==(const Support& a, const Support& b) = default;

 private:
  void check(Index i, Index j) const;

  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<unsigned char> mask_;  // column-major
};

Support intersect(const Support& a, const Support& b);
Support unite(const Support& a, const Support& b);

struct StabilityReport {
  bool stable;
  double spectral_radius;
};

/// DM x DM companion matrix [A_1 ... A_D; I 0; ...; 0 I 0].
Matrix companion_matrix(const std::vector<Matrix>& a);
double spectral_radius(const std::vector<Matrix>& a);
StabilityReport check_stability(const VarParams& params);

/// Unconditional mean (I - sum A_d)^{-1} nu.
Vector stationary_mean(const VarParams& params);

/// 10 D ceil(1 / (1 - rho)); requires a stable process.
int default_burn_in(const VarParams& params);

TimeSeries simulate(const VarParams& params, Index t_len, int burn_in, RngStream& stream);

RegressionForm build_regression(const TimeSeries& series, int d);

enum class MagnitudeDist { exp_away_from_zero, laplace0, uniform_pm1 };

struct BlockDiagSpec {
  Index block_size = 4;
  double diag_value = 1.0;
  double offdiag_value = 0.25;
};

Matrix block_diag_sigma(Index m, const BlockDiagSpec& spec);

struct SparseVarSpec {
  Index m = 10;
  int d = 1;
  double sparsity = 0.9;
  /// Exact number of nonzero transition entries; overrides sparsity when set.
  std::optional<Index> nonzeros;
  MagnitudeDist magnitude = MagnitudeDist::exp_away_from_zero;
  double target_rho = 0.8;
  BlockDiagSpec sigma;
};

struct SparseVarDraw {
  VarParams params;
  /// Set when every transition entry is zero and target_rho could not be applied.
  bool target_rho_ignored = false;
};

Index sparse_nonzero_count(const SparseVarSpec& spec);
SparseVarDraw random_sparse_var(const SparseVarSpec& spec, RngStream& stream);

TimeSeries difference(const TimeSeries& series, int order);

/// Throws DataError naming the first column with zero variance.
void require_nondegenerate(const TimeSeries& series);

MagnitudeDist parse_magnitude_dist(const std::string& name);
std::string to_string(MagnitudeDist dist);

}  // namespace uoivar
