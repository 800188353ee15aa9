#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "uoivar/errors.hpp"
#include "uoivar/solvers.hpp"
#include "uoivar/varcore.hpp"

using namespace uoivar;

namespace {

VarParams var1(const Matrix& a, double noise = 1.0) {
  const Index m = a.rows();
  return VarParams(Vector::Zero(m), {a}, noise * Matrix::Identity(m, m));
}

}  // namespace

TEST_CASE("stability of simple transition matrices") {
  auto zero = check_stability(var1(Matrix::Zero(2, 2)));
  CHECK(zero.stable);
  CHECK(zero.spectral_radius == 0.0);

  auto unit = check_stability(var1(Matrix::Identity(2, 2)));
  CHECK_FALSE(unit.stable);
  CHECK(unit.spectral_radius == doctest::Approx(1.0).epsilon(1e-12));

  Matrix a(2, 2);
  a << 0.5, 0.2, 0.0, 0.5;
  auto tri = check_stability(var1(a));
  CHECK(tri.stable);
  CHECK(tri.spectral_radius == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("near unit root is classified as unstable") {
  auto r = check_stability(var1((1.0 - 1e-12) * Matrix::Identity(2, 2)));
  CHECK_FALSE(r.stable);
}

TEST_CASE("mismatched transition matrices are rejected") {
  CHECK_THROWS_AS(VarParams(Vector::Zero(2), {Matrix::Zero(2, 2), Matrix::Zero(3, 3)}, Matrix::Identity(2, 2)),
                  InvalidArgument);
  CHECK_THROWS_AS(companion_matrix({Matrix::Zero(2, 2), Matrix::Zero(3, 3)}), InvalidArgument);
  CHECK_THROWS_AS(VarParams(Vector::Zero(2), {Matrix::Zero(2, 2)}, Matrix::Identity(3, 3)), InvalidArgument);
}

TEST_CASE("sigma must be positive definite") {
  Matrix s(2, 2);
  s << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(VarParams(Vector::Zero(2), {Matrix::Zero(2, 2)}, s), InvalidArgument);
  CHECK_NOTHROW(VarParams(Vector::Zero(2), {Matrix::Zero(2, 2)}, 1e-12 * Matrix::Identity(2, 2)));
}

TEST_CASE("companion matrix layout for two lags") {
  Matrix a1 = Matrix::Constant(2, 2, 1.0), a2 = Matrix::Constant(2, 2, 2.0);
  Matrix c = companion_matrix({a1, a2});
  REQUIRE(c.rows() == 4);
  CHECK(c.topLeftCorner(2, 2) == a1);
  CHECK(c.topRightCorner(2, 2) == a2);
  CHECK(c.bottomLeftCorner(2, 2) == Matrix::Identity(2, 2));
  CHECK(c.bottomRightCorner(2, 2) == Matrix::Zero(2, 2));
}

TEST_CASE("coefficients round trip through the stacked layout") {
  Matrix a1(2, 2), a2(2, 2);
  a1 << 0.1, 0.2, 0.3, 0.4;
  a2 << -0.1, 0.0, 0.05, 0.0;
  Vector nu(2);
  nu << 1.0, -2.0;
  VarParams p(nu, {a1, a2}, Matrix::Identity(2, 2));
  Matrix b = p.coefficients();
  REQUIRE(b.rows() == 5);
  // row 1 + (d-1) M + i, column j holds (A_d)_{ji}
  CHECK(b(0, 1) == -2.0);
  CHECK(b(1 + 1, 0) == a1(0, 1));
  CHECK(b(1 + 2 + 0, 1) == a2(1, 0));
  VarParams back = VarParams::from_coefficients(b, 2, Matrix::Identity(2, 2));
  CHECK(back.a()[0] == a1);
  CHECK(back.a()[1] == a2);
  CHECK(back.nu() == nu);
}

TEST_CASE("white noise simulation has the right moments") {
  const Index t = 4000;
  RngStream s(11);
  TimeSeries x = simulate(var1(Matrix::Zero(3, 3)), t, 0, s);
  CHECK(x.rows() == t + 1);
  const Eigen::RowVectorXd mean = x.data().colwise().mean();
  for (Index j = 0; j < 3; ++j) {
    CHECK(std::abs(mean(j)) < 4.0 / std::sqrt(static_cast<double>(t)));
    const double var = (x.data().col(j).array() - mean(j)).square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(0.1));
  }
}

TEST_CASE("simulation settles at the stationary mean") {
  Vector nu = Vector::Ones(2);
  VarParams p(nu, {0.5 * Matrix::Identity(2, 2)}, 1e-12 * Matrix::Identity(2, 2));
  CHECK(stationary_mean(p).isApprox(Vector::Constant(2, 2.0), 1e-12));
  RngStream s(5);
  TimeSeries x = simulate(p, 2000, default_burn_in(p), s);
  const Eigen::RowVectorXd mean = x.data().colwise().mean();
  CHECK(std::abs(mean(0) - 2.0) < 1e-3);
  CHECK(std::abs(mean(1) - 2.0) < 1e-3);
}

TEST_CASE("large sparse system does not diverge") {
  SparseVarSpec spec;
  spec.m = 160;
  spec.sparsity = 0.99375;
  spec.target_rho = 0.9;
  RngStream ps(2);
  const auto draw = random_sparse_var(spec, ps);
  CHECK(check_stability(draw.params).stable);
  RngStream s(3);
  TimeSeries x = simulate(draw.params, 100, default_burn_in(draw.params), s);
  CHECK(x.data().allFinite());
  CHECK(x.data().cwiseAbs().maxCoeff() < 50.0);
}

TEST_CASE("simulate refuses bad requests") {
  RngStream s(1);
  CHECK_THROWS_AS(simulate(var1(1.1 * Matrix::Identity(2, 2)), 10, 0, s), InvalidArgument);
  CHECK_THROWS_AS(simulate(var1(Matrix::Zero(2, 2)), 10, -1, s), InvalidArgument);
  CHECK_THROWS_AS(simulate(var1(Matrix::Zero(2, 2)), 0, 0, s), InvalidArgument);
}

TEST_CASE("simulation is reproducible from the stream seed") {
  RngStream a(99), b(99);
  auto p = var1(0.3 * Matrix::Identity(3, 3));
  CHECK(simulate(p, 50, 10, a).data() == simulate(p, 50, 10, b).data());
}

TEST_CASE("regression layout for one lag") {
  Matrix x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  RegressionForm reg = build_regression(TimeSeries(x), 1);
  REQUIRE(reg.n_rows() == 2);
  Matrix y(2, 2), u(2, 3);
  y << 5, 6, 3, 4;
  u << 1, 3, 4, 1, 1, 2;
  CHECK(reg.y() == y);
  CHECK(reg.u() == u);
}

TEST_CASE("regression row and column counts") {
  Matrix x = Matrix::Random(5, 2);
  RegressionForm reg = build_regression(TimeSeries(x), 2);
  CHECK(reg.u().cols() == 5);
  CHECK(reg.n_rows() == 3);
  CHECK(reg.q() == 10);

  RegressionForm single = build_regression(TimeSeries(x), 4);
  CHECK(single.n_rows() == 1);
  CHECK_THROWS_AS(build_regression(TimeSeries(x), 5), InsufficientData);
}

TEST_CASE("every regression row is a lagged window of the series") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  for (int d = 1; d <= 3; ++d) {
    Matrix x(12, 3);
    for (Index r = 0; r < x.rows(); ++r)
      for (Index j = 0; j < 3; ++j) x(r, j) = z(rng);
    RegressionForm reg = build_regression(TimeSeries(x), d);
    const Index t = x.rows() - 1;
    for (Index r = 0; r < reg.n_rows(); ++r) {
      CHECK(reg.y().row(r) == x.row(t - r));
      CHECK(reg.u()(r, 0) == 1.0);
      for (int k = 1; k <= d; ++k) CHECK(reg.u().row(r).segment(1 + (k - 1) * 3, 3) == x.row(t - r - k));
    }
  }
}

TEST_CASE("regression form validates its inputs") {
  CHECK_THROWS_AS(RegressionForm(Matrix::Zero(2, 1), Matrix::Zero(2, 2), 1), InvalidArgument);
  CHECK_THROWS_AS(RegressionForm(Matrix::Zero(2, 1), Matrix::Ones(3, 2), 1), InvalidArgument);
  CHECK_THROWS_AS(TimeSeries(Matrix::Constant(2, 2, std::nan(""))), DataError);
}

TEST_CASE("nonzero counts follow the sparsity level") {
  SparseVarSpec spec;
  spec.m = 160;
  spec.sparsity = 0.99375;
  CHECK(sparse_nonzero_count(spec) == 160);
  // the rounded percentage lands on 159 of 25600
  spec.sparsity = 0.9938;
  CHECK(sparse_nonzero_count(spec) == 159);
  spec.nonzeros = 160;
  CHECK(sparse_nonzero_count(spec) == 160);

  SparseVarSpec small;
  small.m = 20;
  small.sparsity = 0.95;
  CHECK(sparse_nonzero_count(small) == 20);
}

TEST_CASE("fully sparse draw returns zero matrices and flags the radius") {
  SparseVarSpec spec;
  spec.m = 4;
  spec.d = 2;
  spec.sparsity = 1.0;
  RngStream s(1);
  auto draw = random_sparse_var(spec, s);
  CHECK(draw.target_rho_ignored);
  for (const auto& a : draw.params.a()) CHECK(a.isZero(0.0));
}

TEST_CASE("random sparse systems hit the requested radius") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SparseVarSpec spec;
    spec.m = 8;
    spec.d = 1 + static_cast<int>(seed % 2);
    spec.sparsity = 0.8;
    spec.target_rho = seed % 3 == 0 ? 0.95 : 0.7;
    spec.magnitude = static_cast<MagnitudeDist>(seed % 3);
    RngStream s(seed);
    auto draw = random_sparse_var(spec, s);
    CHECK_FALSE(draw.target_rho_ignored);
    const auto st = check_stability(draw.params);
    CHECK(st.stable);
    CHECK(st.spectral_radius == doctest::Approx(spec.target_rho).epsilon(1e-5));
    Index nz = 0;
    for (const auto& a : draw.params.a()) nz += (a.array() != 0.0).count();
    CHECK(nz == sparse_nonzero_count(spec));
  }
}

TEST_CASE("away-from-zero magnitudes stay within a common scale band") {
  SparseVarSpec spec;
  spec.m = 10;
  spec.sparsity = 0.5;
  RngStream s(8);
  auto draw = random_sparse_var(spec, s);
  const Matrix& a = draw.params.a()[0];
  double lo = 1e9, hi = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    if (a(i) == 0.0) continue;
    lo = std::min(lo, std::abs(a(i)));
    hi = std::max(hi, std::abs(a(i)));
  }
  // raw draws lie in [0.1, 1] before a common rescale
  CHECK(hi / lo <= 10.0 + 1e-9);
}

TEST_CASE("block diagonal noise covariance") {
  Matrix s = block_diag_sigma(6, {4, 1.0, 0.25});
  CHECK(s(0, 0) == 1.0);
  CHECK(s(0, 3) == 0.25);
  CHECK(s(0, 4) == 0.0);
  CHECK(s(4, 5) == 0.25);
  CHECK(s(5, 5) == 1.0);
}

TEST_CASE("differencing") {
  Matrix x(3, 1);
  x << 1, 3, 6;
  TimeSeries d1 = difference(TimeSeries(x), 1);
  REQUIRE(d1.rows() == 2);
  CHECK(d1.data()(0, 0) == 2.0);
  CHECK(d1.data()(1, 0) == 3.0);

  CHECK(difference(TimeSeries(Matrix::Constant(5, 2, 3.0)), 1).data().isZero(0.0));

  Matrix r = Matrix::Random(8, 3);
  CHECK(difference(TimeSeries(r), 2).data() == difference(difference(TimeSeries(r), 1), 1).data());

  CHECK_THROWS_AS(difference(TimeSeries(x), 2), InsufficientData);
  CHECK_THROWS_AS(difference(TimeSeries(x), 0), InvalidArgument);
}

TEST_CASE("differencing is linear") {
  Matrix s1 = Matrix::Random(10, 2), s2 = Matrix::Random(10, 2);
  const double a = 1.5, b = -0.25;
  Matrix lhs = difference(TimeSeries(a * s1 + b * s2), 1).data();
  Matrix rhs = a * difference(TimeSeries(s1), 1).data() + b * difference(TimeSeries(s2), 1).data();
  CHECK(lhs.isApprox(rhs, 1e-12));
}

TEST_CASE("zero variance columns are named") {
  Matrix x = Matrix::Random(5, 2);
  x.col(1).setConstant(4.0);
  try {
    require_nondegenerate(TimeSeries(x, {"a", "flat"}));
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("flat") != std::string::npos);
  }
}

TEST_CASE("noiseless simulation with the true support recovers B") {
  SparseVarSpec spec;
  spec.m = 6;
  spec.sparsity = 0.7;
  spec.target_rho = 0.8;
  spec.sigma.offdiag_value = 0.0;
  spec.sigma.diag_value = 1e-16;
  RngStream ps(21);
  auto draw = random_sparse_var(spec, ps);
  // near-noiseless trajectory from a random start so every direction is excited
  VarParams p(Vector::Random(6), draw.params.a(), draw.params.sigma());
  RngStream s(22);
  Matrix x(201, 6);
  for (Index j = 0; j < 6; ++j) x(0, j) = 5.0 * s.normal();
  for (Index t = 1; t < x.rows(); ++t) {
    Vector noise(6);
    for (Index j = 0; j < 6; ++j) noise(j) = 1e-8 * s.normal();
    x.row(t) = (p.nu() + p.a()[0] * x.row(t - 1).transpose() + noise).transpose();
  }
  RegressionForm reg = build_regression(TimeSeries(x), 1);
  const Matrix b_true = p.coefficients();
  RestrictedFit fit = ols_restricted(reg, Support::of(b_true));
  CHECK((fit.coef - b_true).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("magnitude distribution names") {
  for (auto d : {MagnitudeDist::exp_away_from_zero, MagnitudeDist::laplace0, MagnitudeDist::uniform_pm1})
    CHECK(parse_magnitude_dist(to_string(d)) == d);
  CHECK_THROWS_AS(parse_magnitude_dist("cauchy"), InvalidArgument);
}
