// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "benchmark.hpp"
#include "cli.hpp"
#include "oracles.hpp"
#include "uoivar/errors.hpp"
#include "uoivar/io.hpp"
#include "uoivar/metrics.hpp"
#include "uoivar/uoi.hpp"

using namespace uoivar;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double time_limit;  // seconds
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1 ---------------------------------------------------------------------------

Outcome lasso_oracle() {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> coin(0, 1), rows(2, 12), lags(1, 5);
  double worst_gap = -1e300, worst_kkt = 0.0, solver_secs = 0.0;
  int failures = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const Index m = 1 + coin(rng);
    const int d = m == 1 ? lags(rng) : 1;  // q = M (DM + 1) <= 6
    const Index n = rows(rng);
    const bool pen = inst % 4 == 3;
    const RegressionForm reg = oracle::random_regression(n, m, d, rng);
    LassoOptions o;
    o.penalize_intercept = pen;
    for (double lambda : lambda_path(reg, 5, 1e-2, pen).values()) {
      const auto start = std::chrono::steady_clock::now();
      const LassoFit fit = lasso_fit(reg, lambda, o);
      solver_secs += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const Matrix ref = oracle::proximal_gradient(reg.y(), reg.u(), lambda, pen);
      const double gap = oracle::objective(reg.y(), reg.u(), fit.coef, lambda, pen) -
                         oracle::objective(reg.y(), reg.u(), ref, lambda, pen);
      const double kkt = kkt_violation(reg, fit.coef, lambda, pen);
      worst_gap = std::max(worst_gap, gap);
      worst_kkt = std::max(worst_kkt, kkt);
      failures += !(gap <= 1e-7 && kkt <= 1e-6);
    }
  }
  return {failures == 0 && solver_secs < 10.0,
          fmt("200 instances x 5 lambdas, worst objective gap %.2e (<= 1e-7), worst KKT %.2e (<= 1e-6), "
              "solver time %.3f s (limit 10 s; total includes the oracle)",
              worst_gap, worst_kkt, solver_secs)};
}

// 2 ---------------------------------------------------------------------------

Outcome orthonormal_closed_form() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> nn(10, 60), dd(1, 3), mm(1, 3);
  std::uniform_real_distribution<double> frac(0.05, 0.95);
  std::normal_distribution<double> z;
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const Index n = nn(rng), m = mm(rng);
    const int d = dd(rng);
    const Index p = d * m + 1;
    const bool pen = inst % 5 == 4;
    const Matrix u = oracle::orthonormal_design(n, p, rng);
    Matrix y(n, m);
    for (Index r = 0; r < n; ++r)
      for (Index j = 0; j < m; ++j) y(r, j) = 2.0 * z(rng) + (j + 1 < p ? u(r, j + 1) : 0.0);
    const RegressionForm reg(y, u, d);
    const double lambda = frac(rng) * lambda_max(reg, pen);
    LassoOptions o;
    o.penalize_intercept = pen;
    const Matrix b = lasso_fit(reg, lambda, o).coef;
    for (Index j = 0; j < m; ++j) {
      for (Index i = 0; i < p; ++i) {
        const double ols = u.col(i).dot(y.col(j)) / static_cast<double>(n);
        const double expected = i == 0 && !pen ? ols : oracle::soft_threshold(ols, lambda / 2.0);
        worst = std::max(worst, std::abs(b(i, j) - expected));
      }
    }
  }
  return {worst <= 1e-8, fmt("50 instances, max |b - soft_threshold| = %.2e (<= 1e-8)", worst)};
}

// shared simulation helper for 3, 8 and 9
struct Sim {
  VarParams truth;
  TimeSeries series;
};

Sim simulate_sparse(Index m, Index t, std::optional<Index> nonzeros, double sparsity, double rho, std::uint64_t seed) {
  SparseVarSpec spec;
  spec.m = m;
  spec.sparsity = sparsity;
  spec.nonzeros = nonzeros;
  spec.target_rho = rho;
  const RngStream root(seed);
  RngStream ps = root.derive(0, StreamTag::params);
  VarParams p = random_sparse_var(spec, ps).params;
  RngStream ss = root.derive(0, StreamTag::series);
  TimeSeries x = simulate(p, t, default_burn_in(p), ss);
  return {p, x};
}

// 3 ---------------------------------------------------------------------------

Outcome strict_intersection() {
  int mismatches = 0, compared = 0;
  for (std::uint64_t run = 0; run < 20; ++run) {
    const Sim sim = simulate_sparse(5, 100, std::nullopt, 0.8, 0.7, 300 + run);
    const RegressionForm reg = build_regression(sim.series, 1);
    UoiConfig cfg;
    cfg.n_lambda = 20;
    cfg.threshold = 1.0;
    cfg.seed = run;
    const IntersectionResult res = intersection_step(reg, cfg);
    if (res.replicates_dropped != 0) return {false, "unexpected dropped replicate"};
    const LambdaPath path = resolve_lambda(reg, cfg);
    const BlockResampler data(reg, cfg.block_len);
    std::vector<std::vector<oracle::EntrySet>> per_k(path.size());
    for (int b = 0; b < cfg.b1; ++b) {
      RngStream s = RngStream(cfg.seed).derive(static_cast<std::uint64_t>(b), StreamTag::intersection);
      const auto fits = lasso_path_fit(data.draw(s), path, cfg.lasso);
      for (std::size_t k = 0; k < path.size(); ++k) per_k[k].push_back(oracle::nonzero_transition_entries(fits[k].coef));
    }
    for (std::size_t k = 0; k < path.size(); ++k) {
      ++compared;
      mismatches += oracle::penalized(oracle::entry_set(res.supports[k])) != oracle::set_intersection(per_k[k]);
    }
  }
  return {mismatches == 0, fmt("20 runs, %d supports compared, %d mismatches", compared, mismatches)};
}

// 4 ---------------------------------------------------------------------------

// M = 10 VAR(1) with 10 nonzero entries of magnitude >= 0.5 and spectral radius 0.7.
VarParams strong_signal_var(std::mt19937_64& rng) {
  const Index m = 10;
  std::uniform_real_distribution<double> mag(0.5, 1.0);
  std::uniform_int_distribution<int> sign(0, 1);
  std::vector<Index> cells(static_cast<std::size_t>(m * m));
  std::iota(cells.begin(), cells.end(), 0);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    std::shuffle(cells.begin(), cells.end(), rng);
    Matrix a = Matrix::Zero(m, m);
    for (int k = 0; k < 10; ++k) a(cells[static_cast<std::size_t>(k)]) = (sign(rng) ? 1.0 : -1.0) * mag(rng);
    const double rho = spectral_radius({a});
    // nilpotent draws have numerically fuzzy eigenvalues; scaling up to the
    // target keeps every magnitude at or above 0.5
    if (rho < 0.1 || rho > 0.7) continue;
    a *= 0.7 / rho;
    return VarParams(Vector::Zero(m), {a}, block_diag_sigma(m, {}));
  }
  throw std::runtime_error("could not draw a strong-signal system");
}

Outcome no_false_positives() {
  std::mt19937_64 rng(4242);
  int clean = 0, degenerate = 0;
  for (int run = 0; run < 100; ++run) {
    const VarParams p = strong_signal_var(rng);
    RngStream s(9000 + static_cast<std::uint64_t>(run));
    const TimeSeries x = simulate(p, 400, default_burn_in(p), s);
    const RegressionForm reg = build_regression(x, 1);
    UoiConfig cfg;
    cfg.block_len = 50;
    cfg.b1 = 20;
    cfg.threshold = 1.0;
    cfg.seed = static_cast<std::uint64_t>(run);
    const IntersectionResult res = intersection_step(reg, cfg);
    const Support truth = Support::of(p.coefficients());
    int checked = 0;
    bool ok = true;
    for (const auto& sk : res.supports) {
      if (sk.penalized_empty()) continue;
      ok = ok && sk.penalized_part().is_subset_of(truth);
      if (++checked == 3) break;
    }
    degenerate += checked < 3;
    clean += ok && checked > 0;
  }
  return {clean >= 95, fmt("%d of 100 runs free of false positives at the three largest nonempty lambdas (>= 95)%s",
                           clean, degenerate ? fmt(", %d runs had fewer than three", degenerate).c_str() : "")};
}

// 5 ---------------------------------------------------------------------------

Outcome desk_scale_benchmark() {
  cli::BenchmarkSettings s;
  s.process.m = 20;
  s.process.d = 1;
  s.process.sparsity = 0.95;
  s.process.target_rho = 0.8;
  s.t_len = 200;
  s.reps = 20;
  s.seed = 2018;
  s.uoi.b1 = 20;
  s.uoi.b2 = 30;
  s.uoi.block_len = 7;
  s.uoi.threshold = 1.0;
  s.threads = 1;
  const cli::BenchmarkReport report = cli::run_benchmark(s);

  std::vector<double> ba_uoi, ba_cv, fp_uoi, fp_cv;
  for (const auto& r : report.realizations) {
    ba_uoi.push_back(r.uoi.selection.balanced_accuracy);
    ba_cv.push_back(r.lasso_cv.selection.balanced_accuracy);
    fp_uoi.push_back(static_cast<double>(r.uoi.selection.fp));
    fp_cv.push_back(static_cast<double>(r.lasso_cv.selection.fp));
  }
  const double mba_u = cli::quantile(ba_uoi, 0.5), mba_c = cli::quantile(ba_cv, 0.5);
  const double mfp_u = cli::quantile(fp_uoi, 0.5), mfp_c = cli::quantile(fp_cv, 0.5);
  const double bias_u = report.mean_abs_bias(true), bias_c = report.mean_abs_bias(false);
  const bool a = mba_u >= mba_c, b = mfp_u <= 0.5 * mfp_c, c = bias_u <= bias_c;
  return {a && b && c,
          fmt("seed 2018: (a) median BA %.4f vs %.4f %s; (b) median FP %.1f vs %.1f %s; (c) mean |bias| %.4f vs %.4f %s",
              mba_u, mba_c, a ? "ok" : "FAIL", mfp_u, mfp_c, b ? "ok" : "FAIL", bias_u, bias_c, c ? "ok" : "FAIL")};
}

// 6 ---------------------------------------------------------------------------

Outcome null_model() {
  const VarParams white(Vector::Zero(10), {Matrix::Zero(10, 10)}, Matrix::Identity(10, 10));
  int empty = 0;
  for (std::uint64_t run = 0; run < 100; ++run) {
    RngStream s(50000 + run);
    const TimeSeries x = simulate(white, 300, 0, s);
    UoiConfig cfg;
    cfg.seed = run;
    empty += Support::of(uoi_var(x, 1, cfg).b_hat).penalized_empty();
  }
  return {empty >= 90, fmt("%d of 100 white-noise runs with an empty penalized support (>= 90)", empty)};
}

// 7 ---------------------------------------------------------------------------

std::string fit_json_without_timing(const std::filesystem::path& p) {
  std::ifstream in(p);
  auto j = nlohmann::json::parse(in);
  j.erase("timing");
  return j.dump();
}

Outcome parallel_determinism() {
  ::unsetenv(cli::kThreadsEnv);
  const auto dir = oracle::scratch_dir("acceptance_threads");
  int identical = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const Sim sim = simulate_sparse(8, 150, std::nullopt, 0.9, 0.8, 700 + static_cast<std::uint64_t>(rep));
    const auto input = dir / fmt("series_%d.csv", rep);
    write_time_series(input.string(), sim.series);
    std::string docs[2];
    int k = 0;
    for (const char* threads : {"1", "8"}) {
      const auto out = dir / fmt("fit_%d_%s", rep, threads);
      const int code = cli::run({"fit", "--input", input.string(), "--seed", std::to_string(100 + rep), "--threads",
                                 threads, "--out_dir", out.string()});
      if (code != 0) return {false, fmt("fit exited with code %d", code)};
      docs[k++] = fit_json_without_timing(out / "fit.json");
    }
    identical += docs[0] == docs[1];
  }
  return {identical == 10, fmt("%d of 10 repetitions byte-identical at 1 and 8 threads", identical)};
}

// 8 ---------------------------------------------------------------------------

Outcome sparsity_arithmetic() {
  const Sim sim = simulate_sparse(50, 2000, Index{44}, 0.0, 0.7, 88);
  const Support truth = Support::of(sim.truth.coefficients()).with_intercepts();
  UoiConfig cfg;
  cfg.b2 = 10;
  cfg.seed = 1;
  const FitResult fit = union_step(build_regression(sim.series, 1), {truth}, cfg);
  const nlohmann::json doc = to_json(fit);
  const auto nnz = doc["diagnostics"]["nonzero_transition_entries"].get<long>();
  const double reported = doc["diagnostics"]["sparsity_fraction"].get<double>();
  return {nnz == 44 && std::abs(reported - 0.9824) <= 1e-6,
          fmt("%ld nonzero transition entries, sparsity_fraction %.8f (0.9824 +/- 1e-6)", nnz, reported)};
}

// 9 ---------------------------------------------------------------------------

Outcome monotonicity() {
  std::mt19937_64 rng(909);
  std::uniform_int_distribution<int> dim(2, 6), len(40, 120), reps(2, 8), extra(1, 5), lag(1, 2);
  std::uniform_real_distribution<double> thr(0.05, 1.0), sp(0.5, 0.95);
  int held = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const Sim sim = simulate_sparse(dim(rng), len(rng), std::nullopt, sp(rng), 0.75, 5000 + static_cast<std::uint64_t>(inst));
    const RegressionForm reg = build_regression(sim.series, lag(rng));
    UoiConfig cfg;
    cfg.n_lambda = 15;
    cfg.b1 = reps(rng);
    cfg.block_len = 1 + inst % 8;
    cfg.seed = static_cast<std::uint64_t>(inst);
    double s1 = thr(rng), s2 = thr(rng);
    if (s1 > s2) std::swap(s1, s2);
    cfg.threshold = s1;
    const auto low = intersection_step(reg, cfg).supports;
    cfg.threshold = s2;
    const auto high = intersection_step(reg, cfg).supports;
    cfg.threshold = 1.0;
    const auto base = intersection_step(reg, cfg).supports;
    cfg.b1 += extra(rng);
    const auto more = intersection_step(reg, cfg).supports;
    bool ok = true;
    for (std::size_t k = 0; k < low.size(); ++k) {
      ok = ok && high[k].is_subset_of(low[k]) && base[k].is_subset_of(high[k]) && more[k].is_subset_of(base[k]);
    }
    held += ok;
  }
  return {held == 50, fmt("inclusions held on %d of 50 randomized instances", held)};
}

// 10 --------------------------------------------------------------------------

Outcome forecast_correctness() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SparseVarSpec spec;
    spec.m = 3 + static_cast<Index>(seed % 5);
    spec.d = 1 + static_cast<int>(seed % 3);
    spec.sparsity = 0.6;
    spec.target_rho = 0.9;
    RngStream ps(seed);
    const VarParams drawn = random_sparse_var(spec, ps).params;
    const VarParams p(Vector::Random(spec.m), drawn.a(), drawn.sigma());
    // noiseless recursion from a random start
    Matrix x(60, spec.m);
    x.topRows(spec.d).setRandom();
    for (Index t = spec.d; t < x.rows(); ++t) {
      Vector next = p.nu();
      for (int k = 1; k <= spec.d; ++k) next += p.a()[static_cast<std::size_t>(k - 1)] * x.row(t - k).transpose();
      x.row(t) = next.transpose();
    }
    const TimeSeries series(x);
    const TimeSeries pred = forecast_one_step(series, p);
    const double rmse = rmse_forecast(TimeSeries(x.bottomRows(pred.rows())), pred).overall;
    worst = std::max(worst, rmse);
  }
  Matrix actual(2, 1), zero = Matrix::Zero(2, 1);
  actual << 1.0, 3.0;
  const double two_point = rmse_forecast(TimeSeries(actual), TimeSeries(zero)).overall;
  const bool exact = two_point == std::sqrt((1.0 * 1.0 + 3.0 * 3.0) / 2.0);
  return {worst < 1e-10 && exact,
          fmt("worst noiseless RMSE %.2e (< 1e-10); two-point RMSE %.17g %s sqrt(5)", worst, two_point,
              exact ? "==" : "!=")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "LASSO solver oracle equivalence", 1e9, lasso_oracle},
      {2, "orthonormal-design closed form", 1e9, orthonormal_closed_form},
      {3, "strict-intersection oracle", 1e9, strict_intersection},
      {4, "no false positives at large lambda", 300.0, no_false_positives},
      {5, "desk-scale simulation comparison", 1200.0, desk_scale_benchmark},
      {6, "null-model sparsity", 1e9, null_model},
      {7, "determinism under parallelism", 1e9, parallel_determinism},
      {8, "sparsity arithmetic", 1e9, sparsity_arithmetic},
      {9, "support monotonicity", 1e9, monotonicity},
      {10, "forecast correctness", 1e9, forecast_correctness},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.time_limit;
    const bool pass = out.pass && in_time;
    failed += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << c.id << ": " << c.name << " | " << out.detail;
    if (c.time_limit < 1e8) std::cout << fmt(" | %.1f s (limit %.0f s)", secs, c.time_limit);
    else std::cout << fmt(" | %.1f s", secs);
    std::cout << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
