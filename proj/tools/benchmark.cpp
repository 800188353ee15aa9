#include "benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "uoivar/errors.hpp"
#include "uoivar/io.hpp"
#include "uoivar/parallel.hpp"

namespace uoivar::cli {

namespace {

MethodRun score(const FitResult& fit, const Support& truth) {
  MethodRun run;
  run.r2 = fit.diagnostics.r2;
  run.bic = fit.diagnostics.bic;
  const Support est = Support::of(fit.b_hat);
  run.selection = selection_score(est, truth);
  run.nonzeros = est.penalized_size();
  return run;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkSettings& s) {
  if (s.reps < 1) throw InvalidArgument("reps must be at least 1");
  if (s.t_len < 1) throw InvalidArgument("t_len must be at least 1");
  if (s.bins < 1) throw InvalidArgument("bins must be at least 1");
  s.uoi.validate();

  const RngStream root(s.seed);
  RngStream param_stream = root.derive(0, StreamTag::params);
  SparseVarDraw draw = random_sparse_var(s.process, param_stream);
  BenchmarkReport report{draw.params, {}};
  const VarParams& truth = report.truth;
  const Support true_support = Support::of(truth.coefficients()).penalized_part();
  const int burn_in = default_burn_in(truth);

  report.realizations.resize(static_cast<std::size_t>(s.reps));
  parallel_for(report.realizations.size(), s.threads, [&](std::size_t r) {
    RngStream series_stream = root.derive(r, StreamTag::series);
    const TimeSeries series = simulate(truth, s.t_len, burn_in, series_stream);
    const RegressionForm reg = build_regression(series, truth.d());

    UoiConfig cfg = s.uoi;
    cfg.n_threads = 1;
    cfg.seed = root.derive(r, StreamTag::fit).seed();
    if (!cfg.lambda) cfg.lambda = lambda_path(reg, cfg.n_lambda, cfg.lambda_min_ratio, cfg.lasso.penalize_intercept);
    const FitResult uoi = uoi_var(series, truth.d(), cfg);

    LassoCvConfig cv;
    cv.lambda = cfg.lambda;
    cv.n_folds = s.cv_folds;
    cv.lasso = cfg.lasso;
    const FitResult lasso = lasso_cv_var(series, truth.d(), cv);

    RealizationResult& out = report.realizations[r];
    out.series_seed = series_stream.seed();
    out.uoi = score(uoi, true_support);
    out.lasso_cv = score(lasso, true_support);
    out.uoi_b = uoi.b_hat;
    out.lasso_b = lasso.b_hat;
  });
  return report;
}

Matrix BenchmarkReport::average_estimate(bool uoi) const {
  Matrix avg = Matrix::Zero(truth.d() * truth.m() + 1, truth.m());
  for (const auto& r : realizations) avg += uoi ? r.uoi_b : r.lasso_b;
  return avg / static_cast<double>(std::max<std::size_t>(realizations.size(), 1));
}

double BenchmarkReport::mean_abs_bias(bool uoi) const {
  const Matrix b = truth.coefficients();
  const Matrix avg = average_estimate(uoi);
  double sum = 0.0;
  Index count = 0;
  for (Index j = 0; j < b.cols(); ++j) {
    for (Index i = 1; i < b.rows(); ++i) {
      if (b(i, j) == 0.0) continue;
      sum += std::abs(avg(i, j) - b(i, j));
      ++count;
    }
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

double quantile(std::vector<double> values, double p) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

std::vector<double> collect(const BenchmarkReport& report, bool uoi, double (*get)(const MethodRun&)) {
  std::vector<double> out;
  for (const auto& r : report.realizations) out.push_back(get(uoi ? r.uoi : r.lasso_cv));
  return out;
}

struct MetricDef {
  const char* name;
  double (*get)(const MethodRun&);
};

const MetricDef kMetrics[] = {
    {"r2", [](const MethodRun& m) { return m.r2; }},
    {"bic", [](const MethodRun& m) { return m.bic; }},
    {"balanced_accuracy", [](const MethodRun& m) { return m.selection.balanced_accuracy; }},
    {"sensitivity", [](const MethodRun& m) { return m.selection.sensitivity; }},
    {"specificity", [](const MethodRun& m) { return m.selection.specificity; }},
    {"false_positives", [](const MethodRun& m) { return static_cast<double>(m.selection.fp); }},
    {"nonzeros", [](const MethodRun& m) { return static_cast<double>(m.nonzeros); }},
};

void add_run(CsvTable& t, std::size_t r, const char* method, const MethodRun& m) {
  t.rows.push_back({std::to_string(r), method, format_double(m.r2), format_double(m.bic), std::to_string(m.selection.tp),
                    std::to_string(m.selection.fp), std::to_string(m.selection.tn), std::to_string(m.selection.fn),
                    format_double(m.selection.sensitivity), format_double(m.selection.specificity),
                    format_double(m.selection.balanced_accuracy), std::to_string(m.nonzeros)});
}

}  // namespace

void write_benchmark(const std::string& out_dir, const BenchmarkSettings& s, const BenchmarkReport& report) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  CsvTable per{{"realization", "method", "r2", "bic", "tp", "fp", "tn", "fn", "sensitivity", "specificity",
                "balanced_accuracy", "nonzeros"},
               {}};
  for (std::size_t r = 0; r < report.realizations.size(); ++r) {
    add_run(per, r, "uoi", report.realizations[r].uoi);
    add_run(per, r, "lasso_cv", report.realizations[r].lasso_cv);
  }
  write_csv((dir / "per_realization.csv").string(), per);

  CsvTable summary{{"method", "metric", "median", "q25", "q75"}, {}};
  for (const bool uoi : {true, false}) {
    for (const auto& metric : kMetrics) {
      const auto v = collect(report, uoi, metric.get);
      summary.rows.push_back({uoi ? "uoi" : "lasso_cv", metric.name, format_double(quantile(v, 0.5)),
                              format_double(quantile(v, 0.25)), format_double(quantile(v, 0.75))});
    }
  }
  write_csv((dir / "summary.csv").string(), summary);

  // histogram of true nonzero values next to the averaged estimates at every position either touches
  const Matrix b = report.truth.coefficients();
  const Matrix avg_uoi = report.average_estimate(true);
  const Matrix avg_lasso = report.average_estimate(false);
  std::vector<double> truth_v, uoi_v, lasso_v;
  for (Index j = 0; j < b.cols(); ++j) {
    for (Index i = 1; i < b.rows(); ++i) {
      if (b(i, j) != 0.0) truth_v.push_back(b(i, j));
      if (b(i, j) != 0.0 || avg_uoi(i, j) != 0.0) uoi_v.push_back(avg_uoi(i, j));
      if (b(i, j) != 0.0 || avg_lasso(i, j) != 0.0) lasso_v.push_back(avg_lasso(i, j));
    }
  }
  double lo = 0.0, hi = 0.0;
  for (const auto* v : {&truth_v, &uoi_v, &lasso_v}) {
    for (double x : *v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (hi == lo) hi = lo + 1.0;
  const double width = (hi - lo) / s.bins;
  CsvTable hist{{"series", "bin_lo", "bin_hi", "count"}, {}};
  for (const auto& [name, values] : {std::pair{"truth", &truth_v}, {"uoi", &uoi_v}, {"lasso_cv", &lasso_v}}) {
    std::vector<Index> counts(static_cast<std::size_t>(s.bins), 0);
    for (double x : *values) {
      const auto k = std::min<Index>(static_cast<Index>((x - lo) / width), s.bins - 1);
      ++counts[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < s.bins; ++k) {
      hist.rows.push_back({name, format_double(lo + k * width), format_double(lo + (k + 1) * width),
                           std::to_string(counts[static_cast<std::size_t>(k)])});
    }
  }
  write_csv((dir / "histogram.csv").string(), hist);

  CsvTable bias{{"method", "mean_abs_bias"}, {}};
  bias.rows.push_back({"uoi", format_double(report.mean_abs_bias(true))});
  bias.rows.push_back({"lasso_cv", format_double(report.mean_abs_bias(false))});
  write_csv((dir / "bias.csv").string(), bias);

  write_json((dir / "params.json").string(), to_json(report.truth));
}

}  // namespace uoivar::cli
