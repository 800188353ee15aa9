#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uoivar/metrics.hpp"
#include "uoivar/uoi.hpp"
#include "uoivar/varcore.hpp"

namespace uoivar::cli {

struct BenchmarkSettings {
  SparseVarSpec process;
  Index t_len = 200;
  int reps = 20;
  std::uint64_t seed = 0;
  UoiConfig uoi;  // lambda is derived per realization and shared with the LASSO arm
  int cv_folds = 5;
  int threads = 1;
  int bins = 40;
};

struct MethodRun {
  double r2 = 0.0;
  double bic = 0.0;
  SelectionScore selection;
  Index nonzeros = 0;
};

struct RealizationResult {
  std::uint64_t series_seed = 0;
  MethodRun uoi;
  MethodRun lasso_cv;
  Matrix uoi_b;
  Matrix lasso_b;
};

struct BenchmarkReport {
  VarParams truth;
  std::vector<RealizationResult> realizations;

  /// Mean over true nonzero transition entries of |average estimate - truth|.
  double mean_abs_bias(bool uoi) const;
  /// Average transition estimate across realizations, (DM+1) x M.
  Matrix average_estimate(bool uoi) const;
};

BenchmarkReport run_benchmark(const BenchmarkSettings& settings);

/// Linear-interpolation quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> values, double p);

/// Writes per_realization.csv, summary.csv, histogram.csv, bias.csv and params.json.
void write_benchmark(const std::string& out_dir, const BenchmarkSettings& settings, const BenchmarkReport& report);

}  // namespace uoivar::cli
