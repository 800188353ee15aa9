#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uoivar/resample.hpp"
#include "uoivar/solvers.hpp"
#include "uoivar/varcore.hpp"

namespace uoivar {

enum class FitMetricKind { mse, bic, neg_loglik };

FitMetricKind parse_fit_metric(const std::string& name);
std::string to_string(FitMetricKind kind);

/// Hyperparameters of the two-stage estimator.
struct UoiConfig {
  /// Regularization path; derived from the data (n_lambda, lambda_min_ratio) when absent.
  std::optional<LambdaPath> lambda;
  int n_lambda = 50;
  double lambda_min_ratio = 1e-3;
  int b1 = 20;             // intersection-step bootstrap replicates
  int b2 = 30;             // union-step bootstrap replicates
  Index block_len = 7;     // moving-block length L
  double threshold = 1.0;  // s in (0, 1]: selection frequency required in the intersection
  FitMetricKind fit_metric = FitMetricKind::bic;
  std::uint64_t seed = 0;
  bool raw_series_bootstrap = false;
  int n_threads = 1;
  LassoOptions lasso;

  void validate() const;
};

struct FitScore {
  double value = 0.0;
  bool ridge_applied = false;  // residual covariance was singular and got regularized
};

/// Lower is better for every kind.
///   mse:        ||Y - U B||_F^2 / (N M)
///   neg_loglik: Gaussian negative log-likelihood at the residual ML covariance
///   bic:        N ln det(Sigma_ML) + nnz(B) ln N
FitScore fit_metric(const Matrix& b, const RegressionForm& test, FitMetricKind kind);

struct IntersectionResult {
  std::vector<Support> supports;  // S_1..S_K, intercept rows always present
  /// replicate_supports[b][k]: penalized LASSO support of replicate b at lambda_k (surviving replicates only)
  std::vector<std::vector<Support>> replicate_supports;
  int replicates_used = 0;
  int replicates_dropped = 0;
  std::vector<std::string> warnings;
};

struct FitDiagnostics {
  double r2 = 0.0;
  double bic = 0.0;
  double sparsity_fraction = 1.0;
  Index n_star = 0;
  bool n_star_unsupported = false;
  std::vector<double> per_bootstrap_fit_scores;
  int b1_used = 0;
  int b1_dropped = 0;
  int b2_used = 0;
  int b2_dropped = 0;
  int rank_deficient_fits = 0;
  int ridge_regularized_scores = 0;
  std::vector<std::string> warnings;
};

struct FitResult {
  std::string method = "uoi";
  int d = 1;
  Index m = 0;
  std::vector<std::string> labels;
  LambdaPath lambda;
  Matrix b_hat;
  Matrix sigma_hat;
  std::vector<Support> supports;
  std::vector<int> chosen_k_histogram;
  FitDiagnostics diagnostics;
  UoiConfig config;
  int cv_folds = 0;  // lasso_cv only
};

/// 1 - (nonzero transition entries) / (D M^2); intercepts are never counted.
double sparsity_fraction(const Matrix& b, int d, Index m);

/// Applies the count threshold ceil(s * used) to per-replicate supports.
std::vector<Support> threshold_supports(const std::vector<std::vector<Support>>& replicate_supports,
                                        double threshold, Index rows, Index cols);

LambdaPath resolve_lambda(const RegressionForm& reg, const UoiConfig& cfg);

IntersectionResult intersection_step(const BlockResampler& data, const LambdaPath& lambda, const UoiConfig& cfg);
IntersectionResult intersection_step(const RegressionForm& reg, const UoiConfig& cfg);

FitResult union_step(const BlockResampler& data, const std::vector<Support>& supports, const UoiConfig& cfg);
FitResult union_step(const RegressionForm& reg, const std::vector<Support>& supports, const UoiConfig& cfg);

/// Builds the regression, selects supports, then bags restricted OLS fits.
FitResult uoi_var(const TimeSeries& series, int d, const UoiConfig& cfg);

struct LassoCvConfig {
  std::optional<LambdaPath> lambda;
  int n_lambda = 50;
  double lambda_min_ratio = 1e-3;
  int n_folds = 5;
  LassoOptions lasso;
};

/// Comparator: a single LASSO fit with lambda chosen by contiguous-fold CV,
/// reported in the same FitResult schema.
FitResult lasso_cv_var(const TimeSeries& series, int d, const LassoCvConfig& cfg);

}  // namespace uoivar
