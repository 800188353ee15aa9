#include "uoivar/uoi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "uoivar/errors.hpp"
#include "uoivar/metrics.hpp"
#include "uoivar/parallel.hpp"

namespace uoivar {

FitMetricKind parse_fit_metric(const std::string& name) {
  if (name == "mse") return FitMetricKind::mse;
  if (name == "bic") return FitMetricKind::bic;
  if (name == "neg_loglik") return FitMetricKind::neg_loglik;
  throw InvalidArgument("unknown fit metric '" + name + "'");
}

std::string to_string(FitMetricKind kind) {
  switch (kind) {
    case FitMetricKind::mse: return "mse";
    case FitMetricKind::bic: return "bic";
    case FitMetricKind::neg_loglik: return "neg_loglik";
  }
  return "unknown";
}

void UoiConfig::validate() const {
  if (b1 < 1) throw InvalidArgument("b1 must be at least 1");
  if (b2 < 1) throw InvalidArgument("b2 must be at least 1");
  if (block_len < 1) throw InvalidArgument("block_len must be at least 1");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw InvalidArgument("threshold must lie in (0, 1]");
  if (!lambda) {
    if (n_lambda < 2) throw InvalidArgument("n_lambda must be at least 2");
    if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) throw InvalidArgument("lambda_min_ratio must lie in (0, 1)");
  } else if (lambda->empty()) {
    throw InvalidArgument("lambda path is empty");
  }
  if (n_threads < 1) throw InvalidArgument("n_threads must be at least 1");
  lasso.validate();
}

namespace {

// ln det of a symmetric PSD matrix; regularizes when (near) singular.
double log_det_psd(const Matrix& s, bool& ridged) {
  const Index m = s.rows();
  Eigen::LLT<Matrix> llt(s);
  const double max_diag = s.diagonal().maxCoeff();
  bool ok = llt.info() == Eigen::Success && max_diag > 0.0;
  if (ok) {
    const auto l = llt.matrixLLT().diagonal();
    ok = (l.array().square() > 1e-12 * max_diag).all();
    if (ok) return 2.0 * l.array().log().sum();
  }
  ridged = true;
  const double tr = s.trace();
  const double ridge = tr > 0.0 ? 1e-8 * tr / static_cast<double>(m) : 1e-8;
  Eigen::LLT<Matrix> reg(s + ridge * Matrix::Identity(m, m));
  if (reg.info() != Eigen::Success) throw NumericalError("residual covariance is not positive semidefinite");
  return 2.0 * reg.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

FitScore fit_metric(const Matrix& b, const RegressionForm& test, FitMetricKind kind) {
  if (b.rows() != test.coef_rows() || b.cols() != test.m()) throw InvalidArgument("coefficient shape mismatch");
  const Matrix resid = test.y() - test.u() * b;
  const double n = static_cast<double>(test.n_rows());
  const double m = static_cast<double>(test.m());
  FitScore out;
  if (kind == FitMetricKind::mse) {
    out.value = resid.squaredNorm() / (n * m);
    return out;
  }
  const Matrix s = (resid.transpose() * resid) / n;
  const double log_det = log_det_psd(s, out.ridge_applied);
  if (kind == FitMetricKind::neg_loglik) {
    out.value = 0.5 * n * (m * std::log(2.0 * std::numbers::pi) + log_det + m);
  } else {
    const auto nnz = static_cast<double>((b.array() != 0.0).count());
    out.value = n * log_det + nnz * std::log(n);
  }
  return out;
}

double sparsity_fraction(const Matrix& b, int d, Index m) {
  if (b.rows() != d * m + 1 || b.cols() != m) throw InvalidArgument("coefficient shape mismatch");
  const auto nnz = (b.bottomRows(b.rows() - 1).array() != 0.0).count();
  return 1.0 - static_cast<double>(nnz) / static_cast<double>(d * m * m);
}

std::vector<Support> threshold_supports(const std::vector<std::vector<Support>>& replicate_supports,
                                        double threshold, Index rows, Index cols) {
  if (replicate_supports.empty()) throw NumericalError("no bootstrap replicate produced a support");
  const std::size_t k_len = replicate_supports.front().size();
  const auto used = static_cast<double>(replicate_supports.size());
  const auto need = static_cast<int>(std::ceil(threshold * used - 1e-12));
  std::vector<Support> out;
  out.reserve(k_len);
  std::vector<int> counts(static_cast<std::size_t>(rows * cols));
  for (std::size_t k = 0; k < k_len; ++k) {
    std::fill(counts.begin(), counts.end(), 0);
    for (const auto& rep : replicate_supports)
      for (const auto& [i, j] : rep[k].entries()) ++counts[static_cast<std::size_t>(j * rows + i)];
    Support s = Support::intercepts(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 1; i < rows; ++i)
        if (counts[static_cast<std::size_t>(j * rows + i)] >= need) s.insert(i, j);
    out.push_back(std::move(s));
  }
  return out;
}

LambdaPath resolve_lambda(const RegressionForm& reg, const UoiConfig& cfg) {
  if (cfg.lambda) return *cfg.lambda;
  return lambda_path(reg, cfg.n_lambda, cfg.lambda_min_ratio, cfg.lasso.penalize_intercept);
}

IntersectionResult intersection_step(const BlockResampler& data, const LambdaPath& lambda, const UoiConfig& cfg) {
  cfg.validate();
  const RngStream root(cfg.seed);
  const std::size_t b1 = static_cast<std::size_t>(cfg.b1);
  std::vector<std::optional<std::vector<Support>>> slots(b1);
  std::vector<std::string> notes(b1);

  parallel_for(b1, cfg.n_threads, [&](std::size_t b) {
    const RngStream base = root.derive(b, StreamTag::intersection);
    for (int attempt = 0; attempt < 2; ++attempt) {
      RngStream stream = attempt == 0 ? base : base.derive(1, StreamTag::retry);
      try {
        const RegressionForm sample = data.draw(stream);
        const auto fits = lasso_path_fit(sample, lambda, cfg.lasso);
        if (!std::all_of(fits.begin(), fits.end(), [](const LassoFit& f) { return f.converged; })) {
          throw NumericalError("LASSO path did not converge");
        }
        std::vector<Support> per_k;
        per_k.reserve(fits.size());
        for (const auto& f : fits) per_k.push_back(Support::of(f.coef).penalized_part());
        slots[b] = std::move(per_k);
        return;
      } catch (const Error& e) {
        notes[b] = e.what();
      }
    }
  });

  IntersectionResult out;
  for (std::size_t b = 0; b < b1; ++b) {
    if (slots[b]) {
      out.replicate_supports.push_back(std::move(*slots[b]));
    } else {
      ++out.replicates_dropped;
      out.warnings.push_back("intersection replicate " + std::to_string(b) + " dropped: " + notes[b]);
    }
  }
  out.replicates_used = static_cast<int>(out.replicate_supports.size());
  const RegressionForm& reg = data.original();
  out.supports = threshold_supports(out.replicate_supports, cfg.threshold, reg.coef_rows(), reg.m());
  return out;
}

IntersectionResult intersection_step(const RegressionForm& reg, const UoiConfig& cfg) {
  if (cfg.raw_series_bootstrap) throw InvalidArgument("raw-series bootstrap needs the original series");
  const BlockResampler data(reg, cfg.block_len);
  return intersection_step(data, resolve_lambda(reg, cfg), cfg);
}

namespace {

struct UnionReplicate {
  Matrix coef;
  std::size_t chosen = 0;
  double score = 0.0;
  int rank_deficient = 0;
  int ridged = 0;
};

}  // namespace

FitResult union_step(const BlockResampler& data, const std::vector<Support>& supports, const UoiConfig& cfg) {
  cfg.validate();
  if (supports.empty()) throw InvalidArgument("union step needs at least one candidate support");
  const RegressionForm& reg = data.original();
  for (const auto& s : supports)
    if (s.rows() != reg.coef_rows() || s.cols() != reg.m()) throw InvalidArgument("support shape mismatch");

  // candidate supports are frequently repeated along the path; fit each distinct one once
  std::vector<Support> distinct;
  std::vector<std::size_t> which(supports.size());
  for (std::size_t k = 0; k < supports.size(); ++k) {
    const Support s = supports[k].with_intercepts();
    auto it = std::find(distinct.begin(), distinct.end(), s);
    which[k] = static_cast<std::size_t>(it - distinct.begin());
    if (it == distinct.end()) distinct.push_back(s);
  }

  const RngStream root(cfg.seed);
  const std::size_t b2 = static_cast<std::size_t>(cfg.b2);
  std::vector<std::optional<UnionReplicate>> slots(b2);
  std::vector<std::string> notes(b2);

  parallel_for(b2, cfg.n_threads, [&](std::size_t b) {
    RngStream train_stream = root.derive(b, StreamTag::union_train);
    RngStream test_stream = root.derive(b, StreamTag::union_test);
    RegressionForm train = data.draw(train_stream);
    RegressionForm test = data.draw(test_stream);

    UnionReplicate rep;
    std::vector<std::optional<Matrix>> coefs(distinct.size());
    std::vector<double> scores(distinct.size(), std::numeric_limits<double>::infinity());
    for (std::size_t u = 0; u < distinct.size(); ++u) {
      try {
        auto fit = ols_restricted(train, distinct[u]);
        const auto score = fit_metric(fit.coef, test, cfg.fit_metric);
        rep.rank_deficient += fit.rank_deficient_columns > 0;
        rep.ridged += score.ridge_applied;
        if (std::isfinite(score.value)) {
          scores[u] = score.value;
          coefs[u] = std::move(fit.coef);
        }
      } catch (const Error& e) {
        notes[b] = e.what();
      }
    }
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < supports.size(); ++k) {
      const std::size_t u = which[k];
      if (!coefs[u]) continue;
      if (!best || scores[u] < scores[which[*best]]) best = k;  // ties keep the sparser, earlier candidate
    }
    if (!best) {
      if (notes[b].empty()) notes[b] = "no candidate support produced a finite fit score";
      return;
    }
    rep.chosen = *best;
    rep.score = scores[which[*best]];
    rep.coef = std::move(*coefs[which[*best]]);
    slots[b] = std::move(rep);
  });

  FitResult out;
  out.d = reg.d();
  out.m = reg.m();
  out.supports = supports;
  for (auto& s : out.supports) s = s.with_intercepts();
  out.chosen_k_histogram.assign(supports.size(), 0);
  out.config = cfg;
  if (cfg.lambda) out.lambda = *cfg.lambda;

  Matrix sum = Matrix::Zero(reg.coef_rows(), reg.m());
  auto& diag = out.diagnostics;
  for (std::size_t b = 0; b < b2; ++b) {
    if (!slots[b]) {
      ++diag.b2_dropped;
      diag.warnings.push_back("union replicate " + std::to_string(b) + " dropped: " + notes[b]);
      continue;
    }
    sum += slots[b]->coef;
    ++out.chosen_k_histogram[slots[b]->chosen];
    diag.per_bootstrap_fit_scores.push_back(slots[b]->score);
    diag.rank_deficient_fits += slots[b]->rank_deficient;
    diag.ridge_regularized_scores += slots[b]->ridged;
    ++diag.b2_used;
  }
  if (diag.b2_used == 0) throw NumericalError("every union-step replicate failed");
  out.b_hat = sum / static_cast<double>(diag.b2_used);
  out.sigma_hat = estimate_sigma(reg, out.b_hat);
  diag.r2 = r_squared(reg, out.b_hat);
  diag.bic = bic(reg, out.b_hat);
  diag.sparsity_fraction = sparsity_fraction(out.b_hat, reg.d(), reg.m());
  const auto eff = effective_sample(data.block_len(), reg.d());
  diag.n_star = eff.n_star;
  diag.n_star_unsupported = eff.unsupported;
  return out;
}

FitResult union_step(const RegressionForm& reg, const std::vector<Support>& supports, const UoiConfig& cfg) {
  if (cfg.raw_series_bootstrap) throw InvalidArgument("raw-series bootstrap needs the original series");
  return union_step(BlockResampler(reg, cfg.block_len), supports, cfg);
}

FitResult uoi_var(const TimeSeries& series, int d, const UoiConfig& cfg) {
  cfg.validate();
  const BlockResampler data(series, d, cfg.block_len, cfg.raw_series_bootstrap);
  const LambdaPath lambda = resolve_lambda(data.original(), cfg);
  UoiConfig resolved = cfg;
  resolved.lambda = lambda;

  IntersectionResult inter = intersection_step(data, lambda, resolved);
  FitResult out = union_step(data, inter.supports, resolved);
  out.labels = series.labels();
  out.diagnostics.b1_used = inter.replicates_used;
  out.diagnostics.b1_dropped = inter.replicates_dropped;
  out.diagnostics.warnings.insert(out.diagnostics.warnings.begin(), inter.warnings.begin(), inter.warnings.end());
  return out;
}

FitResult lasso_cv_var(const TimeSeries& series, int d, const LassoCvConfig& cfg) {
  const RegressionForm reg = build_regression(series, d);
  const LambdaPath lambda =
      cfg.lambda ? *cfg.lambda : lambda_path(reg, cfg.n_lambda, cfg.lambda_min_ratio, cfg.lasso.penalize_intercept);
  const CvFit cv = lasso_cv(reg, lambda, cfg.n_folds, cfg.lasso);
  const auto path = lasso_path_fit(reg, lambda, cfg.lasso);

  FitResult out;
  out.method = "lasso_cv";
  out.d = d;
  out.m = reg.m();
  out.labels = series.labels();
  out.lambda = lambda;
  out.cv_folds = cfg.n_folds;
  out.config.lambda = lambda;
  out.config.lasso = cfg.lasso;
  for (const auto& fit : path) out.supports.push_back(Support::of(fit.coef).with_intercepts());
  out.chosen_k_histogram.assign(lambda.size(), 0);
  out.chosen_k_histogram[cv.chosen_index] = 1;
  out.b_hat = path[cv.chosen_index].coef;
  out.sigma_hat = estimate_sigma(reg, out.b_hat);

  auto& diag = out.diagnostics;
  diag.per_bootstrap_fit_scores = cv.cv_error;
  diag.r2 = r_squared(reg, out.b_hat);
  diag.bic = bic(reg, out.b_hat);
  diag.sparsity_fraction = sparsity_fraction(out.b_hat, d, reg.m());
  for (const auto& fit : path)
    if (!fit.converged) diag.warnings.push_back("LASSO path fit did not converge");
  return out;
}

}  // namespace uoivar
