#pragma once

#include <string>
#include <vector>

#include "uoivar/varcore.hpp"

namespace uoivar {

/// 1 - ||Y - U B||^2 / ||Y - 1 ybar^T||^2. NaN when Y has no variation.
double r_squared(const RegressionForm& reg, const Matrix& b);

/// N ln det(Sigma_ML) + nnz(B) ln N on the given data.
double bic(const RegressionForm& reg, const Matrix& b);

/// Zero/nonzero classification counts over transition (penalized) positions.
struct SelectionScore {
  Index tp = 0, fp = 0, tn = 0, fn = 0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double balanced_accuracy = 0.0;
};

SelectionScore selection_score(const Support& estimated, const Support& truth);

/// One-step forecasts X_hat_t = nu + sum_d A_d X_{t-d} for t = d..T, one row per t.
TimeSeries forecast_one_step(const TimeSeries& series, const Matrix& b, int d);
TimeSeries forecast_one_step(const TimeSeries& series, const VarParams& params);

struct ForecastError {
  double overall = 0.0;               // sqrt of the pooled mean squared error
  std::vector<double> per_component;  // RMSE per column
  double mean_raw_error = 0.0;        // mean of (actual - predicted)
};

ForecastError rmse_forecast(const TimeSeries& actual, const TimeSeries& predicted);

struct GrangerEdge {
  Index source = 0;
  Index target = 0;
  double max_abs_coef = 0.0;
};

struct GrangerGraph {
  std::vector<std::string> nodes;
  std::vector<GrangerEdge> edges;  // ordered by (source, target)
  std::vector<Index> in_degree;
  std::vector<Index> out_degree;
};

/// Edge i -> j whenever |(A_d)_{ji}| > tol for some lag d.
GrangerGraph granger_graph(const Matrix& b_hat, int d, Index m, double tol = 0.0,
                           std::vector<std::string> labels = {});

std::string to_dot(const GrangerGraph& graph);

}  // namespace uoivar
