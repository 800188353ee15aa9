#include "uoivar/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "uoivar/errors.hpp"
#include "uoivar/uoi.hpp"

namespace uoivar {

double r_squared(const RegressionForm& reg, const Matrix& b) {
  if (b.rows() != reg.coef_rows() || b.cols() != reg.m()) throw InvalidArgument("coefficient shape mismatch");
  const double rss = (reg.y() - reg.u() * b).squaredNorm();
  const double tss = (reg.y().rowwise() - reg.y().colwise().mean()).squaredNorm();
  if (tss == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 1.0 - rss / tss;
}

double bic(const RegressionForm& reg, const Matrix& b) { return fit_metric(b, reg, FitMetricKind::bic).value; }

SelectionScore selection_score(const Support& estimated, const Support& truth) {
  if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols()) {
    throw InvalidArgument("supports have different shapes");
  }
  SelectionScore s;
  for (Index j = 0; j < truth.cols(); ++j) {
    for (Index i = 1; i < truth.rows(); ++i) {
      const bool e = estimated.contains(i, j), t = truth.contains(i, j);
      if (e && t) ++s.tp;
      else if (e) ++s.fp;
      else if (t) ++s.fn;
      else ++s.tn;
    }
  }
  // an empty class is classified perfectly by convention
  s.sensitivity = s.tp + s.fn > 0 ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn) : 1.0;
  s.specificity = s.tn + s.fp > 0 ? static_cast<double>(s.tn) / static_cast<double>(s.tn + s.fp) : 1.0;
  s.balanced_accuracy = 0.5 * (s.sensitivity + s.specificity);
  return s;
}

TimeSeries forecast_one_step(const TimeSeries& series, const Matrix& b, int d) {
  const Index m = series.dim();
  if (d < 1 || b.rows() != d * m + 1 || b.cols() != m) throw InvalidArgument("model does not match the series dimension");
  if (series.rows() < d + 1) throw InsufficientData("not enough history to forecast");
  const Matrix& x = series.data();
  const Index n = series.rows() - d;
  Matrix out(n, m);
  for (Index r = 0; r < n; ++r) {
    const Index t = r + d;
    Eigen::RowVectorXd pred = b.row(0);
    for (int k = 1; k <= d; ++k) pred.noalias() += x.row(t - k) * b.middleRows(1 + (k - 1) * m, m);
    out.row(r) = pred;
  }
  return TimeSeries(std::move(out), series.labels());
}

TimeSeries forecast_one_step(const TimeSeries& series, const VarParams& params) {
  return forecast_one_step(series, params.coefficients(), params.d());
}

ForecastError rmse_forecast(const TimeSeries& actual, const TimeSeries& predicted) {
  if (actual.rows() != predicted.rows() || actual.dim() != predicted.dim()) {
    throw InvalidArgument("actual and predicted series are not aligned");
  }
  const Matrix err = actual.data() - predicted.data();
  const double n = static_cast<double>(err.rows());
  ForecastError out;
  out.overall = std::sqrt(err.squaredNorm() / (n * static_cast<double>(err.cols())));
  for (Index j = 0; j < err.cols(); ++j) out.per_component.push_back(std::sqrt(err.col(j).squaredNorm() / n));
  out.mean_raw_error = err.mean();
  return out;
}

GrangerGraph granger_graph(const Matrix& b_hat, int d, Index m, double tol, std::vector<std::string> labels) {
  if (d < 1 || b_hat.rows() != d * m + 1 || b_hat.cols() != m) throw InvalidArgument("coefficient shape mismatch");
  GrangerGraph g;
  if (labels.empty()) {
    for (Index i = 0; i < m; ++i) labels.push_back("x" + std::to_string(i + 1));
  } else if (static_cast<Index>(labels.size()) != m) {
    throw InvalidArgument("label count does not match the dimension");
  }
  g.nodes = std::move(labels);
  g.in_degree.assign(static_cast<std::size_t>(m), 0);
  g.out_degree.assign(static_cast<std::size_t>(m), 0);
  // B row 1 + k M + i, column j holds (A_{k+1})_{ji}: lagged i drives j
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) {
      double best = 0.0;
      for (int k = 0; k < d; ++k) best = std::max(best, std::abs(b_hat(1 + k * m + i, j)));
      if (best > tol) {
        g.edges.push_back({i, j, best});
        ++g.out_degree[static_cast<std::size_t>(i)];
        ++g.in_degree[static_cast<std::size_t>(j)];
      }
    }
  }
  return g;
}

namespace {

std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string to_dot(const GrangerGraph& graph) {
  std::ostringstream os;
  os << "digraph granger {\n";
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) os << "  n" << i << " [label=" << dot_quote(graph.nodes[i]) << "];\n";
  for (const auto& e : graph.edges) os << "  n" << e.source << " -> n" << e.target << ";\n";
  os << "}\n";
  return os.str();
}

}  // namespace uoivar
