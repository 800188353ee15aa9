#include "uoivar/resample.hpp"

#include "uoivar/errors.hpp"

namespace uoivar {

std::vector<Index> MbbPlan::row_indices() const {
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(n_rows));
  for (Index start : start_indices) {
    for (Index k = 0; k < block_len && static_cast<Index>(rows.size()) < n_rows; ++k) rows.push_back(start + k);
  }
  return rows;
}

MbbPlan mbb_plan(Index n_rows, Index block_len, RngStream& stream) {
  if (n_rows < 1) throw InvalidArgument("bootstrap needs at least one row");
  if (block_len < 1) throw InvalidArgument("block length must be at least 1");
  if (block_len > n_rows) {
    throw InsufficientData("block length " + std::to_string(block_len) + " exceeds " + std::to_string(n_rows) +
                           " rows");
  }
  MbbPlan plan;
  plan.block_len = block_len;
  plan.n_rows = n_rows;
  plan.n_blocks = (n_rows + block_len - 1) / block_len;
  plan.start_indices.reserve(static_cast<std::size_t>(plan.n_blocks));
  const auto upper = static_cast<std::size_t>(n_rows - block_len);
  for (Index b = 0; b < plan.n_blocks; ++b) plan.start_indices.push_back(static_cast<Index>(stream.uniform_index(upper)));
  return plan;
}

RegressionForm mbb_sample(const RegressionForm& reg, const MbbPlan& plan) {
  if (plan.n_rows != reg.n_rows()) throw InvalidArgument("bootstrap plan does not match the regression rows");
  return reg.select_rows(plan.row_indices());
}

TimeSeries mbb_sample(const TimeSeries& series, const MbbPlan& plan) {
  if (plan.n_rows != series.rows()) throw InvalidArgument("bootstrap plan does not match the series length");
  const auto rows = plan.row_indices();
  Matrix out(static_cast<Index>(rows.size()), series.dim());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = series.data().row(rows[r]);
  return TimeSeries(std::move(out), series.labels());
}

EffectiveSample effective_sample(Index block_len, int d) {
  const Index n_star = block_len - d + 1;
  return {std::max<Index>(n_star, 0), block_len < d};
}

EffectiveSample effective_sample(const MbbPlan& plan, int d) { return effective_sample(plan.block_len, d); }

BlockResampler::BlockResampler(RegressionForm reg, Index block_len) : reg_(std::move(reg)), block_len_(block_len) {
  if (block_len_ < 1 || block_len_ > reg_.n_rows()) throw InvalidArgument("block length out of range");
}

BlockResampler::BlockResampler(const TimeSeries& series, int d, Index block_len, bool raw_series)
    : reg_(build_regression(series, d)), block_len_(block_len) {
  if (raw_series) series_ = series;
  const Index n = raw_series ? series.rows() : reg_.n_rows();
  if (block_len_ < 1 || block_len_ > n) throw InvalidArgument("block length out of range");
}

RegressionForm BlockResampler::draw(RngStream& stream) const {
  if (series_) {
    const MbbPlan plan = mbb_plan(series_->rows(), block_len_, stream);
    return build_regression(mbb_sample(*series_, plan), reg_.d());
  }
  return mbb_sample(reg_, mbb_plan(reg_.n_rows(), block_len_, stream));
}

}  // namespace uoivar
