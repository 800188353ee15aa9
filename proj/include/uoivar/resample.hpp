#pragma once

#include <optional>
#include <vector>

#include "uoivar/rng.hpp"
#include "uoivar/varcore.hpp"

namespace uoivar {

/// A moving-block bootstrap draw: ceil(N / L) uniformly chosen block starts,
/// concatenated in draw order and truncated to N rows.
struct MbbPlan {
  Index block_len = 0;
  Index n_rows = 0;
  Index n_blocks = 0;
  std::vector<Index> start_indices;  // each in [0, N - L]

  /// The N source rows of the bootstrap sample, in sample order.
  std::vector<Index> row_indices() const;
};

MbbPlan mbb_plan(Index n_rows, Index block_len, RngStream& stream);

/// Bootstrap sample made of whole (y, u) row pairs.
RegressionForm mbb_sample(const RegressionForm& reg, const MbbPlan& plan);

/// Bootstrap sample of the raw series rows (plan.n_rows must equal series.rows()).
TimeSeries mbb_sample(const TimeSeries& series, const MbbPlan& plan);

struct EffectiveSample {
  Index n_star = 0;        // L - D + 1, floored at zero
  bool unsupported = false;  // block shorter than the lag order
};

EffectiveSample effective_sample(const MbbPlan& plan, int d);
EffectiveSample effective_sample(Index block_len, int d);

/// Draws bootstrap regressions either from regression row pairs (default) or
/// by resampling raw series blocks and rebuilding the regression, which
/// introduces seam rows whose lag windows straddle two blocks.
class BlockResampler {
 public:
  BlockResampler(RegressionForm reg, Index block_len);
  BlockResampler(const TimeSeries& series, int d, Index block_len, bool raw_series);

  const RegressionForm& original() const noexcept { return reg_; }
  Index block_len() const noexcept { return block_len_; }
  bool raw_series() const noexcept { return series_.has_value(); }

  RegressionForm draw(RngStream& stream) const;

 private:
  RegressionForm reg_;
  std::optional<TimeSeries> series_;
  Index block_len_;
};

}  // namespace uoivar
