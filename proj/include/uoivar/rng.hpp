#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace uoivar {

/// Purpose tags used when deriving child streams, so that independent
/// consumers of the same seed never share a random sequence.
enum class StreamTag : std::uint64_t {
  params = 1,
  series = 2,
  intersection = 3,
  union_train = 4,
  union_test = 5,
  retry = 6,
  cv = 7,
  fit = 8,
};

/// A seeded pseudo-random stream.
///
/// Children are derived from (seed, index, tag) only, never from how much of
/// the parent has been consumed. This is what makes bootstrap replicates
/// reproducible regardless of execution order or worker count.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  RngStream derive(std::uint64_t index, StreamTag tag) const;

  double normal();
  double uniform();  // [0, 1)
  /// Uniform integer on {0, ..., upper} (inclusive).
  std::size_t uniform_index(std::size_t upper);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t tag);

}  // namespace uoivar
