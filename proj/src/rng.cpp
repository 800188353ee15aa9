#include "uoivar/rng.hpp"

namespace uoivar {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 seeded_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t tag) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ splitmix64(tag * 0x8cb92ba72f3d8dd7ULL));
  return h;
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(seeded_engine(seed)) {}

RngStream RngStream::derive(std::uint64_t index, StreamTag tag) const {
  return RngStream(mix_seed(seed_, index, static_cast<std::uint64_t>(tag)));
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

std::size_t RngStream::uniform_index(std::size_t upper) {
  return std::uniform_int_distribution<std::size_t>(0, upper)(engine_);
}

}  // namespace uoivar
