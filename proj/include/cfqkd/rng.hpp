#pragma once

#include <cstdint>

namespace cfqkd {

// Counter-based pseudo-random stream (splitmix64). The state is a plain
// 64-bit counter advanced by a fixed odd increment; every output is a
// bijective mix of the counter, so the stream for any (seed, index) pair is
// reproducible without generating its predecessors. This keeps experiment
// results independent of scheduling and worker count.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) : state_(mix(seed ^ kSeedTag)) {}

  // Independent stream for one unit of work (a protocol round, a bootstrap
  // pass, ...) identified by a stream index.
  static RandomStream for_stream(std::uint64_t seed, std::uint64_t stream_index) {
    RandomStream s(0);
    s.state_ = mix(mix(seed ^ kSeedTag) + kGamma * (stream_index + 1));
    return s;
  }

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix(state_);
  }

  // Uniform double in [0, 1), 53 significant bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Exact at the endpoints: p = 0 never fires, p >= 1 always fires.
  bool bernoulli(double p) { return next_unit() < p; }

  // Uniform bit.
  int coin() { return static_cast<int>(next_u64() >> 63); }

  // UniformRandomBitGenerator interface, for <random> distributions.
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }
  result_type operator()() { return next_u64(); }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kSeedTag = 0x5CF0D3A9B1E22C71ull;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace cfqkd
