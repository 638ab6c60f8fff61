#pragma once
// Counter-based random numbers (Philox4x32-10). Each draw is a pure function
// of (seed, stream, counter): no mutable state, so results are independent of
// call order and thread scheduling, and any draw can be replayed in isolation.
//
// Stream layout: stream = path << 16 | channel. Channel 0 carries path-level
// scalar draws, channel k (1-based) the per-mode draws of mode k. Path ids
// combine a 16-bit ensemble tag with a 32-bit path index so distinct
// ensembles inside one experiment never share streams.

#include <cstdint>
#include <utility>

namespace srd {

struct RngBlock {
  std::uint64_t a, b;
};

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  RngBlock block(std::uint64_t stream, std::uint64_t counter) const;

  // uniform on the open interval (0,1)
  double uniform(std::uint64_t stream, std::uint64_t counter) const;

  // independent standard normal pair (Box-Muller on one block)
  std::pair<double, double> normal_pair(std::uint64_t stream,
                                        std::uint64_t counter) const;

  double normal(std::uint64_t stream, std::uint64_t counter) const {
    return normal_pair(stream, counter).first;
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

constexpr std::uint64_t stream_id(std::uint64_t path, std::uint32_t channel) {
  return (path << 16) | (channel & 0xffffu);
}

constexpr std::uint64_t path_id(std::uint32_t ensemble, std::uint64_t index) {
  return (static_cast<std::uint64_t>(ensemble) << 32) | index;
}

}  // namespace srd
