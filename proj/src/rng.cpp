#include "srdlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace srd {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

struct Ctr4 {
  std::uint32_t v[4];
};

inline void round_once(Ctr4& c, std::uint32_t k0, std::uint32_t k1) {
  std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c.v[0];
  std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c.v[2];
  std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  Ctr4 out;
  out.v[0] = hi1 ^ c.v[1] ^ k0;
  out.v[1] = lo1;
  out.v[2] = hi0 ^ c.v[3] ^ k1;
  out.v[3] = lo0;
  c = out;
}

inline Ctr4 philox10(Ctr4 c, std::uint32_t k0, std::uint32_t k1) {
  for (int r = 0; r < 10; ++r) {
    round_once(c, k0, k1);
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return c;
}

// top 53 bits, shifted into (0,1)
inline double u64_to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

}  // namespace

RngBlock CounterRng::block(std::uint64_t stream, std::uint64_t counter) const {
  Ctr4 c{{static_cast<std::uint32_t>(counter),
          static_cast<std::uint32_t>(counter >> 32),
          static_cast<std::uint32_t>(stream),
          static_cast<std::uint32_t>(stream >> 32)}};
  Ctr4 r = philox10(c, static_cast<std::uint32_t>(seed_),
                    static_cast<std::uint32_t>(seed_ >> 32));
  return RngBlock{r.v[0] | (static_cast<std::uint64_t>(r.v[1]) << 32),
                  r.v[2] | (static_cast<std::uint64_t>(r.v[3]) << 32)};
}

double CounterRng::uniform(std::uint64_t stream, std::uint64_t counter) const {
  return u64_to_unit(block(stream, counter).a);
}

std::pair<double, double> CounterRng::normal_pair(std::uint64_t stream,
                                                  std::uint64_t counter) const {
  RngBlock b = block(stream, counter);
  double u1 = u64_to_unit(b.a);
  double u2 = u64_to_unit(b.b);
  double r = std::sqrt(-2.0 * std::log(u1));
  double phi = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(phi), r * std::sin(phi)};
}

}  // namespace srd
