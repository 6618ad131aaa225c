#include "sfwave/rng.hpp"

#include <cmath>
#include <numbers>

namespace sfwave {

namespace {

constexpr std::uint32_t kMulA = 0xD2511F53u;
constexpr std::uint32_t kMulB = 0xCD9E8D57u;
constexpr std::uint32_t kWeylA = 0x9E3779B9u;
constexpr std::uint32_t kWeylB = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform strictly inside (0, 1).
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMulA, ctr[0], hi0, lo0);
    mulhilo(kMulB, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeylA;
    key[1] += kWeylB;
  }
  return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, StreamTag tag, std::uint64_t salt, std::uint32_t replica)
    : key_(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(tag) ^ splitmix64(salt)))),
      replica_(replica) {}

RngStream RngStream::with_replica(std::uint32_t replica) const {
  RngStream r = *this;
  r.replica_ = replica;
  return r;
}

std::array<double, 2> RngStream::uniforms(NoiseAddress addr, std::uint32_t index) const {
  const PhiloxKey k{static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)};
  const auto out = philox4x32({index, addr.sub, addr.step, replica_}, k);
  return {to_open_unit(out[0], out[1]), to_open_unit(out[2], out[3])};
}

void RngStream::normals(NoiseAddress addr, std::span<double> out) const {
  // Box–Muller, two normals per Philox block.
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; i += 2) {
    const auto u = uniforms(addr, static_cast<std::uint32_t>(i / 2));
    const double r = std::sqrt(-2.0 * std::log(u[0]));
    const double theta = 2.0 * std::numbers::pi * u[1];
    out[i] = r * std::cos(theta);
    if (i + 1 < n) out[i + 1] = r * std::sin(theta);
  }
}

}  // namespace sfwave
