#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace sfwave {

/// Philox-4x32-10 block function (Salmon et al., SC'11).
///
/// Stateless: the output is a pure function of (counter, key), which is what
/// makes replica/step/mode addressing order-independent.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key);

std::uint64_t splitmix64(std::uint64_t x);

/// Streams carved out of one base seed. Each purpose gets its own key so
/// adding a purpose never perturbs the others.
enum class StreamTag : std::uint32_t {
  slow_noise = 1,      // W¹ increments; must not depend on ε
  fast_noise = 2,      // W² increments of the coupled fast process
  fast_diagnostic = 3, // standalone fast-process runs
  invariant = 4,       // μ-sampling trajectory
  inner = 5,           // inner Monte Carlo for F̄ decay / corrector
  outer = 6,           // outer replicas of the corrector
  property = 7,        // random inputs for property checks
};

/// Coordinates of one block of standard normals inside a stream.
struct NoiseAddress {
  std::uint32_t step = 0;
  std::uint32_t sub = 0;
};

/// Keyed normal generator: (key, replica, step, sub, mode) → N(0, 1).
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, StreamTag tag, std::uint64_t salt = 0, std::uint32_t replica = 0);

  [[nodiscard]] RngStream with_replica(std::uint32_t replica) const;
  [[nodiscard]] std::uint32_t replica() const { return replica_; }
  [[nodiscard]] std::uint64_t key() const { return key_; }

  /// Fills `out` with independent standard normals for coordinate `addr`.
  /// Entry i of the same address is identical across calls.
  void normals(NoiseAddress addr, std::span<double> out) const;

  /// Two uniforms in (0, 1) for coordinate (addr, index).
  [[nodiscard]] std::array<double, 2> uniforms(NoiseAddress addr, std::uint32_t index) const;

 private:
  std::uint64_t key_ = 0;
  std::uint32_t replica_ = 0;
};

}  // namespace sfwave
