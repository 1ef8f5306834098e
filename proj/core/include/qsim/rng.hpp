#pragma once

#include <cstdint>

namespace qsim {

/// Counter-free deterministic RNG: xoshiro256++ seeded through splitmix64.
///
/// Stream derivation rule: stream k of master seed s starts from
/// z = s XOR (k+1)*0x9E3779B97F4A7C15, and the four state words are four
/// successive splitmix64 outputs of z. Trajectory i of an ensemble always
/// uses stream i, so results do not depend on thread count or scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t master_seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53-bit resolution.
  double uniform();

  /// Uniform double in (0, 1); rejects exact zeros deterministically.
  double uniform_pos();

  /// Standard normal via Box-Muller (second value of each pair is cached).
  double normal();

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// splitmix64 single step: advances `state` and returns the next output.
std::uint64_t splitmix64_next(std::uint64_t& state);

}  // namespace qsim
