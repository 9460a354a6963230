#pragma once

#include <array>
#include <cstdint>

namespace tvcn {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// Output is a pure function of (counter, key), so any draw can be produced
/// independently of every other draw and of the thread that computes it.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key);
};

/// Standard normal variate keyed by (seed, stream, index), via Box-Muller on
/// two 53-bit uniforms taken from one Philox block.
double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// SplitMix64 finaliser; used to derive per-replication seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

/// Stream tags separating the independent uses of one seed.
namespace streams {
inline constexpr std::uint64_t simulation = 0x5349'4d00'0000'0000ULL;
inline constexpr std::uint64_t bootstrap = 0x424f'4f54'0000'0000ULL;
}  // namespace streams

}  // namespace tvcn
