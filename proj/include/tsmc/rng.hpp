#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tsmc {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Deterministic random stream. Uniform and normal variates are generated
/// from raw 64-bit engine output so the sequence depends only on the seed,
/// never on library distribution internals.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1); never returns 0, safe under log().
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (one variate per pair of uniforms).
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  /// Integer uniform on {lo, ..., hi} inclusive.
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1ULL;
    return lo + static_cast<int>(next_u64() % span);
  }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent substream from a master seed and up to three
/// context keys (tag, level, particle, ...). Mixing the keys through
/// splitmix64 keeps streams decorrelated, and every consumer owning its own
/// substream makes results independent of evaluation order.
inline RngStream substream(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                           std::uint64_t c = 0, std::uint64_t d = 0) {
  std::uint64_t s = master;
  detail::splitmix64(s);
  s ^= a;
  detail::splitmix64(s);
  s ^= b;
  detail::splitmix64(s);
  s ^= c;
  detail::splitmix64(s);
  s ^= d;
  return RngStream(detail::splitmix64(s));
}

/// Stream tags (first key of substream()) for the engine's RNG consumers.
namespace stream_tag {
inline constexpr std::uint64_t kInit = 0x1;       // prior draws for particle i
inline constexpr std::uint64_t kResample = 0x2;   // per-level resampling
inline constexpr std::uint64_t kKernel = 0x3;     // per-(level, particle) MCMC moves
inline constexpr std::uint64_t kInitState = 0x4;  // per-(particle, batch) x0 draws
inline constexpr std::uint64_t kRefresh = 0x5;    // per-(level, particle, batch) x0 refresh
inline constexpr std::uint64_t kMppi = 0x6;       // per-(particle, update) MPPI noise
inline constexpr std::uint64_t kBatch = 0x7;      // frozen batch for deterministic PO energy
}  // namespace stream_tag

}  // namespace tsmc
