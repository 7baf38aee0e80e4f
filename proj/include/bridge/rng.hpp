#pragma once

#include <cmath>
#include <cstdint>

namespace bridge {

// Stateless counter-based generator. Every draw is a pure function of
// (seed, stream, counter), so parallel consumers can pull arbitrary counters
// without coordination and replay is exact on any platform.
//
// word() is three rounds of the splitmix64 finalizer chained over the three
// inputs. uniform() keeps the top 53 bits; normal(k) spends the counter pair
// (2k, 2k+1) on one Box-Muller draw.
struct CounterRng {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t word(std::uint64_t counter) const {
    return mix(mix(mix(seed) ^ stream) ^ counter);
  }

  // Uniform on [0,1).
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(word(counter) >> 11) * 0x1.0p-53;
  }

  double uniform(std::uint64_t counter, double lo, double hi) const {
    return lo + (hi - lo) * uniform(counter);
  }

  // Standard normal via Box-Muller; u1 is shifted into (0,1] so log() is safe.
  double normal(std::uint64_t counter) const {
    double u1 = static_cast<double>((word(2 * counter) >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }
};

}  // namespace bridge
