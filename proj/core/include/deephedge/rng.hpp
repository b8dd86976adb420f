#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace deephedge {

// SplitMix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of substream `index` under `base`. Every path (and every other consumer
// of randomness, tagged by a distinct salt) draws from its own substream, so
// results do not depend on the order in which paths are generated.
constexpr std::uint64_t substream_seed(std::uint64_t base, std::uint64_t index,
                                       std::uint64_t salt = 0) noexcept {
  return mix64(mix64(base ^ mix64(salt)) + index);
}

// mt19937_64 with an explicit Box-Muller normal transform, so draws do not
// depend on the standard library's unspecified normal_distribution.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform in (0, 1), 53-bit resolution.
  double uniform() {
    double u;
    do {
      u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    } while (u == 0.0);
    return u;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * 3.14159265358979323846 * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace deephedge
