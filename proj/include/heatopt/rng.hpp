#pragma once

#include <cstdint>
#include <random>

namespace heatopt {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded generator with hand-mapped draws so results do not depend on the
// implementation-defined std:: distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [lo, hi], inclusive
  long long uniform_int(long long lo, long long hi) {
    const double n = static_cast<double>(hi - lo + 1);
    long long k = static_cast<long long>(uniform() * n);
    if (k > hi - lo) k = hi - lo;
    return lo + k;
  }

  // independent substream derived from this generator's seed material
  Rng substream(std::uint64_t stream) {
    return Rng(splitmix64(engine_() ^ splitmix64(stream)));
  }

 private:
  std::mt19937_64 engine_;
};

// Derives a named per-purpose seed from one master seed, so separate
// concerns (init, layouts, dropout) never share a stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose) {
  return splitmix64(splitmix64(master) ^ purpose);
}

}  // namespace heatopt
