#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace dataneeds {

// splitmix64 finalizer; used to turn seed paths into engine seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic random stream. The engine is std::mt19937_64 (bit-exact per
// the standard); the uniform/normal mappings are explicit here because the
// standard library distributions are implementation-defined.
//
// Streams are derived from a master seed plus a tag path, so any unit of
// parallel work (an observation, a Monte Carlo iteration, a training run)
// owns a stream that does not depend on execution order.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  static RandomStream derive(std::uint64_t master,
                             std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix64(master);
    for (std::uint64_t tag : path) s = mix64(s ^ tag);
    return RandomStream(s);
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0,1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0,n) by rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal via Box-Muller; the spare is cached within the stream.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Tags for stream derivation paths. Keeping them in one place avoids
// accidental collisions between subsystems sharing a master seed.
namespace stream_tag {
inline constexpr std::uint64_t kSynth = 0x01;
inline constexpr std::uint64_t kAugment = 0x02;
inline constexpr std::uint64_t kWhiten = 0x03;
inline constexpr std::uint64_t kTrain = 0x04;
inline constexpr std::uint64_t kDataset = 0x05;
}  // namespace stream_tag

}  // namespace dataneeds
