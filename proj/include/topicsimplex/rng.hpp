#pragma once

#include <cmath>
#include <cstdint>

namespace topics {

// Counter-based generator: the SplitMix64 finalizer applied to an affine
// counter. fork(stream) derives an independent stream from (key, stream)
// only, so replicate r of an experiment can take fork(r) and be reproduced
// in isolation regardless of what the parent generator consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed + kGamma)) {}

  std::uint64_t next() { return mix(key_ + (++ctr_) * kGamma); }

  Rng fork(std::uint64_t stream) const {
    Rng child(*this);
    child.key_ = mix(key_ ^ mix(stream + 0x632be59bd9b4e019ULL));
    child.ctr_ = 0;
    child.hasSpare_ = false;
    return child;
  }

  // Uniform on the open interval (0,1); never returns an endpoint.
  double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Unbiased-in-practice index draw via 128-bit multiply.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  double gaussian() {
    if (hasSpare_) {
      hasSpare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(t);
    hasSpare_ = true;
    return r * std::cos(t);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
  double spare_ = 0.0;
  bool hasSpare_ = false;
};

}  // namespace topics
