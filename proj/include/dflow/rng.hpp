#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

namespace dflow {

// Deterministic RNG with explicit, implementation-independent distributions.
//
// std::mt19937_64 has a standard-specified output sequence, but the standard
// distribution adaptors (<random> uniform_real/normal) do not, so uniforms are
// built here by bit manipulation and normals by Box-Muller. Streams are
// therefore bit-exact across compilers and platforms.
//
// Substreams: child(key) derives an independent generator from (seed, key)
// via a splitmix64-style finalizer. Deriving per-sample children keyed by
// sample index makes results independent of how work is sharded over workers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the paired deviate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so log(u1) is finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  void fill_normal(std::span<double> out) {
    for (double& v : out) v = normal();
  }

  void fill_uniform(std::span<double> out, double lo, double hi) {
    for (double& v : out) v = uniform(lo, hi);
  }

  // Uniform integer in [0, n). Uses rejection to avoid modulo bias.
  std::uint64_t uniform_index(std::uint64_t n) {
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x > limit);
    return x % n;
  }

  // Independent substream addressed by key. Depends only on (seed, key),
  // never on how much of this stream has been consumed.
  Rng child(std::uint64_t key) const { return Rng(derive_seed(seed_, key)); }

  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) {
    return mix64(seed ^ mix64(key + 0x9e3779b97f4a7c15ULL));
  }

 private:
  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ULL;
    z ^= z >> 33;
    return z;
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dflow
