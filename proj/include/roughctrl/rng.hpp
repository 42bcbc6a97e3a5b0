#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace roughctrl {

/// Deterministic random stream. All randomness in the library flows from one
/// root seed through named sub-streams so that adding draws to one consumer
/// never perturbs another. The uniform and normal generators are implemented
/// on top of the (fully specified) mt19937_64 engine rather than the
/// implementation-defined std distributions, so output is bit-reproducible
/// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  /// Derive an independent stream from the *root* seed and a label.
  /// Derivation ignores the current engine state by design.
  Rng substream(std::string_view name) const {
    // FNV-1a over the label, mixed with the root seed.
    std::uint64_t h = 1469598103934665603ull ^ seed_;
    for (char c : name) {
      h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
      h *= 1099511628211ull;
    }
    // splitmix64 finalizer to decorrelate nearby labels/seeds.
    h += 0x9e3779b97f4a7c15ull;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
    h ^= h >> 31;
    return Rng(h);
  }

  std::uint64_t root_seed() const { return seed_; }

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (explicit, reproducible).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();  // guard log(0)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace roughctrl
