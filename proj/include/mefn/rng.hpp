#pragma once

#include <cstdint>
#include <random>

namespace mefn {

/// Deterministic random source. Every draw is derived from a mt19937_64
/// stream through explicit bit-level conversions, so sequences are identical
/// across platforms and standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second variate of each pair is
  /// cached, so draws come in deterministic order.
  double normal();

  /// Gamma(shape, 1). Marsaglia-Tsang squeeze for shape >= 1, and the
  /// U^(1/shape) boost for shape < 1.
  double gamma(double shape);

  /// Unbiased integer in [0, bound), bound >= 1.
  std::uint64_t below(std::uint64_t bound);

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mefn
