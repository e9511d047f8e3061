#pragma once

// Seeded random streams. Every consumer derives an independent stream from
// (master seed, domain, index) so results do not depend on execution order.

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace oakes_hmm {

/// One step of the SplitMix64 finalizer; used only to derive stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

enum class StreamDomain : std::uint64_t {
  random_start = 0x5354415254ULL,  // "START"
  bootstrap = 0x424f4f54ULL,       // "BOOT"
  simulate = 0x53494dULL,          // "SIM"
};

inline std::uint64_t stream_seed(std::uint64_t master, StreamDomain domain,
                                 std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master ^ static_cast<std::uint64_t>(domain)) +
                    splitmix64(index + 1));
}

/// mt19937_64 with portable draws. The standard distributions are avoided
/// because their output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t master, StreamDomain domain, std::uint64_t index)
      : engine_(stream_seed(master, domain, index)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Index drawn from an unnormalized categorical distribution.
  int categorical(const Eigen::Ref<const Eigen::VectorXd>& weights) {
    const double total = weights.sum();
    const double target = uniform() * total;
    double acc = 0.0;
    const int last = static_cast<int>(weights.size()) - 1;
    for (int i = 0; i < last; ++i) {
      acc += weights[i];
      if (target < acc) return i;
    }
    // Land on the last category with positive weight.
    for (int i = last; i > 0; --i)
      if (weights[i] > 0.0) return i;
    return 0;
  }

  /// Draw from a symmetric Dirichlet(1) of the given dimension.
  Eigen::VectorXd dirichlet_flat(int dim) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = -std::log1p(-uniform());
    return v / v.sum();
  }

  /// Standard normal via Box-Muller.
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace oakes_hmm
