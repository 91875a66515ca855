// Seeded random streams. Every stochastic routine in the library pulls from an
// RngStream so that a run is fully determined by (seed, stream id) and results
// do not depend on thread count or on standard-library distribution internals.
#ifndef SVYCAT_RNG_HPP
#define SVYCAT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>

namespace svycat {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Collapse a list of labels (seed, purpose tag, iteration, chunk, ...) into a
/// single substream id.
inline std::uint64_t substream_id(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6A09E667F3BCC909ull;
  for (std::uint64_t w : words) {
    std::uint64_t s = h ^ w;
    h = splitmix64(s);
  }
  return h;
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : eng_(substream_id({seed, stream})) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1); never returns an endpoint.
  double uniform_pos() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via the polar method.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  /// Exponential with the given rate.
  double exponential(double rate = 1.0) {
    return -std::log(uniform_pos()) / rate;
  }

  /// Gamma(shape, 1) via Marsaglia-Tsang, boosted for shape < 1.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform_pos(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// InverseGamma(shape, scale): density proportional to x^{-shape-1} e^{-scale/x}.
  double inverse_gamma(double shape, double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("inverse_gamma: scale must be positive");
    return scale / gamma(shape);
  }

  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  /// Binomial(n, p) by geometric waiting times; O(np) but exact.
  long binomial(long n, double p) {
    if (n < 0) throw std::invalid_argument("binomial: n must be nonnegative");
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    if (p > 0.5) return n - binomial(n, 1.0 - p);
    const double log1mp = std::log1p(-p);
    long x = 0;
    long sum = 0;
    for (;;) {
      const long g = static_cast<long>(std::floor(std::log(uniform_pos()) / log1mp)) + 1;
      sum += g;
      if (sum > n) return x;
      ++x;
    }
  }

  /// Multinomial(n, p[0..K-1]) by sequential conditional binomials.
  template <typename PVec, typename OutVec>
  void multinomial(long n, const PVec& p, int K, OutVec&& out) {
    double rest = 1.0;
    long left = n;
    for (int k = 0; k < K - 1; ++k) {
      if (left <= 0 || rest <= 0.0) {
        out[k] = 0;
        continue;
      }
      const double cond = std::min(1.0, std::max(0.0, p[k] / rest));
      const long c = binomial(left, cond);
      out[k] = c;
      left -= c;
      rest -= p[k];
    }
    out[K - 1] = left;
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace svycat

#endif
