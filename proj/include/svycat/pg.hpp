// Polya-Gamma sampling and moments. PG(b, c) is the weighted infinite gamma
// sum (1/2pi^2) sum_k g_k / ((k-1/2)^2 + c^2/(4pi^2)), g_k ~ Gamma(b, 1).
// Exact draws for unit shape use the alternating-series rejection sampler on
// the tilted Jacobi density (accept/reject between a truncated exponential and
// a truncated inverse-Gaussian proposal); integer shapes sum unit draws;
// fractional parts fall back to a long truncated series; very large shapes use
// a moment-matched normal.
#ifndef SVYCAT_PG_HPP
#define SVYCAT_PG_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "svycat/mathutil.hpp"
#include "svycat/rng.hpp"

namespace svycat {

struct PgParams {
  double b = 1.0;
  double c = 0.0;
};

/// E[PG(b, c)] = b/(2c) tanh(c/2), with the b/4 limit at c = 0.
inline double pg_mean(double b, double c) {
  if (!(b > 0.0) || !std::isfinite(b) || !std::isfinite(c))
    throw std::invalid_argument("pg_mean: b must be positive and (b, c) finite");
  const double ac = std::fabs(c);
  if (ac < 1e-2) {
    const double c2 = c * c;
    return 0.25 * b * (1.0 - c2 / 12.0 + c2 * c2 / 120.0);
  }
  return b / (2.0 * c) * std::tanh(0.5 * c);
}

/// Var[PG(b, c)] = b (2 tanh(c/2) - c sech^2(c/2)) / (4 c^3), limit b/24.
inline double pg_var(double b, double c) {
  if (!(b > 0.0) || !std::isfinite(b) || !std::isfinite(c))
    throw std::invalid_argument("pg_var: b must be positive and (b, c) finite");
  const double ac = std::fabs(c);
  if (ac < 0.05) {
    const double c2 = c * c;
    return b * (1.0 / 24.0 - c2 / 120.0 + 17.0 * c2 * c2 / 13440.0);
  }
  const double h = 0.5 * c;
  const double sech = 1.0 / std::cosh(h);
  return b * (2.0 * std::tanh(h) - c * sech * sech) / (4.0 * c * c * c);
}

namespace pg_detail {

inline constexpr double kTrunc = 0.6366197723675814;  // 2/pi, proposal split point
inline constexpr double kPi2 = 9.869604401089358;     // pi^2

/// Piecewise coefficients a_n(x) of the alternating series for the unit-shape
/// density at the split point t = 2/pi.
inline double aterm(int n, double x) {
  const double np = n + 0.5;
  double logf;
  if (x <= kTrunc) {
    logf = std::log(std::numbers::pi) + std::log(np) +
           1.5 * (std::log(2.0 / std::numbers::pi) - std::log(x)) - 2.0 * np * np / x;
  } else {
    logf = std::log(std::numbers::pi) + std::log(np) - 0.5 * kPi2 * np * np * x;
  }
  return std::exp(logf);
}

/// InverseGaussian(mu, 1) draw.
inline double randinvg(RngStream& rng, double mu) {
  const double u = rng.normal();
  const double v = u * u;
  double out = mu + 0.5 * mu * (mu * v - std::sqrt(4.0 * mu * v + mu * mu * v * v));
  if (rng.uniform() > mu / (mu + out)) out = mu * mu / out;
  return out;
}

/// Draw from the Gamma(1/2)-like tail density restricted to (pi/2, inf),
/// used through its reciprocal for the small-mean inverse-Gaussian branch.
inline double truncgamma(RngStream& rng) {
  const double c = 0.5 * std::numbers::pi;
  for (;;) {
    const double x = rng.exponential() * 2.0 + c;
    const double gx = std::sqrt(0.5 * std::numbers::pi) / std::sqrt(x);
    if (rng.uniform() <= gx) return x;
  }
}

/// Inverse-Gaussian(1/z, 1) restricted to (0, t).
inline double tinvgauss(RngStream& rng, double z, double t) {
  const double mu = 1.0 / z;
  if (mu > t) {
    for (;;) {
      const double x = 1.0 / truncgamma(rng);
      if (std::log(rng.uniform_pos()) < -z * z * 0.5 * x) return x;
    }
  }
  double x = t + 1.0;
  while (x >= t) x = randinvg(rng, mu);
  return x;
}

/// Probability that the proposal draws from the exponential piece (x > t).
inline double exp_piece_ratio(double z) {
  const double t = kTrunc;
  const double k = z * z / 2.0 + kPi2 / 8.0;
  const double log_a = std::log(4.0) - std::log(std::numbers::pi) - z;
  const double log_k = std::log(k);
  const double kt = k * t;
  const double w = std::sqrt(0.5 * std::numbers::pi);
  const double logf1 = log_a + log_norm_cdf(w * (t * z - 1.0)) + log_k + kt;
  const double logf2 = log_a + 2.0 * z + log_norm_cdf(-w * (t * z + 1.0)) + log_k + kt;
  const double p_over_q = std::exp(logf1) + std::exp(logf2);
  return 1.0 / (1.0 + p_over_q);
}

/// Exact PG(1, 2z) draw for halved tilt z >= 0; returns the PG-scaled value.
inline double sample_unit(RngStream& rng, double z, double ratio, double k) {
  for (;;) {
    double x;
    if (rng.uniform() < ratio)
      x = kTrunc + rng.exponential() / k;
    else
      x = tinvgauss(rng, z, kTrunc);

    double sn = aterm(0, x);
    const double u = rng.uniform() * sn;
    int i = 1;
    double sign = -1.0;
    bool even = false;
    for (;;) {
      sn += sign * aterm(i, x);
      if (!even && u <= sn) return 0.25 * x;
      if (even && u > sn) break;
      even = !even;
      sign = -sign;
      ++i;
    }
  }
}

}  // namespace pg_detail

/// Truncated-series draw: the defining gamma sum cut at `truncation` terms.
/// Slightly biased low; used as an independent distributional oracle and as
/// the fractional-shape fallback.
inline double draw_pg_series_oracle(RngStream& rng, double b, double c, int truncation = 200) {
  if (!(b > 0.0) || !std::isfinite(b) || !std::isfinite(c))
    throw std::invalid_argument("draw_pg_series_oracle: b must be positive and (b, c) finite");
  if (truncation < 1) throw std::invalid_argument("draw_pg_series_oracle: truncation must be >= 1");
  const double shift = c * c / (4.0 * pg_detail::kPi2);
  double sum = 0.0;
  for (int k = 1; k <= truncation; ++k) {
    const double d = (k - 0.5) * (k - 0.5) + shift;
    sum += rng.gamma(b) / d;
  }
  return sum / (2.0 * pg_detail::kPi2);
}

inline double draw_pg_series_oracle(RngStream& rng, const PgParams& p, int truncation = 200) {
  return draw_pg_series_oracle(rng, p.b, p.c, truncation);
}

/// One PG(b, c) variate. Integer shapes up to 170 are sums of exact unit
/// draws; non-integer shapes up to 50 add a 200-term series draw for the
/// fractional part; larger shapes use a moment-matched normal clamped at 0.
inline double draw_pg(RngStream& rng, double b, double c) {
  if (!(b > 0.0) || !std::isfinite(b) || !std::isfinite(c))
    throw std::invalid_argument("draw_pg: b must be positive and (b, c) finite");
  const double z = 0.5 * std::fabs(c);
  double intpart;
  const double frac = std::modf(b, &intpart);
  const bool integral = frac == 0.0;

  if ((integral && b <= 170.0) || (!integral && b <= 50.0)) {
    double total = 0.0;
    const long n = static_cast<long>(intpart);
    if (n > 0) {
      const double ratio = pg_detail::exp_piece_ratio(z);
      const double k = z * z / 2.0 + pg_detail::kPi2 / 8.0;
      for (long j = 0; j < n; ++j) total += pg_detail::sample_unit(rng, z, ratio, k);
    }
    if (!integral) total += draw_pg_series_oracle(rng, frac, c, 200);
    return total;
  }
  const double mean = pg_mean(b, c);
  const double sd = std::sqrt(pg_var(b, c));
  return std::max(0.0, mean + sd * rng.normal());
}

inline double draw_pg(RngStream& rng, const PgParams& p) { return draw_pg(rng, p.b, p.c); }

}  // namespace svycat

#endif
