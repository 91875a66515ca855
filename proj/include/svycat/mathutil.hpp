// Scalar special functions, truncated-normal moments, and the SPD linear
// algebra helpers shared by the samplers and the variational updates.
#ifndef SVYCAT_MATHUTIL_HPP
#define SVYCAT_MATHUTIL_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "svycat/rng.hpp"

namespace svycat {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double log1pexp(double x) {
  if (x > 33.0) return x;
  if (x > -37.0) return std::log1p(std::exp(x));
  return std::exp(x);
}

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

/// log Phi(x), accurate into the deep lower tail.
inline double log_norm_cdf(double x) {
  if (x > -37.0) {
    const double c = norm_cdf(x);
    if (c > 0.0) return std::log(c);
  }
  const double x2 = x * x;
  return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

/// Inverse standard normal CDF (Wichura's PPND16 rational approximations).
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("norm_quantile: p must be in [0,1]");
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        q * (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                   6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
               1.3314166789178437745e2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
            5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
          4.2313330701600911252e1) * r + 1.0);
    return num / den;
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
    val = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    val = num / den;
  }
  return (q < 0.0) ? -val : val;
}

/// Student-t quantile with nu > 0 degrees of freedom. Exact closed forms for
/// nu = 1 and 2; otherwise a fourth-order Cornish-Fisher expansion around the
/// normal quantile (relative error under 2e-3 at nu = 3, shrinking fast).
/// Never returns less than the normal quantile for p >= 0.5.
inline double t_quantile(double p, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("t_quantile: nu must be positive");
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("t_quantile: p must be in [0,1]");
  }
  if (p < 0.5) return -t_quantile(1.0 - p, nu);
  if (nu == 1.0) return std::tan(std::numbers::pi * (p - 0.5));
  if (nu == 2.0) {
    const double x = 2.0 * p - 1.0;
    return x * std::sqrt(2.0 / (1.0 - x * x));
  }
  const double z = norm_quantile(p);
  const double z2 = z * z;
  const double z3 = z2 * z;
  const double z5 = z3 * z2;
  const double z7 = z5 * z2;
  const double z9 = z7 * z2;
  const double g1 = (z3 + z) / 4.0;
  const double g2 = (5.0 * z5 + 16.0 * z3 + 3.0 * z) / 96.0;
  const double g3 = (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / 384.0;
  const double g4 = (79.0 * z9 + 776.0 * z7 + 1482.0 * z5 - 1920.0 * z3 - 945.0 * z) / 92160.0;
  const double t = z + g1 / nu + g2 / (nu * nu) + g3 / (nu * nu * nu) + g4 / (nu * nu * nu * nu);
  return std::max(t, z);
}

struct TruncNormMoments {
  double mean = 0.0;
  double second_moment = 0.0;
  double var = 0.0;
};

/// Moments of N(mu, sigma^2) truncated to (lo, hi).
inline TruncNormMoments trunc_norm_moments(double mu, double sigma, double lo, double hi) {
  if (!(sigma > 0.0)) throw std::invalid_argument("trunc_norm_moments: sigma must be positive");
  if (!(lo < hi)) throw std::invalid_argument("trunc_norm_moments: lo must be below hi");
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  double z = norm_cdf(b) - norm_cdf(a);
  z = std::max(z, 1e-300);
  const double pa = norm_pdf(a);
  const double pb = norm_pdf(b);
  const double d1 = (pa - pb) / z;
  const double d2 = (a * pa - b * pb) / z;
  TruncNormMoments m;
  m.mean = mu + sigma * d1;
  m.second_moment = mu * mu + sigma * sigma + 2.0 * mu * sigma * d1 + sigma * sigma * d2;
  m.var = std::max(0.0, m.second_moment - m.mean * m.mean);
  return m;
}

/// Draw from N(mu, sigma^2) truncated to (lo, hi) by CDF inversion.
inline double trunc_norm_draw(RngStream& rng, double mu, double sigma, double lo, double hi) {
  if (!(sigma > 0.0)) throw std::invalid_argument("trunc_norm_draw: sigma must be positive");
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  const double fa = norm_cdf(a);
  const double fb = norm_cdf(b);
  if (fb - fa < 1e-14) {
    // Interval mass too small for inversion; fall back to the nearer bound region.
    for (int it = 0; it < 1000; ++it) {
      const double x = mu + sigma * rng.normal();
      if (x > lo && x < hi) return x;
    }
    return std::clamp(mu, std::nextafter(lo, hi), std::nextafter(hi, lo));
  }
  const double u = fa + rng.uniform_pos() * (fb - fa);
  double x = mu + sigma * norm_quantile(std::min(std::max(u, 1e-300), 1.0 - 1e-16));
  return std::clamp(x, std::nextafter(lo, hi), std::nextafter(hi, lo));
}

/// Cholesky of an SPD matrix with one jittered retry before giving up.
inline Eigen::LLT<Eigen::MatrixXd> spd_llt(const Eigen::MatrixXd& a, const char* label) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  Eigen::MatrixXd jittered = a;
  jittered.diagonal().array() += 1e-10;
  llt.compute(jittered);
  if (llt.info() == Eigen::Success) return llt;
  throw std::runtime_error(std::string("singular conditional precision in block ") + label);
}

inline Eigen::VectorXd spd_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                 const char* label) {
  return spd_llt(a, label).solve(b);
}

inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const char* label) {
  return spd_llt(a, label).solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
}

/// Draw from N(Q^{-1} lin, Q^{-1}) given the precision Q.
inline Eigen::VectorXd draw_gaussian_precision(const Eigen::MatrixXd& q,
                                               const Eigen::VectorXd& lin, RngStream& rng,
                                               const char* label) {
  const auto llt = spd_llt(q, label);
  Eigen::VectorXd mean = llt.solve(lin);
  Eigen::VectorXd z(q.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + llt.matrixU().solve(z);
}

/// Draw from N(mu, Sigma) given the covariance.
inline Eigen::VectorXd draw_gaussian_cov(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                                         RngStream& rng, const char* label) {
  const auto llt = spd_llt(sigma, label);
  Eigen::VectorXd z(mu.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mu + llt.matrixL() * z;
}

/// Equal-tailed sample quantile with linear interpolation between order statistics.
inline double sample_quantile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("sample_quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sample_quantile: p outside [0,1]");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace svycat

#endif
