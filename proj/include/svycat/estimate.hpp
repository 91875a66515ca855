// Population cell estimation: maps posterior draws to finite-population cell
// proportions by simulating categorical responses over a census frame, and
// provides the weighted direct estimator used as the survey baseline.
#ifndef SVYCAT_ESTIMATE_HPP
#define SVYCAT_ESTIMATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "data.hpp"
#include "gibbs.hpp"
#include "mathutil.hpp"
#include "rng.hpp"

namespace svycat {

/// One census cell: every population unit sharing an area, week, previous-week
/// response tag, and covariate profile. Week-1 cells carry prev = kPrevNone.
struct PopulationCell {
  int area = 1;
  int t = 1;
  int prev = kPrevNone;
  long N = 0;
  Eigen::VectorXd x;
};

struct PopulationFrame {
  int K = 0;
  std::vector<PopulationCell> cells;
};

/// Point estimate with uncertainty for one (area, week, category) cell.
/// missing marks a direct estimate over a cell with no respondents;
/// degenerate marks a direct estimate whose design variance is exactly zero.
struct CellEstimate {
  int area = 0;
  int t = 0;
  int category = 0;
  double point = 0.0;
  double sd = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool missing = false;
  bool degenerate = false;
};

/// Simulated proportions for one (area, week) aggregation cell; row r holds
/// the K-category population mean for posterior draw r.
struct CellDraws {
  int area = 0;
  int t = 0;
  Eigen::MatrixXd means;
};

namespace estimate_detail {

constexpr std::uint64_t kTagGenerate = 3;
constexpr double kStickEps = 1e-12;

inline double clamp_unit(double p) {
  return std::min(1.0 - kStickEps, std::max(kStickEps, p));
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie in (0, 1)");
}

}  // namespace estimate_detail

/// Stick factorization of a probability vector: entry k is the conditional
/// probability of category k given categories >= k. Inverse of reconstruct_pi
/// on strictly positive simplex vectors.
inline Eigen::VectorXd factorize_pi(const Eigen::VectorXd& pi) {
  const Eigen::Index k_cat = pi.size();
  if (k_cat < 2) throw std::invalid_argument("factorize_pi: need at least 2 categories");
  for (Eigen::Index k = 0; k < k_cat; ++k)
    if (!(pi[k] > 0.0)) throw std::invalid_argument("factorize_pi: entries must be strictly positive");
  if (std::abs(pi.sum() - 1.0) > 1e-8)
    throw std::invalid_argument("factorize_pi: entries must sum to 1");
  Eigen::VectorXd out(k_cat - 1);
  double rem = 1.0;
  for (Eigen::Index k = 0; k + 1 < k_cat; ++k) {
    if (!(rem > 0.0)) throw std::invalid_argument("factorize_pi: remaining stick mass vanished");
    out[k] = pi[k] / rem;
    rem -= pi[k];
  }
  return out;
}

/// Rebuilds a K-category probability vector from K-1 stick probabilities in
/// (0,1); the last category receives the remaining stick mass.
inline Eigen::VectorXd reconstruct_pi(const Eigen::VectorXd& pi_tilde) {
  const Eigen::Index k_m1 = pi_tilde.size();
  if (k_m1 < 1) throw std::invalid_argument("reconstruct_pi: need at least 1 stick probability");
  for (Eigen::Index k = 0; k < k_m1; ++k)
    if (!(pi_tilde[k] > 0.0 && pi_tilde[k] < 1.0))
      throw std::invalid_argument("reconstruct_pi: stick probabilities must lie in (0, 1)");
  Eigen::VectorXd pi(k_m1 + 1);
  double rem = 1.0;
  double used = 0.0;
  for (Eigen::Index k = 0; k < k_m1; ++k) {
    pi[k] = pi_tilde[k] * rem;
    rem *= 1.0 - pi_tilde[k];
    used += pi[k];
  }
  pi[k_m1] = std::max(0.0, 1.0 - used);
  return pi;
}

/// Stick probabilities for one unit profile under one ordinal posterior draw:
/// entry k is logit^{-1}(gamma_slot - x'beta - psi'eta_t) for the cutpoint
/// slot (t, prev, k) of a fit with fit_t weeks. Results are clamped away from
/// {0, 1} so reconstruct_pi stays applicable in near-degenerate cells.
inline Eigen::VectorXd predict_pi(const PosteriorDraws& draws, Eigen::Index r,
                                  const Eigen::VectorXd& x, const Eigen::VectorXd& psi,
                                  int t, int prev, int K, int fit_t) {
  if (K < 2) throw std::invalid_argument("predict_pi: K must be >= 2");
  if (fit_t < 1) throw std::invalid_argument("predict_pi: fit_t must be >= 1");
  if (r < 0 || r >= draws.gamma.rows())
    throw std::invalid_argument("predict_pi: draw index out of range");
  if (draws.gamma.cols() != cutpoint_count(K, fit_t))
    throw std::invalid_argument("predict_pi: cutpoint layout does not match (K, fit_t)");
  if (draws.beta.cols() != x.size())
    throw std::invalid_argument("predict_pi: covariate length does not match the fit");
  const Eigen::Index m = psi.size();
  if (draws.eta.cols() != m * fit_t)
    throw std::invalid_argument("predict_pi: basis length does not match the fit");
  const double fixed = x.dot(draws.beta.row(r)) +
                       psi.dot(draws.eta.row(r).segment((t - 1) * m, m));
  Eigen::VectorXd out(K - 1);
  for (int k = 1; k < K; ++k) {
    const int slot = cutpoint_index(t, prev, k, K, fit_t);
    out[k - 1] = estimate_detail::clamp_unit(sigmoid(draws.gamma(r, slot - 1) - fixed));
  }
  return out;
}

/// Stick probabilities under a nominal fit: one binary sub-fit per non-baseline
/// category, linear predictor x'beta_k + psi'eta_tk with no cutpoints.
inline Eigen::VectorXd predict_pi_nominal(const std::vector<PosteriorDraws>& fits,
                                          Eigen::Index r, const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& psi, int t, int fit_t) {
  if (fits.empty()) throw std::invalid_argument("predict_pi_nominal: no category fits");
  if (fit_t < 1) throw std::invalid_argument("predict_pi_nominal: fit_t must be >= 1");
  if (t < 1 || t > fit_t) throw std::invalid_argument("predict_pi_nominal: week out of range");
  const Eigen::Index m = psi.size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(fits.size()));
  for (std::size_t k = 0; k < fits.size(); ++k) {
    const PosteriorDraws& d = fits[k];
    if (d.gamma.cols() != 0)
      throw std::invalid_argument("predict_pi_nominal: sub-fit carries cutpoint draws");
    if (r < 0 || r >= d.beta.rows())
      throw std::invalid_argument("predict_pi_nominal: draw index out of range");
    if (d.beta.cols() != x.size())
      throw std::invalid_argument("predict_pi_nominal: covariate length does not match the fit");
    if (d.eta.cols() != m * fit_t)
      throw std::invalid_argument("predict_pi_nominal: basis length does not match the fit");
    const double lin = x.dot(d.beta.row(r)) +
                       psi.dot(d.eta.row(r).segment((t - 1) * m, m));
    out[static_cast<Eigen::Index>(k)] = estimate_detail::clamp_unit(sigmoid(lin));
  }
  return out;
}

namespace estimate_detail {

/// Shared frame walk: predict takes (r, cell, t_fit, prev_fit) and returns the
/// K-1 stick probabilities for that cell under draw r.
template <class Predict>
inline std::vector<CellDraws> aggregate_frame(const PopulationFrame& frame, int fit_t,
                                              Eigen::Index n_draws, std::uint64_t seed,
                                              Predict&& predict) {
  if (frame.cells.empty()) throw std::invalid_argument("generate_and_aggregate: empty population frame");
  if (frame.K < 2) throw std::invalid_argument("generate_and_aggregate: frame K must be >= 2");
  if (n_draws < 1) throw std::invalid_argument("generate_and_aggregate: no posterior draws");
  const int K = frame.K;

  std::map<std::pair<int, int>, Eigen::Index> group_of;
  std::vector<double> group_n;
  for (const PopulationCell& cell : frame.cells) {
    if (cell.N < 0) throw std::invalid_argument("generate_and_aggregate: negative cell count");
    if (cell.t < 1) throw std::invalid_argument("generate_and_aggregate: week must be >= 1");
    if (fit_t > 1 && cell.t > fit_t)
      throw std::invalid_argument("generate_and_aggregate: frame week past the fitted panel");
    const auto key = std::make_pair(cell.area, cell.t);
    auto [it, fresh] = group_of.try_emplace(key, static_cast<Eigen::Index>(group_n.size()));
    if (fresh) group_n.push_back(0.0);
    group_n[static_cast<std::size_t>(it->second)] += static_cast<double>(cell.N);
  }
  for (double n : group_n)
    if (!(n > 0.0)) throw std::invalid_argument("generate_and_aggregate: aggregation cell has no population");

  std::vector<CellDraws> out(group_n.size());
  for (const auto& [key, idx] : group_of) {
    out[static_cast<std::size_t>(idx)].area = key.first;
    out[static_cast<std::size_t>(idx)].t = key.second;
    out[static_cast<std::size_t>(idx)].means = Eigen::MatrixXd::Zero(n_draws, K);
  }

  std::vector<long> counts(static_cast<std::size_t>(K));
  for (Eigen::Index r = 0; r < n_draws; ++r) {
    RngStream rng(substream_id({seed, kTagGenerate, static_cast<std::uint64_t>(r)}));
    for (const PopulationCell& cell : frame.cells) {
      if (cell.N == 0) continue;
      const int t_fit = fit_t == 1 ? 1 : cell.t;
      const int prev_fit = fit_t == 1 ? kPrevNone : cell.prev;
      const Eigen::VectorXd pi = reconstruct_pi(predict(r, cell, t_fit, prev_fit));
      rng.multinomial(cell.N, pi, K, counts);
      auto& cd = out[static_cast<std::size_t>(group_of.at({cell.area, cell.t}))];
      for (int k = 0; k < K; ++k) cd.means(r, k) += static_cast<double>(counts[static_cast<std::size_t>(k)]);
    }
  }
  for (std::size_t gidx = 0; gidx < out.size(); ++gidx) out[gidx].means /= group_n[gidx];
  return out;
}

}  // namespace estimate_detail

/// Simulates one multinomial response vector per frame cell and posterior
/// draw, then averages within each (area, week) aggregation cell. Draw r uses
/// its own substream of seed, so the loop over draws can be split freely.
/// Cross-sectional fits (fit_t = 1) score every cell through the week-1
/// cutpoint slots; callers slice multi-week frames per week in that case.
inline std::vector<CellDraws> generate_and_aggregate(const PosteriorDraws& draws,
                                                     const PopulationFrame& frame,
                                                     const Eigen::MatrixXd& basis,
                                                     int fit_t, std::uint64_t seed) {
  for (const PopulationCell& cell : frame.cells) {
    if (cell.area < 1 || (basis.rows() > 0 && cell.area > basis.rows()))
      throw std::invalid_argument("generate_and_aggregate: cell area outside the basis");
  }
  return estimate_detail::aggregate_frame(
      frame, fit_t, draws.gamma.rows(), seed,
      [&](Eigen::Index r, const PopulationCell& cell, int t_fit, int prev_fit) {
        return predict_pi(draws, r, cell.x, basis.row(cell.area - 1), t_fit, prev_fit,
                          frame.K, fit_t);
      });
}

/// Nominal counterpart of generate_and_aggregate over the per-category
/// sub-fits; prev tags are ignored because nominal fits carry no cutpoints.
inline std::vector<CellDraws> generate_and_aggregate_nominal(const std::vector<PosteriorDraws>& fits,
                                                             const PopulationFrame& frame,
                                                             const Eigen::MatrixXd& basis,
                                                             int fit_t, std::uint64_t seed) {
  if (fits.empty()) throw std::invalid_argument("generate_and_aggregate: no category fits");
  if (static_cast<int>(fits.size()) + 1 != frame.K)
    throw std::invalid_argument("generate_and_aggregate: sub-fit count does not match frame K");
  for (const PopulationCell& cell : frame.cells) {
    if (cell.area < 1 || (basis.rows() > 0 && cell.area > basis.rows()))
      throw std::invalid_argument("generate_and_aggregate: cell area outside the basis");
  }
  return estimate_detail::aggregate_frame(
      frame, fit_t, fits.front().beta.rows(), seed,
      [&](Eigen::Index r, const PopulationCell& cell, int t_fit, int) {
        return predict_pi_nominal(fits, r, cell.x, basis.row(cell.area - 1), t_fit, fit_t);
      });
}

/// Mean, sample sd, and equal-tailed (alpha/2, 1-alpha/2) quantile interval of
/// per-draw cell means. Keys are left for the caller to stamp.
inline CellEstimate summarize(const std::vector<double>& draws, double alpha = 0.05) {
  if (draws.size() < 2) throw std::invalid_argument("summarize: need at least 2 draws");
  estimate_detail::check_alpha(alpha);
  CellEstimate est;
  const double n = static_cast<double>(draws.size());
  double mean = 0.0;
  for (double v : draws) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : draws) ss += (v - mean) * (v - mean);
  est.point = mean;
  est.sd = std::sqrt(ss / (n - 1.0));
  est.lower = std::min(sample_quantile(draws, alpha / 2.0), mean);
  est.upper = std::max(sample_quantile(draws, 1.0 - alpha / 2.0), mean);
  return est;
}

/// Summaries for every (area, week, category) combination in aggregated draws.
inline std::vector<CellEstimate> summarize_cells(const std::vector<CellDraws>& cells,
                                                 double alpha = 0.05) {
  std::vector<CellEstimate> out;
  std::vector<double> col;
  for (const CellDraws& cd : cells) {
    col.resize(static_cast<std::size_t>(cd.means.rows()));
    for (int k = 0; k < cd.means.cols(); ++k) {
      for (Eigen::Index r = 0; r < cd.means.rows(); ++r)
        col[static_cast<std::size_t>(r)] = cd.means(r, k);
      CellEstimate est = summarize(col, alpha);
      est.area = cd.area;
      est.t = cd.t;
      est.category = k + 1;
      out.push_back(est);
    }
  }
  return out;
}

/// Design-based direct estimator for one cell: Horvitz-Thompson proportion
/// sum(w 1{y=k}) / sum(w) per category (the weighted sample mean, so the
/// K proportions sum to 1), the with-replacement design variance of that
/// ratio, and a t interval (n - 1 degrees of freedom) clamped to [0, 1].
/// N_cell anchors the cell's population size for validation. A cell with no
/// respondents yields missing estimates; zero design variance (all responses
/// identical, or a single respondent) is flagged degenerate.
inline std::vector<CellEstimate> direct_ht(const std::vector<UnitRecord>& records,
                                           double n_cell, int K, double alpha = 0.05) {
  if (K < 2) throw std::invalid_argument("direct_ht: K must be >= 2");
  if (!(n_cell > 0.0)) throw std::invalid_argument("direct_ht: population cell count must be positive");
  estimate_detail::check_alpha(alpha);

  std::vector<CellEstimate> out(static_cast<std::size_t>(K));
  for (int k = 1; k <= K; ++k) {
    CellEstimate& est = out[static_cast<std::size_t>(k - 1)];
    est.category = k;
    if (!records.empty()) {
      est.area = records.front().area;
      est.t = records.front().t;
    }
  }
  if (records.empty()) {
    for (CellEstimate& est : out) {
      est.missing = true;
      est.point = est.sd = est.lower = est.upper = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
  }

  double sumw = 0.0;
  for (const UnitRecord& rec : records) {
    if (!(rec.w > 0.0)) throw std::invalid_argument("direct_ht: weights must be positive");
    if (rec.y < 1 || rec.y > K) throw std::invalid_argument("direct_ht: response outside 1..K");
    sumw += rec.w;
  }
  const double n = static_cast<double>(records.size());
  const double z = t_quantile(1.0 - alpha / 2.0, std::max(1.0, n - 1.0));
  for (int k = 1; k <= K; ++k) {
    CellEstimate& est = out[static_cast<std::size_t>(k - 1)];
    double tot = 0.0;
    for (const UnitRecord& rec : records)
      if (rec.y == k) tot += rec.w;
    est.point = std::min(1.0, std::max(0.0, tot / sumw));
    double var = 0.0;
    if (records.size() > 1) {
      const double p_hajek = tot / sumw;
      double ss = 0.0;
      for (const UnitRecord& rec : records) {
        const double resid = rec.w * ((rec.y == k ? 1.0 : 0.0) - p_hajek);
        ss += resid * resid;
      }
      var = n / (n - 1.0) * ss / (sumw * sumw);
    }
    est.sd = std::sqrt(var);
    est.degenerate = !(est.sd > 0.0);
    est.lower = std::min(est.point, std::max(0.0, est.point - z * est.sd));
    est.upper = std::max(est.point, std::min(1.0, est.point + z * est.sd));
  }
  return out;
}

}  // namespace svycat

#endif
