#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "data.hpp"
#include "gibbs.hpp"
#include "mathutil.hpp"
#include "pg.hpp"
#include "rng.hpp"

namespace svycat {

/// Mean-field variational posterior for one stick-broken model. mu stacks the
/// block means in (gamma, beta, eta) order, eta week-major like PosteriorDraws;
/// Sigma is the joint Gaussian covariance from the final sweep. The AR(1)
/// coefficient and the innovation variances keep their own factors: a normal
/// truncated to (-1, 1) and two inverse-gamma laws stored as shape/scale with
/// their expected precisions.
struct VariationalState {
  int g = 0;
  int q = 0;
  int m = 0;
  int T = 1;
  bool longitudinal = false;

  Eigen::VectorXd mu;
  Eigen::MatrixXd Sigma;
  Eigen::VectorXd xi;  // one entry per retained (trials > 0) row

  double loc_phi = 0.0;  // location of the phi factor before truncation
  double sigma2_phi = 1.0 / 3.0;
  double mu_phi = 0.0;
  double mu_phi2 = 1.0 / 3.0;

  double prec_eta = 1.0;   // expected precision of the innovation factor
  double prec_eta1 = 1.0;  // expected precision of the first-week factor
  double ig_shape_eta = 0.0;
  double ig_scale_eta = 0.0;
  double ig_shape_eta1 = 0.0;
  double ig_scale_eta1 = 0.0;
};

/// Per-sweep progress of a coordinate-ascent run. trajectory holds the
/// convergence statistic (max absolute change across block means, the AR(1)
/// mean, and the expected precisions); surrogate holds a monitored objective,
/// the Gaussian entropy plus the expected log pseudo-likelihood at the current
/// tuning points. The surrogate is a tractable stand-in, not the full bound.
struct CaviReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> trajectory;
  std::vector<double> surrogate;
};

namespace vb_detail {

constexpr double kCaviTol = 1e-6;
constexpr int kCaviMaxSweeps = 500;

/// Tuning update for one row: sqrt(c' Sigma c + (c' mu)^2).
inline double xi_row(const Eigen::VectorXd& c, const Eigen::MatrixXd& sigma,
                     const Eigen::VectorXd& mu) {
  const double lin = c.dot(mu);
  return std::sqrt(c.dot(sigma * c) + lin * lin);
}

struct PhiMoments {
  double mean = 0.0;
  double second = 1.0 / 3.0;
};

/// First two moments of N(loc, s2) truncated to (-1, 1).
inline PhiMoments phi_moments(double loc, double s2) {
  const TruncNormMoments m = trunc_norm_moments(loc, std::sqrt(s2), -1.0, 1.0);
  PhiMoments out;
  out.mean = m.mean;
  out.second = m.mean * m.mean + m.var;  // var clamped >= 0 keeps second >= mean^2
  return out;
}

inline double log_2cosh(double x) {
  const double ax = std::fabs(x);
  return ax + std::log1p(std::exp(-2.0 * ax));
}

/// One coordinate-ascent pass over a compacted design. Cross-sectional models
/// refresh the joint Gaussian directly; longitudinal models run the blockwise
/// mean updates (beta, gamma, then each week's spatial block with its AR(1)
/// neighbor coupling), rebuild the joint covariance under the expected
/// tridiagonal chain precision, and refresh the phi and variance factors.
class CaviEngine {
 public:
  CaviEngine(const StickBrokenDesign& d, const FitConfig& cfg, bool longitudinal)
      : cfg_(cfg), longit_(longitudinal), g_(d.g), q_(d.q), m_(d.m), T_(d.T) {
    validate_fit_config(cfg);
    dim_ = g_ + q_ + m_ * T_;
    std::vector<int> keep;
    for (Eigen::Index i = 0; i < d.n_rows(); ++i)
      if (d.trials[i] > 0.0) keep.push_back(static_cast<int>(i));
    na_ = static_cast<Eigen::Index>(keep.size());
    C_.setZero(na_, dim_);
    kap_.resize(na_);
    shp_.resize(na_);
    u_.resize(keep.size());
    if (longit_ && m_ > 0) rows_by_t_.assign(T_, {});
    for (Eigen::Index r = 0; r < na_; ++r) {
      const int i = keep[static_cast<std::size_t>(r)];
      kap_[r] = d.kappa[i];
      shp_[r] = d.shape[i];
      u_[static_cast<std::size_t>(r)] = (g_ > 0) ? d.u_index[i] : -1;
      const int t = d.row_t[i];
      if (g_ > 0) C_(r, d.u_index[i]) = 1.0;
      if (q_ > 0) C_.block(r, g_, 1, q_) = d.X.row(i);
      if (m_ > 0) C_.block(r, g_ + q_ + (t - 1) * m_, 1, m_) = d.Psi.row(i);
      if (longit_ && m_ > 0) rows_by_t_[t - 1].push_back(static_cast<int>(r));
    }
    ctk_ = C_.transpose() * kap_;
    if (longit_ && m_ > 0) {
      psi_t_.resize(T_);
      for (int t = 0; t < T_; ++t) {
        const auto& rows = rows_by_t_[t];
        psi_t_[t].resize(static_cast<Eigen::Index>(rows.size()), m_);
        for (std::size_t j = 0; j < rows.size(); ++j)
          psi_t_[t].row(static_cast<Eigen::Index>(j)) = C_.block(rows[j], g_ + q_ + t * m_, 1, m_);
      }
    }
    omega_.resize(na_);
    lam_.resize(na_);
  }

  VariationalState initial_state() const {
    VariationalState st;
    st.g = g_;
    st.q = q_;
    st.m = m_;
    st.T = T_;
    st.longitudinal = longit_;
    st.mu = Eigen::VectorXd::Zero(dim_);
    st.Sigma = Eigen::MatrixXd::Zero(dim_, dim_);
    st.xi = Eigen::VectorXd::Ones(na_);
    st.prec_eta = cfg_.a / cfg_.b;
    st.prec_eta1 = cfg_.a / cfg_.b;
    st.ig_shape_eta = cfg_.a;
    st.ig_scale_eta = cfg_.b;
    st.ig_shape_eta1 = cfg_.a;
    st.ig_scale_eta1 = cfg_.b;
    return st;
  }

  double sweep(VariationalState& st) {
    for (Eigen::Index i = 0; i < na_; ++i) omega_[i] = pg_mean(shp_[i], st.xi[i]);
    lam_ = C_ * st.mu;

    const Eigen::VectorXd mu_prev = st.mu;
    const double phi_prev = st.mu_phi;
    const double phi2_prev = st.mu_phi2;
    const double pe_prev = st.prec_eta;
    const double pe1_prev = st.prec_eta1;

    Eigen::LLT<Eigen::MatrixXd> joint_llt;

    if (!longit_) {
      Eigen::MatrixXd qmat = C_.transpose() * omega_.asDiagonal() * C_;
      qmat.diagonal().head(g_).array() += 1.0 / cfg_.sigma2_gamma;
      qmat.diagonal().segment(g_, q_).array() += 1.0 / cfg_.sigma2_beta;
      qmat.diagonal().tail(m_).array() += pe_prev;
      joint_llt = spd_llt(qmat, "variational joint precision");
      st.Sigma = joint_llt.solve(Eigen::MatrixXd::Identity(dim_, dim_));
      st.Sigma = (0.5 * (st.Sigma + st.Sigma.transpose())).eval();
      st.mu = joint_llt.solve(ctk_);
      lam_ = C_ * st.mu;
      if (m_ > 0) {
        const double quad =
            st.mu.tail(m_).squaredNorm() + st.Sigma.bottomRightCorner(m_, m_).trace();
        st.ig_shape_eta = cfg_.a + 0.5 * m_;
        st.ig_scale_eta = cfg_.b + 0.5 * quad;
        st.prec_eta = st.ig_shape_eta / st.ig_scale_eta;
      }
    } else {
      if (q_ > 0) {
        const auto x = C_.middleCols(g_, q_);
        Eigen::MatrixXd qb = x.transpose() * omega_.asDiagonal() * x;
        qb.diagonal().array() += 1.0 / cfg_.sigma2_beta;
        const Eigen::VectorXd resid = lam_ - x * st.mu.segment(g_, q_);
        const Eigen::VectorXd lin = x.transpose() * (kap_ - omega_.cwiseProduct(resid));
        const Eigen::VectorXd bnew = spd_llt(qb, "variational beta precision").solve(lin);
        lam_ += x * (bnew - st.mu.segment(g_, q_));
        st.mu.segment(g_, q_) = bnew;
      }
      if (g_ > 0) {
        Eigen::VectorXd qd = Eigen::VectorXd::Constant(g_, 1.0 / cfg_.sigma2_gamma);
        Eigen::VectorXd lin = Eigen::VectorXd::Zero(g_);
        for (Eigen::Index i = 0; i < na_; ++i) {
          const int j = u_[static_cast<std::size_t>(i)];
          qd[j] += omega_[i];
          lin[j] += kap_[i] - omega_[i] * (lam_[i] - st.mu[j]);
        }
        const Eigen::VectorXd gnew = lin.cwiseQuotient(qd);
        for (Eigen::Index i = 0; i < na_; ++i) {
          const int j = u_[static_cast<std::size_t>(i)];
          lam_[i] += gnew[j] - st.mu[j];
        }
        st.mu.head(g_) = gnew;
      }
      if (m_ > 0) {
        sig_eta_.assign(static_cast<std::size_t>(T_), Eigen::MatrixXd());
        for (int t = 1; t <= T_; ++t) {
          const auto& rows = rows_by_t_[t - 1];
          const Eigen::MatrixXd& p = psi_t_[t - 1];
          const Eigen::Index nt = p.rows();
          const int off = g_ + q_ + (t - 1) * m_;
          double pp;
          Eigen::VectorXd coup;
          if (t == 1) {
            pp = pe1_prev + phi2_prev * pe_prev;
            coup = phi_prev * pe_prev * st.mu.segment(off + m_, m_);
          } else if (t < T_) {
            pp = (1.0 + phi2_prev) * pe_prev;
            coup = phi_prev * pe_prev *
                   (st.mu.segment(off - m_, m_) + st.mu.segment(off + m_, m_));
          } else {
            pp = pe_prev;
            coup = phi_prev * pe_prev * st.mu.segment(off - m_, m_);
          }
          Eigen::VectorXd omt(nt), kt(nt), res(nt);
          for (Eigen::Index j = 0; j < nt; ++j) {
            omt[j] = omega_[rows[static_cast<std::size_t>(j)]];
            kt[j] = kap_[rows[static_cast<std::size_t>(j)]];
            res[j] = lam_[rows[static_cast<std::size_t>(j)]];
          }
          res -= p * st.mu.segment(off, m_);
          Eigen::MatrixXd qe = p.transpose() * omt.asDiagonal() * p;
          qe.diagonal().array() += pp;
          const auto llt = spd_llt(qe, "variational eta precision");
          sig_eta_[static_cast<std::size_t>(t - 1)] =
              llt.solve(Eigen::MatrixXd::Identity(m_, m_));
          Eigen::VectorXd enew = llt.solve(p.transpose() * (kt - omt.cwiseProduct(res)) + coup);
          if (t == 1) enew.array() -= enew.mean();
          const Eigen::VectorXd delta = enew - st.mu.segment(off, m_);
          const Eigen::VectorXd dl = p * delta;
          for (Eigen::Index j = 0; j < nt; ++j) lam_[rows[static_cast<std::size_t>(j)]] += dl[j];
          st.mu.segment(off, m_) = enew;
        }
      }

      Eigen::MatrixXd qmat = C_.transpose() * omega_.asDiagonal() * C_;
      qmat.diagonal().head(g_).array() += 1.0 / cfg_.sigma2_gamma;
      qmat.diagonal().segment(g_, q_).array() += 1.0 / cfg_.sigma2_beta;
      for (int t = 1; t <= T_ && m_ > 0; ++t) {
        const int off = g_ + q_ + (t - 1) * m_;
        const double pp = (t == 1)   ? pe1_prev + phi2_prev * pe_prev
                          : (t < T_) ? (1.0 + phi2_prev) * pe_prev
                                     : pe_prev;
        qmat.diagonal().segment(off, m_).array() += pp;
        if (t < T_) {
          for (int j = 0; j < m_; ++j) {
            qmat(off + j, off + m_ + j) -= phi_prev * pe_prev;
            qmat(off + m_ + j, off + j) -= phi_prev * pe_prev;
          }
        }
      }
      joint_llt = spd_llt(qmat, "variational joint precision");
      st.Sigma = joint_llt.solve(Eigen::MatrixXd::Identity(dim_, dim_));
      st.Sigma = (0.5 * (st.Sigma + st.Sigma.transpose())).eval();

      if (m_ > 0) {
        double num = 0.0, shead = 0.0, stail = 0.0;
        for (int t = 1; t <= T_; ++t) {
          const int off = g_ + q_ + (t - 1) * m_;
          const double ee = st.mu.segment(off, m_).squaredNorm() +
                            sig_eta_[static_cast<std::size_t>(t - 1)].trace();
          if (t < T_) {
            num += st.mu.segment(off, m_).dot(st.mu.segment(off + m_, m_));
            shead += ee;
          }
          if (t > 1) stail += ee;
        }
        if (shead > 0.0) {
          const double loc = num / shead;
          const double s2 = 1.0 / (pe_prev * shead);
          const PhiMoments pm = phi_moments(loc, s2);
          st.loc_phi = loc;
          st.sigma2_phi = s2;
          st.mu_phi = pm.mean;
          st.mu_phi2 = pm.second;
        } else {
          st.loc_phi = 0.0;
          st.sigma2_phi = 1.0 / 3.0;
          st.mu_phi = 0.0;
          st.mu_phi2 = 1.0 / 3.0;
        }
        const double quad1 = st.mu.segment(g_ + q_, m_).squaredNorm() + sig_eta_[0].trace();
        st.ig_shape_eta1 = cfg_.a + 0.5 * m_;
        st.ig_scale_eta1 = cfg_.b + 0.5 * quad1;
        st.prec_eta1 = st.ig_shape_eta1 / st.ig_scale_eta1;
        const double quad =
            std::max(stail - 2.0 * st.mu_phi * num + st.mu_phi2 * shead, 0.0);
        st.ig_shape_eta = cfg_.a + 0.5 * m_ * (T_ - 1);
        st.ig_scale_eta = cfg_.b + 0.5 * quad;
        st.prec_eta = st.ig_shape_eta / st.ig_scale_eta;
      }
    }

    const Eigen::MatrixXd w = C_ * st.Sigma;
    double epl = 0.0;
    for (Eigen::Index i = 0; i < na_; ++i) {
      const double x2 = w.row(i).dot(C_.row(i)) + lam_[i] * lam_[i];
      st.xi[i] = std::sqrt(std::max(x2, 0.0));
      epl += kap_[i] * lam_[i] - shp_[i] * log_2cosh(0.5 * st.xi[i]);
    }
    double slog = 0.0;
    const auto& lmat = joint_llt.matrixLLT();
    for (Eigen::Index j = 0; j < dim_; ++j) slog += std::log(lmat(j, j));
    surrogate_ = epl - slog;

    double stat = (dim_ > 0) ? (st.mu - mu_prev).cwiseAbs().maxCoeff() : 0.0;
    stat = std::max(stat, std::fabs(st.prec_eta - pe_prev));
    if (longit_) {
      stat = std::max(stat, std::fabs(st.mu_phi - phi_prev));
      stat = std::max(stat, std::fabs(st.prec_eta1 - pe1_prev));
    }
    return stat;
  }

  double last_surrogate() const { return surrogate_; }

 private:
  FitConfig cfg_;
  bool longit_;
  int g_, q_, m_, T_;
  int dim_ = 0;
  Eigen::Index na_ = 0;

  Eigen::MatrixXd C_;
  Eigen::VectorXd kap_, shp_, ctk_;
  std::vector<int> u_;
  std::vector<std::vector<int>> rows_by_t_;
  std::vector<Eigen::MatrixXd> psi_t_;

  Eigen::VectorXd omega_, lam_;
  std::vector<Eigen::MatrixXd> sig_eta_;
  double surrogate_ = 0.0;
};

inline std::pair<VariationalState, CaviReport> run_cavi(const StickBrokenDesign& d,
                                                        const FitConfig& cfg, bool longitudinal,
                                                        int max_sweeps = kCaviMaxSweeps,
                                                        double tol = kCaviTol) {
  CaviEngine eng(d, cfg, longitudinal);
  VariationalState st = eng.initial_state();
  CaviReport rep;
  for (int it = 1; it <= max_sweeps; ++it) {
    const double stat = eng.sweep(st);
    rep.iterations = it;
    rep.trajectory.push_back(stat);
    rep.surrogate.push_back(eng.last_surrogate());
    if (stat < tol) {
      rep.converged = true;
      break;
    }
  }
  return {std::move(st), rep};
}

}  // namespace vb_detail

/// Cross-sectional ordinal coordinate ascent: one week, g = K-1 cutpoint slots.
inline std::pair<VariationalState, CaviReport> fit_vb_ordinal_cs(const StickBrokenDesign& design,
                                                                 const FitConfig& cfg) {
  if (design.T != 1)
    throw std::invalid_argument(
        "fit_vb_ordinal_cs: design spans multiple weeks; use fit_vb_ordinal_long");
  if (design.n_rows() == 0) throw std::invalid_argument("fit_vb_ordinal_cs: empty design");
  if (design.g != design.K - 1)
    throw std::invalid_argument("fit_vb_ordinal_cs: design lacks the single-week cutpoint layout");
  return vb_detail::run_cavi(design, cfg, false);
}

/// Longitudinal ordinal coordinate ascent with AR(1) week-to-week coupling.
inline std::pair<VariationalState, CaviReport> fit_vb_ordinal_long(const StickBrokenDesign& design,
                                                                   const FitConfig& cfg, int T) {
  if (T == 1 || design.T == 1)
    throw std::invalid_argument(
        "fit_vb_ordinal_long: T = 1 is a single-week problem; use fit_vb_ordinal_cs");
  if (T != design.T)
    throw std::invalid_argument("fit_vb_ordinal_long: T does not match the design");
  if (design.n_rows() == 0) throw std::invalid_argument("fit_vb_ordinal_long: empty design");
  if (design.g != cutpoint_count(design.K, design.T))
    throw std::invalid_argument("fit_vb_ordinal_long: design lacks the panel cutpoint layout");
  return vb_detail::run_cavi(design, cfg, true);
}

/// Longitudinal binary coordinate ascent for one stick level (no cutpoint
/// block); a longitudinal nominal fit is K-1 independent invocations. Accepts
/// an empty design, returning the prior as the variational posterior.
inline std::pair<VariationalState, CaviReport> fit_vb_binary_long(const StickBrokenDesign& design,
                                                                  const FitConfig& cfg, int T) {
  if (design.g != 0)
    throw std::invalid_argument("fit_vb_binary_long: design must not carry cutpoint slots");
  if (T < 2) throw std::invalid_argument("fit_vb_binary_long: longitudinal fit requires T >= 2");
  if (T != design.T)
    throw std::invalid_argument("fit_vb_binary_long: T does not match the design");
  return vb_detail::run_cavi(design, cfg, true);
}

/// Single-week counterpart used for cross-sectional nominal fits.
inline std::pair<VariationalState, CaviReport> fit_vb_binary_cs(const StickBrokenDesign& design,
                                                                const FitConfig& cfg) {
  if (design.g != 0)
    throw std::invalid_argument("fit_vb_binary_cs: design must not carry cutpoint slots");
  if (design.T != 1)
    throw std::invalid_argument("fit_vb_binary_cs: cross-sectional fit requires T = 1");
  return vb_detail::run_cavi(design, cfg, false);
}

/// Monte Carlo draws from a fitted variational posterior: R Gaussian draws
/// from N(mu, Sigma) split into blocks, with phi and the variances drawn from
/// their own factors. Longitudinal states fill phi and sigma2_eta1; otherwise
/// those columns stay empty, matching the sampler's draw layout.
inline PosteriorDraws draw_variational(const VariationalState& state, int R, RngStream& rng) {
  if (R < 1) throw std::invalid_argument("draw_variational: R must be >= 1");
  const Eigen::Index dim = state.g + state.q + state.m * state.T;
  if (state.mu.size() != dim || state.Sigma.rows() != dim || state.Sigma.cols() != dim)
    throw std::invalid_argument("draw_variational: state block dimensions are inconsistent");
  const auto llt = spd_llt(state.Sigma, "variational covariance");
  const Eigen::MatrixXd l = llt.matrixL();

  PosteriorDraws out;
  out.gamma.resize(R, state.g);
  out.beta.resize(R, state.q);
  out.eta.resize(R, state.m * state.T);
  out.sigma2_eta.resize(R);
  if (state.longitudinal) {
    out.phi.resize(R);
    out.sigma2_eta1.resize(R);
  }

  Eigen::VectorXd z(dim);
  for (int r = 0; r < R; ++r) {
    for (Eigen::Index j = 0; j < dim; ++j) z[j] = rng.normal();
    const Eigen::VectorXd v = state.mu + l * z;
    out.gamma.row(r) = v.head(state.g).transpose();
    out.beta.row(r) = v.segment(state.g, state.q).transpose();
    out.eta.row(r) = v.tail(state.m * state.T).transpose();
    if (state.longitudinal) {
      out.phi[r] = trunc_norm_draw(rng, state.loc_phi, std::sqrt(state.sigma2_phi), -1.0, 1.0);
      out.sigma2_eta1[r] = rng.inverse_gamma(state.ig_shape_eta1, state.ig_scale_eta1);
    }
    out.sigma2_eta[r] = rng.inverse_gamma(state.ig_shape_eta, state.ig_scale_eta);
  }
  return out;
}

}  // namespace svycat
