#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "svycat/data.hpp"
#include "svycat/mathutil.hpp"
#include "svycat/pg.hpp"
#include "svycat/rng.hpp"

namespace svycat {

struct FitConfig {
  int R = 100;
  int burn_in = 100;
  double sigma2_beta = 100.0;
  double sigma2_gamma = 100.0;
  double a = 0.5;
  double b = 0.5;
  std::uint64_t seed = 0;
};

/// Retained draws, one row per post-burn-in iteration. eta is stored week-major:
/// column (t-1)*m + j holds component j of the week-t spatial effect. phi and
/// sigma2_eta1 are empty for cross-sectional fits.
struct PosteriorDraws {
  Eigen::MatrixXd gamma;
  Eigen::MatrixXd beta;
  Eigen::MatrixXd eta;
  Eigen::VectorXd phi;
  Eigen::VectorXd sigma2_eta;
  Eigen::VectorXd sigma2_eta1;
};

inline void validate_fit_config(const FitConfig& cfg) {
  if (cfg.R < 1) throw std::invalid_argument("FitConfig: R must be >= 1");
  if (cfg.burn_in < 0) throw std::invalid_argument("FitConfig: burn_in must be >= 0");
  if (!(cfg.sigma2_beta > 0.0) || !(cfg.sigma2_gamma > 0.0))
    throw std::invalid_argument("FitConfig: prior variances must be positive");
  if (!(cfg.a > 0.0) || !(cfg.b > 0.0))
    throw std::invalid_argument("FitConfig: inverse-gamma hyperparameters must be positive");
}

namespace gibbs_detail {

constexpr std::uint64_t kTagChain = 1;
constexpr std::uint64_t kTagAugment = 2;
constexpr Eigen::Index kAugmentChunk = 4096;

struct BlockSystem {
  Eigen::MatrixXd Q;
  Eigen::VectorXd lin;
};

/// One PG-augmented sampler over a stick-broken design. Every linear-predictor
/// contribution enters with a plus sign because the design rows already carry
/// the signs, so each coefficient block has the conditional
///   N(Q^{-1} lin, Q^{-1}),  Q = M' Omega M + P,  lin = M'(kappa - Omega r) + coupling,
/// where r is the predictor with the block's own contribution removed.
class Engine {
 public:
  Engine(const StickBrokenDesign& d, const FitConfig& cfg, bool longitudinal)
      : cfg_(cfg),
        longitudinal_(longitudinal),
        T_(d.T),
        g_(d.g),
        q_(d.q),
        m_(d.m),
        chain_(cfg.seed, kTagChain) {
    validate_fit_config(cfg);
    if (longitudinal_ && T_ < 2)
      throw std::invalid_argument("gibbs: longitudinal engine requires T >= 2");

    std::vector<Eigen::Index> act;
    act.reserve(static_cast<std::size_t>(d.n_rows()));
    for (Eigen::Index i = 0; i < d.n_rows(); ++i)
      if (d.trials[i] > 0.0) act.push_back(i);
    na_ = static_cast<Eigen::Index>(act.size());

    X_.resize(na_, q_);
    Psi_.resize(na_, m_);
    kap_.resize(na_);
    shp_.resize(na_);
    u_.resize(static_cast<std::size_t>(na_));
    rowt_.resize(static_cast<std::size_t>(na_));
    for (Eigen::Index i = 0; i < na_; ++i) {
      const Eigen::Index r = act[static_cast<std::size_t>(i)];
      if (q_ > 0) X_.row(i) = d.X.row(r);
      if (m_ > 0) Psi_.row(i) = d.Psi.row(r);
      kap_[i] = d.kappa[r];
      shp_[i] = d.shape[r];
      u_[static_cast<std::size_t>(i)] = g_ > 0 ? d.u_index[static_cast<std::size_t>(r)] : -1;
      rowt_[static_cast<std::size_t>(i)] = d.row_t[static_cast<std::size_t>(r)];
    }

    if (longitudinal_ && m_ > 0) {
      rows_by_t_.assign(static_cast<std::size_t>(T_) + 1, {});
      for (Eigen::Index i = 0; i < na_; ++i)
        rows_by_t_[static_cast<std::size_t>(rowt_[static_cast<std::size_t>(i)])].push_back(i);
      psi_t_.resize(static_cast<std::size_t>(T_) + 1);
      for (int t = 1; t <= T_; ++t) {
        const auto& idx = rows_by_t_[static_cast<std::size_t>(t)];
        auto& P = psi_t_[static_cast<std::size_t>(t)];
        P.resize(static_cast<Eigen::Index>(idx.size()), m_);
        for (std::size_t i = 0; i < idx.size(); ++i) P.row(static_cast<Eigen::Index>(i)) = Psi_.row(idx[i]);
      }
    }

    gamma_ = Eigen::VectorXd::Zero(g_);
    beta_ = Eigen::VectorXd::Zero(q_);
    eta_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_) * T_);
    omega_ = Eigen::VectorXd::Zero(na_);
    lam_ = Eigen::VectorXd::Zero(na_);
  }

  void set_state(const Eigen::VectorXd& gamma, const Eigen::VectorXd& beta,
                 const Eigen::VectorXd& eta, double phi, double s2_eta, double s2_eta1) {
    if (gamma.size() != g_ || beta.size() != q_ || eta.size() != static_cast<Eigen::Index>(m_) * T_)
      throw std::invalid_argument("gibbs: state dimensions do not match the design");
    gamma_ = gamma;
    beta_ = beta;
    eta_ = eta;
    phi_ = phi;
    s2eta_ = s2_eta;
    s2eta1_ = s2_eta1;
    refresh_lambda();
  }

  /// Replace the augmentation variables by their conditional means at the
  /// current state. Diagnostic hook; the sampler itself always draws them.
  void omega_to_conditional_means() {
    refresh_lambda();
    for (Eigen::Index i = 0; i < na_; ++i) omega_[i] = pg_mean(shp_[i], lam_[i]);
  }

  BlockSystem beta_system() const {
    BlockSystem s;
    const Eigen::VectorXd c = kap_ - omega_.cwiseProduct(lam_ - X_ * beta_);
    s.Q = X_.transpose() * omega_.asDiagonal() * X_;
    s.Q.diagonal().array() += 1.0 / cfg_.sigma2_beta;
    s.lin = X_.transpose() * c;
    return s;
  }

  BlockSystem gamma_system() const {
    Eigen::VectorXd qdiag, lin;
    gamma_accumulate(qdiag, lin);
    BlockSystem s;
    s.Q = qdiag.asDiagonal();
    s.lin = lin;
    return s;
  }

  /// Week-t spatial-effect conditional; pass t = 1 for a cross-sectional fit.
  BlockSystem eta_system(int t) const {
    if (!longitudinal_) return eta_system_cs();
    return eta_system_t(t);
  }

  PosteriorDraws run() {
    PosteriorDraws out;
    out.gamma.resize(cfg_.R, g_);
    out.beta.resize(cfg_.R, q_);
    out.eta.resize(cfg_.R, static_cast<Eigen::Index>(m_) * T_);
    out.sigma2_eta.resize(cfg_.R);
    out.phi.resize(longitudinal_ ? cfg_.R : 0);
    out.sigma2_eta1.resize(longitudinal_ ? cfg_.R : 0);

    const long total = static_cast<long>(cfg_.R) + cfg_.burn_in;
    for (long s = 0; s < total; ++s) {
      refresh_lambda();
      draw_omega(s);
      if (longitudinal_) {
        step_phi();
        step_s2eta1();
        step_s2eta_long();
      } else {
        step_s2eta_cs();
      }
      if (q_ > 0) step_beta();
      if (g_ > 0) step_gamma();
      if (m_ > 0) {
        if (!longitudinal_) {
          step_eta_cs();
        } else {
          step_eta_t(1);
          for (int t = 2; t < T_; ++t) step_eta_t(t);
          step_eta_t(T_);
        }
      }
      const long r = s - cfg_.burn_in;
      if (r >= 0) {
        out.gamma.row(r) = gamma_.transpose();
        out.beta.row(r) = beta_.transpose();
        out.eta.row(r) = eta_.transpose();
        out.sigma2_eta[r] = s2eta_;
        if (longitudinal_) {
          out.phi[r] = phi_;
          out.sigma2_eta1[r] = s2eta1_;
        }
      }
    }
    return out;
  }

  Eigen::Index n_active_rows() const { return na_; }

 private:
  void refresh_lambda() {
    if (q_ > 0)
      lam_.noalias() = X_ * beta_;
    else
      lam_.setZero();
    if (g_ > 0)
      for (Eigen::Index i = 0; i < na_; ++i) lam_[i] += gamma_[u_[static_cast<std::size_t>(i)]];
    if (m_ > 0) {
      if (!longitudinal_) {
        lam_.noalias() += Psi_ * eta_;
      } else {
        for (int t = 1; t <= T_; ++t) {
          const auto& idx = rows_by_t_[static_cast<std::size_t>(t)];
          if (idx.empty()) continue;
          const Eigen::VectorXd contrib =
              psi_t_[static_cast<std::size_t>(t)] * eta_.segment(static_cast<Eigen::Index>(t - 1) * m_, m_);
          for (std::size_t i = 0; i < idx.size(); ++i) lam_[idx[i]] += contrib[static_cast<Eigen::Index>(i)];
        }
      }
    }
  }

  /// Rows are conditionally independent, so the augmentation draws use one
  /// substream per fixed-size chunk keyed by (seed, sweep, chunk); the result
  /// does not depend on how many threads execute the loop.
  void draw_omega(long sweep) {
    const Eigen::Index nchunks = (na_ + kAugmentChunk - 1) / kAugmentChunk;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Eigen::Index ch = 0; ch < nchunks; ++ch) {
      RngStream rng(substream_id({cfg_.seed, kTagAugment, static_cast<std::uint64_t>(sweep),
                                  static_cast<std::uint64_t>(ch)}));
      const Eigen::Index hi = std::min(na_, (ch + 1) * kAugmentChunk);
      for (Eigen::Index i = ch * kAugmentChunk; i < hi; ++i)
        omega_[i] = draw_pg(rng, shp_[i], lam_[i]);
    }
  }

  void gamma_accumulate(Eigen::VectorXd& qdiag, Eigen::VectorXd& lin) const {
    qdiag = Eigen::VectorXd::Constant(g_, 1.0 / cfg_.sigma2_gamma);
    lin = Eigen::VectorXd::Zero(g_);
    for (Eigen::Index i = 0; i < na_; ++i) {
      const int j = u_[static_cast<std::size_t>(i)];
      qdiag[j] += omega_[i];
      lin[j] += kap_[i] - omega_[i] * (lam_[i] - gamma_[j]);
    }
  }

  BlockSystem eta_system_cs() const {
    BlockSystem s;
    const Eigen::VectorXd c = kap_ - omega_.cwiseProduct(lam_ - Psi_ * eta_);
    s.Q = Psi_.transpose() * omega_.asDiagonal() * Psi_;
    s.Q.diagonal().array() += 1.0 / s2eta_;
    s.lin = Psi_.transpose() * c;
    return s;
  }

  BlockSystem eta_system_t(int t) const {
    if (t < 1 || t > T_) throw std::invalid_argument("gibbs: eta block week out of range");
    const auto& idx = rows_by_t_[static_cast<std::size_t>(t)];
    const auto& P = psi_t_[static_cast<std::size_t>(t)];
    const Eigen::Index nt = static_cast<Eigen::Index>(idx.size());
    const Eigen::VectorXd et = eta_.segment(static_cast<Eigen::Index>(t - 1) * m_, m_);

    Eigen::VectorXd om(nt), c(nt);
    for (Eigen::Index i = 0; i < nt; ++i) {
      const Eigen::Index r = idx[static_cast<std::size_t>(i)];
      om[i] = omega_[r];
      c[i] = kap_[r] - om[i] * (lam_[r] - P.row(i).dot(et));
    }

    double prior_prec;
    Eigen::VectorXd coupling;
    const double ar = phi_ / s2eta_;
    if (t == 1) {
      prior_prec = 1.0 / s2eta1_ + phi_ * phi_ / s2eta_;
      coupling = ar * eta_.segment(m_, m_);
    } else if (t == T_) {
      prior_prec = 1.0 / s2eta_;
      coupling = ar * eta_.segment(static_cast<Eigen::Index>(T_ - 2) * m_, m_);
    } else {
      prior_prec = (1.0 + phi_ * phi_) / s2eta_;
      coupling = ar * (eta_.segment(static_cast<Eigen::Index>(t - 2) * m_, m_) +
                       eta_.segment(static_cast<Eigen::Index>(t) * m_, m_));
    }

    BlockSystem s;
    s.Q = P.transpose() * om.asDiagonal() * P;
    s.Q.diagonal().array() += prior_prec;
    s.lin = P.transpose() * c + coupling;
    return s;
  }

  void step_beta() {
    const BlockSystem s = beta_system();
    const Eigen::VectorXd next = draw_gaussian_precision(s.Q, s.lin, chain_, "beta");
    lam_.noalias() += X_ * (next - beta_);
    beta_ = next;
  }

  void step_gamma() {
    Eigen::VectorXd qdiag, lin;
    gamma_accumulate(qdiag, lin);
    Eigen::VectorXd next(g_);
    for (int j = 0; j < g_; ++j) next[j] = lin[j] / qdiag[j] + chain_.normal() / std::sqrt(qdiag[j]);
    for (Eigen::Index i = 0; i < na_; ++i) {
      const int j = u_[static_cast<std::size_t>(i)];
      lam_[i] += next[j] - gamma_[j];
    }
    gamma_ = next;
  }

  void step_eta_cs() {
    const BlockSystem s = eta_system_cs();
    const Eigen::VectorXd next = draw_gaussian_precision(s.Q, s.lin, chain_, "eta");
    lam_.noalias() += Psi_ * (next - eta_);
    eta_ = next;
  }

  void step_eta_t(int t) {
    const BlockSystem s = eta_system_t(t);
    const std::string label = "eta_t" + std::to_string(t);
    const Eigen::VectorXd next = draw_gaussian_precision(s.Q, s.lin, chain_, label.c_str());
    const auto& idx = rows_by_t_[static_cast<std::size_t>(t)];
    const auto& P = psi_t_[static_cast<std::size_t>(t)];
    const Eigen::VectorXd delta = next - eta_.segment(static_cast<Eigen::Index>(t - 1) * m_, m_);
    const Eigen::VectorXd contrib = P * delta;
    for (std::size_t i = 0; i < idx.size(); ++i) lam_[idx[i]] += contrib[static_cast<Eigen::Index>(i)];
    eta_.segment(static_cast<Eigen::Index>(t - 1) * m_, m_) = next;
  }

  void step_phi() {
    double num = 0.0, den = 0.0;
    for (int t = 2; t <= T_; ++t) {
      const auto cur = eta_.segment(static_cast<Eigen::Index>(t - 1) * m_, m_);
      const auto prev = eta_.segment(static_cast<Eigen::Index>(t - 2) * m_, m_);
      num += cur.dot(prev);
      den += prev.squaredNorm();
    }
    if (den > 0.0)
      phi_ = trunc_norm_draw(chain_, num / den, std::sqrt(s2eta_ / den), -1.0, 1.0);
    else
      phi_ = 2.0 * chain_.uniform_pos() - 1.0;
  }

  void step_s2eta1() {
    s2eta1_ = chain_.inverse_gamma(cfg_.a + 0.5 * m_, cfg_.b + 0.5 * eta_.head(m_).squaredNorm());
  }

  void step_s2eta_long() {
    double quad = 0.0;
    for (int t = 2; t <= T_; ++t) {
      const auto cur = eta_.segment(static_cast<Eigen::Index>(t - 1) * m_, m_);
      const auto prev = eta_.segment(static_cast<Eigen::Index>(t - 2) * m_, m_);
      quad += (cur - phi_ * prev).squaredNorm();
    }
    s2eta_ = chain_.inverse_gamma(cfg_.a + 0.5 * m_ * (T_ - 1), cfg_.b + 0.5 * quad);
  }

  void step_s2eta_cs() {
    s2eta_ = chain_.inverse_gamma(cfg_.a + 0.5 * m_, cfg_.b + 0.5 * eta_.squaredNorm());
  }

  FitConfig cfg_;
  bool longitudinal_;
  int T_, g_, q_, m_;
  Eigen::Index na_ = 0;

  Eigen::MatrixXd X_, Psi_;
  Eigen::VectorXd kap_, shp_;
  std::vector<int> u_, rowt_;
  std::vector<std::vector<Eigen::Index>> rows_by_t_;
  std::vector<Eigen::MatrixXd> psi_t_;

  Eigen::VectorXd gamma_, beta_, eta_, omega_, lam_;
  double phi_ = 0.0, s2eta_ = 1.0, s2eta1_ = 1.0;
  RngStream chain_;
};

}  // namespace gibbs_detail

/// Cross-sectional ordinal sampler: one week of data, g = K-1 cutpoint slots.
inline PosteriorDraws fit_ordinal_cs(const StickBrokenDesign& design, const FitConfig& cfg) {
  if (design.T != 1)
    throw std::invalid_argument("fit_ordinal_cs: design spans multiple weeks; use fit_ordinal_long");
  if (design.n_rows() == 0) throw std::invalid_argument("fit_ordinal_cs: empty design");
  if (design.g != design.K - 1)
    throw std::invalid_argument("fit_ordinal_cs: design lacks the single-week cutpoint layout");
  gibbs_detail::Engine engine(design, cfg, false);
  return engine.run();
}

/// Longitudinal ordinal sampler with AR(1) week-to-week spatial effects.
inline PosteriorDraws fit_ordinal_long(const StickBrokenDesign& design, const FitConfig& cfg,
                                       int T) {
  if (T == 1 || design.T == 1)
    throw std::invalid_argument(
        "fit_ordinal_long: T = 1 is a single-week problem; use fit_ordinal_cs");
  if (T != design.T) throw std::invalid_argument("fit_ordinal_long: T does not match the design");
  if (design.n_rows() == 0) throw std::invalid_argument("fit_ordinal_long: empty design");
  if (design.g != cutpoint_count(design.K, design.T))
    throw std::invalid_argument("fit_ordinal_long: design lacks the panel cutpoint layout");
  gibbs_detail::Engine engine(design, cfg, true);
  return engine.run();
}

/// Weighted binary logistic sampler (no cutpoint block). Accepts an empty
/// design, in which case every coefficient is drawn from its prior.
inline PosteriorDraws fit_binary(const StickBrokenDesign& design, const FitConfig& cfg,
                                 bool longitudinal) {
  if (design.g != 0)
    throw std::invalid_argument("fit_binary: design must not carry cutpoint slots");
  if (longitudinal && design.T < 2)
    throw std::invalid_argument("fit_binary: longitudinal fit requires T >= 2");
  if (!longitudinal && design.T != 1)
    throw std::invalid_argument("fit_binary: cross-sectional fit requires T = 1");
  gibbs_detail::Engine engine(design, cfg, longitudinal);
  return engine.run();
}

/// Nominal-outcome sampler: one independent binary fit per stick level, every
/// sub-fit run with the same configuration and seed, so permuting the input
/// designs permutes the outputs.
inline std::vector<PosteriorDraws> fit_nominal(const std::vector<StickBrokenDesign>& designs,
                                               const FitConfig& cfg, bool longitudinal) {
  if (designs.empty()) throw std::invalid_argument("fit_nominal: no category designs");
  std::vector<PosteriorDraws> out;
  out.reserve(designs.size());
  for (const auto& d : designs) out.push_back(fit_binary(d, cfg, longitudinal));
  return out;
}

}  // namespace svycat
