#include "svycat/vb.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "svycat/spatial.hpp"

using namespace svycat;
using Catch::Matchers::ContainsSubstring;

namespace {

Eigen::MatrixXd path_basis(int n_areas) {
  AdjacencyGraph g;
  g.n_areas = n_areas;
  for (int i = 1; i < n_areas; ++i) g.edges.push_back({i, i + 1});
  return moran_basis(g).values;
}

std::vector<UnitRecord> gen_cs_ordinal(int n, int K, const Eigen::VectorXd& beta,
                                       const Eigen::VectorXd& gamma, RngStream& rng,
                                       double weight_sd = 0.0) {
  std::vector<UnitRecord> recs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& r = recs[static_cast<std::size_t>(i)];
    r.unit_id = "u" + std::to_string(i);
    r.t = 1;
    r.area = 1;
    r.x.resize(beta.size());
    for (Eigen::Index j = 0; j < beta.size(); ++j) r.x[j] = rng.normal();
    r.w = weight_sd > 0.0 ? std::exp(weight_sd * rng.normal()) : 1.0;
    r.y = K;
    for (int k = 1; k < K; ++k) {
      const double p = sigmoid(gamma[k - 1] - r.x.dot(beta));
      if (rng.bernoulli(p)) {
        r.y = k;
        break;
      }
    }
  }
  return recs;
}

struct PanelTruth {
  Eigen::VectorXd base;  // K-1 level effects
  double persistence = 0.0;
  double phi = 0.0;
  double s2_eta1 = 0.5;
  double s2_eta = 0.5;
};

std::vector<UnitRecord> gen_long_ordinal(int n_units, int K, int T, int n_areas,
                                         const Eigen::MatrixXd& basis, const PanelTruth& truth,
                                         Eigen::MatrixXd* eta_out, RngStream& rng) {
  const Eigen::Index m = basis.cols();
  Eigen::MatrixXd eta(m, T);
  for (Eigen::Index j = 0; j < m; ++j) eta(j, 0) = std::sqrt(truth.s2_eta1) * rng.normal();
  for (int t = 1; t < T; ++t)
    for (Eigen::Index j = 0; j < m; ++j)
      eta(j, t) = truth.phi * eta(j, t - 1) + std::sqrt(truth.s2_eta) * rng.normal();
  if (eta_out) *eta_out = eta;

  std::vector<UnitRecord> recs;
  recs.reserve(static_cast<std::size_t>(n_units) * T);
  for (int i = 0; i < n_units; ++i) {
    const int area = 1 + static_cast<int>(rng.uniform() * n_areas);
    int prev = kPrevNone;
    for (int t = 1; t <= T; ++t) {
      UnitRecord r;
      r.unit_id = "u" + std::to_string(i);
      r.t = t;
      r.area = std::min(area, n_areas);
      r.prev = t == 1 ? kPrevNone : prev;
      r.x.resize(0);
      const double spatial = basis.row(r.area - 1).dot(eta.col(t - 1));
      r.y = K;
      for (int k = 1; k < K; ++k) {
        const double slot = truth.base[k - 1] + (r.prev == k ? truth.persistence : 0.0);
        if (rng.bernoulli(sigmoid(slot - spatial))) {
          r.y = k;
          break;
        }
      }
      prev = r.y;
      recs.push_back(std::move(r));
    }
  }
  return recs;
}

// Two-category panel with time-varying covariates and an AR(1) spatial chain.
std::vector<UnitRecord> gen_long_binary(int n_units, int T, int n_areas,
                                        const Eigen::MatrixXd& basis,
                                        const Eigen::VectorXd& beta, double phi, double s2_eta1,
                                        double s2_eta, RngStream& rng) {
  const Eigen::Index m = basis.cols();
  Eigen::MatrixXd eta(m, T);
  for (Eigen::Index j = 0; j < m; ++j) eta(j, 0) = std::sqrt(s2_eta1) * rng.normal();
  for (int t = 1; t < T; ++t)
    for (Eigen::Index j = 0; j < m; ++j)
      eta(j, t) = phi * eta(j, t - 1) + std::sqrt(s2_eta) * rng.normal();

  std::vector<UnitRecord> recs;
  recs.reserve(static_cast<std::size_t>(n_units) * T);
  for (int i = 0; i < n_units; ++i) {
    const int area = std::min(1 + static_cast<int>(rng.uniform() * n_areas), n_areas);
    int prev = kPrevNone;
    for (int t = 1; t <= T; ++t) {
      UnitRecord r;
      r.unit_id = "u" + std::to_string(i);
      r.t = t;
      r.area = area;
      r.prev = t == 1 ? kPrevNone : prev;
      r.x.resize(beta.size());
      for (Eigen::Index j = 0; j < beta.size(); ++j) r.x[j] = rng.normal();
      const double lin = r.x.dot(beta) + basis.row(area - 1).dot(eta.col(t - 1));
      r.y = rng.bernoulli(sigmoid(lin)) ? 1 : 2;
      prev = r.y;
      recs.push_back(std::move(r));
    }
  }
  return recs;
}

StickBrokenDesign empty_binary_design(int q, int T) {
  StickBrokenDesign d;
  d.K = 2;
  d.T = T;
  d.g = 0;
  d.q = q;
  d.m = 0;
  d.weighted = false;
  d.X.resize(0, q);
  d.Psi.resize(0, 0);
  d.kappa.resize(0);
  d.trials.resize(0);
  d.wt.resize(0);
  d.shape.resize(0);
  return d;
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

TEST_CASE("tuning and response-mean updates match their closed forms", "[vb]") {
  Eigen::VectorXd c(2), mu = Eigen::VectorXd::Zero(2);
  c << 1.0, 1.0;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  REQUIRE(vb_detail::xi_row(c, eye, mu) == Catch::Approx(std::sqrt(2.0)).margin(1e-15));

  mu << 0.3, -0.4;
  Eigen::MatrixXd s(2, 2);
  s << 2.0, 0.5, 0.5, 1.0;
  const double lin = c.dot(mu);
  REQUIRE(vb_detail::xi_row(c, s, mu) ==
          Catch::Approx(std::sqrt(c.dot(s * c) + lin * lin)).margin(1e-14));

  // Response-mean entry at weight 2, tuning point 2.
  REQUIRE(pg_mean(2.0, 2.0) == Catch::Approx(0.5 * std::tanh(1.0)).margin(1e-14));
  REQUIRE(pg_mean(2.0, 2.0) == Catch::Approx(0.38079).margin(1e-5));
  for (double b : {0.5, 1.0, 3.5}) {
    for (double x : {0.2, 1.0, 4.0}) {
      REQUIRE(pg_mean(b, x) == Catch::Approx(b / (2.0 * x) * std::tanh(0.5 * x)).margin(1e-12));
    }
  }
}

TEST_CASE("truncated-normal moment helper matches the closed form", "[vb]") {
  const auto pm = vb_detail::phi_moments(0.0, 1.0);
  REQUIRE(std::fabs(pm.mean) < 1e-15);
  const double expected = 1.0 - 2.0 * norm_pdf(1.0) / (norm_cdf(1.0) - norm_cdf(-1.0));
  REQUIRE(pm.second == Catch::Approx(expected).margin(1e-12));
  REQUIRE(pm.second == Catch::Approx(0.2912).margin(5e-4));
  REQUIRE(pm.second >= pm.mean * pm.mean);

  const auto off = vb_detail::phi_moments(0.8, 0.25);
  REQUIRE(off.mean > 0.0);
  REQUIRE(off.mean < 1.0);
  REQUIRE(off.second >= off.mean * off.mean);
}

TEST_CASE("cross-sectional fit agrees with the sampler and the optimizer", "[vb]") {
  RngStream gen(20240811, 1);
  Eigen::VectorXd beta_true(2), gamma_true(3);
  beta_true << 1.0, -1.0;
  gamma_true << -0.5, 0.0, 0.5;
  const auto recs = gen_cs_ordinal(2000, 4, beta_true, gamma_true, gen);
  Eigen::MatrixXd basis(1, 0);
  const auto d = build_design(recs, basis, false, 4, 1);

  FitConfig cfg;
  cfg.R = 600;
  cfg.burn_in = 300;
  cfg.seed = 7;
  const auto draws = fit_ordinal_cs(d, cfg);
  const Eigen::VectorXd gibbs_beta = draws.beta.colwise().mean();
  const Eigen::VectorXd gibbs_gamma = draws.gamma.colwise().mean();

  const auto [st, rep] = fit_vb_ordinal_cs(d, cfg);
  REQUIRE(rep.converged);
  REQUIRE(rep.iterations <= 500);
  REQUIRE(static_cast<int>(rep.trajectory.size()) == rep.iterations);
  REQUIRE(static_cast<int>(rep.surrogate.size()) == rep.iterations);
  REQUIRE(rep.trajectory.back() < 1e-6);
  REQUIRE(all_finite(rep.trajectory));
  REQUIRE(all_finite(rep.surrogate));

  REQUIRE(st.mu.size() == 5);
  REQUIRE(st.xi.size() == d.n_rows());
  REQUIRE((st.xi.array() > 0.0).all());
  REQUIRE_NOTHROW(spd_llt(st.Sigma, "check"));
  REQUIRE((st.Sigma - st.Sigma.transpose()).cwiseAbs().maxCoeff() < 1e-12);

  for (int j = 0; j < 2; ++j) REQUIRE(std::fabs(st.mu[3 + j] - gibbs_beta[j]) < 0.1);
  for (int j = 0; j < 3; ++j) REQUIRE(std::fabs(st.mu[j] - gibbs_gamma[j]) < 0.1);

  // Independent Newton optimizer on the same rows.
  Eigen::MatrixXd M(d.n_rows(), d.g + d.q);
  Eigen::VectorXd y01(d.n_rows());
  for (Eigen::Index r = 0; r < d.n_rows(); ++r) {
    M.row(r).setZero();
    M(r, d.u_index[static_cast<std::size_t>(r)]) = 1.0;
    M.block(r, d.g, 1, d.q) = d.X.row(r);
    y01[r] = d.kappa[r] / d.wt[r] + 0.5;
  }
  const Eigen::VectorXd th = oracles::mple_logistic(M, y01, d.shape);
  for (int j = 0; j < 5; ++j) REQUIRE(std::fabs(st.mu[j] - th[j]) < 0.1);
}

TEST_CASE("weighted cross-sectional fit tracks the weighted optimizer", "[vb]") {
  RngStream gen(318, 9);
  Eigen::VectorXd beta_true(2), gamma_true(2);
  beta_true << 0.7, -0.4;
  gamma_true << -0.2, 0.4;
  const auto recs = gen_cs_ordinal(2000, 3, beta_true, gamma_true, gen, 0.5);
  Eigen::MatrixXd basis(1, 0);
  const auto d = build_design(recs, basis, true, 3, 1);

  const auto [st, rep] = fit_vb_ordinal_cs(d, FitConfig{});
  REQUIRE(rep.converged);

  Eigen::MatrixXd M(d.n_rows(), d.g + d.q);
  Eigen::VectorXd y01(d.n_rows());
  for (Eigen::Index r = 0; r < d.n_rows(); ++r) {
    M.row(r).setZero();
    M(r, d.u_index[static_cast<std::size_t>(r)]) = 1.0;
    M.block(r, d.g, 1, d.q) = d.X.row(r);
    y01[r] = d.kappa[r] / d.wt[r] + 0.5;
  }
  const Eigen::VectorXd th = oracles::mple_logistic(M, y01, d.shape);
  for (int j = 0; j < 4; ++j) REQUIRE(std::fabs(st.mu[j] - th[j]) < 0.15);
}

TEST_CASE("blockwise sweep keeps the panel invariants", "[vb][panel]") {
  const int n_areas = 5;
  const Eigen::MatrixXd basis = path_basis(n_areas);
  PanelTruth truth;
  truth.base.resize(2);
  truth.base << 0.2, -0.1;
  truth.persistence = 0.3;
  truth.phi = 0.6;
  truth.s2_eta1 = 0.5;
  truth.s2_eta = 0.5;
  RngStream gen(4412, 3);
  const auto recs = gen_long_ordinal(200, 3, 4, n_areas, basis, truth, nullptr, gen);
  const auto d = build_design(recs, basis, false, 3, 4);

  vb_detail::CaviEngine eng(d, FitConfig{}, true);
  auto st = eng.initial_state();
  double stat = 1.0;
  for (int it = 0; it < 60; ++it) {
    stat = eng.sweep(st);
    REQUIRE(std::isfinite(stat));
    REQUIRE(st.mu_phi > -1.0);
    REQUIRE(st.mu_phi < 1.0);
    REQUIRE(st.mu_phi2 - st.mu_phi * st.mu_phi >= -1e-12);
    REQUIRE(st.prec_eta > 0.0);
    REQUIRE(st.prec_eta1 > 0.0);
    REQUIRE(std::isfinite(eng.last_surrogate()));
  }

  const int m = d.m;
  const double eta1_mean = st.mu.segment(d.g + d.q, m).mean();
  REQUIRE(std::fabs(eta1_mean) < 1e-13);
  REQUIRE((st.xi.array() > 0.0).all());
  REQUIRE_NOTHROW(spd_llt(st.Sigma, "check"));
}

TEST_CASE("panel fit recovers the innovation correlation", "[vb][panel]") {
  const int n_areas = 11;
  const Eigen::MatrixXd basis = path_basis(n_areas);
  REQUIRE(basis.cols() == 5);

  PanelTruth truth;
  truth.base.resize(2);
  truth.base << 0.2, -0.1;
  truth.persistence = 0.4;
  truth.phi = 0.8;
  truth.s2_eta1 = 0.5;
  truth.s2_eta = 0.5;

  RngStream gen(20240812, 5);
  const auto recs = gen_long_ordinal(250, 3, 8, n_areas, basis, truth, nullptr, gen);
  const auto d = build_design(recs, basis, false, 3, 8);

  FitConfig cfg;
  cfg.seed = 13;
  const auto [st, rep] = fit_vb_ordinal_long(d, cfg, 8);
  REQUIRE(rep.converged);
  REQUIRE(st.mu_phi > 0.4);
  REQUIRE(st.mu_phi < 1.0);
  REQUIRE(st.mu_phi2 >= st.mu_phi * st.mu_phi);
  REQUIRE(st.sigma2_phi > 0.0);
  REQUIRE(st.prec_eta > 0.0);
  REQUIRE(st.prec_eta1 > 0.0);

  // Sum-to-zero centering of the first-week block survives to the final state.
  REQUIRE(std::fabs(st.mu.segment(d.g + d.q, d.m).mean()) < 1e-13);
}

TEST_CASE("innovation correlation stays in range across replicates", "[vb][panel][heavy]") {
  const int n_areas = 11;
  const Eigen::MatrixXd basis = path_basis(n_areas);
  PanelTruth truth;
  truth.base.resize(2);
  truth.base << 0.2, -0.1;
  truth.persistence = 0.4;
  truth.phi = 0.8;
  truth.s2_eta1 = 1.0;
  truth.s2_eta = 1.0;

  double lo = 1.0, hi = -1.0;
  int converged = 0;
  double worst_tail = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    RngStream gen(60000 + rep, 5);
    const auto recs = gen_long_ordinal(250, 3, 8, n_areas, basis, truth, nullptr, gen);
    const auto d = build_design(recs, basis, false, 3, 8);
    const auto [st, report] = fit_vb_ordinal_long(d, FitConfig{}, 8);
    if (report.converged) {
      ++converged;
    } else {
      worst_tail = std::max(worst_tail, report.trajectory.back());
    }
    lo = std::min(lo, st.mu_phi);
    hi = std::max(hi, st.mu_phi);
  }
  CAPTURE(lo, hi, converged, worst_tail);
  REQUIRE(lo > 0.4);
  REQUIRE(hi < 1.0);
  REQUIRE(converged >= 80);
  REQUIRE(worst_tail < 5e-5);
}

TEST_CASE("binary panel fit matches the sampler", "[vb][panel]") {
  const int n_areas = 5;
  const Eigen::MatrixXd basis = path_basis(n_areas);
  Eigen::VectorXd beta_true(2);
  beta_true << 0.8, -0.5;
  RngStream gen(7812, 11);
  const auto recs = gen_long_binary(400, 4, n_areas, basis, beta_true, 0.6, 0.5, 0.5, gen);
  const auto subs = build_nominal_designs(recs, basis, false, 2, 4);
  REQUIRE(subs.size() == 1);
  REQUIRE(subs[0].g == 0);

  FitConfig cfg;
  cfg.R = 500;
  cfg.burn_in = 250;
  cfg.seed = 23;
  const auto fits = fit_nominal(subs, cfg, true);
  const Eigen::VectorXd gibbs_beta = fits[0].beta.colwise().mean();

  const auto [st, rep] = fit_vb_binary_long(subs[0], cfg, 4);
  REQUIRE(rep.converged);
  REQUIRE(st.g == 0);
  REQUIRE(st.mu.size() == 2 + subs[0].m * 4);
  for (int j = 0; j < 2; ++j) REQUIRE(std::fabs(st.mu[j] - gibbs_beta[j]) < 0.1);
  REQUIRE(st.mu_phi > -1.0);
  REQUIRE(st.mu_phi < 1.0);
}

TEST_CASE("zero-information design returns the prior", "[vb]") {
  const auto d = empty_binary_design(2, 4);
  FitConfig cfg;
  cfg.sigma2_beta = 64.0;
  const auto [st, rep] = fit_vb_binary_long(d, cfg, 4);
  REQUIRE(rep.converged);
  REQUIRE(rep.iterations == 1);
  REQUIRE(st.mu.size() == 2);
  REQUIRE(st.mu.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((st.Sigma - 64.0 * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(st.xi.size() == 0);

  RngStream rng(5, 17);
  const auto draws = draw_variational(st, 500, rng);
  REQUIRE(draws.beta.rows() == 500);
  REQUIRE(draws.gamma.cols() == 0);
  REQUIRE((draws.phi.array() > -1.0).all());
  REQUIRE((draws.phi.array() < 1.0).all());
  REQUIRE(std::fabs(draws.beta.col(0).mean()) < 4.0 * 8.0 / std::sqrt(500.0));
}

TEST_CASE("same configuration is bitwise reproducible", "[vb]") {
  RngStream gen(92, 4);
  Eigen::VectorXd beta_true(1), gamma_true(2);
  beta_true << 0.5;
  gamma_true << 0.0, 0.3;
  const auto recs = gen_cs_ordinal(300, 3, beta_true, gamma_true, gen, 0.4);
  Eigen::MatrixXd basis(1, 0);
  const auto d = build_design(recs, basis, true, 3, 1);

  const auto [sa, ra] = fit_vb_ordinal_cs(d, FitConfig{});
  const auto [sb, rb] = fit_vb_ordinal_cs(d, FitConfig{});
  REQUIRE((sa.mu - sb.mu).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((sa.Sigma - sb.Sigma).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((sa.xi - sb.xi).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(sa.prec_eta == sb.prec_eta);
  REQUIRE(ra.iterations == rb.iterations);
  REQUIRE(ra.trajectory == rb.trajectory);

  RngStream r1(41, 3), r2(41, 3);
  const auto da = draw_variational(sa, 50, r1);
  const auto db = draw_variational(sb, 50, r2);
  REQUIRE((da.beta - db.beta).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((da.gamma - db.gamma).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((da.sigma2_eta - db.sigma2_eta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("converged state is a fixed point of the sweep", "[vb]") {
  RngStream gen(515, 2);
  Eigen::VectorXd beta_true(2), gamma_true(2);
  beta_true << 0.6, -0.3;
  gamma_true << -0.1, 0.2;
  const auto recs = gen_cs_ordinal(800, 3, beta_true, gamma_true, gen);
  Eigen::MatrixXd basis(1, 0);
  const auto d = build_design(recs, basis, false, 3, 1);
  const auto [st, rep] = fit_vb_ordinal_cs(d, FitConfig{});
  REQUIRE(rep.converged);
  vb_detail::CaviEngine eng(d, FitConfig{}, false);
  auto st2 = st;
  REQUIRE(eng.sweep(st2) < 1e-6);

  const int n_areas = 5;
  const Eigen::MatrixXd pbasis = path_basis(n_areas);
  PanelTruth truth;
  truth.base.resize(1);
  truth.base << 0.2;
  truth.persistence = 0.3;
  truth.phi = 0.5;
  RngStream pgen(616, 2);
  const auto precs = gen_long_ordinal(150, 2, 4, n_areas, pbasis, truth, nullptr, pgen);
  const auto pd = build_design(precs, pbasis, false, 2, 4);
  const auto [pst, prep] = fit_vb_ordinal_long(pd, FitConfig{}, 4);
  REQUIRE(prep.converged);
  vb_detail::CaviEngine peng(pd, FitConfig{}, true);
  auto pst2 = pst;
  REQUIRE(peng.sweep(pst2) < 1e-6);
}

TEST_CASE("capped sweeps flag non-convergence but return the state", "[vb]") {
  RngStream gen(515, 2);
  Eigen::VectorXd beta_true(2), gamma_true(2);
  beta_true << 0.6, -0.3;
  gamma_true << -0.1, 0.2;
  const auto recs = gen_cs_ordinal(400, 3, beta_true, gamma_true, gen);
  Eigen::MatrixXd basis(1, 0);
  const auto d = build_design(recs, basis, false, 3, 1);
  const auto [st, rep] = vb_detail::run_cavi(d, FitConfig{}, false, 2);
  REQUIRE_FALSE(rep.converged);
  REQUIRE(rep.iterations == 2);
  REQUIRE(rep.trajectory.size() == 2);
  REQUIRE(all_finite(rep.trajectory));
  REQUIRE(st.mu.allFinite());
}

TEST_CASE("posterior draws respect the variational factors", "[vb]") {
  VariationalState st;
  st.g = 1;
  st.q = 1;
  st.m = 1;
  st.T = 2;
  st.longitudinal = true;
  st.mu.resize(4);
  st.mu << 0.5, -1.0, 0.2, -0.2;
  st.Sigma = Eigen::Vector4d(0.04, 0.09, 0.01, 0.01).asDiagonal();
  st.loc_phi = 0.5;
  st.sigma2_phi = 0.04;
  st.ig_shape_eta = 3.0;
  st.ig_scale_eta = 4.5;
  st.ig_shape_eta1 = 4.0;
  st.ig_scale_eta1 = 3.0;

  const int R = 10000;
  RngStream rng(77, 5);
  const auto draws = draw_variational(st, R, rng);
  REQUIRE(draws.gamma.rows() == R);
  REQUIRE(draws.phi.size() == R);
  REQUIRE(draws.sigma2_eta1.size() == R);

  const double se0 = 0.2 / std::sqrt(static_cast<double>(R));
  REQUIRE(std::fabs(draws.gamma.col(0).mean() - 0.5) < 4.0 * se0);
  REQUIRE(std::fabs(draws.beta.col(0).mean() + 1.0) < 4.0 * 0.3 / std::sqrt(1e4));
  REQUIRE(std::fabs(draws.eta.col(0).mean() - 0.2) < 4.0 * 0.1 / std::sqrt(1e4));
  REQUIRE(std::fabs(draws.eta.col(1).mean() + 0.2) < 4.0 * 0.1 / std::sqrt(1e4));

  auto col = [](const Eigen::MatrixXd& m, Eigen::Index j) {
    return std::vector<double>(m.col(j).data(), m.col(j).data() + m.rows());
  };
  REQUIRE(std::fabs(oracles::correlation(col(draws.gamma, 0), col(draws.beta, 0))) < 0.05);
  REQUIRE(std::fabs(oracles::correlation(col(draws.beta, 0), col(draws.eta, 1))) < 0.05);
  REQUIRE(std::fabs(oracles::correlation(col(draws.eta, 0), col(draws.eta, 1))) < 0.05);

  REQUIRE((draws.phi.array() > -1.0).all());
  REQUIRE((draws.phi.array() < 1.0).all());
  const auto tm = trunc_norm_moments(0.5, 0.2, -1.0, 1.0);
  REQUIRE(std::fabs(draws.phi.mean() - tm.mean) < 4.0 * std::sqrt(tm.var / R));

  // Inverse-gamma factor: mean scale/(shape-1).
  REQUIRE(std::fabs(draws.sigma2_eta.mean() - 2.25) < 4.0 * std::sqrt(5.0625 / R));
  REQUIRE(std::fabs(draws.sigma2_eta1.mean() - 1.0) < 4.0 * std::sqrt(0.5 / R));
  REQUIRE((draws.sigma2_eta.array() > 0.0).all());

  VariationalState cs;
  cs.g = 0;
  cs.q = 2;
  cs.m = 0;
  cs.T = 1;
  cs.longitudinal = false;
  cs.mu.resize(2);
  cs.mu << 1.0, -2.0;
  cs.Sigma = Eigen::Vector2d(0.25, 1.0).asDiagonal();
  cs.ig_shape_eta = 2.5;
  cs.ig_scale_eta = 2.0;
  RngStream rng2(78, 5);
  const auto cdraws = draw_variational(cs, R, rng2);
  REQUIRE(cdraws.phi.size() == 0);
  REQUIRE(cdraws.sigma2_eta1.size() == 0);
  REQUIRE(std::fabs(cdraws.beta.col(0).mean() - 1.0) < 4.0 * 0.5 / std::sqrt(1e4));
  REQUIRE(std::fabs(oracles::correlation(col(cdraws.beta, 0), col(cdraws.beta, 1))) < 0.05);

  VariationalState bad = cs;
  bad.Sigma(0, 1) = bad.Sigma(1, 0) = 10.0;
  RngStream rng3(79, 5);
  REQUIRE_THROWS_WITH(draw_variational(bad, 10, rng3), ContainsSubstring("variational covariance"));
  REQUIRE_THROWS_WITH(draw_variational(cs, 0, rng2), ContainsSubstring("R must be"));
  VariationalState skew = cs;
  skew.mu.resize(3);
  REQUIRE_THROWS_WITH(draw_variational(skew, 10, rng2), ContainsSubstring("inconsistent"));
}

TEST_CASE("entry points validate their designs", "[vb]") {
  FitConfig cfg;
  Eigen::MatrixXd basis(1, 0);
  RngStream gen(3, 3);
  Eigen::VectorXd beta_true(1), gamma_true(1);
  beta_true << 0.2;
  gamma_true << 0.1;
  const auto recs = gen_cs_ordinal(40, 2, beta_true, gamma_true, gen);
  const auto d_cs = build_design(recs, basis, false, 2, 1);

  REQUIRE_THROWS_WITH(fit_vb_ordinal_long(d_cs, cfg, 1), ContainsSubstring("fit_vb_ordinal_cs"));

  const Eigen::MatrixXd pbasis = path_basis(5);
  PanelTruth truth;
  truth.base.resize(1);
  truth.base << 0.2;
  RngStream pgen(4, 4);
  const auto precs = gen_long_ordinal(30, 2, 2, 5, pbasis, truth, nullptr, pgen);
  const auto d_panel = build_design(precs, pbasis, false, 2, 2);
  REQUIRE_THROWS_WITH(fit_vb_ordinal_long(d_panel, cfg, 3), ContainsSubstring("does not match"));

  StickBrokenDesign empty_cs;
  empty_cs.K = 3;
  empty_cs.T = 1;
  empty_cs.g = 2;
  empty_cs.X.resize(0, 0);
  empty_cs.Psi.resize(0, 0);
  empty_cs.kappa.resize(0);
  empty_cs.trials.resize(0);
  REQUIRE_THROWS_WITH(fit_vb_ordinal_cs(empty_cs, cfg), ContainsSubstring("empty design"));

  REQUIRE_THROWS_WITH(fit_vb_binary_long(d_cs, cfg, 1), ContainsSubstring("cutpoint slots"));
  const auto d_bin = empty_binary_design(1, 4);
  REQUIRE_THROWS_WITH(fit_vb_binary_long(d_bin, cfg, 1), ContainsSubstring("requires T >= 2"));
  REQUIRE_THROWS_WITH(fit_vb_binary_long(d_bin, cfg, 3), ContainsSubstring("does not match"));
  const auto d_bin1 = empty_binary_design(1, 1);
  REQUIRE_THROWS_WITH(fit_vb_binary_cs(d_cs, cfg), ContainsSubstring("cutpoint slots"));
  REQUIRE_NOTHROW(fit_vb_binary_cs(d_bin1, cfg));

  // Multi-week design rejected by the single-week entry point.
  StickBrokenDesign panel = d_cs;
  panel.T = 4;
  REQUIRE_THROWS_WITH(fit_vb_ordinal_cs(panel, cfg), ContainsSubstring("fit_vb_ordinal_long"));
}
