// Simulation harness: synthetic rotating-panel populations with known truth,
// informative Poisson PPS subsampling, end-to-end runs of the five estimators
// (direct plus CS/longitudinal variants of the sampler and the variational
// fit), and the scoring suite (MSE, absolute bias, coverage, interval score).
#ifndef SVYCAT_SIMULATE_HPP
#define SVYCAT_SIMULATE_HPP

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "data.hpp"
#include "estimate.hpp"
#include "gibbs.hpp"
#include "mathutil.hpp"
#include "rng.hpp"
#include "spatial.hpp"
#include "vb.hpp"

namespace svycat {

/// Poisson PPS design: inclusion probability proportional to
/// exp(coef_weight w* + coef_response ybar*) over standardized inputs.
struct PpsDesign {
  double expected_fraction = 0.05;
  double coef_weight = 0.1;
  double coef_response = 0.2;
};

struct PpsSample {
  std::vector<long> indices;
  std::vector<double> weights;  // 1 / pi for each selected unit
  Eigen::VectorXd pi;           // inclusion probability for every population unit
  bool constant_weights = false;
  bool constant_response = false;
};

/// Interval score at level alpha: the interval width plus 2/alpha times the
/// distance by which x escapes [lower, upper].
inline double interval_score(double lower, double upper, double x, double alpha) {
  if (lower > upper) throw std::invalid_argument("interval_score: lower exceeds upper");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("interval_score: alpha outside (0, 1)");
  double score = upper - lower;
  if (x < lower) score += 2.0 / alpha * (lower - x);
  if (x > upper) score += 2.0 / alpha * (x - upper);
  return score;
}

namespace simulate_detail {

constexpr std::uint64_t kTagPopulation = 10;
constexpr std::uint64_t kTagSample = 11;
constexpr std::uint64_t kTagFit = 12;
constexpr std::uint64_t kTagDraw = 13;
constexpr std::uint64_t kTagGenerate = 14;
constexpr double kScoreAlpha = 0.05;

/// Standardize to mean 0, sd 1; constant input falls back to all zeros.
inline bool standardize(std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0)) {
    std::fill(v.begin(), v.end(), 0.0);
    return false;
  }
  for (double& x : v) x = (x - mean) / sd;
  return true;
}

}  // namespace simulate_detail

inline PpsSample pps_poisson_sample(const std::vector<double>& ybar,
                                    const std::vector<double>& weight,
                                    const PpsDesign& design, RngStream& rng) {
  if (ybar.empty()) throw std::invalid_argument("pps_poisson_sample: empty population");
  if (ybar.size() != weight.size())
    throw std::invalid_argument("pps_poisson_sample: ybar and weight lengths differ");
  if (!(design.expected_fraction > 0.0 && design.expected_fraction <= 1.0))
    throw std::invalid_argument("pps_poisson_sample: expected_fraction outside (0, 1]");
  const std::size_t n = ybar.size();

  std::vector<double> wstar(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(weight[i] > 0.0)) throw std::invalid_argument("pps_poisson_sample: weights must be positive");
    wstar[i] = std::log(weight[i]);
  }
  PpsSample out;
  out.constant_weights = !simulate_detail::standardize(wstar);
  std::vector<double> yscaled = ybar;
  out.constant_response = !simulate_detail::standardize(yscaled);

  Eigen::VectorXd size(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    size[static_cast<Eigen::Index>(i)] =
        std::exp(design.coef_weight * wstar[i] + design.coef_response * yscaled[i]);
  const double scale = design.expected_fraction * static_cast<double>(n) / size.sum();
  out.pi = (size * scale).cwiseMin(1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = out.pi[static_cast<Eigen::Index>(i)];
    if (rng.uniform() < p) {
      out.indices.push_back(static_cast<long>(i));
      out.weights.push_back(1.0 / p);
    }
  }
  return out;
}

/// One synthetic household: fixed area, covariate level, and design weight,
/// observed for y.size() consecutive weeks starting at entry.
struct Household {
  int area = 1;
  int entry = 1;
  int level = 0;
  double weight = 1.0;
  Eigen::VectorXd x;
  std::vector<int> y;
};

struct Population {
  int K = 0;
  int T = 1;
  Eigen::MatrixXd basis;  // n_areas x m spatial basis
  Eigen::MatrixXd eta;    // m x T true random-effect paths
  std::vector<Household> households;
};

/// Scenario for the synthetic-population study. Covariate levels follow
/// covariate_mix (q = levels - 1 dummy columns); empty beta / gamma_base pick
/// the built-in defaults sized to the scenario.
struct SimScenario {
  long n_households = 5000;
  int n_areas = 5;
  int T = 3;
  int K = 4;
  std::vector<double> covariate_mix = {0.6, 0.25, 0.15};
  Eigen::VectorXd beta;
  Eigen::VectorXd gamma_base;
  double persistence = 0.4;
  double phi = 0.7;
  double s2_eta1 = 0.5;
  double s2_eta = 0.3;
  double weight_sd = 0.5;
  PpsDesign design;
  FitConfig fit = [] {
    FitConfig c;
    c.R = 1500;
    c.burn_in = 500;
    return c;
  }();
  std::array<bool, 5> run_estimator = {true, true, true, true, true};
};

enum MethodIndex { kMethodDirect = 0, kMethodVbCs = 1, kMethodVbLon = 2, kMethodGibbsCs = 3, kMethodGibbsLon = 4 };
inline constexpr std::array<const char*, 5> kMethodNames = {"Direct", "VB-CS", "VB-Lon",
                                                            "Gibbs-CS", "Gibbs-Lon"};

namespace simulate_detail {

inline Eigen::VectorXd scenario_beta(const SimScenario& sc) {
  const Eigen::Index q = static_cast<Eigen::Index>(sc.covariate_mix.size()) - 1;
  if (sc.beta.size() == q) return sc.beta;
  if (sc.beta.size() != 0)
    throw std::invalid_argument("SimScenario: beta length does not match covariate_mix");
  Eigen::VectorXd b(q);
  for (Eigen::Index j = 0; j < q; ++j) b[j] = (j % 2 == 0 ? 0.5 : -0.5);
  return b;
}

inline Eigen::VectorXd scenario_gamma_base(const SimScenario& sc) {
  if (sc.gamma_base.size() == sc.K - 1) return sc.gamma_base;
  if (sc.gamma_base.size() != 0)
    throw std::invalid_argument("SimScenario: gamma_base length does not match K");
  return Eigen::VectorXd::Zero(sc.K - 1);
}

inline void validate_scenario(const SimScenario& sc) {
  if (sc.n_households < 1) throw std::invalid_argument("SimScenario: n_households must be >= 1");
  if (sc.n_areas < 2) throw std::invalid_argument("SimScenario: n_areas must be >= 2");
  if (sc.T < 1) throw std::invalid_argument("SimScenario: T must be >= 1");
  if (sc.K < 2) throw std::invalid_argument("SimScenario: K must be >= 2");
  if (sc.covariate_mix.empty()) throw std::invalid_argument("SimScenario: covariate_mix is empty");
  double total = 0.0;
  for (double p : sc.covariate_mix) {
    if (!(p > 0.0)) throw std::invalid_argument("SimScenario: covariate_mix entries must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-8)
    throw std::invalid_argument("SimScenario: covariate_mix must sum to 1");
  if (!(sc.phi > -1.0 && sc.phi < 1.0)) throw std::invalid_argument("SimScenario: phi outside (-1, 1)");
  if (!(sc.s2_eta1 > 0.0) || !(sc.s2_eta > 0.0))
    throw std::invalid_argument("SimScenario: innovation variances must be positive");
  if (sc.weight_sd < 0.0) throw std::invalid_argument("SimScenario: weight_sd must be >= 0");
  scenario_beta(sc);
  scenario_gamma_base(sc);
  validate_fit_config(sc.fit);
}

inline Eigen::MatrixXd scenario_basis(int n_areas) {
  AdjacencyGraph g;
  g.n_areas = n_areas;
  for (int i = 1; i < n_areas; ++i) g.edges.push_back({i, i + 1});
  return moran_basis(g).values;
}

inline Eigen::VectorXd level_dummies(int level, int q) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(q);
  if (level > 0) x[level - 1] = 1.0;
  return x;
}

}  // namespace simulate_detail

/// Rotating-panel population from the longitudinal ordinal model: households
/// respond 1-3 consecutive weeks; responses follow the stick mechanism with
/// cutpoints gamma_base plus a persistence bump on the repeated category.
inline Population synth_population(const SimScenario& sc, RngStream& rng) {
  simulate_detail::validate_scenario(sc);
  const Eigen::VectorXd beta = simulate_detail::scenario_beta(sc);
  const Eigen::VectorXd gamma_base = simulate_detail::scenario_gamma_base(sc);
  const int q = static_cast<int>(sc.covariate_mix.size()) - 1;

  Population pop;
  pop.K = sc.K;
  pop.T = sc.T;
  pop.basis = simulate_detail::scenario_basis(sc.n_areas);
  const Eigen::Index m = pop.basis.cols();
  pop.eta.resize(m, sc.T);
  for (Eigen::Index j = 0; j < m; ++j) pop.eta(j, 0) = std::sqrt(sc.s2_eta1) * rng.normal();
  for (int t = 1; t < sc.T; ++t)
    for (Eigen::Index j = 0; j < m; ++j)
      pop.eta(j, t) = sc.phi * pop.eta(j, t - 1) + std::sqrt(sc.s2_eta) * rng.normal();

  pop.households.resize(static_cast<std::size_t>(sc.n_households));
  for (Household& h : pop.households) {
    h.area = std::min(sc.n_areas, 1 + static_cast<int>(rng.uniform() * sc.n_areas));
    const double u_level = rng.uniform();
    double cum = 0.0;
    h.level = static_cast<int>(sc.covariate_mix.size()) - 1;
    for (std::size_t l = 0; l < sc.covariate_mix.size(); ++l) {
      cum += sc.covariate_mix[l];
      if (u_level < cum) {
        h.level = static_cast<int>(l);
        break;
      }
    }
    h.x = simulate_detail::level_dummies(h.level, q);
    h.weight = std::exp(sc.weight_sd * rng.normal());
    int len = 1 + std::min(2, static_cast<int>(rng.uniform() * 3.0));
    len = std::min(len, sc.T);
    h.entry = 1 + static_cast<int>(rng.uniform() * (sc.T - len + 1));
    h.entry = std::min(h.entry, sc.T - len + 1);

    const double fixed = h.x.dot(beta);
    h.y.resize(static_cast<std::size_t>(len));
    int prev = kPrevNone;
    for (int off = 0; off < len; ++off) {
      const int t = h.entry + off;
      const double spatial = pop.basis.row(h.area - 1).dot(pop.eta.col(t - 1));
      int y = sc.K;
      for (int k = 1; k < sc.K; ++k) {
        const double slot = gamma_base[k - 1] + (prev == k ? sc.persistence : 0.0);
        if (rng.bernoulli(sigmoid(slot - fixed - spatial))) {
          y = k;
          break;
        }
      }
      h.y[static_cast<std::size_t>(off)] = y;
      prev = y;
    }
  }
  return pop;
}

/// Census frame over (area, week, previous response, covariate level) cells.
inline PopulationFrame population_frame(const Population& pop) {
  const int q = pop.households.empty() ? 0 : static_cast<int>(pop.households.front().x.size());
  std::map<std::tuple<int, int, int, int>, long> counts;
  for (const Household& h : pop.households) {
    int prev = kPrevNone;
    for (std::size_t off = 0; off < h.y.size(); ++off) {
      const int t = h.entry + static_cast<int>(off);
      ++counts[{h.area, t, prev, h.level}];
      prev = h.y[off];
    }
  }
  PopulationFrame frame;
  frame.K = pop.K;
  for (const auto& [key, n] : counts) {
    PopulationCell cell;
    cell.area = std::get<0>(key);
    cell.t = std::get<1>(key);
    cell.prev = std::get<2>(key);
    cell.N = n;
    cell.x = simulate_detail::level_dummies(std::get<3>(key), q);
    frame.cells.push_back(std::move(cell));
  }
  return frame;
}

struct TruthCell {
  Eigen::VectorXd prop;  // K category proportions
  long n = 0;            // population units in the cell
};

/// Ground-truth category proportions per (area, week) cell.
inline std::map<std::pair<int, int>, TruthCell> population_truth(const Population& pop) {
  std::map<std::pair<int, int>, TruthCell> truth;
  for (const Household& h : pop.households) {
    for (std::size_t off = 0; off < h.y.size(); ++off) {
      const int t = h.entry + static_cast<int>(off);
      TruthCell& cell = truth[{h.area, t}];
      if (cell.prop.size() == 0) cell.prop = Eigen::VectorXd::Zero(pop.K);
      cell.prop[h.y[off] - 1] += 1.0;
      ++cell.n;
    }
  }
  for (auto& [key, cell] : truth) cell.prop /= static_cast<double>(cell.n);
  return truth;
}

/// Survey records for the selected households, carrying the analysis weights.
inline std::vector<UnitRecord> household_records(const Population& pop,
                                                 const std::vector<long>& indices,
                                                 const std::vector<double>& weights) {
  if (indices.size() != weights.size())
    throw std::invalid_argument("household_records: indices and weights lengths differ");
  std::vector<UnitRecord> recs;
  for (std::size_t s = 0; s < indices.size(); ++s) {
    const long i = indices[s];
    if (i < 0 || i >= static_cast<long>(pop.households.size()))
      throw std::invalid_argument("household_records: index outside the population");
    const Household& h = pop.households[static_cast<std::size_t>(i)];
    int prev = kPrevNone;
    for (std::size_t off = 0; off < h.y.size(); ++off) {
      UnitRecord r;
      r.unit_id = "h" + std::to_string(i);
      r.t = h.entry + static_cast<int>(off);
      r.area = h.area;
      r.y = h.y[off];
      r.w = weights[s];
      r.prev = prev;
      r.x = h.x;
      prev = r.y;
      recs.push_back(std::move(r));
    }
  }
  return recs;
}

struct CellScore {
  int area = 0;
  int t = 0;
  double mse = 0.0;
  double bias = 0.0;
  long n = 0;
};

/// Aggregate and per-cell scores for one estimator. Aggregates average the
/// per-(area, week, category) values; runtime_s is the median wall clock of
/// one full fit-and-estimate pass (kept in memory only).
struct SimMetrics {
  std::string method;
  double mse = 0.0;
  double abs_bias = 0.0;
  double coverage = 0.0;
  double interval_score = 0.0;
  double runtime_s = 0.0;
  std::vector<CellScore> cells;
  std::vector<double> mse_by_week;
  int failed_reps = 0;
  long missing_scores = 0;
};

struct SimResult {
  std::vector<SimMetrics> per_method;
  int n_reps = 0;
};

namespace simulate_detail {

struct ScoreAcc {
  double sum_err = 0.0;
  double sum_sq = 0.0;
  double is_sum = 0.0;
  long covered = 0;
  long n = 0;
};

using AccMap = std::map<std::tuple<int, int, int>, ScoreAcc>;
using TruthMap = std::map<std::pair<int, int>, TruthCell>;

inline void score_estimates(AccMap& acc, long& missing, const std::vector<CellEstimate>& ests,
                            const TruthMap& truth) {
  for (const CellEstimate& est : ests) {
    if (est.missing) {
      ++missing;
      continue;
    }
    const auto it = truth.find({est.area, est.t});
    if (it == truth.end()) throw std::logic_error("score_estimates: estimate outside the truth table");
    const double v = it->second.prop[est.category - 1];
    ScoreAcc& a = acc[{est.area, est.t, est.category}];
    const double err = est.point - v;
    a.sum_err += err;
    a.sum_sq += err * err;
    a.is_sum += interval_score(est.lower, est.upper, v, kScoreAlpha);
    a.covered += (est.lower <= v && v <= est.upper) ? 1 : 0;
    ++a.n;
  }
}

inline std::vector<CellEstimate> direct_estimates(const std::vector<UnitRecord>& records,
                                                  const TruthMap& truth, int K) {
  std::map<std::pair<int, int>, std::vector<UnitRecord>> by_cell;
  for (const UnitRecord& r : records) by_cell[{r.area, r.t}].push_back(r);
  const std::vector<UnitRecord> empty;
  std::vector<CellEstimate> out;
  for (const auto& [key, cell] : truth) {
    const auto it = by_cell.find(key);
    const std::vector<UnitRecord>& recs = it == by_cell.end() ? empty : it->second;
    std::vector<CellEstimate> ests = direct_ht(recs, static_cast<double>(cell.n), K, kScoreAlpha);
    for (CellEstimate& est : ests) {
      est.area = key.first;
      est.t = key.second;
      out.push_back(est);
    }
  }
  return out;
}

inline std::vector<CellEstimate> model_estimates(const Population& pop,
                                                 const PopulationFrame& frame,
                                                 const std::vector<UnitRecord>& records,
                                                 const SimScenario& sc, int method,
                                                 std::uint64_t seed, int rep) {
  const bool gibbs = method == kMethodGibbsCs || method == kMethodGibbsLon;
  const bool longitudinal = method == kMethodVbLon || method == kMethodGibbsLon;
  const std::uint64_t mtag = static_cast<std::uint64_t>(method);
  const std::uint64_t rtag = static_cast<std::uint64_t>(rep);

  std::vector<CellEstimate> out;
  if (longitudinal) {
    const StickBrokenDesign d = build_design(records, pop.basis, true, sc.K, sc.T);
    FitConfig cfg = sc.fit;
    cfg.seed = substream_id({seed, kTagFit, rtag, mtag});
    PosteriorDraws draws;
    if (gibbs) {
      draws = fit_ordinal_long(d, cfg, sc.T);
    } else {
      const auto [st, report] = fit_vb_ordinal_long(d, cfg, sc.T);
      RngStream draw_rng(substream_id({seed, kTagDraw, rtag, mtag}));
      draws = draw_variational(st, cfg.R, draw_rng);
    }
    const auto cells = generate_and_aggregate(draws, frame, pop.basis, sc.T,
                                              substream_id({seed, kTagGenerate, rtag, mtag}));
    out = summarize_cells(cells, kScoreAlpha);
  } else {
    for (int week = 1; week <= sc.T; ++week) {
      std::vector<UnitRecord> recs_w;
      for (const UnitRecord& r : records)
        if (r.t == week) {
          UnitRecord rw = r;
          rw.t = 1;
          rw.prev = kPrevNone;
          recs_w.push_back(std::move(rw));
        }
      PopulationFrame frame_w;
      frame_w.K = frame.K;
      for (const PopulationCell& cell : frame.cells)
        if (cell.t == week) frame_w.cells.push_back(cell);
      const std::uint64_t wtag = static_cast<std::uint64_t>(week);
      const StickBrokenDesign d = build_design(recs_w, pop.basis, true, sc.K, 1);
      FitConfig cfg = sc.fit;
      cfg.seed = substream_id({seed, kTagFit, rtag, mtag, wtag});
      PosteriorDraws draws;
      if (gibbs) {
        draws = fit_ordinal_cs(d, cfg);
      } else {
        const auto [st, report] = fit_vb_ordinal_cs(d, cfg);
        RngStream draw_rng(substream_id({seed, kTagDraw, rtag, mtag, wtag}));
        draws = draw_variational(st, cfg.R, draw_rng);
      }
      const auto cells = generate_and_aggregate(draws, frame_w, pop.basis, 1,
                                                substream_id({seed, kTagGenerate, rtag, mtag, wtag}));
      const auto ests = summarize_cells(cells, kScoreAlpha);
      out.insert(out.end(), ests.begin(), ests.end());
    }
  }
  return out;
}

inline SimMetrics finalize_method(int method, const AccMap& acc, std::vector<double> times,
                                  int failed, long missing, int T) {
  SimMetrics m;
  m.method = kMethodNames[static_cast<std::size_t>(method)];
  m.failed_reps = failed;
  m.missing_scores = missing;
  if (!times.empty()) m.runtime_s = sample_quantile(times, 0.5);

  struct CellAgg {
    double mse = 0.0;
    double bias = 0.0;
    long n = 0;
  };
  std::map<std::pair<int, int>, CellAgg> cell_agg;
  std::vector<double> week_sum(static_cast<std::size_t>(T), 0.0);
  std::vector<long> week_n(static_cast<std::size_t>(T), 0);
  double mse = 0.0, bias = 0.0, cover = 0.0, is = 0.0;
  long groups = 0;
  for (const auto& [key, a] : acc) {
    if (a.n == 0) continue;
    const double n = static_cast<double>(a.n);
    const double cell_m = a.sum_sq / n;
    const double cell_b = std::abs(a.sum_err / n);
    mse += cell_m;
    bias += cell_b;
    cover += static_cast<double>(a.covered) / n;
    is += a.is_sum / n;
    ++groups;
    auto& cm = cell_agg[{std::get<0>(key), std::get<1>(key)}];
    cm.mse += cell_m;
    cm.bias += cell_b;
    ++cm.n;
    const int t = std::get<1>(key);
    if (t >= 1 && t <= T) {
      week_sum[static_cast<std::size_t>(t - 1)] += cell_m;
      ++week_n[static_cast<std::size_t>(t - 1)];
    }
  }
  if (groups == 0) {
    m.mse = m.abs_bias = m.coverage = m.interval_score = std::numeric_limits<double>::quiet_NaN();
  } else {
    const double g = static_cast<double>(groups);
    m.mse = mse / g;
    m.abs_bias = bias / g;
    m.coverage = cover / g;
    m.interval_score = is / g;
  }
  for (const auto& [key, v] : cell_agg) {
    CellScore cs;
    cs.area = key.first;
    cs.t = key.second;
    cs.mse = v.mse / static_cast<double>(v.n);
    cs.bias = v.bias / static_cast<double>(v.n);
    cs.n = v.n;
    m.cells.push_back(cs);
  }
  m.mse_by_week.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t)
    m.mse_by_week[static_cast<std::size_t>(t)] =
        week_n[static_cast<std::size_t>(t)] > 0
            ? week_sum[static_cast<std::size_t>(t)] / static_cast<double>(week_n[static_cast<std::size_t>(t)])
            : std::numeric_limits<double>::quiet_NaN();
  return m;
}

}  // namespace simulate_detail

/// Full study: one synthetic population per seed, n_reps independent PPS
/// samples, every enabled estimator fit and scored against the population
/// truth. A failing estimator is recorded and excluded from that replicate's
/// averages; the other estimators still score.
inline SimResult run_simulation(const SimScenario& sc, int n_reps, std::uint64_t seed) {
  using namespace simulate_detail;
  if (n_reps < 1) throw std::invalid_argument("run_simulation: n_reps must be >= 1");
  validate_scenario(sc);
  if (sc.T < 2 && (sc.run_estimator[kMethodVbLon] || sc.run_estimator[kMethodGibbsLon]))
    throw std::invalid_argument("run_simulation: longitudinal estimators need T >= 2");

  RngStream pop_rng(substream_id({seed, kTagPopulation}));
  const Population pop = synth_population(sc, pop_rng);
  const PopulationFrame frame = population_frame(pop);
  const TruthMap truth = population_truth(pop);

  std::vector<double> ybar(pop.households.size());
  std::vector<double> base_w(pop.households.size());
  for (std::size_t i = 0; i < pop.households.size(); ++i) {
    const Household& h = pop.households[i];
    double s = 0.0;
    for (int y : h.y) s += y;
    ybar[i] = s / static_cast<double>(h.y.size());
    base_w[i] = h.weight;
  }

  std::array<AccMap, 5> acc;
  std::array<std::vector<double>, 5> times;
  std::array<int, 5> failed{};
  std::array<long, 5> missing{};

  for (int rep = 0; rep < n_reps; ++rep) {
    RngStream sample_rng(substream_id({seed, kTagSample, static_cast<std::uint64_t>(rep)}));
    const PpsSample sample = pps_poisson_sample(ybar, base_w, sc.design, sample_rng);
    const std::vector<UnitRecord> records = household_records(pop, sample.indices, sample.weights);

    for (int method = 0; method < 5; ++method) {
      if (!sc.run_estimator[static_cast<std::size_t>(method)]) continue;
      const auto start = std::chrono::steady_clock::now();
      try {
        std::vector<CellEstimate> ests =
            method == kMethodDirect
                ? direct_estimates(records, truth, sc.K)
                : model_estimates(pop, frame, records, sc, method, seed, rep);
        score_estimates(acc[static_cast<std::size_t>(method)],
                        missing[static_cast<std::size_t>(method)], ests, truth);
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
        times[static_cast<std::size_t>(method)].push_back(dt.count());
      } catch (const std::exception&) {
        ++failed[static_cast<std::size_t>(method)];
      }
    }
  }

  SimResult result;
  result.n_reps = n_reps;
  for (int method = 0; method < 5; ++method) {
    if (!sc.run_estimator[static_cast<std::size_t>(method)]) continue;
    result.per_method.push_back(finalize_method(method, acc[static_cast<std::size_t>(method)],
                                                times[static_cast<std::size_t>(method)],
                                                failed[static_cast<std::size_t>(method)],
                                                missing[static_cast<std::size_t>(method)], sc.T));
  }
  return result;
}

}  // namespace svycat

#endif
