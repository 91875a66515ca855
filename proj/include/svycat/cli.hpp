#ifndef SVYCAT_CLI_HPP
#define SVYCAT_CLI_HPP

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "svycat/config.hpp"
#include "svycat/csvio.hpp"
#include "svycat/data.hpp"
#include "svycat/estimate.hpp"
#include "svycat/gibbs.hpp"
#include "svycat/simulate.hpp"
#include "svycat/spatial.hpp"
#include "svycat/vb.hpp"
#include "svycat/version.hpp"

namespace svycat {

/// Effective settings of one command invocation, merged from defaults, an
/// optional key=value file, and command-line flags (flags win).
struct RunConfig {
  std::string subcommand;

  std::string data;
  std::string adjacency;
  std::string frame;
  std::string scenario;

  std::string family = "ordinal";     // ordinal | nominal
  std::string time = "longitudinal";  // cs | longitudinal
  std::string engine = "gibbs";       // gibbs | vb
  int K = 0;
  int T = 0;     // 0: infer from the data
  int week = 0;  // cs fits: slice this week out of a panel file
  int basis_columns = -1;
  bool weighted = true;
  double alpha = 0.05;
  FitConfig fit;
  bool seed_given = false;

  int reps = -1;           // -1: take the scenario file's value
  std::string estimators;  // comma list; empty: all five

  std::string outdir;  // empty: SVYCAT_OUTDIR env var, then "."
  int threads = 1;
};

namespace cli_detail {

constexpr std::uint64_t kTagVbDraw = 4;

inline std::string normalize_time(const std::string& v) {
  if (v == "cs" || v == "cross-sectional") return "cs";
  if (v == "long" || v == "longitudinal") return "longitudinal";
  throw std::runtime_error("time must be cs or longitudinal, got " + v);
}

inline void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw std::runtime_error(what + " is required");
  if (!std::filesystem::exists(path)) throw std::runtime_error("missing file: " + path);
}

inline double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline std::string method_tag(const RunConfig& rc) {
  const bool lon = rc.time == "longitudinal";
  if (rc.engine == "gibbs") return lon ? "Gibbs-Lon" : "Gibbs-CS";
  return lon ? "VB-Lon" : "VB-CS";
}

}  // namespace cli_detail

/// Read the keys a subcommand understands; anything left over is an error.
inline void apply_keys(RunConfig& rc, const KeyValues& kv, const std::string& origin) {
  const std::string& sub = rc.subcommand;
  if (sub == "fit" || sub == "direct") {
    rc.data = kv.get_string("data", rc.data);
    rc.frame = kv.get_string("frame", rc.frame);
    rc.K = kv.get_int("K", rc.K);
    rc.alpha = kv.get_double("alpha", rc.alpha);
  }
  if (sub == "fit" || sub == "basis") {
    rc.adjacency = kv.get_string("adjacency", rc.adjacency);
    rc.basis_columns = kv.get_int("basis_columns", rc.basis_columns);
  }
  if (sub == "fit") {
    rc.family = kv.get_string("family", rc.family);
    if (kv.has("time")) rc.time = cli_detail::normalize_time(kv.get_string("time", rc.time));
    rc.engine = kv.get_string("engine", rc.engine);
    rc.T = kv.get_int("T", rc.T);
    rc.week = kv.get_int("week", rc.week);
    rc.weighted = kv.get_bool("weighted", rc.weighted);
    rc.fit.R = kv.get_int("R", rc.fit.R);
    rc.fit.burn_in = kv.get_int("burn_in", rc.fit.burn_in);
    rc.fit.sigma2_beta = kv.get_double("sigma2_beta", rc.fit.sigma2_beta);
    rc.fit.sigma2_gamma = kv.get_double("sigma2_gamma", rc.fit.sigma2_gamma);
    rc.fit.a = kv.get_double("a", rc.fit.a);
    rc.fit.b = kv.get_double("b", rc.fit.b);
  }
  if (sub == "simulate") {
    rc.scenario = kv.get_string("scenario", rc.scenario);
    rc.reps = kv.get_int("reps", rc.reps);
    rc.estimators = kv.get_string("estimators", rc.estimators);
  }
  if (sub == "fit" || sub == "simulate") {
    if (kv.has("seed")) {
      rc.fit.seed = kv.get_u64("seed", rc.fit.seed);
      rc.seed_given = true;
    }
  }
  rc.outdir = kv.get_string("out", rc.outdir);
  rc.threads = kv.get_int("threads", rc.threads);
  kv.require_all_consumed(origin);
}

/// Canonical serialization of the settings that shape output content; the
/// output directory and thread count stay out so relocating a run does not
/// change its stamp.
inline std::string canonical_config(const RunConfig& rc) {
  std::string s;
  auto put = [&s](const char* key, const std::string& value) {
    s += key;
    s += '=';
    s += value;
    s += '\n';
  };
  put("subcommand", rc.subcommand);
  put("data", rc.data);
  put("adjacency", rc.adjacency);
  put("frame", rc.frame);
  put("scenario", rc.scenario);
  put("family", rc.family);
  put("time", rc.time);
  put("engine", rc.engine);
  put("K", std::to_string(rc.K));
  put("T", std::to_string(rc.T));
  put("week", std::to_string(rc.week));
  put("basis_columns", std::to_string(rc.basis_columns));
  put("weighted", rc.weighted ? "true" : "false");
  put("alpha", format_double(rc.alpha));
  put("R", std::to_string(rc.fit.R));
  put("burn_in", std::to_string(rc.fit.burn_in));
  put("sigma2_beta", format_double(rc.fit.sigma2_beta));
  put("sigma2_gamma", format_double(rc.fit.sigma2_gamma));
  put("a", format_double(rc.fit.a));
  put("b", format_double(rc.fit.b));
  put("seed", std::to_string(rc.fit.seed));
  put("reps", std::to_string(rc.reps));
  put("estimators", rc.estimators);
  return s;
}

/// Estimator subset for a simulation run; names match the metric rows.
inline std::array<bool, 5> parse_estimators(const std::string& list) {
  std::array<bool, 5> mask{};
  if (list.empty()) {
    mask.fill(true);
    return mask;
  }
  std::string item;
  std::istringstream ss(list);
  while (std::getline(ss, item, ',')) {
    std::string name = KeyValues::trim(item);
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    bool found = false;
    for (std::size_t i = 0; i < kMethodNames.size(); ++i) {
      std::string known = kMethodNames[i];
      std::transform(known.begin(), known.end(), known.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (name == known) {
        mask[i] = true;
        found = true;
        break;
      }
    }
    if (!found) throw std::runtime_error("unknown estimator: " + item);
  }
  return mask;
}

/// Scenario file -> simulation settings. Run-level keys (reps, seed,
/// estimators) are left for the caller.
inline SimScenario scenario_from_kv(const KeyValues& kv) {
  SimScenario sc;
  sc.n_households = kv.get_long("n_households", sc.n_households);
  sc.n_areas = kv.get_int("n_areas", sc.n_areas);
  sc.T = kv.get_int("T", sc.T);
  sc.K = kv.get_int("K", sc.K);
  sc.covariate_mix = kv.get_double_list("covariate_mix", sc.covariate_mix);
  const std::vector<double> beta = kv.get_double_list("beta", {});
  if (!beta.empty())
    sc.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  const std::vector<double> gb = kv.get_double_list("gamma_base", {});
  if (!gb.empty())
    sc.gamma_base = Eigen::Map<const Eigen::VectorXd>(gb.data(), static_cast<Eigen::Index>(gb.size()));
  sc.persistence = kv.get_double("persistence", sc.persistence);
  sc.phi = kv.get_double("phi", sc.phi);
  sc.s2_eta1 = kv.get_double("s2_eta1", sc.s2_eta1);
  sc.s2_eta = kv.get_double("s2_eta", sc.s2_eta);
  sc.weight_sd = kv.get_double("weight_sd", sc.weight_sd);
  sc.design.expected_fraction = kv.get_double("expected_fraction", sc.design.expected_fraction);
  sc.design.coef_weight = kv.get_double("coef_weight", sc.design.coef_weight);
  sc.design.coef_response = kv.get_double("coef_response", sc.design.coef_response);
  sc.fit.R = kv.get_int("R", sc.fit.R);
  sc.fit.burn_in = kv.get_int("burn_in", sc.fit.burn_in);
  sc.fit.sigma2_beta = kv.get_double("sigma2_beta", sc.fit.sigma2_beta);
  sc.fit.sigma2_gamma = kv.get_double("sigma2_gamma", sc.fit.sigma2_gamma);
  sc.fit.a = kv.get_double("a", sc.fit.a);
  sc.fit.b = kv.get_double("b", sc.fit.b);
  return sc;
}

namespace cli_detail {

inline std::string resolve_outdir(const RunConfig& rc) {
  if (!rc.outdir.empty()) return rc.outdir;
  if (const char* env = std::getenv("SVYCAT_OUTDIR"); env != nullptr && env[0] != '\0')
    return env;
  return ".";
}

inline std::string prepare_outdir(const RunConfig& rc) {
  const std::string dir = resolve_outdir(rc);
  std::filesystem::create_directories(dir);
  return dir;
}

struct FitOutput {
  std::vector<std::pair<std::string, std::string>> files;
  std::string progress;  // iterations or draw count for the summary line
  std::size_t n_cells = 0;
};

inline FitOutput run_fit_pipeline(const RunConfig& rc, const std::vector<UnitRecord>& records,
                                  const Eigen::MatrixXd& psi, const PopulationFrame& frame,
                                  int T_eff) {
  const bool lon = T_eff > 1;
  FitOutput out;
  std::vector<CellEstimate> cells;

  if (rc.family == "ordinal") {
    const StickBrokenDesign design = build_design(records, psi, rc.weighted, rc.K, T_eff);
    PosteriorDraws draws;
    if (rc.engine == "gibbs") {
      draws = lon ? fit_ordinal_long(design, rc.fit, T_eff) : fit_ordinal_cs(design, rc.fit);
      out.progress = std::to_string(rc.fit.burn_in + rc.fit.R) + " sweeps, " +
                     std::to_string(rc.fit.R) + " draws kept";
    } else {
      const auto [state, report] =
          lon ? fit_vb_ordinal_long(design, rc.fit, T_eff) : fit_vb_ordinal_cs(design, rc.fit);
      RngStream drng(substream_id({rc.fit.seed, kTagVbDraw, 0}));
      draws = draw_variational(state, rc.fit.R, drng);
      out.progress = std::to_string(report.iterations) + " iterations (" +
                     (report.converged ? "converged" : "not converged") + "), " +
                     std::to_string(rc.fit.R) + " draws";
      out.files.emplace_back("trajectory.csv", trajectory_csv(report));
    }
    for (auto& file : draw_files(draws, T_eff)) out.files.push_back(std::move(file));
    cells = summarize_cells(generate_and_aggregate(draws, frame, psi, T_eff, rc.fit.seed),
                            rc.alpha);
  } else {
    const std::vector<StickBrokenDesign> designs =
        build_nominal_designs(records, psi, rc.weighted, rc.K, T_eff);
    std::vector<PosteriorDraws> fits;
    if (rc.engine == "gibbs") {
      fits = fit_nominal(designs, rc.fit, lon);
      out.progress = std::to_string(rc.fit.burn_in + rc.fit.R) + " sweeps, " +
                     std::to_string(rc.fit.R) + " draws kept";
    } else {
      int total_iters = 0;
      bool all_converged = true;
      for (std::size_t k = 0; k < designs.size(); ++k) {
        const auto [state, report] = lon ? fit_vb_binary_long(designs[k], rc.fit, T_eff)
                                         : fit_vb_binary_cs(designs[k], rc.fit);
        RngStream drng(substream_id({rc.fit.seed, kTagVbDraw, k + 1}));
        fits.push_back(draw_variational(state, rc.fit.R, drng));
        total_iters += report.iterations;
        all_converged = all_converged && report.converged;
        out.files.emplace_back("trajectory_cat" + std::to_string(k + 1) + ".csv",
                               trajectory_csv(report));
      }
      out.progress = std::to_string(total_iters) + " iterations (" +
                     (all_converged ? "converged" : "not converged") + "), " +
                     std::to_string(rc.fit.R) + " draws";
    }
    for (std::size_t k = 0; k < fits.size(); ++k)
      for (auto& file : draw_files(fits[k], T_eff, "_cat" + std::to_string(k + 1)))
        out.files.push_back(std::move(file));
    cells = summarize_cells(
        generate_and_aggregate_nominal(fits, frame, psi, T_eff, rc.fit.seed), rc.alpha);
  }

  out.n_cells = cells.size();
  out.files.emplace_back("estimates.csv", cells_csv(cells, method_tag(rc)));
  return out;
}

}  // namespace cli_detail

/// Ingest, fit, aggregate over the population frame, and persist draws plus
/// cell estimates.
inline int cmd_fit(const RunConfig& rc) {
  const auto start = std::chrono::steady_clock::now();
  cli_detail::require_file(rc.data, "data");
  if (!rc.adjacency.empty()) cli_detail::require_file(rc.adjacency, "adjacency");
  if (!rc.frame.empty()) cli_detail::require_file(rc.frame, "frame");
  if (rc.family != "ordinal" && rc.family != "nominal")
    throw std::runtime_error("family must be ordinal or nominal, got " + rc.family);
  if (rc.engine != "gibbs" && rc.engine != "vb")
    throw std::runtime_error("engine must be gibbs or vb, got " + rc.engine);
  const int min_k = rc.family == "ordinal" ? 3 : 2;
  if (rc.K < min_k)
    throw std::runtime_error("K must be >= " + std::to_string(min_k) + " for " + rc.family +
                             " outcomes");

  std::vector<UnitRecord> records = ingest_csv(rc.data, rc.K);
  if (records.empty()) throw std::runtime_error("no records in " + rc.data);

  int T_eff = 1;
  if (rc.time == "cs") {
    if (rc.week > 0) {
      records = slice_week(records, rc.week);
      if (records.empty())
        throw std::runtime_error("no records in week " + std::to_string(rc.week));
    } else {
      for (const UnitRecord& r : records)
        if (r.t != 1)
          throw std::runtime_error(
              "cross-sectional fit needs single-week data; pass week=w to slice a panel");
    }
  } else {
    int max_t = 1;
    for (const UnitRecord& r : records) max_t = std::max(max_t, r.t);
    T_eff = rc.T > 0 ? rc.T : max_t;
    if (T_eff < 2)
      throw std::runtime_error("longitudinal fit needs T >= 2; use time=cs for one week");
    if (max_t > T_eff)
      throw std::runtime_error("data reaches week " + std::to_string(max_t) +
                               " but T = " + std::to_string(T_eff));
  }

  const PopulationFrame frame =
      rc.frame.empty() ? frame_from_records(records, rc.K) : read_frame_csv(rc.frame, rc.K);

  int n_areas = 0;
  for (const UnitRecord& r : records) n_areas = std::max(n_areas, r.area);
  for (const PopulationCell& cell : frame.cells) n_areas = std::max(n_areas, cell.area);
  Eigen::MatrixXd psi(n_areas, 0);
  int basis_m = 0;
  if (!rc.adjacency.empty()) {
    const AdjacencyGraph graph = read_edge_list(rc.adjacency, n_areas);
    const BasisMatrix basis = moran_basis(graph, rc.basis_columns);
    if (n_areas > basis.values.rows())
      throw std::runtime_error("area " + std::to_string(n_areas) +
                               " is outside the adjacency graph");
    psi = basis.values;
    basis_m = basis.m();
  }

  cli_detail::FitOutput out = cli_detail::run_fit_pipeline(rc, records, psi, frame, T_eff);

  const std::string dir = cli_detail::prepare_outdir(rc);
  const MetaInfo meta{rc.fit.seed, hex64(fnv1a64(canonical_config(rc)))};
  for (const auto& [name, body] : out.files)
    write_csv(dir + "/" + name, meta, body);

  std::printf("fit %s %s %s: %zu rows, K=%d T=%d m=%d, %s, %zu cell estimates, %.2f s\n",
              rc.family.c_str(), rc.time.c_str(), rc.engine.c_str(), records.size(), rc.K, T_eff,
              basis_m, out.progress.c_str(), out.n_cells, cli_detail::elapsed_s(start));
  return 0;
}

/// Design-based direct estimates for every (area, week) cell with respondents.
inline int cmd_direct(const RunConfig& rc) {
  const auto start = std::chrono::steady_clock::now();
  cli_detail::require_file(rc.data, "data");
  if (!rc.frame.empty()) cli_detail::require_file(rc.frame, "frame");
  if (rc.K < 2) throw std::runtime_error("K must be >= 2");

  const std::vector<UnitRecord> records = ingest_csv(rc.data, rc.K);
  std::map<std::pair<int, int>, std::vector<UnitRecord>> groups;
  for (const UnitRecord& r : records) groups[{r.area, r.t}].push_back(r);

  std::map<std::pair<int, int>, double> cell_n;
  if (!rc.frame.empty()) {
    const PopulationFrame frame = read_frame_csv(rc.frame, rc.K);
    for (const PopulationCell& cell : frame.cells)
      cell_n[{cell.area, cell.t}] += static_cast<double>(cell.N);
  }

  std::vector<CellEstimate> ests;
  std::size_t degenerate = 0;
  for (const auto& [key, cell_records] : groups) {
    double n_cell = 0.0;
    if (rc.frame.empty()) {
      for (const UnitRecord& r : cell_records) n_cell += r.w;
    } else {
      const auto it = cell_n.find(key);
      if (it == cell_n.end())
        throw std::runtime_error("frame does not cover cell (area " + std::to_string(key.first) +
                                 ", week " + std::to_string(key.second) + ")");
      n_cell = it->second;
    }
    for (CellEstimate est : direct_ht(cell_records, n_cell, rc.K, rc.alpha)) {
      degenerate += est.degenerate ? 1 : 0;
      ests.push_back(est);
    }
  }

  const std::string dir = cli_detail::prepare_outdir(rc);
  const MetaInfo meta{rc.fit.seed, hex64(fnv1a64(canonical_config(rc)))};
  write_csv(dir + "/direct.csv", meta, cells_csv(ests, "Direct", true));

  std::printf("direct: %zu rows, %zu cells, %zu estimates (%zu degenerate), %.2f s\n",
              records.size(), groups.size(), ests.size(), degenerate,
              cli_detail::elapsed_s(start));
  return 0;
}

/// Spatial basis of an adjacency graph, persisted for inspection.
inline int cmd_basis(const RunConfig& rc) {
  const auto start = std::chrono::steady_clock::now();
  cli_detail::require_file(rc.adjacency, "adjacency");
  const AdjacencyGraph graph = read_edge_list(rc.adjacency);
  const BasisMatrix basis = moran_basis(graph, rc.basis_columns);

  const std::string dir = cli_detail::prepare_outdir(rc);
  const MetaInfo meta{rc.fit.seed, hex64(fnv1a64(canonical_config(rc)))};
  write_csv(dir + "/basis.csv", meta, basis_csv(basis));

  std::printf("basis: %d areas, %zu edges, %d columns kept, %.2f s\n", graph.n_areas,
              graph.edges.size(), basis.m(), cli_detail::elapsed_s(start));
  return 0;
}

/// Replicated sampling study: metrics table plus per-week and per-cell files.
inline int cmd_simulate(const RunConfig& rc) {
  const auto start = std::chrono::steady_clock::now();
  cli_detail::require_file(rc.scenario, "scenario");

  const KeyValues kv = KeyValues::parse_file(rc.scenario);
  SimScenario sc = scenario_from_kv(kv);
  const int file_reps = kv.get_int("reps", 0);
  const bool file_has_seed = kv.has("seed");
  const std::uint64_t file_seed = kv.get_u64("seed", 0);
  const std::string file_estimators = kv.get_string("estimators", "");
  kv.require_all_consumed(rc.scenario);

  const int reps = rc.reps >= 0 ? rc.reps : file_reps;
  if (reps < 1) throw std::runtime_error("reps must be >= 1");
  const std::uint64_t seed =
      rc.seed_given ? rc.fit.seed : (file_has_seed ? file_seed : rc.fit.seed);
  const std::string estimators = !rc.estimators.empty() ? rc.estimators : file_estimators;
  sc.run_estimator = parse_estimators(estimators);

  std::string canon = canonical_config(rc);
  for (const auto& [key, value] : kv.entries()) canon += "scenario." + key + "=" + value + "\n";
  canon += "resolved.reps=" + std::to_string(reps) + "\n";
  canon += "resolved.seed=" + std::to_string(seed) + "\n";
  canon += "resolved.estimators=" + estimators + "\n";

  const SimResult result = run_simulation(sc, reps, seed);

  const std::string dir = cli_detail::prepare_outdir(rc);
  const MetaInfo meta{seed, hex64(fnv1a64(canon))};
  write_csv(dir + "/metrics.csv", meta, metrics_csv(result));
  write_csv(dir + "/weekly.csv", meta, weekly_csv(result));
  write_csv(dir + "/cells.csv", meta, ratio_csv(result));

  std::string runtimes;
  for (const SimMetrics& m : result.per_method) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), " %s %.1fs", m.method.c_str(), m.runtime_s);
    runtimes += buf;
  }
  std::printf("simulate: %d reps, %zu estimators, runtimes%s, total %.2f s\n", result.n_reps,
              result.per_method.size(), runtimes.c_str(), cli_detail::elapsed_s(start));
  return 0;
}

/// Dispatch with thread cap applied; callers catch and report exceptions.
inline int run_command(const RunConfig& rc) {
  if (rc.threads < 1) throw std::runtime_error("threads must be >= 1");
  Eigen::setNbThreads(rc.threads);
  if (rc.subcommand == "fit") return cmd_fit(rc);
  if (rc.subcommand == "simulate") return cmd_simulate(rc);
  if (rc.subcommand == "direct") return cmd_direct(rc);
  if (rc.subcommand == "basis") return cmd_basis(rc);
  throw std::runtime_error("unknown subcommand " + rc.subcommand);
}

}  // namespace svycat

#endif
