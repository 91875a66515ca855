#include "svycat/cli.hpp"

#include <sys/wait.h>

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "svycat/csvio.hpp"
#include "svycat/config.hpp"

using namespace svycat;

namespace {

namespace fs = std::filesystem;

std::string data_path(const std::string& name) {
  return std::string(SVYCAT_DATA_DIR) + "/" + name;
}

std::string fresh_dir(const std::string& name) {
  const std::string dir = "cli_out_" + name;
  fs::remove_all(dir);
  return dir;
}

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = "cli_" + name;
  std::ofstream out(path);
  out << content;
  return path;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(SVYCAT_CLI_BIN) + " " + args + " >cli_stdout.txt 2>cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    std::vector<std::string> fields;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) fields.push_back(cur);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    rows.push_back(std::move(fields));
  }
  return rows;
}

PosteriorDraws zero_draws(int R, int g, int q, int m, int T, bool longitudinal) {
  PosteriorDraws d;
  d.gamma = Eigen::MatrixXd::Zero(R, g);
  d.beta = Eigen::MatrixXd::Zero(R, q);
  d.eta = Eigen::MatrixXd::Zero(R, m * T);
  d.sigma2_eta = Eigen::VectorXd::Ones(R);
  if (longitudinal) {
    d.phi = Eigen::VectorXd::Constant(R, 0.5);
    d.sigma2_eta1 = Eigen::VectorXd::Ones(R);
  }
  return d;
}

}  // namespace

TEST_CASE("key value files parse with comments and trimming", "[cli][config]") {
  const KeyValues kv = KeyValues::parse_text(
      "# header comment\n"
      "  alpha = 0.1  \n"
      "name=toy # trailing note\n"
      "\n"
      "flag = true\n"
      "sizes = 1, 2.5 ,3\n"
      "count = 42\n",
      "inline");
  CHECK(kv.get_double("alpha", 0.0) == 0.1);
  CHECK(kv.get_string("name", "") == "toy");
  CHECK(kv.get_bool("flag", false));
  const std::vector<double> sizes = kv.get_double_list("sizes", {});
  REQUIRE(sizes.size() == 3);
  CHECK(sizes[1] == 2.5);
  CHECK(kv.get_int("count", 0) == 42);
  CHECK(kv.unconsumed().empty());

  CHECK_THROWS_WITH(KeyValues::parse_text("just words\n", "inline"),
                    Catch::Matchers::ContainsSubstring("key=value"));
  CHECK_THROWS_WITH(KeyValues::parse_text("a=1\na=2\n", "inline"),
                    Catch::Matchers::ContainsSubstring("duplicate key"));
  CHECK_THROWS_WITH(KeyValues::parse_text("=1\n", "inline"),
                    Catch::Matchers::ContainsSubstring("empty key"));

  const KeyValues bad = KeyValues::parse_text("count = seven\n", "inline");
  CHECK_THROWS_WITH(bad.get_int("count", 0), Catch::Matchers::ContainsSubstring("not an integer"));
  const KeyValues badf = KeyValues::parse_text("x = 1.2.3\n", "inline");
  CHECK_THROWS_WITH(badf.get_double("x", 0.0), Catch::Matchers::ContainsSubstring("not a number"));
  const KeyValues badb = KeyValues::parse_text("x = maybe\n", "inline");
  CHECK_THROWS_WITH(badb.get_bool("x", false), Catch::Matchers::ContainsSubstring("not a boolean"));

  const KeyValues extra = KeyValues::parse_text("known = 1\nmystery = 2\n", "inline");
  extra.get_int("known", 0);
  CHECK_THROWS_WITH(extra.require_all_consumed("inline"),
                    Catch::Matchers::ContainsSubstring("unknown key mystery"));
}

TEST_CASE("config hashes are stable and field-sensitive", "[cli][config]") {
  CHECK(fnv1a64("") == 14695981039346656037ull);
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(0) == "0000000000000000");

  RunConfig a;
  a.subcommand = "fit";
  a.data = "d.csv";
  a.K = 3;
  RunConfig b = a;
  CHECK(canonical_config(a) == canonical_config(b));
  b.fit.seed = 99;
  CHECK(canonical_config(a) != canonical_config(b));

  RunConfig c = a;
  c.outdir = "elsewhere";
  c.threads = 8;
  CHECK(canonical_config(a) == canonical_config(c));
}

TEST_CASE("doubles print shortest round-trip forms", "[cli][csv]") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5) == "-2.5");
  const double v = 0.123456789012345678;
  CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("atomic writes land complete or not at all", "[cli][csv]") {
  const std::string path = "cli_atomic.csv";
  fs::remove(path);
  write_atomic(path, "x\n1\n");
  CHECK(read_file(path) == "x\n1\n");
  CHECK_FALSE(fs::exists(path + ".tmp"));

  write_atomic(path, "x\n2\n");
  CHECK(read_file(path) == "x\n2\n");

  const std::string bad = "cli_no_such_dir/out.csv";
  CHECK_THROWS(write_atomic(bad, "y\n"));
  CHECK_FALSE(fs::exists(bad));
}

TEST_CASE("draw files carry one named column per scalar", "[cli][csv]") {
  const PosteriorDraws draws = zero_draws(2, 3, 2, 2, 3, true);
  const auto files = draw_files(draws, 3);
  std::map<std::string, std::string> by_name(files.begin(), files.end());
  REQUIRE(by_name.size() == 6);
  CHECK(by_name.at("gamma.csv").rfind("gamma_1,gamma_2,gamma_3\n", 0) == 0);
  CHECK(by_name.at("beta.csv").rfind("beta_1,beta_2\n", 0) == 0);
  CHECK(by_name.at("eta.csv").rfind("eta_t1_c1,eta_t1_c2,eta_t2_c1,eta_t2_c2,eta_t3_c1,eta_t3_c2\n",
                                    0) == 0);
  CHECK(by_name.at("phi.csv") == "phi\n0.5\n0.5\n");
  CHECK(by_name.at("sigma2_eta.csv") == "sigma2_eta\n1\n1\n");
  CHECK(by_name.at("sigma2_eta1.csv") == "sigma2_eta1\n1\n1\n");
  const std::string body = by_name.at("gamma.csv");
  CHECK(std::count(body.begin(), body.end(), '\n') == 3);

  const auto tagged = draw_files(zero_draws(1, 0, 1, 1, 1, false), 1, "_cat2");
  REQUIRE(tagged.size() == 3);
  CHECK(tagged[0].first == "beta_cat2.csv");
  CHECK(tagged[1].first == "eta_cat2.csv");
  CHECK(tagged[2].first == "sigma2_eta_cat2.csv");

  CHECK_THROWS_WITH(draw_files(zero_draws(1, 0, 1, 3, 2, false), 4),
                    Catch::Matchers::ContainsSubstring("multiple of T"));
}

TEST_CASE("trajectory and cell tables serialize", "[cli][csv]") {
  CaviReport report;
  report.iterations = 2;
  report.trajectory = {0.5, 0.001};
  report.surrogate = {-10.0, -9.5};
  CHECK(trajectory_csv(report) ==
        "iteration,statistic,surrogate\n1,0.5,-10\n2,0.001,-9.5\n");

  std::vector<CellEstimate> cells(3);
  cells[0] = {1, 2, 1, 0.25, 0.1, 0.05, 0.45, false, false};
  cells[1] = {1, 2, 2, 0.75, 0.1, 0.55, 0.95, false, true};
  cells[2] = {2, 2, 1, 0.0, 0.0, 0.0, 0.0, true, false};
  const std::string plain = cells_csv(cells, "VB-Lon");
  CHECK(plain ==
        "area,t,category,method,point,sd,lower,upper\n"
        "1,2,1,VB-Lon,0.25,0.1,0.05,0.45\n"
        "1,2,2,VB-Lon,0.75,0.1,0.55,0.95\n");
  const std::string flagged = cells_csv(cells, "Direct", true);
  CHECK(flagged ==
        "area,t,category,method,point,sd,lower,upper,degenerate\n"
        "1,2,1,Direct,0.25,0.1,0.05,0.45,0\n"
        "1,2,2,Direct,0.75,0.1,0.55,0.95,1\n");
}

TEST_CASE("simulation tables serialize with direct ratios", "[cli][csv]") {
  SimResult result;
  result.n_reps = 3;
  SimMetrics direct;
  direct.method = "Direct";
  direct.mse = 0.04;
  direct.cells = {{1, 1, 0.02, 0.01, 3}, {2, 1, 0.0, 0.0, 3}};
  direct.mse_by_week = {0.04};
  SimMetrics model;
  model.method = "VB-Lon";
  model.mse = 0.01;
  model.abs_bias = 0.005;
  model.coverage = 0.9;
  model.interval_score = 0.2;
  model.cells = {{1, 1, 0.01, 0.002, 3}, {2, 1, 0.015, 0.001, 3}, {3, 1, 0.5, 0.1, 0}};
  model.mse_by_week = {0.01};
  result.per_method = {direct, model};

  CHECK(metrics_csv(result) ==
        "method,mse,abs_bias,coverage,interval_score\n"
        "Direct,0.04,0,0,0\n"
        "VB-Lon,0.01,0.005,0.9,0.2\n");
  CHECK(weekly_csv(result) ==
        "method,t,mse\n"
        "Direct,1,0.04\n"
        "VB-Lon,1,0.01\n");
  CHECK(ratio_csv(result) ==
        "method,area,t,mse,direct_mse,ratio\n"
        "VB-Lon,1,1,0.01,0.02,0.5\n"
        "VB-Lon,2,1,0.015,0,\n");
}

TEST_CASE("population frame files read back and derive from samples", "[cli][csv]") {
  const std::string path = write_temp("frame.csv",
                                      "area,t,prev,N,x1\n"
                                      "1,1,0,120,0\n"
                                      "1,2,2,35,1\n");
  const PopulationFrame frame = read_frame_csv(path, 3);
  REQUIRE(frame.cells.size() == 2);
  CHECK(frame.K == 3);
  CHECK(frame.cells[0].N == 120);
  CHECK(frame.cells[1].prev == 2);
  CHECK(frame.cells[1].x[0] == 1.0);

  const std::string bad_header = write_temp("frame_bad.csv", "area,t,N\n");
  CHECK_THROWS_WITH(read_frame_csv(bad_header, 3),
                    Catch::Matchers::ContainsSubstring("header must start with area,t,prev,N"));
  const std::string bad_prev = write_temp("frame_prev.csv", "area,t,prev,N\n1,1,7,10\n");
  CHECK_THROWS_WITH(read_frame_csv(bad_prev, 3),
                    Catch::Matchers::ContainsSubstring("prev out of 0..K"));
  CHECK_THROWS_WITH(read_frame_csv("cli_absent_frame.csv", 3),
                    Catch::Matchers::ContainsSubstring("cli_absent_frame.csv"));

  std::vector<UnitRecord> records(3);
  for (int i = 0; i < 3; ++i) {
    records[i].unit_id = "u" + std::to_string(i);
    records[i].t = 1;
    records[i].area = 1;
    records[i].y = 1;
    records[i].prev = kPrevNone;
    records[i].x = Eigen::VectorXd::Zero(1);
  }
  records[0].w = 10.2;
  records[1].w = 9.4;
  records[2].w = 7.0;
  records[2].area = 2;
  const PopulationFrame derived = frame_from_records(records, 3);
  REQUIRE(derived.cells.size() == 2);
  CHECK(derived.cells[0].area == 1);
  CHECK(derived.cells[0].N == 20);  // round(10.2 + 9.4)
  CHECK(derived.cells[1].area == 2);
  CHECK(derived.cells[1].N == 7);
}

TEST_CASE("estimator lists map onto the method mask", "[cli]") {
  const std::array<bool, 5> all = parse_estimators("");
  CHECK(std::count(all.begin(), all.end(), true) == 5);
  const std::array<bool, 5> some = parse_estimators("direct, VB-Lon");
  CHECK(some[0]);
  CHECK_FALSE(some[1]);
  CHECK(some[2]);
  CHECK_FALSE(some[3]);
  CHECK_FALSE(some[4]);
  const std::array<bool, 5> gibbs = parse_estimators("gibbs-cs,gibbs-lon");
  CHECK((gibbs[3] && gibbs[4]));
  CHECK_THROWS_WITH(parse_estimators("direct,bogus"),
                    Catch::Matchers::ContainsSubstring("unknown estimator: bogus"));
}

TEST_CASE("scenario files populate simulation settings", "[cli]") {
  const KeyValues kv = KeyValues::parse_text(
      "n_households = 777\n"
      "n_areas = 6\n"
      "T = 2\n"
      "K = 3\n"
      "covariate_mix = 0.7,0.3\n"
      "beta = 0.4\n"
      "gamma_base = -0.1,0.2\n"
      "persistence = 0.9\n"
      "phi = 0.25\n"
      "expected_fraction = 0.2\n"
      "R = 55\n"
      "burn_in = 11\n",
      "inline");
  const SimScenario sc = scenario_from_kv(kv);
  CHECK(sc.n_households == 777);
  CHECK(sc.n_areas == 6);
  CHECK(sc.T == 2);
  CHECK(sc.K == 3);
  REQUIRE(sc.covariate_mix.size() == 2);
  REQUIRE(sc.beta.size() == 1);
  CHECK(sc.beta[0] == 0.4);
  REQUIRE(sc.gamma_base.size() == 2);
  CHECK(sc.gamma_base[1] == 0.2);
  CHECK(sc.persistence == 0.9);
  CHECK(sc.phi == 0.25);
  CHECK(sc.design.expected_fraction == 0.2);
  CHECK(sc.fit.R == 55);
  CHECK(sc.fit.burn_in == 11);
  CHECK(kv.unconsumed().empty());
}

TEST_CASE("flag keys override file keys", "[cli][config]") {
  RunConfig rc;
  rc.subcommand = "fit";
  const KeyValues file = KeyValues::parse_text(
      "data = from_file.csv\nK = 3\nseed = 5\ntime = long\nR = 10\n", "file");
  apply_keys(rc, file, "file");
  CHECK(rc.data == "from_file.csv");
  CHECK(rc.time == "longitudinal");
  CHECK(rc.fit.seed == 5);
  CHECK(rc.seed_given);

  KeyValues flags;
  flags.set("seed", "42");
  flags.set("R", "99");
  apply_keys(rc, flags, "flags");
  CHECK(rc.fit.seed == 42);
  CHECK(rc.fit.R == 99);
  CHECK(rc.K == 3);

  KeyValues unknown;
  unknown.set("reps", "4");  // a simulate key is foreign to fit
  CHECK_THROWS_WITH(apply_keys(rc, unknown, "flags"),
                    Catch::Matchers::ContainsSubstring("unknown key reps"));

  RunConfig bad;
  bad.subcommand = "fit";
  KeyValues badtime;
  badtime.set("time", "weekly");
  CHECK_THROWS_WITH(apply_keys(bad, badtime, "flags"),
                    Catch::Matchers::ContainsSubstring("time must be cs or longitudinal"));
}

TEST_CASE("toy vb longitudinal fit writes draws and estimates", "[cli][bin]") {
  const std::string out = fresh_dir("fit_vb");
  const std::string args = "fit --data " + data_path("toy_microdata.csv") + " --adjacency " +
                           data_path("toy_adjacency.txt") + " --frame " +
                           data_path("toy_frame.csv") +
                           " --family ordinal --time longitudinal --engine vb -K 3 -R 150"
                           " --seed 11 --out " +
                           out;
  REQUIRE(run_cli(args) == 0);
  for (const char* name : {"gamma.csv", "beta.csv", "eta.csv", "phi.csv", "sigma2_eta.csv",
                           "sigma2_eta1.csv", "trajectory.csv", "estimates.csv"})
    CHECK(fs::exists(out + "/" + name));

  const std::string meta = read_file(out + "/estimates.csv");
  CHECK(meta.rfind("# svycat 0.1.0 seed=11 config=", 0) == 0);

  const auto rows = parse_csv(out + "/estimates.csv");
  REQUIRE(rows.size() > 1);
  REQUIRE(rows[0] ==
          std::vector<std::string>{"area", "t", "category", "method", "point", "sd", "lower",
                                   "upper"});
  std::map<std::pair<std::string, std::string>, double> sums;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 8);
    CHECK(rows[i][3] == "VB-Lon");
    const double point = std::stod(rows[i][4]);
    const double lower = std::stod(rows[i][6]);
    const double upper = std::stod(rows[i][7]);
    CHECK(point >= 0.0);
    CHECK(point <= 1.0);
    CHECK(lower <= point);
    CHECK(upper >= point);
    sums[{rows[i][0], rows[i][1]}] += point;
  }
  CHECK(sums.size() == 12);  // 4 areas x 3 weeks
  for (const auto& [key, total] : sums) CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-9));

  const auto draws = parse_csv(out + "/beta.csv");
  CHECK(draws.size() == 151);  // header + R rows

  const auto trajectory = parse_csv(out + "/trajectory.csv");
  REQUIRE(trajectory.size() > 2);
  REQUIRE(trajectory[0] == std::vector<std::string>{"iteration", "statistic", "surrogate"});
  CHECK(std::stod(trajectory.back()[1]) < 1e-6);
}

TEST_CASE("missing inputs exit nonzero naming the path", "[cli][bin]") {
  const std::string args = "fit --data " + data_path("toy_microdata.csv") +
                           " --adjacency no_such_adjacency.txt --family ordinal -K 3";
  REQUIRE(run_cli(args) == 1);
  CHECK_THAT(read_file("cli_stderr.txt"),
             Catch::Matchers::ContainsSubstring("no_such_adjacency.txt"));

  REQUIRE(run_cli("direct --data no_such_data.csv -K 3") == 1);
  CHECK_THAT(read_file("cli_stderr.txt"), Catch::Matchers::ContainsSubstring("no_such_data.csv"));
}

TEST_CASE("identical config and seed reruns are byte-identical", "[cli][bin]") {
  const std::string base = "fit --data " + data_path("toy_microdata.csv") + " --adjacency " +
                           data_path("toy_adjacency.txt") +
                           " --family ordinal --time cs --week 1 --engine gibbs -K 3"
                           " -R 60 --burn-in 30 --seed 2718 --out ";
  const std::string out1 = fresh_dir("rerun_a");
  const std::string out2 = fresh_dir("rerun_b");
  REQUIRE(run_cli(base + out1) == 0);
  REQUIRE(run_cli(base + out2) == 0);
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(out1)) {
    const std::string name = entry.path().filename().string();
    CHECK(read_file(out1 + "/" + name) == read_file(out2 + "/" + name));
    ++compared;
  }
  CHECK(compared >= 4);
}

TEST_CASE("toy simulation run emits the five-method table", "[cli][bin][slow]") {
  const std::string out = fresh_dir("sim");
  REQUIRE(run_cli("simulate --scenario " + data_path("toy_scenario.txt") + " --out " + out) == 0);

  const auto metrics = parse_csv(out + "/metrics.csv");
  REQUIRE(metrics.size() == 6);
  REQUIRE(metrics[0] ==
          std::vector<std::string>{"method", "mse", "abs_bias", "coverage", "interval_score"});
  const std::vector<std::string> expect = {"Direct", "VB-CS", "VB-Lon", "Gibbs-CS", "Gibbs-Lon"};
  for (std::size_t i = 0; i < expect.size(); ++i) {
    CHECK(metrics[i + 1][0] == expect[i]);
    for (int c = 1; c <= 4; ++c) CHECK(std::isfinite(std::stod(metrics[i + 1][c])));
  }

  const auto weekly = parse_csv(out + "/weekly.csv");
  CHECK(weekly.size() == 1 + 5 * 2);  // header + 5 methods x 2 weeks

  const auto cells = parse_csv(out + "/cells.csv");
  REQUIRE(cells.size() > 1);
  for (std::size_t i = 1; i < cells.size(); ++i) CHECK(cells[i][0] != "Direct");

  const std::string rerun = fresh_dir("sim_rerun");
  REQUIRE(run_cli("simulate --scenario " + data_path("toy_scenario.txt") + " --out " + rerun) ==
          0);
  CHECK(read_file(out + "/metrics.csv") == read_file(rerun + "/metrics.csv"));
  CHECK(read_file(out + "/cells.csv") == read_file(rerun + "/cells.csv"));
}

TEST_CASE("simulation validation and filtering flags", "[cli][bin]") {
  REQUIRE(run_cli("simulate --scenario " + data_path("toy_scenario.txt") + " --reps 0") == 1);
  CHECK_THAT(read_file("cli_stderr.txt"),
             Catch::Matchers::ContainsSubstring("reps must be >= 1"));

  const std::string out = fresh_dir("sim_subset");
  REQUIRE(run_cli("simulate --scenario " + data_path("toy_scenario.txt") +
                  " --estimators direct,vb-lon --out " + out) == 0);
  const auto metrics = parse_csv(out + "/metrics.csv");
  REQUIRE(metrics.size() == 3);
  CHECK(metrics[1][0] == "Direct");
  CHECK(metrics[2][0] == "VB-Lon");
}

TEST_CASE("direct subcommand flags degenerate cells and skips empty ones", "[cli][bin]") {
  const std::string csv = write_temp("direct_toy.csv",
                                     "unit_id,t,area,y,w\n"
                                     "a,1,1,2,1.5\n"
                                     "b,1,1,2,2.5\n"
                                     "c,1,1,2,1.0\n"
                                     "d,1,2,1,1.0\n"
                                     "e,1,2,3,3.0\n");
  const std::string out = fresh_dir("direct");
  REQUIRE(run_cli("direct --data " + csv + " -K 3 --out " + out) == 0);
  const auto rows = parse_csv(out + "/direct.csv");
  REQUIRE(rows.size() == 7);  // header + 2 cells x 3 categories
  REQUIRE(rows[0].back() == "degenerate");
  std::map<std::string, std::string> flag;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i][1] == "1");
    flag[rows[i][0] + ":" + rows[i][2]] = rows[i].back();
  }
  // area 1 saw only category 2: every category estimate there is degenerate
  CHECK(flag.at("1:1") == "1");
  CHECK(flag.at("1:2") == "1");
  CHECK(flag.at("1:3") == "1");
  // area 2 splits between categories 1 and 3
  CHECK(flag.at("2:1") == "0");
  CHECK(flag.at("2:3") == "0");
  // no rows for areas without respondents
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][0] != "3");
}

TEST_CASE("basis subcommand writes the toy basis", "[cli][bin]") {
  const std::string out = fresh_dir("basis");
  REQUIRE(run_cli("basis --adjacency " + data_path("toy_adjacency.txt") + " --out " + out) == 0);
  const auto rows = parse_csv(out + "/basis.csv");
  REQUIRE(rows.size() == 5);
  REQUIRE(rows[0] == std::vector<std::string>{"area", "b1", "b2"});
  double norm = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double v = std::stod(rows[i][1]);
    norm += v * v;
  }
  CHECK_THAT(norm, Catch::Matchers::WithinAbs(1.0, 1e-12));

  REQUIRE(run_cli("--version") == 0);
  CHECK_THAT(read_file("cli_stdout.txt"), Catch::Matchers::ContainsSubstring("svycat 0.1.0"));
}
