#include <cstdio>
#include <exception>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "svycat/cli.hpp"
#include "svycat/version.hpp"

namespace {

struct Bound {
  CLI::Option* opt;
  std::string key;
  std::shared_ptr<std::string> value;
};

struct SubBinding {
  CLI::App* cmd = nullptr;
  std::shared_ptr<std::string> config = std::make_shared<std::string>();
  CLI::Option* config_opt = nullptr;
  std::vector<Bound> bounds;

  void opt(const std::string& flag, const std::string& key, const std::string& help) {
    auto storage = std::make_shared<std::string>();
    Bound b{cmd->add_option(flag, *storage, help), key, storage};
    bounds.push_back(std::move(b));
  }

  void common() {
    opt("--out,-o", "out", "output directory (default: $SVYCAT_OUTDIR, then .)");
    opt("--threads", "threads", "thread cap for linear algebra");
  }

  void with_config() {
    config_opt = cmd->add_option("--config", *config, "key=value settings file; flags win");
  }
};

int dispatch(const SubBinding& sub, const std::string& name) {
  svycat::RunConfig rc;
  rc.subcommand = name;
  if (sub.config_opt != nullptr && sub.config_opt->count() > 0)
    svycat::apply_keys(rc, svycat::KeyValues::parse_file(*sub.config), *sub.config);
  svycat::KeyValues flags;
  for (const Bound& b : sub.bounds)
    if (b.opt->count() > 0) flags.set(b.key, *b.value);
  svycat::apply_keys(rc, flags, "flags");
  return svycat::run_command(rc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"survey-weighted categorical small-area estimation"};
  app.set_version_flag("--version,-V", std::string("svycat ") + svycat::version_string());
  app.require_subcommand(1);

  SubBinding fit;
  fit.cmd = app.add_subcommand("fit", "fit a model and estimate cell proportions");
  fit.with_config();
  fit.opt("--data,-d", "data", "microdata CSV (unit_id,t,area,y,w,x1..xq)");
  fit.opt("--adjacency", "adjacency", "area adjacency edge list");
  fit.opt("--frame", "frame", "population frame CSV (area,t,prev,N,x1..xq)");
  fit.opt("--family", "family", "ordinal or nominal");
  fit.opt("--time", "time", "cs or longitudinal");
  fit.opt("--engine", "engine", "gibbs or vb");
  fit.opt("--K,-K", "K", "number of response categories");
  fit.opt("--T,-T", "T", "number of panel weeks (default: max t in the data)");
  fit.opt("--week", "week", "cs fits: slice this week out of a panel file");
  fit.opt("--basis-columns", "basis_columns", "cap on spatial basis columns");
  fit.opt("--weighted", "weighted", "true to use survey weights (default true)");
  fit.opt("--alpha", "alpha", "interval tail mass (default 0.05)");
  fit.opt("--R,-R", "R", "retained draws");
  fit.opt("--burn-in", "burn_in", "discarded warm-up sweeps");
  fit.opt("--sigma2-beta", "sigma2_beta", "prior variance of regression coefficients");
  fit.opt("--sigma2-gamma", "sigma2_gamma", "prior variance of cutpoints");
  fit.opt("--a", "a", "inverse-gamma prior shape");
  fit.opt("--b", "b", "inverse-gamma prior scale");
  fit.opt("--seed,-s", "seed", "random seed");
  fit.common();

  SubBinding sim;
  sim.cmd = app.add_subcommand("simulate", "run a replicated sampling study");
  sim.opt("--scenario", "scenario", "scenario settings file (key=value)");
  sim.opt("--reps", "reps", "number of replicates");
  sim.opt("--seed,-s", "seed", "random seed");
  sim.opt("--estimators", "estimators",
          "comma list of direct,vb-cs,vb-lon,gibbs-cs,gibbs-lon (default all)");
  sim.common();

  SubBinding direct;
  direct.cmd = app.add_subcommand("direct", "design-based direct cell estimates");
  direct.with_config();
  direct.opt("--data,-d", "data", "microdata CSV (unit_id,t,area,y,w,x1..xq)");
  direct.opt("--frame", "frame", "population frame CSV giving cell counts");
  direct.opt("--K,-K", "K", "number of response categories");
  direct.opt("--alpha", "alpha", "interval tail mass (default 0.05)");
  direct.common();

  SubBinding basis;
  basis.cmd = app.add_subcommand("basis", "emit the spatial basis of an adjacency graph");
  basis.with_config();
  basis.opt("--adjacency", "adjacency", "area adjacency edge list");
  basis.opt("--basis-columns,--columns", "basis_columns", "cap on basis columns");
  basis.common();

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit.cmd->parsed()) return dispatch(fit, "fit");
    if (sim.cmd->parsed()) return dispatch(sim, "simulate");
    if (direct.cmd->parsed()) return dispatch(direct, "direct");
    return dispatch(basis, "basis");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "svycat: %s\n", e.what());
    return 1;
  }
}
