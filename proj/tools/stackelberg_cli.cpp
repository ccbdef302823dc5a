#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>

#include <CLI11.hpp>

#include "stackelberg/bundle.hpp"
#include "stackelberg/config.hpp"
#include "stackelberg/pipeline.hpp"
#include "stackelberg/sim.hpp"
#include "stackelberg/verify.hpp"

namespace fs = std::filesystem;
using namespace stackelberg;

namespace {

enum Exit { kOk = 0, kConfig = 1, kVerify = 2, kNumeric = 3 };

struct Options {
  std::string scenario;
  std::optional<int> horizon;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> paths;
  std::optional<double> tol;
  double perturb = 0.0;
  bool no_mc = false;
};

ScenarioConfig load(const Options& o) {
  ScenarioConfig cfg = load_config(o.scenario, o.horizon);
  if (o.seed) cfg.sim.seed = *o.seed;
  if (o.paths) cfg.sim.paths = *o.paths;
  if (o.tol) cfg.solver.tol = *o.tol;
  return cfg;
}

fs::path out_dir(const Options& o, const ScenarioConfig& cfg) {
  if (!o.out.empty()) return o.out;
  const std::string stem = cfg.name.empty() ? fs::path(o.scenario).stem().string() : cfg.name;
  return fs::path("runs") / (stem + "_n" + std::to_string(cfg.model.horizon));
}

int cmd_solve(const Options& o) {
  const ScenarioConfig cfg = load(o);
  const RunResult run = solve_scenario(cfg);
  const fs::path dir = out_dir(o, cfg);
  write_solution_bundle(dir, run);
  const auto c = run.costs();
  std::printf("objective %.10e  J_S %.10e  J_R %.10e\n", run.solution().objective, c.sender, c.receiver);
  if (!run.solution().converged) std::printf("warning: solver hit max_iter, solution flagged in bundle\n");
  std::printf("wrote %s\n", dir.string().c_str());
  return kOk;
}

int cmd_alpha_track(const Options& o) {
  const ScenarioConfig cfg = load(o);
  std::vector<int> horizons(static_cast<std::size_t>(cfg.model.horizon));
  std::iota(horizons.begin(), horizons.end(), 1);
  const auto rows = alpha_track(cfg, horizons);
  const fs::path dir = out_dir(o, cfg);
  fs::create_directories(dir);
  write_alpha_csv(dir / "alpha.csv", rows);
  std::printf("wrote %zu rows to %s\n", rows.size(), (dir / "alpha.csv").string().c_str());
  return kOk;
}

int cmd_verify(const Options& o) {
  const ScenarioConfig cfg = load(o);
  const RunResult run = solve_scenario(cfg);
  VerifyOptions vo;
  vo.paths = cfg.sim.paths;
  vo.seed = cfg.sim.seed;
  vo.perturb = o.perturb;
  vo.monte_carlo = !o.no_mc;
  const VerifyReport rep = verify(run, vo);
  const std::string text = rep.text();
  std::cout << text;
  const fs::path dir = out_dir(o, cfg);
  write_solution_bundle(dir, run);
  std::ofstream(dir / "verify.txt") << text;
  return rep.passed() ? kOk : kVerify;
}

int cmd_simulate(const Options& o) {
  const ScenarioConfig cfg = load(o);
  const RunResult run = solve_scenario(cfg);
  const SimReport sim = run.comm ? stackelberg::run(cfg.model, cfg.comm, run.policy(), run.comm->gains,
                                                    cfg.sim.paths, cfg.sim.seed)
                                 : stackelberg::run(cfg.model, cfg.control, run.policy(),
                                                    run.control->transform, cfg.sim.paths, cfg.sim.seed);
  const auto c = run.costs();
  std::printf("paths %lld seed %llu\n", static_cast<long long>(sim.n_paths),
              static_cast<unsigned long long>(sim.seed));
  std::printf("J_S analytic %.10e  empirical %.10e  se %.3e\n", c.sender, sim.sender.mean, sim.sender.std_error);
  std::printf("J_R analytic %.10e  empirical %.10e  se %.3e\n", c.receiver, sim.receiver.mean,
              sim.receiver.std_error);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stackelberg signaling policies for multi-stage Gaussian games"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--horizon", o.horizon, "override the horizon n")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory (default runs/<name>_n<horizon>)");
    sub->add_option("--seed", o.seed, "Monte Carlo master seed");
    sub->add_option("--paths", o.paths, "Monte Carlo paths")->check(CLI::PositiveNumber);
    sub->add_option("--tol", o.tol, "solver tolerance")->check(CLI::PositiveNumber);
  };
  auto* solve = app.add_subcommand("solve", "solve and write solution.json and alpha.csv");
  auto* alpha = app.add_subcommand("alpha-track", "alpha.csv for horizons 1..n");
  auto* ver = app.add_subcommand("verify", "solve, run every check, write verify.txt");
  auto* sim = app.add_subcommand("simulate", "Monte Carlo estimate of both costs");
  for (auto* sub : {solve, alpha, ver, sim}) add_common(sub);
  ver->add_option("--perturb", o.perturb, "add this value to every entry of L_k (negative control)");
  ver->add_flag("--no-mc", o.no_mc, "skip the Monte Carlo check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*solve) return cmd_solve(o);
    if (*alpha) return cmd_alpha_track(o);
    if (*ver) return cmd_verify(o);
    return cmd_simulate(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kNumeric;
  }
}
