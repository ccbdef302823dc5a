#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>

#include <CLI11.hpp>

#include "stackelberg/bundle.hpp"
#include "stackelberg/lifted.hpp"
#include "stackelberg/oracle.hpp"
#include "stackelberg/pipeline.hpp"
#include "stackelberg/posterior.hpp"
#include "stackelberg/sim.hpp"
#include "stackelberg/verify.hpp"
#include "support/instances.hpp"

using namespace stackelberg;
using testing::Rng;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = STACKELBERG_SCENARIO_DIR;

struct Outcome {
  bool passed = false;
  double measured = 0.0;
  std::string detail;
};

Outcome at_most(double measured, double tol, std::string detail) {
  return {measured <= tol, measured, std::move(detail)};
}

RunResult scenario(int s, int n) {
  return solve_scenario(load_config(kScenarios / ("scenario" + std::to_string(s) + ".json"), n));
}

double tightness(const RunResult& run) {
  const MatrixList h = run.h();
  double worst = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    const Eigen::MatrixXd& s = run.solution().s[k];
    worst = std::max(worst, (h[k] - s).norm() / (1.0 + s.norm()));
  }
  return worst;
}

double comm_tightness(const CommEquilibrium& eq, const Eigen::MatrixXd& a) {
  const MatrixList h = posterior_cov_schedule(a, eq.sigma, eq.policy.l);
  double worst = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    worst = std::max(worst, (h[k] - eq.solution.s[k]).norm() / (1.0 + eq.solution.s[k].norm()));
  }
  return worst;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Sum of negative eigenvalues of Sigma^{1/2} V Sigma^{1/2} via a Cholesky factor.
double single_stage_value(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& v) {
  const Eigen::MatrixXd c = sigma.llt().matrixL();
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c.transpose() * v * c).eigenvalues().cwiseMin(0.0).sum();
}

Outcome oracle_agreement() {
  double worst = 0.0;
  int cases = 0;
  for (int s : {1, 2}) {
    for (int n : {1, 2, 3}) {
      const RunResult run = scenario(s, n);
      const GridResult g = grid_search(run.problem());
      worst = std::max(worst, std::abs(g.objective - run.solution().objective) /
                                  std::max(1e-12, std::abs(run.solution().objective)));
      ++cases;
    }
  }
  Rng rng(1001);
  for (int trial = 0; trial < 10; ++trial) {
    const SdpProblem prob = testing::random_sdp(rng, 2, rng.integer(1, 3));
    const double sdp = solve(prob).objective;
    worst = std::max(worst, std::abs(grid_search(prob).objective - sdp) / std::max(1.0, std::abs(sdp)));
    ++cases;
  }
  return at_most(worst, 1e-2, std::to_string(cases) + " instances, max relative gap");
}

Outcome single_stage() {
  Rng rng(1002);
  double worst = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::Index p = rng.integer(2, 4);
    const Eigen::MatrixXd sigma = rng.spd(p), v = rng.sym(p);
    const SdpSolution sol = solve(build_sdp({sigma}, {v}, rng.dynamics(p)));
    worst = std::max(worst, std::abs(sol.objective - single_stage_value(sigma, v)));
  }
  return at_most(worst, 1e-5, "25 instances, p in {2,3,4}, max absolute gap");
}

Outcome tightness_all() {
  double worst = 0.0;
  for (int s = 1; s <= 4; ++s) {
    for (int n = 1; n <= 10; ++n) worst = std::max(worst, tightness(scenario(s, n)));
  }
  Rng rng(1003);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index p = rng.integer(2, 3);
    const int n = rng.integer(1, 6);
    const ProcessModel m = testing::random_model(rng, p, n);
    worst = std::max(worst, comm_tightness(solve_comm_game(m, testing::random_comm_costs(rng, p, n)), m.a));
  }
  return at_most(worst, 1e-5, "scenarios 1-4 with n = 1..10 plus 20 random, max ||H - S*|| / (1 + ||S*||)");
}

Outcome lower_bound() {
  double margin = std::numeric_limits<double>::infinity();
  int policies = 0;
  for (int s = 1; s <= 4; ++s) {
    const RunResult run = scenario(s, 10);
    const double base = run.costs().sender;
    for (int i = 0; i < 20; ++i) {
      margin = std::min(margin, costs_under(run, random_policy(2, 10, 5000 + 100 * s + i)).sender - base);
      ++policies;
    }
  }
  Rng rng(1004);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Index p = rng.integer(2, 3);
    const int n = rng.integer(2, 5);
    const ProcessModel m = testing::random_model(rng, p, n);
    const CommCosts c = testing::random_comm_costs(rng, p, n);
    const CommEquilibrium eq = solve_comm_game(m, c);
    for (int i = 0; i < 20; ++i) {
      const MatrixList l = random_policy(p, n, 7000 + 100 * trial + i);
      margin = std::min(margin, analytic_costs_comm(m, eq.sigma, c, l).sender - eq.costs.sender);
      ++policies;
    }
  }
  return {margin >= -1e-6, margin, std::to_string(policies) + " random policies, min J_S(L) - J_S*"};
}

Outcome monte_carlo() {
  double worst = 0.0;
  std::string detail;
  for (int s = 1; s <= 4; ++s) {
    const RunResult run = scenario(s, 10);
    const ProcessModel& m = run.config.model;
    const SimReport rep = run.comm ? stackelberg::run(m, run.config.comm, run.policy(), run.comm->gains, 100000, s)
                                   : stackelberg::run(m, run.config.control, run.policy(),
                                                      run.control->transform, 100000, s);
    const CostPair c = run.costs();
    const double z = std::max(std::abs(rep.sender.mean - c.sender) / rep.sender.std_error,
                              std::abs(rep.receiver.mean - c.receiver) / rep.receiver.std_error);
    worst = std::max(worst, z);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%sS%d z=%.2f", detail.empty() ? "" : ", ", s, z);
    detail += buf;
  }
  return at_most(worst, 3.0, "1e5 paths, n = 10: " + detail);
}

Outcome completion_of_squares() {
  Rng rng(1006);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.integer(1, 5);
    const ProcessModel m = testing::random_model(rng, 2, n, 1, true);
    const ControlCosts c = testing::random_control_costs(rng, 2, 1, n);
    const RiccatiTransform rt = complete_squares(m, c);
    const LiftedBasis basis = make_lifted_basis(m);
    const MatrixList u = lifted_random_feedback(m, basis, 2000 + trial);
    const CostPair lhs = lifted_control_costs(m, c, basis, u);
    for (bool virt : {false, true}) {
      worst = std::max(worst, rel(lifted_completed_squares(m, rt.sender, basis, u, virt), lhs.sender));
      worst = std::max(worst, rel(lifted_completed_squares(m, rt.receiver, basis, u, virt), lhs.receiver));
    }
  }
  return at_most(worst, 1e-8, "20 instances, p = 2, t = 1, n <= 5, both players, max relative gap");
}

Outcome structure() {
  double feas = 0.0, idem = 0.0;
  int rank_excess = 0;
  auto check = [&](const SdpProblem& prob, const SdpSolution& sol, const ExtremePoint& ep, const MatrixList& l) {
    feas = std::max(feas, feasibility_violation(prob, sol.s));
    for (int k = 0; k < prob.horizon(); ++k) {
      idem = std::max(idem, idempotency_residual(ep.p[k]));
      rank_excess = std::max(rank_excess, numerical_rank(l[k]) - count_negative_eigenvalues(prob.v[k]));
    }
  };
  for (int s = 1; s <= 4; ++s) {
    const RunResult run = scenario(s, 10);
    check(run.problem(), run.solution(), run.extreme(), run.policy().l);
  }
  Rng rng(1007);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index p = rng.integer(2, 4);
    const int n = rng.integer(1, 6);
    const ProcessModel m = testing::random_model(rng, p, n);
    const CommEquilibrium eq = solve_comm_game(m, testing::random_comm_costs(rng, p, n));
    check(eq.problem, eq.solution, eq.extreme, eq.policy.l);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "feasibility %.2e (<= 1e-6), idempotency %.2e (<= 1e-10), rank excess %d (<= 0)",
                feas, idem, rank_excess);
  return {feas <= 1e-6 && idem <= 1e-10 && rank_excess <= 0, std::max(feas, idem), buf};
}

Outcome alpha_trends(const fs::path& out) {
  bool ok = true;
  std::string detail;
  const std::vector<int> horizons = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  for (int s = 1; s <= 4; ++s) {
    const ScenarioConfig cfg = load_config(kScenarios / ("scenario" + std::to_string(s) + ".json"));
    const auto rows = alpha_track(cfg, horizons);
    fs::create_directories(out);
    write_alpha_csv(out / ("alpha_scenario" + std::to_string(s) + ".csv"), rows);
    ok = ok && rows.size() == 55;
    std::vector<double> last;
    for (const auto& r : rows) {
      ok = ok && std::isfinite(r.alpha);
      if (r.horizon == 10) last.push_back(r.alpha);
    }
    if (last.size() != 10) {
      ok = false;
      continue;
    }
    // scenario 1 rises with the stage index, scenario 2 falls
    if (s == 1 || s == 2) {
      const double sign = s == 1 ? 1.0 : -1.0;
      for (std::size_t k = 1; k < last.size(); ++k) ok = ok && sign * (last[k] - last[k - 1]) >= -1e-9;
      ok = ok && sign * (last.back() - last.front()) > 1e-3;
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "%sS%d %.3f->%.3f", detail.empty() ? "" : ", ", s, last.front(), last.back());
    detail += buf;
  }
  return {ok, 0.0, "rank 1 everywhere, n = 10: " + detail};
}

Outcome innovation_counterexample() {
  const ProcessModel m = testing::scenario_model(1, 3);
  const CommEquilibrium eq = solve_comm_game(m, testing::example1_costs(3));
  double residual = 0.0;
  for (int k = 1; k < 3; ++k) {
    residual = std::max(residual, idempotency_residual(innovation_requirement(
                                      m.a, m.sigma_w, eq.sigma[k], eq.solution.s[k - 1], eq.extreme.p[k])));
  }
  const InnovationRule rule = best_innovation_rule(eq.problem, m.sigma_w);
  const double gap = rule.objective - eq.solution.objective;
  char buf[160];
  std::snprintf(buf, sizeof buf, "idempotency residual %.3f (> 0.01), innovation cost gap %.3e (> 1e-6)", residual, gap);
  return {residual > 0.01 && gap > 1e-6, residual, buf};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  fs::path out = "acceptance_out";
  app.add_option("--out", out, "directory for alpha.csv files");
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    const char* name;
    const char* tolerance;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"oracle_agreement", "rel <= 1e-2", oracle_agreement},
      {"single_stage_closed_form", "abs <= 1e-5", single_stage},
      {"tightness", "<= 1e-5", tightness_all},
      {"lower_bound", "J_S(L) >= J_S* - 1e-6", lower_bound},
      {"monte_carlo", "z <= 3", monte_carlo},
      {"completion_of_squares", "rel <= 1e-8", completion_of_squares},
      {"structural_invariants", "see detail", structure},
      {"alpha_trends", "monotone, rank 1", [&] { return alpha_trends(out); }},
      {"innovation_counterexample", "residual > 0.01", innovation_counterexample},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, 0.0, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %d %-26s measured=%.3e tol(%s) %.1fs  %s\n", o.passed ? "PASS" : "FAIL",
                static_cast<int>(i + 1), criteria[i].name, o.measured, criteria[i].tolerance, secs,
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.passed) ++failed;
  }
  std::printf("%d of %d criteria passed\n", static_cast<int>(criteria.size()) - failed,
              static_cast<int>(criteria.size()));
  return failed == 0 ? 0 : 1;
}
