#include "stackelberg/verify.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include "stackelberg/lifted.hpp"
#include "stackelberg/oracle.hpp"
#include "stackelberg/posterior.hpp"
#include "stackelberg/sim.hpp"

namespace stackelberg {

namespace {

CheckResult at_most(std::string name, double measured, double threshold, std::string detail = {}) {
  return {std::move(name), measured <= threshold, false, measured, threshold, std::move(detail)};
}

CheckResult skipped(std::string name, std::string why) {
  return {std::move(name), true, true, 0.0, 0.0, std::move(why)};
}

double policy_objective(const SdpProblem& prob, const MatrixList& policy) {
  const MatrixList h = posterior_cov_schedule(prob.a, prob.sigma, policy);
  double total = 0.0;
  for (int k = 0; k < prob.horizon(); ++k) total += (prob.v[k] * h[k]).trace();
  return total;
}

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Exact expected costs by Gaussian conditioning on the stacked messages.
CostPair exact_costs(const RunResult& run, const LiftedBasis& basis, const MatrixList& policy) {
  const ProcessModel& m = run.config.model;
  const MatrixList xo = lifted_virtual_states(m, basis);
  const MatrixList xhat = lifted_posterior_means(basis, xo, policy);
  if (run.control) {
    const MatrixList u = reconstruct_controls(run.control->transform, xhat);
    return lifted_control_costs(m, run.config.control, basis, u);
  }
  const CommCosts& c = run.config.comm;
  CostPair out;
  for (int k = 0; k < m.horizon; ++k) {
    const Eigen::MatrixXd u = run.comm->gains[k] * xhat[k];
    const Eigen::MatrixXd es = c.qs[k] * xo[k] + c.rs[k] * u;
    const Eigen::MatrixXd er = c.qr[k] * xo[k] + c.rr[k] * u;
    out.sender += basis.quadratic(es, Eigen::MatrixXd::Identity(es.rows(), es.rows()), es);
    out.receiver += basis.quadratic(er, Eigen::MatrixXd::Identity(er.rows(), er.rows()), er);
  }
  return out;
}

}  // namespace

MatrixList random_policy(Eigen::Index p, int horizon, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<Eigen::Index> rank(0, p);
  MatrixList out;
  for (int k = 0; k < horizon; ++k) {
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(p, p);
    const Eigen::Index r = rank(rng);
    for (Eigen::Index c = 0; c < r; ++c) {
      for (Eigen::Index i = 0; i < p; ++i) l(i, c) = normal(rng);
    }
    out.push_back(l);
  }
  return out;
}

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const CheckResult* VerifyReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string VerifyReport::text() const {
  std::ostringstream os;
  char buf[160];
  for (const auto& c : checks) {
    const char* tag = c.skipped ? "SKIP" : (c.passed ? "PASS" : "FAIL");
    std::snprintf(buf, sizeof buf, "%-4s %-22s measured=%.6e threshold=%.6e", tag, c.name.c_str(),
                  c.measured, c.threshold);
    os << buf;
    if (!c.detail.empty()) os << "  " << c.detail;
    os << '\n';
  }
  os << (passed() ? "overall: PASS\n" : "overall: FAIL\n");
  return os.str();
}

VerifyReport verify(const RunResult& run, const VerifyOptions& opts) {
  VerifyReport rep;
  const ProcessModel& m = run.config.model;
  const SdpProblem& prob = run.problem();
  const SdpSolution& sol = run.solution();
  const ExtremePoint& ep = run.extreme();
  const int n = prob.horizon();
  const Eigen::Index p = prob.dim();

  MatrixList policy = run.policy().l;
  if (opts.perturb != 0.0) {
    for (auto& l : policy) l.array() += opts.perturb;
  }

  rep.checks.push_back(at_most("feasibility", sol.feasibility_violation, 1e-6));

  double idem = 0.0;
  for (const auto& pk : ep.p) idem = std::max(idem, idempotency_residual(pk));
  rep.checks.push_back(at_most("idempotency", idem, 1e-10));

  double excess = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    excess = std::max(excess, static_cast<double>(numerical_rank(policy[k]) -
                                                  count_negative_eigenvalues(prob.v[k])));
  }
  rep.checks.push_back(at_most("rank_bound", excess, 0.0, "max rank(L_k) - #neg(V_k)"));

  const MatrixList h = posterior_cov_schedule(prob.a, prob.sigma, policy);
  double tight = 0.0;
  for (int k = 0; k < n; ++k) {
    tight = std::max(tight, (h[k] - sol.s[k]).norm() / (1.0 + sol.s[k].norm()));
  }
  rep.checks.push_back(at_most("tightness", tight, 1e-5, "max ||H_k - S_k|| / (1 + ||S_k||)"));

  const double ext = sdp_objective(prob, extreme_point_chain(prob.sigma, prob.a, ep.p));
  rep.checks.push_back(at_most("extreme_point", (ext - sol.objective) / (1.0 + std::abs(sol.objective)),
                               1e-5, "relative excess over solver objective"));

  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < opts.random_policies; ++i) {
    const MatrixList l = random_policy(p, n, opts.seed * 7919 + static_cast<std::uint64_t>(i));
    worst = std::min(worst, policy_objective(prob, l) - sol.objective);
  }
  CheckResult lb{"lower_bound", worst >= -1e-6, false, worst, -1e-6,
                 "min over random policies of objective - SDP objective"};
  rep.checks.push_back(lb);

  if (p == 2 && n <= 3) {
    const GridResult g = grid_search(prob);
    const double rel = std::abs(g.objective - sol.objective) / std::max(std::abs(sol.objective), 1e-12);
    rep.checks.push_back(at_most("oracle", std::abs(g.objective - sol.objective) <= 1e-9 ? 0.0 : rel,
                                 1e-2, "grid objective " + std::to_string(g.objective)));
  } else {
    rep.checks.push_back(skipped("oracle", "needs p = 2 and n <= 3"));
  }

  const CostPair analytic = costs_under(run, policy);
  const LiftedBasis basis = make_lifted_basis(m);
  const CostPair exact = exact_costs(run, basis, policy);
  rep.checks.push_back(at_most(
      "cost_exact", std::max(rel_gap(analytic.sender, exact.sender), rel_gap(analytic.receiver, exact.receiver)),
      1e-8, "analytic vs conditioning on stacked messages"));

  if (run.control) {
    const auto& rt = run.control->riccati;
    double gap = 0.0;
    for (std::uint64_t s = 0; s < 3; ++s) {
      const MatrixList u = lifted_random_feedback(m, basis, opts.seed + 101 * s);
      const CostPair lhs = lifted_control_costs(m, run.config.control, basis, u);
      for (bool virt : {false, true}) {
        gap = std::max(gap, rel_gap(lifted_completed_squares(m, rt.sender, basis, u, virt), lhs.sender));
        gap = std::max(gap, rel_gap(lifted_completed_squares(m, rt.receiver, basis, u, virt), lhs.receiver));
      }
    }
    rep.checks.push_back(at_most("cost_identity", gap, 1e-8, "completion of squares, both players"));

    const auto& ct = run.control->transform;
    double lower = 0.0;
    for (int r = 1; r <= n; ++r) {
      for (int c = r + 1; c <= n; ++c) lower = std::max(lower, ct.block(ct.t_s, r, c, ct.t, ct.p).cwiseAbs().maxCoeff());
    }
    rep.checks.push_back(at_most("ts_triangular", lower, 1e-12, "largest entry below the block diagonal"));
  }

  if (opts.monte_carlo) {
    SignalingPolicy sp{policy, run.policy().mode};
    const SimReport sim = run.comm ? stackelberg::run(m, run.config.comm, sp, run.comm->gains, opts.paths, opts.seed)
                                   : stackelberg::run(m, run.config.control, sp, run.control->transform,
                                                      opts.paths, opts.seed);
    auto zscore = [](const Estimate& e, double target) {
      const double d = std::abs(e.mean - target);
      if (e.std_error > 0.0) return d / e.std_error;
      return d <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
    };
    const double z = std::max(zscore(sim.sender, analytic.sender), zscore(sim.receiver, analytic.receiver));
    char buf[200];
    std::snprintf(buf, sizeof buf, "J_S %.6g (mc %.6g +- %.2g), J_R %.6g (mc %.6g +- %.2g), %lld paths",
                  analytic.sender, sim.sender.mean, sim.sender.std_error, analytic.receiver,
                  sim.receiver.mean, sim.receiver.std_error, static_cast<long long>(opts.paths));
    rep.checks.push_back(at_most("monte_carlo", z, 3.0, buf));
  } else {
    rep.checks.push_back(skipped("monte_carlo", "disabled"));
  }
  return rep;
}

}  // namespace stackelberg
