#include "stackelberg/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "log.hpp"
#include "stackelberg/posterior.hpp"

namespace stackelberg {

namespace {

void orient(Eigen::Ref<Eigen::VectorXd> u) {
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (std::abs(u(i)) > 1e-12) {
      if (u(i) < 0.0) u = -u;
      return;
    }
  }
}

}  // namespace

ExtremePoint recover_idempotents(const SdpSolution& sol, const MatrixList& sigma,
                                 const Eigen::MatrixXd& a) {
  ExtremePoint ep;
  const MatrixList coords = chain_coordinates(sigma, a, sol.s);
  for (std::size_t k = 0; k < coords.size(); ++k) {
    const auto r = nearest_idempotent(coords[k]);
    ep.p.push_back(r.projector);
    ep.ranks.push_back(r.rank);
    ep.rounding_residuals.push_back(r.residual);
    if (r.ambiguous) {
      ep.ambiguous = true;
      log::get().warn("stage {}: idempotent rounding is ambiguous (residual {:.3g})", k + 1,
                      r.residual);
    }
  }
  return ep;
}

SignalingPolicy synthesize_policy(const ExtremePoint& ep, const SdpSolution& sol,
                                  const MatrixList& sigma, const Eigen::MatrixXd& a,
                                  PolicyMode mode) {
  SignalingPolicy pol;
  pol.mode = mode;
  const Eigen::Index p = a.rows();
  Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t k = 0; k < ep.p.size(); ++k) {
    const Eigen::MatrixXd inv_root = pd_inv_sqrt(sigma[k] - a * prev * a.transpose());
    const auto ed = eigen_decomp(ep.p[k]);
    std::vector<Eigen::Index> unit;
    for (Eigen::Index i = 0; i < ed.values.size(); ++i) {
      if (ed.values(i) >= 0.5) unit.push_back(i);
    }
    std::stable_sort(unit.begin(), unit.end(), [&](Eigen::Index i, Eigen::Index j) {
      return std::abs(ed.vectors(0, i)) > std::abs(ed.vectors(0, j));
    });
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t j = 0; j < unit.size(); ++j) {
      basis.col(static_cast<Eigen::Index>(j)) = ed.vectors.col(unit[j]);
      orient(basis.col(static_cast<Eigen::Index>(j)));
    }
    pol.l.push_back(inv_root * basis);
    prev = sol.s[k];
  }
  return pol;
}

MatrixList receiver_gains_comm(const CommCosts& c) {
  MatrixList g;
  for (std::size_t k = 0; k < c.rr.size(); ++k) {
    const Eigen::MatrixXd normal = c.rr[k].transpose() * c.rr[k];
    const Eigen::LLT<Eigen::MatrixXd> llt(normal);
    if (llt.info() != Eigen::Success) {
      throw SingularRRError("R_R'R_R is singular at stage " + std::to_string(k + 1));
    }
    g.push_back(-llt.solve(c.rr[k].transpose() * c.qr[k]));
  }
  return g;
}

double linear_response_cost(const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                            const Eigen::MatrixXd& g, const Eigen::MatrixXd& sigma,
                            const Eigen::MatrixXd& h) {
  const Eigen::MatrixXd rg = r * g;
  const Eigen::MatrixXd m = rg.transpose() * rg + rg.transpose() * q + q.transpose() * rg;
  return (q.transpose() * q * sigma).trace() + (m * h).trace();
}

CostPair analytic_costs_comm(const ProcessModel& m, const MatrixList& sigma, const CommCosts& c,
                             const MatrixList& policy) {
  const MatrixList h = posterior_cov_schedule(m.a, sigma, policy);
  const MatrixList g = receiver_gains_comm(c);
  CostPair out;
  for (std::size_t k = 0; k < h.size(); ++k) {
    out.sender += linear_response_cost(c.qs[k], c.rs[k], g[k], sigma[k], h[k]);
    out.receiver += linear_response_cost(c.qr[k], c.rr[k], g[k], sigma[k], h[k]);
  }
  return out;
}

std::optional<double> extract_alpha(const Eigen::MatrixXd& l_k) {
  const int rank = numerical_rank(l_k);
  if (rank != 1) {
    throw RankNotOneError("message weight matrix has rank " + std::to_string(rank));
  }
  if (l_k.rows() < 2) throw RankNotOneError("alpha needs at least two state coordinates");
  Eigen::Index col = 0;
  l_k.colwise().norm().maxCoeff(&col);
  const Eigen::VectorXd dir = l_k.col(col);
  if (std::abs(dir(0)) < 1e-9) return std::nullopt;
  return dir(1) / dir(0);
}

CommEquilibrium solve_comm_game(const ProcessModel& m, const CommCosts& c,
                                const SolverSettings& settings) {
  CommEquilibrium eq;
  eq.sigma = covariance_schedule(m);
  eq.v = comm_objective_matrices(c);
  eq.problem = build_sdp(eq.sigma, eq.v, m.a);
  eq.solution = solve(eq.problem, settings);
  eq.extreme = recover_idempotents(eq.solution, eq.sigma, m.a);
  eq.policy = synthesize_policy(eq.extreme, eq.solution, eq.sigma, m.a);
  eq.gains = receiver_gains_comm(c);
  eq.costs = analytic_costs_comm(m, eq.sigma, c, eq.policy.l);
  for (std::size_t k = 0; k < eq.sigma.size(); ++k) {
    eq.constant_sender += (c.qs[k].transpose() * c.qs[k] * eq.sigma[k]).trace();
  }
  return eq;
}

}  // namespace stackelberg
