#include "stackelberg/control.hpp"

#include "stackelberg/posterior.hpp"

namespace stackelberg {

namespace {

RiccatiSide riccati_side(const ProcessModel& m, const MatrixList& q, const MatrixList& r) {
  const int n = m.horizon;
  const Eigen::Index p = m.state_dim();
  RiccatiSide out;
  out.qtilde.assign(n + 1, Eigen::MatrixXd::Zero(p, p));
  out.delta.resize(n);
  out.gain.resize(n);
  out.qtilde[n] = q[n - 1];
  for (int k = n - 1; k >= 0; --k) {
    const Eigen::MatrixXd& next = out.qtilde[k + 1];
    const Eigen::MatrixXd delta = symmetrize(m.b.transpose() * next * m.b + r[k]);
    const Eigen::LLT<Eigen::MatrixXd> llt(delta);
    if (llt.info() != Eigen::Success || !(min_eigenvalue(delta) > 0.0)) {
      throw NotPsdError("Delta at stage " + std::to_string(k + 1) + " is not positive definite");
    }
    out.delta[k] = delta;
    out.gain[k] = llt.solve(m.b.transpose() * next * m.a);
    const Eigen::MatrixXd stage_q = k == 0 ? Eigen::MatrixXd::Zero(p, p) : q[k - 1];
    const Eigen::MatrixXd reduced = next - next * m.b * llt.solve(m.b.transpose() * next);
    out.qtilde[k] = symmetrize(stage_q + m.a.transpose() * reduced * m.a);
  }
  out.delta0 = (out.qtilde[0] * m.sigma1).trace();
  for (int k = 1; k <= n; ++k) out.delta0 += (out.qtilde[k] * m.sigma_w).trace();
  return out;
}

Eigen::MatrixXd shift_operator(const ProcessModel& m, const MatrixList& gain) {
  const int n = m.horizon;
  const Eigen::Index t = m.input_dim();
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n * t, n * t);
  for (int row = 1; row <= n; ++row) {
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(m.a.rows(), m.a.cols());
    // walk columns from stage row-1 down to 1, accumulating A^{row-1-col}
    for (int col = row - 1; col >= 1; --col) {
      const Eigen::Index br = stacked_block(row, n) * t;
      const Eigen::Index bc = stacked_block(col, n) * t;
      phi.block(br, bc, t, t) = gain[row - 1] * power * m.b;
      power = m.a * power;
    }
  }
  return phi;
}

Eigen::MatrixXd block_diagonal(const MatrixList& blocks, int n) {
  const Eigen::Index r = blocks[0].rows();
  const Eigen::Index c = blocks[0].cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * r, n * c);
  for (int k = 1; k <= n; ++k) {
    const Eigen::Index b = stacked_block(k, n);
    out.block(b * r, b * c, r, c) = blocks[k - 1];
  }
  return out;
}

}  // namespace

RiccatiTransform complete_squares(const ProcessModel& m, const ControlCosts& c) {
  RiccatiTransform rt;
  rt.sender = riccati_side(m, c.qs, c.rs);
  rt.receiver = riccati_side(m, c.qr, c.rr);
  return rt;
}

Eigen::MatrixXd ControlTransform::block(const Eigen::MatrixXd& m, int stage_row, int stage_col,
                                        Eigen::Index rows, Eigen::Index cols) const {
  return m.block(stacked_block(stage_row, horizon) * rows, stacked_block(stage_col, horizon) * cols,
                 rows, cols);
}

ControlTransform build_control_transform(const RiccatiTransform& rt, const ProcessModel& m) {
  ControlTransform ct;
  const int n = m.horizon;
  const Eigen::Index p = m.state_dim();
  const Eigen::Index t = m.input_dim();
  ct.horizon = n;
  ct.p = p;
  ct.t = t;
  ct.a = m.a;
  ct.b = m.b;
  ct.phi_s = shift_operator(m, rt.sender.gain);
  ct.phi_r = shift_operator(m, rt.receiver.gain);
  ct.k_s = block_diagonal(rt.sender.gain, n);
  ct.k_r = block_diagonal(rt.receiver.gain, n);
  ct.delta_s = block_diagonal(rt.sender.delta, n);
  ct.delta_r = block_diagonal(rt.receiver.delta, n);
  const Eigen::MatrixXd phi_r_inv_k = ct.phi_r.triangularView<Eigen::UnitUpper>().solve(ct.k_r);
  ct.t_s = ct.phi_s * phi_r_inv_k;

  const MatrixList sigma = covariance_schedule(m);
  ct.sigma_o = Eigen::MatrixXd::Zero(n * p, n * p);
  for (int l = 1; l <= n; ++l) {
    for (int k = 1; k <= n; ++k) {
      Eigen::MatrixXd blk;
      if (l == k) blk = sigma[l - 1];
      else if (l < k) blk = sigma[l - 1] * matrix_power(m.a, k - l).transpose();
      else blk = matrix_power(m.a, l - k) * sigma[k - 1];
      ct.sigma_o.block(stacked_block(l, n) * p, stacked_block(k, n) * p, p, p) = blk;
    }
  }

  const Eigen::MatrixXd dt = ct.delta_s * ct.t_s;
  const Eigen::MatrixXd dk = ct.delta_s * ct.k_s;
  ct.xi = symmetrize(ct.t_s.transpose() * dt - ct.t_s.transpose() * dk - ct.k_s.transpose() * dt);
  ct.xi0 = (ct.sigma_o * ct.k_s.transpose() * dk).trace() + rt.sender.delta0;
  ct.delta0_r = rt.receiver.delta0;

  ct.vo.resize(n);
  for (int k = 1; k <= n; ++k) {
    Eigen::MatrixXd vk = ct.block(ct.xi, k, k, p, p);
    for (int l = k + 1; l <= n; ++l) {
      const Eigen::MatrixXd pw = matrix_power(m.a, l - k);
      vk += ct.block(ct.xi, k, l, p, p) * pw + pw.transpose() * ct.block(ct.xi, l, k, p, p);
    }
    ct.vo[k - 1] = symmetrize(vk);
  }
  return ct;
}

std::vector<Eigen::VectorXd> transformed_inputs(const RiccatiTransform& rt, const ProcessModel& m,
                                                const std::vector<Eigen::VectorXd>& u_history,
                                                Side side) {
  const RiccatiSide& rs = rt.side(side);
  std::vector<Eigen::VectorXd> out;
  out.reserve(u_history.size());
  for (std::size_t k = 0; k < u_history.size(); ++k) {
    // drift_k = sum_{c<k} A^{k-1-c} B u_c, the control-driven part of x_k
    Eigen::VectorXd drift = Eigen::VectorXd::Zero(m.state_dim());
    for (std::size_t c = 0; c < k; ++c) drift = m.a * drift + m.b * u_history[c];
    out.push_back(u_history[k] + rs.gain[k] * drift);
  }
  return out;
}

MatrixList reconstruct_controls(const ControlTransform& ct, const MatrixList& xhat_o) {
  MatrixList u;
  u.reserve(xhat_o.size());
  for (std::size_t k = 0; k < xhat_o.size(); ++k) {
    const int stage = static_cast<int>(k) + 1;
    Eigen::MatrixXd uk = -ct.block(ct.k_r, stage, stage, ct.t, ct.p) * xhat_o[k];
    for (int c = 1; c < stage; ++c) uk -= ct.block(ct.phi_r, stage, c, ct.t, ct.t) * u[c - 1];
    u.push_back(std::move(uk));
  }
  return u;
}

CostPair analytic_costs_control(const ControlTransform& ct, const MatrixList& sigma_o,
                                const MatrixList& h_o) {
  CostPair out;
  out.sender = ct.xi0;
  out.receiver = ct.delta0_r;
  for (int k = 1; k <= ct.horizon; ++k) {
    out.sender += (ct.vo[k - 1] * h_o[k - 1]).trace();
    const Eigen::MatrixXd kk = ct.block(ct.k_r, k, k, ct.t, ct.p);
    const Eigen::MatrixXd dd = ct.block(ct.delta_r, k, k, ct.t, ct.t);
    out.receiver += (kk.transpose() * dd * kk * (sigma_o[k - 1] - h_o[k - 1])).trace();
  }
  return out;
}

ControlEquilibrium solve_control_game(const ProcessModel& m, const ControlCosts& c,
                                      const SolverSettings& settings) {
  ControlEquilibrium eq;
  eq.riccati = complete_squares(m, c);
  eq.transform = build_control_transform(eq.riccati, m);
  eq.sigma_o = covariance_schedule(m);
  eq.problem = build_sdp(eq.sigma_o, eq.transform.vo, m.a);
  eq.solution = solve(eq.problem, settings);
  eq.extreme = recover_idempotents(eq.solution, eq.sigma_o, m.a);
  eq.policy = synthesize_policy(eq.extreme, eq.solution, eq.sigma_o, m.a, PolicyMode::kControl);
  eq.h_o = posterior_cov_schedule(m.a, eq.sigma_o, eq.policy.l);
  eq.costs = analytic_costs_control(eq.transform, eq.sigma_o, eq.h_o);
  return eq;
}

}  // namespace stackelberg
