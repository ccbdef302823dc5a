#include "stackelberg/lifted.hpp"

#include <random>

namespace stackelberg {

Eigen::MatrixXd LiftedBasis::initial_state() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, dim());
  m.leftCols(p).setIdentity();
  return m;
}

Eigen::MatrixXd LiftedBasis::noise(int stage) const {
  if (stage < 1 || stage > horizon) throw std::out_of_range("noise stage out of range");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, dim());
  m.middleCols(stage * p, p).setIdentity();
  return m;
}

LiftedBasis make_lifted_basis(const ProcessModel& m) {
  LiftedBasis basis;
  basis.p = m.state_dim();
  basis.horizon = m.horizon;
  const Eigen::Index p = basis.p;
  basis.cov = Eigen::MatrixXd::Zero((m.horizon + 1) * p, (m.horizon + 1) * p);
  basis.cov.topLeftCorner(p, p) = m.sigma1;
  for (int k = 1; k <= m.horizon; ++k) basis.cov.block(k * p, k * p, p, p) = m.sigma_w;
  return basis;
}

MatrixList lifted_virtual_states(const ProcessModel& m, const LiftedBasis& basis) {
  MatrixList out{basis.initial_state()};
  for (int k = 1; k <= m.horizon; ++k) out.push_back(m.a * out.back() + basis.noise(k));
  return out;
}

Eigen::MatrixXd lifted_conditional_mean(const LiftedBasis& basis, const Eigen::MatrixXd& target,
                                        const Eigen::MatrixXd& observations) {
  const Eigen::MatrixXd cyy = basis.moment(observations, observations);
  const Eigen::MatrixXd cty = basis.moment(target, observations);
  return cty * pinv(symmetrize(cyy)) * observations;
}

MatrixList lifted_posterior_means(const LiftedBasis& basis, const MatrixList& states,
                                  const MatrixList& policy) {
  MatrixList out;
  Eigen::MatrixXd obs(0, basis.dim());
  for (std::size_t k = 0; k < policy.size(); ++k) {
    const Eigen::MatrixXd y = policy[k].transpose() * states[k];
    Eigen::MatrixXd stacked(obs.rows() + y.rows(), basis.dim());
    stacked << obs, y;
    obs = std::move(stacked);
    out.push_back(lifted_conditional_mean(basis, states[k], obs));
  }
  return out;
}

MatrixList lifted_controlled_states(const ProcessModel& m, const MatrixList& virtual_states,
                                    const MatrixList& inputs) {
  MatrixList x{virtual_states.front()};
  for (int k = 0; k < m.horizon; ++k) {
    // x_{k+1} - x^o_{k+1} = A (x_k - x^o_k) + B u_k
    x.push_back(virtual_states[k + 1] + m.a * (x[k] - virtual_states[k]) + m.b * inputs[k]);
  }
  return x;
}

CostPair lifted_control_costs(const ProcessModel& m, const ControlCosts& c,
                              const LiftedBasis& basis, const MatrixList& inputs) {
  const MatrixList x = lifted_controlled_states(m, lifted_virtual_states(m, basis), inputs);
  CostPair out;
  for (int k = 0; k < m.horizon; ++k) {
    out.sender += basis.quadratic(x[k + 1], c.qs[k], x[k + 1]) +
                  basis.quadratic(inputs[k], c.rs[k], inputs[k]);
    out.receiver += basis.quadratic(x[k + 1], c.qr[k], x[k + 1]) +
                    basis.quadratic(inputs[k], c.rr[k], inputs[k]);
  }
  return out;
}

double lifted_completed_squares(const ProcessModel& m, const RiccatiSide& rs,
                                const LiftedBasis& basis, const MatrixList& inputs,
                                bool use_virtual_state) {
  const MatrixList xo = lifted_virtual_states(m, basis);
  const MatrixList x = lifted_controlled_states(m, xo, inputs);
  double total = rs.delta0;
  for (int k = 0; k < m.horizon; ++k) {
    Eigen::MatrixXd e;
    if (use_virtual_state) {
      Eigen::MatrixXd us = inputs[k];
      for (int c = 0; c < k; ++c) us += rs.gain[k] * matrix_power(m.a, k - 1 - c) * m.b * inputs[c];
      e = us + rs.gain[k] * xo[k];
    } else {
      e = inputs[k] + rs.gain[k] * x[k];
    }
    total += basis.quadratic(e, rs.delta[k], e);
  }
  return total;
}

MatrixList lifted_random_feedback(const ProcessModel& m, const LiftedBasis& basis,
                                  std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  const Eigen::Index p = m.state_dim(), t = m.input_dim();
  const MatrixList xo = lifted_virtual_states(m, basis);
  MatrixList x{xo.front()}, u;
  for (int k = 0; k < m.horizon; ++k) {
    Eigen::MatrixXd uk = Eigen::MatrixXd::Zero(t, basis.dim());
    for (int j = 0; j <= k; ++j) {
      Eigen::MatrixXd f(t, p);
      for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = normal(rng);
      uk += f * x[j];
    }
    u.push_back(uk);
    x.push_back(xo[k + 1] + m.a * (x[k] - xo[k]) + m.b * uk);
  }
  return u;
}

}  // namespace stackelberg
