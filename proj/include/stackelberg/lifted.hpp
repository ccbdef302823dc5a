#pragma once

// Exact second-moment bookkeeping for linear closed loops. Every random
// vector is stored as a matrix M with value M * xi, where
// xi = (x_1, w_1, ..., w_n) ~ N(0, blkdiag(Sigma_1, Sigma_w, ..., Sigma_w)).
// Posterior means are formed by direct Gaussian conditioning on the stacked
// message history, independent of any filter recursion.

#include "stackelberg/control.hpp"
#include "stackelberg/model.hpp"

namespace stackelberg {

struct LiftedBasis {
  Eigen::Index p = 0;
  int horizon = 0;
  Eigen::MatrixXd cov;

  Eigen::Index dim() const { return cov.rows(); }
  Eigen::MatrixXd initial_state() const;
  Eigen::MatrixXd noise(int stage) const;  // w_k, k = 1..n

  /// E{(M_a xi)(M_b xi)'}
  Eigen::MatrixXd moment(const Eigen::MatrixXd& ma, const Eigen::MatrixXd& mb) const {
    return ma * cov * mb.transpose();
  }
  /// E{(M_a xi)' W (M_b xi)}
  double quadratic(const Eigen::MatrixXd& ma, const Eigen::MatrixXd& weight,
                   const Eigen::MatrixXd& mb) const {
    return (ma.transpose() * weight * mb * cov).trace();
  }
};

LiftedBasis make_lifted_basis(const ProcessModel& m);

/// x^o_1 .. x^o_{n+1}
MatrixList lifted_virtual_states(const ProcessModel& m, const LiftedBasis& basis);

/// E{target | observations} as a map of xi, with observations stacked rows.
Eigen::MatrixXd lifted_conditional_mean(const LiftedBasis& basis, const Eigen::MatrixXd& target,
                                        const Eigen::MatrixXd& observations);

/// E{x_k | L_1' s_1, ..., L_k' s_k} for k = 1..n, where s_k = states[k-1].
MatrixList lifted_posterior_means(const LiftedBasis& basis, const MatrixList& states,
                                  const MatrixList& policy);

/// Actual states x_1..x_{n+1} under inputs u_1..u_n (maps of xi).
MatrixList lifted_controlled_states(const ProcessModel& m, const MatrixList& virtual_states,
                                    const MatrixList& inputs);

/// Expected control-mode costs of both players for given input maps.
CostPair lifted_control_costs(const ProcessModel& m, const ControlCosts& c,
                              const LiftedBasis& basis, const MatrixList& inputs);

/// Right-hand side of the completion of squares:
/// sum_k E||u_k + K_k x_k||^2_{Delta_k} + Delta_0 for the chosen side.
double lifted_completed_squares(const ProcessModel& m, const RiccatiSide& rs,
                                const LiftedBasis& basis, const MatrixList& inputs,
                                bool use_virtual_state);

/// Random causal state feedback u_k = sum_{j<=k} F_{kj} x_j with entries drawn
/// from N(0, scale^2); returns the input maps.
MatrixList lifted_random_feedback(const ProcessModel& m, const LiftedBasis& basis,
                                  std::uint64_t seed, double scale = 0.5);

}  // namespace stackelberg
