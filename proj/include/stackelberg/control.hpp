#pragma once

#include "stackelberg/model.hpp"
#include "stackelberg/policy.hpp"
#include "stackelberg/sdp.hpp"

namespace stackelberg {

enum class Side { kSender, kReceiver };

/// Completion-of-squares data for one player:
///   sum_k E{x'_{k+1} Q_{k+1} x_{k+1} + u_k' R_k u_k}
///     = sum_k E||u_k + K_k x_k||^2_{Delta_k} + delta0.
struct RiccatiSide {
  MatrixList qtilde;  // n + 1 entries: stages 1..n+1
  MatrixList delta;   // t x t, stages 1..n
  MatrixList gain;    // K_k, t x p, stages 1..n
  double delta0 = 0.0;
};

struct RiccatiTransform {
  RiccatiSide sender;
  RiccatiSide receiver;

  const RiccatiSide& side(Side s) const { return s == Side::kSender ? sender : receiver; }
};

/// Backward recursion with Qtilde_{n+1} = Q_{n+1} and Q_1 = O. Throws
/// NotPsdError if some Delta_k is not positive definite.
RiccatiTransform complete_squares(const ProcessModel& m, const ControlCosts& c);

/// Stacked vectors list stage n first: stage k (1-based) occupies block n - k.
inline Eigen::Index stacked_block(int stage, int horizon) { return horizon - stage; }

/// Reduction of the control game to a signaling problem over the virtual
/// state x^o.
struct ControlTransform {
  int horizon = 0;
  Eigen::Index p = 0;
  Eigen::Index t = 0;
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  Eigen::MatrixXd phi_s;    // nt x nt, unit block upper triangular
  Eigen::MatrixXd phi_r;    // nt x nt, unit block upper triangular
  Eigen::MatrixXd k_s;      // nt x np, block diagonal
  Eigen::MatrixXd k_r;      // nt x np, block diagonal
  Eigen::MatrixXd delta_s;  // nt x nt, block diagonal
  Eigen::MatrixXd delta_r;  // nt x nt, block diagonal
  Eigen::MatrixXd t_s;      // Phi_S Phi_R^{-1} K_R
  Eigen::MatrixXd sigma_o;  // np x np stacked virtual-state covariance
  Eigen::MatrixXd xi;       // np x np, symmetric
  double xi0 = 0.0;
  double delta0_r = 0.0;
  MatrixList vo;            // per-stage objective matrices

  /// Block (stage_row, stage_col) of an np x np or nt x np stacked matrix.
  Eigen::MatrixXd block(const Eigen::MatrixXd& m, int stage_row, int stage_col, Eigen::Index rows,
                        Eigen::Index cols) const;
};

ControlTransform build_control_transform(const RiccatiTransform& rt, const ProcessModel& m);

/// u^sigma_k = u_k + K_k B u_{k-1} + ... + K_k A^{k-2} B u_1 for each k covered
/// by `u_history`.
std::vector<Eigen::VectorXd> transformed_inputs(const RiccatiTransform& rt, const ProcessModel& m,
                                                const std::vector<Eigen::VectorXd>& u_history,
                                                Side side);

/// Receiver controls from posterior means of the virtual state by block
/// back-substitution in Phi_R u = -K_R xhat^o. Each entry of `xhat_o` may
/// hold several columns (one per path); entry k yields u_k using stages 1..k.
MatrixList reconstruct_controls(const ControlTransform& ct, const MatrixList& xhat_o);

/// J_S = sum_k tr{V^o_k H^o_k} + Xi_o and
/// J_R = sum_k tr{K_{R,k}'Delta_{R,k}K_{R,k}(Sigma^o_k - H^o_k)} + Delta_{R,0}.
CostPair analytic_costs_control(const ControlTransform& ct, const MatrixList& sigma_o,
                                const MatrixList& h_o);

struct ControlEquilibrium {
  RiccatiTransform riccati;
  ControlTransform transform;
  MatrixList sigma_o;
  SdpProblem problem;
  SdpSolution solution;
  ExtremePoint extreme;
  SignalingPolicy policy;
  MatrixList h_o;
  CostPair costs;
};

ControlEquilibrium solve_control_game(const ProcessModel& m, const ControlCosts& c,
                                      const SolverSettings& settings = {});

}  // namespace stackelberg
