#pragma once

#include <optional>

#include "stackelberg/model.hpp"
#include "stackelberg/sdp.hpp"

namespace stackelberg {

class RankNotOneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Symmetric idempotents P_k of the extreme-point chain, one per stage.
struct ExtremePoint {
  MatrixList p;
  std::vector<int> ranks;
  std::vector<double> rounding_residuals;
  // at least one stage had an eigenvalue inside [0.35, 0.65]
  bool ambiguous = false;
};

ExtremePoint recover_idempotents(const SdpSolution& sol, const MatrixList& sigma,
                                 const Eigen::MatrixXd& a);

enum class PolicyMode { kCommunication, kControl };

/// Message weights: y_k = L_k' x_k (communication) or L_k' x^o_k (control).
struct SignalingPolicy {
  MatrixList l;
  PolicyMode mode = PolicyMode::kCommunication;
};

/// L_k = (Sigma_k - A S*_{k-1} A')^{-1/2} U_k Lambda_k where P_k = U_k Lambda_k U_k'.
/// Unit-eigenvalue eigenvectors come first, sorted by decreasing |first
/// coordinate|, each with its first nonzero entry positive; the remaining
/// columns are zero.
SignalingPolicy synthesize_policy(const ExtremePoint& ep, const SdpSolution& sol,
                                  const MatrixList& sigma, const Eigen::MatrixXd& a,
                                  PolicyMode mode = PolicyMode::kCommunication);

/// G_k = -(R_{R,k}'R_{R,k})^{-1} R_{R,k}' Q_{R,k}; the receiver plays u_k = G_k xhat_k.
MatrixList receiver_gains_comm(const CommCosts& c);

struct CostPair {
  double sender = 0.0;
  double receiver = 0.0;
};

/// Expected costs under messages y_k = L_k' x_k and the receiver's best
/// response.
CostPair analytic_costs_comm(const ProcessModel& m, const MatrixList& sigma, const CommCosts& c,
                             const MatrixList& policy);

/// E||Q x_k + R G xhat_k||^2 = tr{Q'Q Sigma} + tr{(G'R'RG + G'R'Q + Q'RG) H}.
double linear_response_cost(const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                            const Eigen::MatrixXd& g, const Eigen::MatrixXd& sigma,
                            const Eigen::MatrixXd& h);

/// Weight on the second coordinate of a rank-one message normalized so the
/// first coordinate has weight one. nullopt when the first weight is below
/// 1e-9 in magnitude; RankNotOneError when rank(L_k) != 1.
std::optional<double> extract_alpha(const Eigen::MatrixXd& l_k);

/// Full communication pipeline: V_k, SDP, idempotents, policy, gains, costs.
struct CommEquilibrium {
  MatrixList sigma;
  MatrixList v;
  SdpProblem problem;
  SdpSolution solution;
  ExtremePoint extreme;
  SignalingPolicy policy;
  MatrixList gains;
  CostPair costs;
  double constant_sender = 0.0;  // sum_k tr{Q_{S,k}'Q_{S,k} Sigma_k}
};

CommEquilibrium solve_comm_game(const ProcessModel& m, const CommCosts& c,
                                const SolverSettings& settings = {});

}  // namespace stackelberg
