#pragma once

#include "stackelberg/matops.hpp"

namespace stackelberg {

/// Posterior covariances H_k = E{xhat_k xhat_k'} induced by memoryless linear
/// messages y_k = L_k' x_k. Computed in projector form:
///   D_k = Sigma_k - A H_{k-1} A',  C_k = D_k^{1/2} L_k,
///   H_k = A H_{k-1} A' + D_k^{1/2} C_k (C_k'C_k)^+ C_k' D_k^{1/2},  H_0 = O.
MatrixList posterior_cov_schedule(const Eigen::MatrixXd& a, const MatrixList& sigma,
                                  const MatrixList& policy);

/// One step of the receiver's conditional-mean recursion. Stage 1 is obtained
/// with h_prev = O and xhat_prev = 0.
Eigen::VectorXd posterior_mean_step(const Eigen::MatrixXd& a, const Eigen::MatrixXd& h_prev,
                                    const Eigen::MatrixXd& sigma_k, const Eigen::MatrixXd& l_k,
                                    const Eigen::VectorXd& xhat_prev, const Eigen::VectorXd& y_k);

/// Precomputed per-stage gains D_k L_k (L_k' D_k L_k)^+ so the filter can run
/// over many trajectories without refactoring.
struct PosteriorFilter {
  Eigen::MatrixXd a;
  MatrixList policy;
  MatrixList gain;
  MatrixList h;  // posterior covariances

  /// Conditional means for a whole message history.
  std::vector<Eigen::VectorXd> run(const std::vector<Eigen::VectorXd>& y) const;

  /// xhat_k from xhat_{k-1} (0-based stage index).
  Eigen::VectorXd step(std::size_t stage, const Eigen::VectorXd& xhat_prev,
                       const Eigen::VectorXd& y_k) const;

  /// Update driven by a whitened message ytilde_k = y_k - L_k' A xhat_{k-1}.
  Eigen::VectorXd step_whitened(std::size_t stage, const Eigen::VectorXd& xhat_prev,
                                const Eigen::VectorXd& ytilde_k) const;
};

PosteriorFilter make_posterior_filter(const Eigen::MatrixXd& a, const MatrixList& sigma,
                                      const MatrixList& policy);

/// ytilde_1 = y_1, ytilde_k = y_k - L_k' A xhat_{k-1}.
std::vector<Eigen::VectorXd> whiten_messages(const Eigen::MatrixXd& a, const MatrixList& sigma,
                                             const MatrixList& policy,
                                             const std::vector<Eigen::VectorXd>& y);

/// D_k^{-1/2} (H_k - A H_{k-1} A') D_k^{-1/2} for every stage; symmetric
/// idempotent whenever H comes from linear signaling.
MatrixList normalized_increments(const Eigen::MatrixXd& a, const MatrixList& sigma,
                                 const MatrixList& h);

/// The matrix an innovation-signaling rule y_k = K_k' w_{k-1} would have to
/// reproduce as a projector at stage k to match the posterior chain with
/// increment projector p_k on top of s_prev:
///   Sigma_w^{-1/2} (Sigma_k - A S_{k-1} A')^{1/2} P_k (.)^{1/2} Sigma_w^{-1/2}.
Eigen::MatrixXd innovation_requirement(const Eigen::MatrixXd& a, const Eigen::MatrixXd& sigma_w,
                                       const Eigen::MatrixXd& sigma_k,
                                       const Eigen::MatrixXd& s_prev, const Eigen::MatrixXd& p_k);

}  // namespace stackelberg
