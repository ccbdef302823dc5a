#pragma once

#include "stackelberg/matops.hpp"
#include "stackelberg/model.hpp"

namespace stackelberg {

/// min sum_k tr{V_k S_k}  s.t.  Sigma_k >= S_k >= A S_{k-1} A',  S_0 = O.
struct SdpProblem {
  MatrixList v;      // symmetric p x p
  MatrixList sigma;  // PD p x p
  Eigen::MatrixXd a;

  int horizon() const { return static_cast<int>(v.size()); }
  Eigen::Index dim() const { return a.rows(); }
};

SdpProblem build_sdp(const MatrixList& sigma, const MatrixList& v, const Eigen::MatrixXd& a);

struct SolverSettings {
  double tol = 1e-6;
  int max_iter = 50000;
  // Round the solver output onto the extreme-point chain when that does not
  // worsen the objective beyond tol * (1 + |objective|).
  bool polish = true;
  double rho = 1.0;
  double relaxation = 1.6;
};

struct SdpSolution {
  MatrixList s;
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double feasibility_violation = 0.0;
  bool converged = false;
  bool polished = false;
};

double sdp_objective(const SdpProblem& prob, const MatrixList& s);

/// max over k of the negative parts of the smallest eigenvalues of
/// Sigma_k - S_k and S_k - A S_{k-1} A'.
double feasibility_violation(const SdpProblem& prob, const MatrixList& s);

/// Operator-splitting solver: S_k plus PSD slacks for both interval
/// constraints, a prefactored least-squares step and PSD-cone projections.
/// The iterate is then mapped back onto the feasible set stage by stage.
SdpSolution solve(const SdpProblem& prob, const SolverSettings& settings = {});

/// n = 1 optimum S* = Sigma^{1/2} Q Q' Sigma^{1/2}, Q spanning the negative
/// eigenspace of Sigma^{1/2} V Sigma^{1/2}.
Eigen::MatrixXd solve_single_stage_closed_form(const Eigen::MatrixXd& sigma1,
                                               const Eigen::MatrixXd& v1);

/// S_k = A S_{k-1} A' + (Sigma_k - A S_{k-1} A')^{1/2} P_k (Sigma_k - A S_{k-1} A')^{1/2}.
MatrixList extreme_point_chain(const MatrixList& sigma, const Eigen::MatrixXd& a,
                               const MatrixList& projectors);

/// Inverse of extreme_point_chain (without rounding):
/// P_k = D_k^{-1/2} (S_k - A S_{k-1} A') D_k^{-1/2}.
MatrixList chain_coordinates(const MatrixList& sigma, const Eigen::MatrixXd& a, const MatrixList& s);

}  // namespace stackelberg
