#pragma once

#include <stdexcept>
#include <string>

#include "stackelberg/matops.hpp"

namespace stackelberg {

class InvalidModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SingularRRError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Zero-mean Gauss-Markov system x_{k+1} = A x_k + B u_k + w_k over `horizon`
/// stages with x_1 ~ N(0, sigma1) and w_k ~ N(0, sigma_w).
struct ProcessModel {
  Eigen::MatrixXd a;        // p x p, invertible
  Eigen::MatrixXd b;        // p x t, may be all zero
  Eigen::MatrixXd sigma1;   // p x p, PD
  Eigen::MatrixXd sigma_w;  // p x p, PD
  int horizon = 1;

  Eigen::Index state_dim() const { return a.rows(); }
  Eigen::Index input_dim() const { return b.cols(); }
};

/// Throws InvalidModelError when an invariant is violated. Symmetrizes the
/// covariances in place.
void validate(ProcessModel& m);

/// Per-stage costs sum_k ||Q_{S,k} x_k + R_{S,k} u_k||^2 for the sender and the
/// analogous receiver cost, with u_k chosen by the receiver.
struct CommCosts {
  MatrixList qs;  // r x p
  MatrixList rs;  // r x t
  MatrixList qr;  // r x p
  MatrixList rr;  // r x t
};

/// Costs sum_{k=1..n} x_{k+1}' Q_{k+1} x_{k+1} + u_k' R_k u_k.
/// qs[k-1] holds Q_{S,k+1}; rs[k-1] holds R_{S,k}; likewise for the receiver.
struct ControlCosts {
  MatrixList qs;  // p x p PSD
  MatrixList rs;  // t x t PD
  MatrixList qr;
  MatrixList rr;
};

void validate(const CommCosts& c, const ProcessModel& m);
void validate(const ControlCosts& c, const ProcessModel& m);

/// Sigma_1 = m.sigma1, Sigma_k = A Sigma_{k-1} A' + Sigma_w.
MatrixList covariance_schedule(const ProcessModel& m);

/// The uncontrolled companion state step x^o_{k+1} = A x^o_k + w_k.
Eigen::VectorXd virtual_state_step(const Eigen::MatrixXd& a, const Eigen::VectorXd& x_o,
                                   const Eigen::VectorXd& w);

/// Lambda_k = R_{S,k} (R_{R,k}'R_{R,k})^{-1} R_{R,k}' Q_{R,k}.
Eigen::MatrixXd response_map(const Eigen::MatrixXd& rs, const Eigen::MatrixXd& rr,
                             const Eigen::MatrixXd& qr);

/// V_k = Lambda_k' Lambda_k - Lambda_k' Q_{S,k} - Q_{S,k}' Lambda_k, so that the
/// sender cost equals sum_k tr{Q_{S,k}'Q_{S,k} Sigma_k} + tr{V_k H_k}.
MatrixList comm_objective_matrices(const CommCosts& c);

/// The receiver's counterpart of comm_objective_matrices (Lambda built from
/// its own R_{R,k}).
MatrixList comm_receiver_objective_matrices(const CommCosts& c);

}  // namespace stackelberg
