#pragma once

#include <cstdint>
#include <random>

#include "stackelberg/control.hpp"
#include "stackelberg/model.hpp"
#include "stackelberg/policy.hpp"
#include "stackelberg/posterior.hpp"

namespace stackelberg {

/// Independent stream for trajectory `index` under `master_seed`; the seed is
/// a splitmix64 hash of both, so results do not depend on execution order.
std::mt19937_64 trajectory_stream(std::uint64_t master_seed, std::uint64_t index);

/// Colors standard normals with a PSD square root of `cov`.
class GaussianSampler {
 public:
  explicit GaussianSampler(const Eigen::MatrixXd& cov);

  Eigen::VectorXd operator()(std::mt19937_64& stream) const;
  Eigen::Index dim() const { return root_.rows(); }

 private:
  Eigen::MatrixXd root_;
};

/// One realized path. Vectors are indexed by stage k = 1..n (entry k-1);
/// `x` and `x_o` carry the extra terminal state x_{n+1}.
struct Trajectory {
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> x_o;
  std::vector<Eigen::VectorXd> w;  // w_k drives x_{k+1}
  std::vector<Eigen::VectorXd> y;
  std::vector<Eigen::VectorXd> xhat;
  std::vector<Eigen::VectorXd> u;
  double cost_sender = 0.0;
  double cost_receiver = 0.0;
};

/// Sample mean and standard error (sample std / sqrt(n)).
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

struct SimReport {
  std::int64_t n_paths = 0;
  std::uint64_t seed = 0;
  Estimate sender;
  Estimate receiver;
  MatrixList h;           // empirical E{xhat_k xhat_k'}
  MatrixList h_se;        // entrywise standard errors
  MatrixList cross;       // empirical E{xhat_k x_k'} (x^o in control mode)
  MatrixList cross_se;
};

Trajectory sample_trajectory(const ProcessModel& m, const CommCosts& c, const PosteriorFilter& filter,
                             const MatrixList& gains, std::mt19937_64& stream);

Trajectory sample_trajectory(const ProcessModel& m, const ControlCosts& c,
                             const PosteriorFilter& filter, const ControlTransform& ct,
                             std::mt19937_64& stream);

/// Monte Carlo run in communication mode: u_k = G_k xhat_k.
SimReport run(const ProcessModel& m, const CommCosts& c, const SignalingPolicy& policy,
              const MatrixList& gains, std::int64_t n_paths, std::uint64_t seed);

/// Monte Carlo run in control mode: messages on x^o, controls rebuilt from
/// xhat^o through Phi_R.
SimReport run(const ProcessModel& m, const ControlCosts& c, const SignalingPolicy& policy,
              const ControlTransform& ct, std::int64_t n_paths, std::uint64_t seed);

}  // namespace stackelberg
