#pragma once

#include <cstdint>

#include "stackelberg/sdp.hpp"

namespace stackelberg {

class UnsupportedDimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One 2x2 projector choice: rank 0, rank 2, or rank 1 along (cos t, sin t).
struct ProjectorChoice {
  int rank = 0;
  double angle = 0.0;

  Eigen::MatrixXd matrix() const;
};

struct GridResult {
  double objective = 0.0;
  std::vector<ProjectorChoice> choices;
  MatrixList projectors;
  std::vector<double> history;  // best objective after coarse pass and each refinement
  std::int64_t evaluations = 0;
};

inline constexpr std::int64_t kGridBudget = 100'000'000;

/// Brute-force minimum of sum_k tr{V_k S_k} over extreme-point chains for
/// p = 2, n <= 3: a coarse enumeration of every stage's projector followed by
/// local angle refinement with the step halved each round.
GridResult grid_search(const SdpProblem& prob, int coarse = 256, int refine_iters = 3);

/// Best rule that signals only innovations: y_1 = K_1' x_1, y_k = K_k' w_{k-1}.
/// Its posterior covariances are H_1 = Sigma_1^{1/2} Q_1 Sigma_1^{1/2},
/// H_k = A H_{k-1} A' + Sigma_w^{1/2} Q_k Sigma_w^{1/2} for projectors Q_k, so
/// the objective separates by stage and each Q_k is the negative eigenspace
/// projector of its aggregated cost matrix.
struct InnovationRule {
  double objective = 0.0;
  MatrixList projectors;
  MatrixList h;
};

InnovationRule best_innovation_rule(const SdpProblem& prob, const Eigen::MatrixXd& sigma_w);

}  // namespace stackelberg
