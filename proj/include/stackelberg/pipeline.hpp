#pragma once

#include <optional>

#include "stackelberg/config.hpp"
#include "stackelberg/control.hpp"
#include "stackelberg/policy.hpp"

namespace stackelberg {

/// Solved scenario in either mode. In control mode sigma, h and v refer to
/// the virtual state x^o.
struct RunResult {
  ScenarioConfig config;
  std::optional<CommEquilibrium> comm;
  std::optional<ControlEquilibrium> control;

  const SdpSolution& solution() const;
  const ExtremePoint& extreme() const;
  const SignalingPolicy& policy() const;
  const SdpProblem& problem() const;
  CostPair costs() const;
  const MatrixList& sigma() const;
  MatrixList h() const;
};

RunResult solve_scenario(const ScenarioConfig& cfg);

/// Analytic costs when the sender plays `policy` and the receiver best-responds.
CostPair costs_under(const RunResult& run, const MatrixList& policy);

/// One alpha.csv row; alpha is NaN when undefined or rank(L_k) != 1.
struct AlphaRow {
  int horizon = 0;
  int stage = 0;
  double alpha = 0.0;
};

/// Logs a warning per stage whose L_k is not rank one when `warn` is set.
std::vector<AlphaRow> alpha_rows(const RunResult& run, bool warn = true);

/// Solves the scenario for each horizon and concatenates the rows.
std::vector<AlphaRow> alpha_track(const ScenarioConfig& cfg, const std::vector<int>& horizons);

}  // namespace stackelberg
