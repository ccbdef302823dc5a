#include "stackelberg/pipeline.hpp"

#include <limits>

#include "log.hpp"
#include "stackelberg/posterior.hpp"

namespace stackelberg {

const SdpSolution& RunResult::solution() const { return comm ? comm->solution : control->solution; }
const ExtremePoint& RunResult::extreme() const { return comm ? comm->extreme : control->extreme; }
const SignalingPolicy& RunResult::policy() const { return comm ? comm->policy : control->policy; }
const SdpProblem& RunResult::problem() const { return comm ? comm->problem : control->problem; }
CostPair RunResult::costs() const { return comm ? comm->costs : control->costs; }
const MatrixList& RunResult::sigma() const { return comm ? comm->sigma : control->sigma_o; }

MatrixList RunResult::h() const {
  if (control) return control->h_o;
  return posterior_cov_schedule(config.model.a, comm->sigma, comm->policy.l);
}

RunResult solve_scenario(const ScenarioConfig& cfg) {
  RunResult run;
  run.config = cfg;
  if (cfg.mode == GameMode::kCommunication) {
    run.comm = solve_comm_game(cfg.model, cfg.comm, cfg.solver);
  } else {
    run.control = solve_control_game(cfg.model, cfg.control, cfg.solver);
  }
  return run;
}

CostPair costs_under(const RunResult& run, const MatrixList& policy) {
  if (run.comm) return analytic_costs_comm(run.config.model, run.comm->sigma, run.config.comm, policy);
  const MatrixList h = posterior_cov_schedule(run.config.model.a, run.control->sigma_o, policy);
  return analytic_costs_control(run.control->transform, run.control->sigma_o, h);
}

std::vector<AlphaRow> alpha_rows(const RunResult& run, bool warn) {
  std::vector<AlphaRow> rows;
  const auto& l = run.policy().l;
  const int n = static_cast<int>(l.size());
  for (int k = 0; k < n; ++k) {
    AlphaRow row{n, k + 1, std::numeric_limits<double>::quiet_NaN()};
    try {
      if (auto a = extract_alpha(l[k])) row.alpha = *a;
    } catch (const RankNotOneError& e) {
      if (warn) log::get().warn("horizon {} stage {}: {}", n, k + 1, e.what());
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<AlphaRow> alpha_track(const ScenarioConfig& cfg, const std::vector<int>& horizons) {
  std::vector<AlphaRow> rows;
  for (int n : horizons) {
    const auto part = alpha_rows(solve_scenario(with_horizon(cfg, n)));
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

}  // namespace stackelberg
