#pragma once

#include <cstdint>
#include <string>

#include "stackelberg/pipeline.hpp"

namespace stackelberg {

struct CheckResult {
  std::string name;
  bool passed = false;
  bool skipped = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct VerifyOptions {
  std::int64_t paths = 100000;
  std::uint64_t seed = 1;
  int random_policies = 20;
  bool monte_carlo = true;
  /// Added to every entry of every L_k before checking; a nonzero value is a
  /// negative control that must break tightness.
  double perturb = 0.0;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool passed() const;
  const CheckResult* find(const std::string& name) const;
  std::string text() const;
};

/// Runs every check applicable to the solved scenario: feasibility,
/// idempotency, rank bound, tightness, extreme-point objective, lower bound
/// over random linear policies, grid oracle (p = 2, n <= 3), exact cost
/// evaluation by Gaussian conditioning (plus completion of squares in control
/// mode) and Monte Carlo agreement.
VerifyReport verify(const RunResult& run, const VerifyOptions& opts = {});

/// Random message matrices, p x p with Gaussian entries and random rank.
MatrixList random_policy(Eigen::Index p, int horizon, std::uint64_t seed);

}  // namespace stackelberg
