#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "stackelberg/pipeline.hpp"

namespace stackelberg {

/// JSON text with every floating-point value in scientific notation with 17
/// significant digits; NaN and infinities become null.
std::string dump_full_precision(const nlohmann::json& j, int indent = 2);

nlohmann::json solution_json(const RunResult& run);

/// Writes solution.json and alpha.csv into `dir` (created if missing).
void write_solution_bundle(const std::filesystem::path& dir, const RunResult& run);

/// Columns: horizon,stage,alpha. alpha is NaN when undefined.
void write_alpha_csv(const std::filesystem::path& file, const std::vector<AlphaRow>& rows);
std::vector<AlphaRow> read_alpha_csv(const std::filesystem::path& file);

/// Matrices recovered from a solution.json.
struct SolutionBundle {
  std::string mode;
  int horizon = 0;
  double objective = 0.0;
  CostPair costs;
  MatrixList sigma, v, s, p, l, h;
  std::vector<int> ranks;
  MatrixList gains;  // communication mode only
  nlohmann::json raw;
};

SolutionBundle read_solution_bundle(const std::filesystem::path& file);

}  // namespace stackelberg
