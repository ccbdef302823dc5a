#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "stackelberg/model.hpp"
#include "stackelberg/sdp.hpp"

namespace stackelberg {

/// Bad configuration; the message starts with "<source>:<line>:".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

enum class GameMode { kCommunication, kControl };

struct SimSettings {
  std::int64_t paths = 100000;
  std::uint64_t seed = 1;
};

struct ScenarioConfig {
  std::string name;
  std::string source;
  std::string text;  // raw JSON, kept so the horizon can be overridden later
  GameMode mode = GameMode::kCommunication;
  ProcessModel model;
  CommCosts comm;
  ControlCosts control;
  SolverSettings solver;
  SimSettings sim;
  std::string shorthand;  // "", "example1" or "example3"
};

/// Parses and validates a scenario. Per-stage cost entries may be a single
/// matrix (broadcast) or a list of exactly `horizon` matrices; with a horizon
/// override, longer lists are truncated.
ScenarioConfig parse_config(const std::string& text, const std::string& source = "<config>",
                            std::optional<int> horizon = std::nullopt);

ScenarioConfig load_config(const std::filesystem::path& path,
                           std::optional<int> horizon = std::nullopt);

ScenarioConfig with_horizon(const ScenarioConfig& cfg, int horizon);

/// Fully expanded configuration: every matrix written out per stage.
nlohmann::json expanded_config(const ScenarioConfig& cfg);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

const char* mode_name(GameMode mode);

}  // namespace stackelberg
