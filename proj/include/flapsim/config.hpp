#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "flapsim/opt.hpp"

namespace flapsim {

/// Bad or missing configuration; the message starts with the field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptimizerConfig {
  OptimizerSettings settings;
  Vec4 gait_q_diag{5.0, 5.0, 5.0, 1e-5};
  Bounds gait_bounds = default_gait_bounds();
  Bounds perch_bounds = default_perch_bounds();
};

inline constexpr int kConfigFormatVersion = 1;

/// Everything a subcommand needs, in SI units and radians.
struct ScenarioConfig {
  std::uint64_t seed = 1;
  ModelParams model = ModelParams::nominal();
  SimConfig sim;
  std::optional<GaitParams> gait;
  std::optional<ManeuverParams> maneuver;
  std::optional<PidGains> pid;
  OptimizerConfig optimizer;

  /// The input with every default filled in, as written by the user (units
  /// and degrees untouched). Parsing it again yields bit-identical values.
  std::string resolved_json;
};

/// Command-line values that replace config entries.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<double> dt;
};

/// Parses the JSON text. Absent sections take their defaults; a present
/// section must be complete. Unknown keys and unsupported units are rejected.
ScenarioConfig parse_config(const std::string& json_text, const ConfigOverrides& overrides = {});
ScenarioConfig load_config(const std::string& path, const ConfigOverrides& overrides = {});

/// The built-in defaults as a JSON document (nominal robot, 2 s at 1e-4 s).
std::string default_config_json();

}  // namespace flapsim
