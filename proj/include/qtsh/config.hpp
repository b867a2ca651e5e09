#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qtsh/dynamics.hpp"
#include "qtsh/ensemble.hpp"
#include "qtsh/model.hpp"
#include "qtsh/qgrid.hpp"

namespace qtsh {

/// Everything one CLI invocation needs. Defaults reproduce the reference
/// configuration (strengthened Tully-1 model, packet at q0=-5 with hbar*k=10
/// on the upper surface, 10^4 trajectories to t=2500).
struct SimulationConfig {
  std::string engine = "qtsh";  ///< bo | fssh | qtsh | exact
  ModelPotentiald model;
  InitialCondition initial;
  std::size_t n = 10000;
  double dt = 0.25;
  double t_final = 2500.0;
  std::uint64_t seed = 42;
  std::size_t stride = 40;
  unsigned threads = 0;
  Grid grid;
  double grid_dt = 0.1;

  bool is_exact() const { return engine == "exact"; }
  EngineKind engine_kind() const;  ///< throws ConfigError for "exact"
  double frame_interval() const { return static_cast<double>(stride) * dt; }

  RunConfig ensemble_config() const;
  ExactConfig exact_config() const;
  void validate() const;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Flat "key = value" lines; '#' and ';' start comments; blank lines ignored.
KeyValues parse_key_values(std::istream& in);

/// Apply one setting; unknown keys and malformed values throw ConfigError.
void apply_setting(SimulationConfig& cfg, std::string_view key, std::string_view value);

SimulationConfig load_config(const std::filesystem::path& path);
SimulationConfig config_from_text(std::string_view text);

/// Physics-relevant configuration echo (excludes thread count).
nlohmann::json to_json(const SimulationConfig& cfg);

}  // namespace qtsh
