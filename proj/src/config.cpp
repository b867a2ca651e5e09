#include "qtsh/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "qtsh/errors.hpp"

namespace qtsh {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double to_double(std::string_view key, std::string_view value) {
  const std::string text(value);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ConfigError("invalid number for '" + std::string(key) + "': '" + text + "'");
  }
  return v;
}

template <typename Int>
Int to_integer(std::string_view key, std::string_view value) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("invalid integer for '" + std::string(key) + "': '" + std::string(value) +
                      "'");
  }
  return v;
}

using Setter = std::function<void(SimulationConfig&, std::string_view, std::string_view)>;

template <typename Member>
Setter real(Member member) {
  return [member](SimulationConfig& c, std::string_view k, std::string_view v) {
    std::invoke(member, c) = to_double(k, v);
  };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"engine",
       [](SimulationConfig& c, std::string_view, std::string_view v) {
         if (v != "bo" && v != "fssh" && v != "qtsh" && v != "exact") {
           throw ConfigError("engine must be one of bo, fssh, qtsh, exact");
         }
         c.engine = std::string(v);
       }},
      {"n",
       [](SimulationConfig& c, std::string_view k, std::string_view v) {
         c.n = to_integer<std::size_t>(k, v);
       }},
      {"seed",
       [](SimulationConfig& c, std::string_view k, std::string_view v) {
         c.seed = to_integer<std::uint64_t>(k, v);
       }},
      {"stride",
       [](SimulationConfig& c, std::string_view k, std::string_view v) {
         c.stride = to_integer<std::size_t>(k, v);
       }},
      {"threads",
       [](SimulationConfig& c, std::string_view k, std::string_view v) {
         c.threads = to_integer<unsigned>(k, v);
       }},
      {"grid_points",
       [](SimulationConfig& c, std::string_view k, std::string_view v) {
         c.grid.n_points = to_integer<std::size_t>(k, v);
       }},
      {"surface",
       [](SimulationConfig& c, std::string_view, std::string_view v) {
         if (v == "upper") {
           c.initial.surface0 = Surface::Upper;
         } else if (v == "lower") {
           c.initial.surface0 = Surface::Lower;
         } else {
           throw ConfigError("surface must be 'upper' or 'lower'");
         }
       }},
      {"dt", real([](SimulationConfig& c) -> double& { return c.dt; })},
      {"t_final", real([](SimulationConfig& c) -> double& { return c.t_final; })},
      {"a", real([](SimulationConfig& c) -> double& { return c.model.a; })},
      {"b", real([](SimulationConfig& c) -> double& { return c.model.b; })},
      {"c", real([](SimulationConfig& c) -> double& { return c.model.c; })},
      {"d_width", real([](SimulationConfig& c) -> double& { return c.model.d_width; })},
      {"mass", real([](SimulationConfig& c) -> double& { return c.model.mass; })},
      {"k0", real([](SimulationConfig& c) -> double& { return c.initial.k0; })},
      {"q0", real([](SimulationConfig& c) -> double& { return c.initial.q0; })},
      {"sigma_q", real([](SimulationConfig& c) -> double& { return c.initial.sigma_q; })},
      {"grid_x_min", real([](SimulationConfig& c) -> double& { return c.grid.x_min; })},
      {"grid_x_max", real([](SimulationConfig& c) -> double& { return c.grid.x_max; })},
      {"grid_dt", real([](SimulationConfig& c) -> double& { return c.grid_dt; })},
  };
  return table;
}

}  // namespace

EngineKind SimulationConfig::engine_kind() const {
  if (engine == "bo") return EngineKind::BornOppenheimer;
  if (engine == "fssh") return EngineKind::FSSH;
  if (engine == "qtsh") return EngineKind::QTSH;
  throw ConfigError("engine '" + engine + "' is not a trajectory engine");
}

RunConfig SimulationConfig::ensemble_config() const {
  RunConfig rc;
  rc.model = model;
  rc.engine = engine_kind();
  rc.initial = initial;
  rc.n_trajectories = n;
  rc.dt = dt;
  rc.t_final = t_final;
  rc.seed = seed;
  rc.stride = stride;
  rc.threads = threads;
  return rc;
}

ExactConfig SimulationConfig::exact_config() const {
  ExactConfig ec;
  ec.model = model;
  ec.initial = initial;
  ec.grid = grid;
  ec.dt = grid_dt;
  ec.t_final = t_final;
  ec.frame_interval = frame_interval();
  return ec;
}

void SimulationConfig::validate() const {
  if (is_exact()) {
    exact_config().validate();
  } else {
    ensemble_config().validate();
  }
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find_first_of("#;");
    const std::string body = trim(std::string_view(line).substr(0, comment));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

void apply_setting(SimulationConfig& cfg, std::string_view key, std::string_view value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second(cfg, key, value);
}

SimulationConfig config_from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  SimulationConfig cfg;
  for (const auto& [k, v] : parse_key_values(in)) apply_setting(cfg, k, v);
  return cfg;
}

SimulationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  SimulationConfig cfg;
  for (const auto& [k, v] : parse_key_values(in)) apply_setting(cfg, k, v);
  return cfg;
}

nlohmann::json to_json(const SimulationConfig& cfg) {
  return {
      {"engine", cfg.engine},
      {"a", cfg.model.a},
      {"b", cfg.model.b},
      {"c", cfg.model.c},
      {"d_width", cfg.model.d_width},
      {"mass", cfg.model.mass},
      {"q0", cfg.initial.q0},
      {"k0", cfg.initial.k0},
      {"sigma_q", cfg.initial.sigma_q},
      {"surface", cfg.initial.surface0 == Surface::Upper ? "upper" : "lower"},
      {"n", cfg.n},
      {"dt", cfg.dt},
      {"t_final", cfg.t_final},
      {"seed", cfg.seed},
      {"stride", cfg.stride},
      {"grid_x_min", cfg.grid.x_min},
      {"grid_x_max", cfg.grid.x_max},
      {"grid_points", cfg.grid.n_points},
      {"grid_dt", cfg.grid_dt},
  };
}

}  // namespace qtsh
