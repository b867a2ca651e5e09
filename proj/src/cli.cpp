#include "qtsh/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qtsh/config.hpp"
#include "qtsh/ensemble.hpp"
#include "qtsh/errors.hpp"
#include "qtsh/qgrid.hpp"
#include "qtsh/report.hpp"

namespace qtsh {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Flag name -> config key. Flags override values read from --config.
const std::vector<std::pair<std::string, std::string>> kOverrideFlags = {
    {"--engine", "engine"}, {"--n", "n"},           {"--seed", "seed"},
    {"--dt", "dt"},         {"--t-final", "t_final"}, {"--stride", "stride"},
    {"--threads", "threads"}, {"--a", "a"},          {"--b", "b"},
    {"--c", "c"},           {"--d-width", "d_width"}, {"--mass", "mass"},
    {"--k0", "k0"},         {"--q0", "q0"},          {"--sigma-q", "sigma_q"},
    {"--surface", "surface"}, {"--grid-points", "grid_points"}, {"--grid-dt", "grid_dt"},
};

struct CommonOptions {
  std::string config_path;
  std::string out = "qtsh_out";
  std::map<std::string, std::string> values;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config_path, "flat key = value config file");
    cmd.add_option("--out", out, "output path prefix");
    for (const auto& [flag, key] : kOverrideFlags) {
      cmd.add_option(flag, values[key], "override '" + key + "'");
    }
  }

  SimulationConfig resolve(const CLI::App& cmd) const {
    SimulationConfig cfg = config_path.empty() ? SimulationConfig{} : load_config(config_path);
    for (const auto& [flag, key] : kOverrideFlags) {
      if (cmd.count(flag) > 0) apply_setting(cfg, key, values.at(key));
    }
    return cfg;
  }
};

std::string strip_extension(std::string prefix) {
  for (const char* ext : {".csv", ".json"}) {
    const std::string e(ext);
    if (prefix.size() > e.size() && prefix.ends_with(e)) prefix.resize(prefix.size() - e.size());
  }
  return prefix;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  return f;
}

void write_csv(const fs::path& path, const FrameSeries& frames) {
  auto f = open_output(path);
  write_frames_csv(f, frames);
}

void write_json(const fs::path& path, const json& j) {
  auto f = open_output(path);
  f << j.dump(2) << '\n';
}

unsigned effective_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

struct EngineRun {
  FrameSeries frames;
  json diagnostics;
};

EngineRun run_trajectories(const SimulationConfig& cfg) {
  const EnsembleResult result = run_ensemble(cfg.ensemble_config());
  const ConsistencyReport rep = consistency_report(result.frames);
  std::int64_t consistency_loss = 0;
  for (const auto& t : result.trajectories) consistency_loss += t.consistency_loss;
  const auto& last = result.frames.back();
  return {result.frames,
          {{"final_hop_energy", last.hop_energy},
           {"hops_total", last.hops},
           {"max_work_ledger_residual", rep.max_work_ledger_residual},
           {"consistency_loss_events", consistency_loss}}};
}

EngineRun run_oracle(const SimulationConfig& cfg) {
  const ExactResult result = run_exact(cfg.exact_config());
  return {result.frames,
          {{"max_norm_drift", result.max_norm_drift},
           {"max_energy_drift", result.max_energy_drift},
           {"max_edge_density", result.max_edge_density}}};
}

EngineRun run_engine(const SimulationConfig& cfg) {
  return cfg.is_exact() ? run_oracle(cfg) : run_trajectories(cfg);
}

json execution_block(const SimulationConfig& cfg, double seconds) {
  return {{"threads", cfg.is_exact() ? 1u : effective_threads(cfg.threads)},
          {"wall_time_s", seconds}};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_run(const SimulationConfig& cfg, const std::string& out_prefix, std::ostream& out) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const EngineRun run = run_engine(cfg);
  const double elapsed = seconds_since(start);

  const std::string prefix = strip_extension(out_prefix);
  write_csv(prefix + ".csv", run.frames);
  const RunSummary summary = summarize(run.frames);
  json report = {{"config", to_json(cfg)},
                 {"summary", to_json(summary)},
                 {"diagnostics", run.diagnostics},
                 {"execution", execution_block(cfg, elapsed)}};
  write_json(prefix + ".json", report);

  out << "engine " << cfg.engine << ": final P+ = " << summary.final_p_plus
      << ", final work = " << summary.final_work
      << ", max |E(t)-E(0)| = " << summary.max_energy_drift << '\n'
      << "wrote " << prefix << ".csv and " << prefix << ".json\n";
  return kExitOk;
}

struct Tolerances {
  double p_plus = 0.05;
  double energy_drift = 1e-4;
  double consistency = 0.02;
  double exact_norm = 1e-10;
  double exact_energy = 1e-8;
};

int cmd_compare(const SimulationConfig& cfg, const std::string& out_prefix, const Tolerances& tol,
                std::ostream& out) {
  if (cfg.is_exact()) throw ConfigError("compare needs a trajectory engine (bo, fssh or qtsh)");
  cfg.validate();
  SimulationConfig oracle_cfg = cfg;
  oracle_cfg.engine = "exact";
  oracle_cfg.validate();

  const auto start = std::chrono::steady_clock::now();
  const EngineRun traj = run_trajectories(cfg);
  const ExactResult exact = run_exact(oracle_cfg.exact_config());
  const double elapsed = seconds_since(start);

  const Comparison cmp = compare_frames(traj.frames, exact.frames);
  const RunSummary traj_summary = summarize(traj.frames);
  const RunSummary exact_summary = summarize(exact.frames);

  const std::string prefix = strip_extension(out_prefix);
  {
    auto f = open_output(prefix + ".csv");
    write_comparison_csv(f, traj.frames, exact.frames);
  }
  write_csv(prefix + "_traj.csv", traj.frames);
  write_csv(prefix + "_exact.csv", exact.frames);

  const auto dev = [](const Deviation& d) { return json{{"max", d.max}, {"final", d.final}}; };
  const json checks = {
      {"p_plus", cmp.p_plus.max <= tol.p_plus},
      {"energy_drift", traj_summary.max_energy_drift <= tol.energy_drift},
      {"consistency", traj_summary.max_consistency_gap <= tol.consistency},
      {"oracle_norm", exact.max_norm_drift <= tol.exact_norm},
      {"oracle_energy", exact.max_energy_drift <= tol.exact_energy},
  };
  bool pass = true;
  for (const auto& [name, ok] : checks.items()) pass = pass && ok.get<bool>();

  json verdict = {
      {"config", to_json(cfg)},
      {"deviation",
       {{"p_plus", dev(cmp.p_plus)},
        {"p_minus", dev(cmp.p_minus)},
        {"alpha", dev(cmp.alpha)},
        {"beta", dev(cmp.beta)}}},
      {"trajectory", to_json(traj_summary)},
      {"trajectory_diagnostics", traj.diagnostics},
      {"exact",
       {{"final_p_plus", exact_summary.final_p_plus},
        {"final_p_minus", exact_summary.final_p_minus},
        {"max_norm_drift", exact.max_norm_drift},
        {"max_energy_drift", exact.max_energy_drift}}},
      {"tolerances",
       {{"p_plus", tol.p_plus},
        {"energy_drift", tol.energy_drift},
        {"consistency", tol.consistency},
        {"oracle_norm", tol.exact_norm},
        {"oracle_energy", tol.exact_energy}}},
      {"checks", checks},
      {"pass", pass},
      {"execution", execution_block(cfg, elapsed)},
  };
  write_json(prefix + ".json", verdict);

  out << cfg.engine << " vs exact: max |dP+| = " << cmp.p_plus.max
      << ", final |dP+| = " << cmp.p_plus.final << " -> " << (pass ? "PASS" : "FAIL") << '\n'
      << "wrote " << prefix << ".csv, " << prefix << "_traj.csv, " << prefix << "_exact.csv and "
      << prefix << ".json\n";
  return kExitOk;
}

int cmd_jump_table(const SimulationConfig& cfg, double q_star, const std::vector<double>& momenta,
                   const std::string& out_path, std::ostream& out) {
  for (double pk : momenta) {
    if (!(pk != 0) || !std::isfinite(pk)) throw ConfigError("jump-table momenta must be nonzero");
  }
  const auto rows = jump_table(cfg.model, q_star, momenta);
  if (out_path == "-") {
    write_jump_table_csv(out, rows);
  } else {
    auto f = open_output(out_path);
    write_jump_table_csv(f, rows);
    out << "wrote " << out_path << '\n';
  }
  return kExitOk;
}

int cmd_scan(const SimulationConfig& cfg, double q_min, double q_max, int points,
             const std::string& out_path, std::ostream& out) {
  if (out_path == "-") {
    write_model_scan_csv(out, cfg.model, q_min, q_max, points);
  } else {
    std::ostringstream buf;
    write_model_scan_csv(buf, cfg.model, q_min, q_max, points);
    auto f = open_output(out_path);
    f << buf.str();
    out << "wrote " << out_path << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum-trajectory surface hopping and exact wavepacket reference"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "run one engine (bo|fssh|qtsh|exact), write CSV + JSON");
  run_opts.attach(*run);

  CommonOptions cmp_opts;
  Tolerances tol;
  auto* compare = app.add_subcommand("compare", "trajectory engine vs exact wavepacket");
  cmp_opts.attach(*compare);
  compare->add_option("--tol-p-plus", tol.p_plus, "max |dP+| for the verdict");

  CommonOptions jump_opts;
  jump_opts.out = "-";
  double q_star = 0.0;
  std::vector<double> momenta = {2, 3, 4, 5, 7, 10, 15, 20, 30, 50, 100};
  auto* jump = app.add_subcommand("jump-table", "impulsive QTSH jump vs FSSH rescaling");
  jump_opts.attach(*jump);
  jump->add_option("--q-star", q_star, "crossing point");
  jump->add_option("--momenta", momenta, "kinematic momenta")->delimiter(',');

  CommonOptions scan_opts;
  scan_opts.out = "-";
  double q_min = -4, q_max = 4;
  int points = 801;
  auto* scan = app.add_subcommand("scan", "adiabatic profiles of the model on a q grid");
  scan_opts.attach(*scan);
  scan->add_option("--q-min", q_min);
  scan->add_option("--q-max", q_max);
  scan->add_option("--points", points);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_opts.resolve(*run), run_opts.out, out);
    if (*compare) return cmd_compare(cmp_opts.resolve(*compare), cmp_opts.out, tol, out);
    if (*jump) return cmd_jump_table(jump_opts.resolve(*jump), q_star, momenta, jump_opts.out, out);
    if (*scan) return cmd_scan(scan_opts.resolve(*scan), q_min, q_max, points, scan_opts.out, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::logic_error& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitInternal;
}

}  // namespace qtsh
