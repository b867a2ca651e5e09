#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qtsh/dynamics.hpp"
#include "qtsh/frame.hpp"
#include "qtsh/model.hpp"
#include "qtsh/rng.hpp"

namespace qtsh {

enum class Surface { Lower, Upper };

struct InitialCondition {
  double q0 = -5.0;
  double k0 = 10.0;  ///< mean momentum hbar*k
  double sigma_q = 1.0;
  Surface surface0 = Surface::Upper;

  void validate() const;
};

struct RunConfig {
  ModelPotentiald model;
  EngineKind engine = EngineKind::QTSH;
  InitialCondition initial;
  std::size_t n_trajectories = 10000;
  double dt = 0.25;
  double t_final = 2500.0;
  std::uint64_t seed = 42;
  std::size_t stride = 40;   ///< steps between frames
  unsigned threads = 0;      ///< 0 picks hardware concurrency
  bool track_trajectory_energy = false;

  void validate() const;
  std::size_t steps() const;  ///< t_final / dt, rounded
};

/// Per-trajectory record kept alongside the frames.
struct TrajectorySummary {
  TrajectoryStated final_state;
  double initial_energy = 0;
  double max_energy_deviation = 0;  ///< only when track_trajectory_energy
  std::int64_t hops = 0;
  std::int64_t frustrated = 0;
  std::int64_t consistency_loss = 0;
};

struct EnsembleResult {
  FrameSeries frames;
  std::vector<TrajectorySummary> trajectories;
};

struct ConsistencyReport {
  double max_consistency_gap = 0;
  std::int64_t frustrated_total = 0;
  double max_energy_drift = 0;  ///< max_t |E(t) - E(0)|
  double final_energy_drift = 0;
  double final_work = 0;
  /// max_t |E(t) - E(0) - work(t) - hop_energy(t)|
  double max_work_ledger_residual = 0;
};

/// Frame times t_k = k * stride * dt plus the final step when it is not a
/// multiple of the stride.
std::vector<std::size_t> frame_steps(std::size_t total_steps, std::size_t stride);

/// Draw one initial walker from the Wigner function of the Gaussian packet.
TrajectoryStated sample_one(const InitialCondition& ic, std::size_t index, TrajectoryStream& stream);

std::vector<TrajectoryStated> sample_initial(const InitialCondition& ic, std::size_t n,
                                             std::uint64_t seed);

EnsembleResult run_ensemble(const RunConfig& cfg);

ConsistencyReport consistency_report(const FrameSeries& frames);

}  // namespace qtsh
