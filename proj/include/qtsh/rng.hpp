#pragma once

#include <cstdint>
#include <random>

namespace qtsh {

/// Per-trajectory random stream keyed by (master seed, trajectory index).
/// Streams are built independently, so any execution order reproduces the
/// same draws for a given trajectory.
class TrajectoryStream {
 public:
  TrajectoryStream(std::uint64_t master_seed, std::uint64_t index);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
};

}  // namespace qtsh
