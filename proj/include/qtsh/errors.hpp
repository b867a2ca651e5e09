#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qtsh {

/// Invalid user-supplied configuration (bad key, bad value, inconsistent grid).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trajectory produced a non-finite state.
class PropagationError : public std::runtime_error {
 public:
  PropagationError(std::size_t trajectory, double time, const std::string& what)
      : std::runtime_error("trajectory " + std::to_string(trajectory) + " at t=" +
                           std::to_string(time) + ": " + what),
        trajectory_(trajectory),
        time_(time) {}

  std::size_t trajectory() const noexcept { return trajectory_; }
  double time() const noexcept { return time_; }

 private:
  std::size_t trajectory_;
  double time_;
};

/// The impulsive-jump change of variables needs d(q*)·pk != 0.
class SingularJumpError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Wavefunction density reached the edge of the grid.
class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qtsh
