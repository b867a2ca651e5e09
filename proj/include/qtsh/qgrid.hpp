#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "qtsh/ensemble.hpp"
#include "qtsh/frame.hpp"
#include "qtsh/model.hpp"

namespace qtsh {

/// Uniform periodic grid; n_points must be a power of two >= 256.
struct Grid {
  double x_min = -30.0;
  double x_max = 50.0;
  std::size_t n_points = 4096;

  void validate() const;
  double dx() const { return (x_max - x_min) / static_cast<double>(n_points); }
  Eigen::ArrayXd positions() const;
  /// Angular wavenumbers in FFT order.
  Eigen::ArrayXd wavenumbers() const;
};

/// Diabatic potential sampled on the grid, plus the pointwise mixing angle.
struct PotentialSamples {
  Eigen::ArrayXd v1, v2, v12;
  Eigen::ArrayXd cos_half, sin_half;  ///< cos(phi/2), sin(phi/2)
};

template <typename Model>
PotentialSamples sample_potential(const Grid& grid, const Model& model) {
  const Eigen::ArrayXd x = grid.positions();
  PotentialSamples s;
  s.v1.resize(x.size());
  s.v2.resize(x.size());
  s.v12.resize(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const auto p = eval_diabatic(model, x[i]);
    s.v1[i] = p.v1;
    s.v2[i] = p.v2;
    s.v12[i] = p.v12;
  }
  const Eigen::ArrayXd phi = s.v12.binaryExpr(
      (s.v1 - s.v2) / 2, [](double y, double x) { return std::atan2(y, x); });
  s.cos_half = (phi / 2).cos();
  s.sin_half = (phi / 2).sin();
  return s;
}

/// Diabatic components psi1, psi2.
struct Wavefunction {
  Eigen::VectorXcd psi1;
  Eigen::VectorXcd psi2;

  double norm(double dx) const { return (psi1.squaredNorm() + psi2.squaredNorm()) * dx; }
};

/// Gaussian exp(i k0 x - (x - q0)^2 / (4 sigma_q^2)) placed on the requested
/// adiabatic surface by pointwise rotation, normalized on the grid.
Wavefunction init_wavepacket(const Grid& grid, const InitialCondition& ic,
                             const PotentialSamples& pot);

template <typename Model>
Wavefunction init_wavepacket(const Grid& grid, const InitialCondition& ic, const Model& model) {
  return init_wavepacket(grid, ic, sample_potential(grid, model));
}

/// Strang split-operator propagator: half kinetic, exact 2x2 potential
/// exponential, half kinetic. Tables are built once for a fixed dt.
class SplitOperator {
 public:
  SplitOperator(const Grid& grid, const PotentialSamples& pot, double mass, double dt);

  void step(Wavefunction& psi);
  /// n consecutive steps with adjacent half kinetic factors fused.
  void propagate(Wavefunction& psi, std::size_t n);

  double dt() const { return dt_; }

 private:
  void kinetic(Wavefunction& psi, const Eigen::VectorXcd& phase);
  void potential(Wavefunction& psi) const;

  double dt_;
  Eigen::VectorXcd half_kinetic_;
  Eigen::VectorXcd full_kinetic_;
  Eigen::ArrayXcd u11_, u12_, u22_;
  Eigen::FFT<double> fft_;
  Eigen::VectorXcd work_;
};

template <typename Model>
Wavefunction split_step(const Wavefunction& psi, double dt, const Grid& grid, const Model& model) {
  SplitOperator prop(grid, sample_potential(grid, model), static_cast<double>(model.mass), dt);
  Wavefunction out = psi;
  prop.step(out);
  return out;
}

struct GridObservables {
  double p_plus = 0, p_minus = 0;
  double alpha = 0, beta = 0;  ///< alpha + i beta = \int psi_+ conj(psi_-) dx
  double kinetic = 0, potential = 0, energy = 0;
  double norm = 0;
  double mean_x = 0, mean_p = 0;
  double edge_density = 0;
};

GridObservables analyze(const Wavefunction& psi, const Grid& grid, const PotentialSamples& pot,
                        double mass, double edge_fraction = 0.05);

struct ExactConfig {
  ModelPotentiald model;
  InitialCondition initial;
  Grid grid;
  double dt = 0.1;
  double t_final = 2500.0;
  double frame_interval = 10.0;
  double edge_fraction = 0.05;
  double edge_tolerance = 1e-8;

  void validate() const;
  std::size_t steps() const;
  std::size_t frame_stride() const;
};

struct ExactResult {
  FrameSeries frames;
  std::vector<GridObservables> observables;
  double max_norm_drift = 0;
  double max_energy_drift = 0;
  double max_edge_density = 0;
};

ExactResult run_exact(const ExactConfig& cfg);

}  // namespace qtsh
