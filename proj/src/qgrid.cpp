#include "qtsh/qgrid.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "qtsh/errors.hpp"

namespace qtsh {

namespace {

using cd = std::complex<double>;

bool near_integer(double v) {
  return std::abs(v - std::round(v)) <= 1e-9 * std::max(1.0, std::abs(v));
}

}  // namespace

void Grid::validate() const {
  if (!(x_max > x_min)) throw ConfigError("grid: x_max must exceed x_min");
  if (n_points < 256 || !std::has_single_bit(n_points)) {
    throw ConfigError("grid: n_points must be a power of two >= 256");
  }
}

Eigen::ArrayXd Grid::positions() const {
  const auto n = static_cast<Eigen::Index>(n_points);
  return x_min + dx() * Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1));
}

Eigen::ArrayXd Grid::wavenumbers() const {
  const auto n = static_cast<Eigen::Index>(n_points);
  const double dk = 2.0 * std::numbers::pi / (dx() * static_cast<double>(n));
  Eigen::ArrayXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) k[i] = dk * static_cast<double>(i < n / 2 ? i : i - n);
  return k;
}

Wavefunction init_wavepacket(const Grid& grid, const InitialCondition& ic,
                             const PotentialSamples& pot) {
  grid.validate();
  ic.validate();
  if (ic.q0 - 5 * ic.sigma_q < grid.x_min || ic.q0 + 5 * ic.sigma_q > grid.x_max) {
    throw ConfigError("wavepacket lies within 5 sigma_q of a grid boundary");
  }
  const Eigen::ArrayXd x = grid.positions();
  const Eigen::ArrayXd envelope = (-(x - ic.q0).square() / (4 * ic.sigma_q * ic.sigma_q)).exp();
  Eigen::ArrayXcd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = envelope[i] * std::polar(1.0, ic.k0 * x[i]);

  Wavefunction psi;
  if (ic.surface0 == Surface::Upper) {
    psi.psi1 = (g * pot.cos_half).matrix();
    psi.psi2 = (g * pot.sin_half).matrix();
  } else {
    psi.psi1 = (-g * pot.sin_half).matrix();
    psi.psi2 = (g * pot.cos_half).matrix();
  }
  const double scale = 1.0 / std::sqrt(psi.norm(grid.dx()));
  psi.psi1 *= scale;
  psi.psi2 *= scale;
  return psi;
}

SplitOperator::SplitOperator(const Grid& grid, const PotentialSamples& pot, double mass,
                             double dt)
    : dt_(dt) {
  grid.validate();
  const Eigen::ArrayXd k = grid.wavenumbers();
  const Eigen::ArrayXd kinetic = k.square() / (2 * mass);
  const auto n = k.size();
  half_kinetic_.resize(n);
  full_kinetic_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    half_kinetic_[i] = std::polar(1.0, -kinetic[i] * dt / 2);
    full_kinetic_[i] = std::polar(1.0, -kinetic[i] * dt);
  }

  // exp(-i dt (V0 + dz sz + V12 sx)) = e^{-i V0 dt} [cos(r dt) - i sin(r dt)/r (dz sz + V12 sx)]
  u11_.resize(n);
  u12_.resize(n);
  u22_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v0 = (pot.v1[i] + pot.v2[i]) / 2;
    const double dz = (pot.v1[i] - pot.v2[i]) / 2;
    const double r = std::hypot(dz, pot.v12[i]);
    const double c = std::cos(r * dt);
    const double sinc = r > 0 ? std::sin(r * dt) / r : dt;
    const cd phase = std::polar(1.0, -v0 * dt);
    u11_[i] = phase * cd(c, -sinc * dz);
    u22_[i] = phase * cd(c, sinc * dz);
    u12_[i] = phase * cd(0.0, -sinc * pot.v12[i]);
  }
  work_.resize(n);
}

void SplitOperator::kinetic(Wavefunction& psi, const Eigen::VectorXcd& phase) {
  for (Eigen::VectorXcd* component : {&psi.psi1, &psi.psi2}) {
    fft_.fwd(work_, *component);
    work_.array() *= phase.array();
    fft_.inv(*component, work_);
  }
}

void SplitOperator::potential(Wavefunction& psi) const {
  const Eigen::ArrayXcd a = psi.psi1.array();
  const Eigen::ArrayXcd b = psi.psi2.array();
  psi.psi1 = (u11_ * a + u12_ * b).matrix();
  psi.psi2 = (u12_ * a + u22_ * b).matrix();
}

void SplitOperator::step(Wavefunction& psi) {
  kinetic(psi, half_kinetic_);
  potential(psi);
  kinetic(psi, half_kinetic_);
}

void SplitOperator::propagate(Wavefunction& psi, std::size_t n) {
  if (n == 0) return;
  kinetic(psi, half_kinetic_);
  for (std::size_t i = 0; i < n; ++i) {
    potential(psi);
    kinetic(psi, i + 1 == n ? half_kinetic_ : full_kinetic_);
  }
}

GridObservables analyze(const Wavefunction& psi, const Grid& grid, const PotentialSamples& pot,
                        double mass, double edge_fraction) {
  const double dx = grid.dx();
  const Eigen::ArrayXd x = grid.positions();
  const Eigen::ArrayXd k = grid.wavenumbers();
  const Eigen::ArrayXcd p1 = psi.psi1.array();
  const Eigen::ArrayXcd p2 = psi.psi2.array();

  GridObservables obs;
  const Eigen::ArrayXcd plus = pot.cos_half * p1 + pot.sin_half * p2;
  const Eigen::ArrayXcd minus = -pot.sin_half * p1 + pot.cos_half * p2;
  obs.p_plus = plus.abs2().sum() * dx;
  obs.p_minus = minus.abs2().sum() * dx;
  const cd coherence = (plus * minus.conjugate()).sum() * dx;
  obs.alpha = coherence.real();
  obs.beta = coherence.imag();

  const Eigen::ArrayXd density = p1.abs2() + p2.abs2();
  obs.norm = density.sum() * dx;
  obs.mean_x = (x * density).sum() * dx;
  obs.potential = ((pot.v1 * p1.abs2() + pot.v2 * p2.abs2()).sum() +
                   2 * (pot.v12 * (p1.conjugate() * p2).real()).sum()) *
                  dx;

  Eigen::FFT<double> fft;
  Eigen::VectorXcd spectrum;
  const double spectral_scale = dx / static_cast<double>(grid.n_points);
  for (const Eigen::VectorXcd* component : {&psi.psi1, &psi.psi2}) {
    fft.fwd(spectrum, *component);
    const Eigen::ArrayXd power = spectrum.array().abs2();
    obs.kinetic += (power * k.square()).sum() / (2 * mass) * spectral_scale;
    obs.mean_p += (power * k).sum() * spectral_scale;
  }
  obs.energy = obs.kinetic + obs.potential;

  const double strip = edge_fraction * (grid.x_max - grid.x_min);
  obs.edge_density =
      ((x < grid.x_min + strip) || (x > grid.x_max - strip)).select(density, 0.0).sum() * dx;
  return obs;
}

void ExactConfig::validate() const {
  model.validate();
  initial.validate();
  grid.validate();
  if (!(dt > 0)) throw ConfigError("grid dt must be positive");
  if (!(t_final > 0)) throw ConfigError("t_final must be positive");
  if (!(frame_interval > 0)) throw ConfigError("frame interval must be positive");
  if (!near_integer(t_final / dt)) throw ConfigError("t_final must be a multiple of grid dt");
  if (!near_integer(frame_interval / dt)) {
    throw ConfigError("frame interval must be a multiple of grid dt");
  }
}

std::size_t ExactConfig::steps() const {
  return static_cast<std::size_t>(std::llround(t_final / dt));
}

std::size_t ExactConfig::frame_stride() const {
  return static_cast<std::size_t>(std::llround(frame_interval / dt));
}

ExactResult run_exact(const ExactConfig& cfg) {
  cfg.validate();
  const PotentialSamples pot = sample_potential(cfg.grid, cfg.model);
  Wavefunction psi = init_wavepacket(cfg.grid, cfg.initial, pot);
  SplitOperator prop(cfg.grid, pot, cfg.model.mass, cfg.dt);

  ExactResult result;
  const std::vector<std::size_t> steps = frame_steps(cfg.steps(), cfg.frame_stride());
  std::size_t done = 0;
  for (std::size_t target : steps) {
    prop.propagate(psi, target - done);
    done = target;
    const GridObservables obs = analyze(psi, cfg.grid, pot, cfg.model.mass, cfg.edge_fraction);
    if (obs.edge_density > cfg.edge_tolerance) {
      throw GridError("wavefunction density " + std::to_string(obs.edge_density) +
                      " reached the grid edge at t=" +
                      std::to_string(static_cast<double>(target) * cfg.dt));
    }
    EnsembleFrame frame;
    frame.t = static_cast<double>(target) * cfg.dt;
    frame.p_plus = obs.p_plus;
    frame.p_minus = obs.p_minus;
    frame.mean_alpha = obs.alpha;
    frame.mean_beta = obs.beta;
    frame.energy = obs.energy;
    frame.mean_a_pp = obs.p_plus;
    result.frames.push_back(frame);
    result.observables.push_back(obs);

    const auto& first = result.observables.front();
    result.max_norm_drift = std::max(result.max_norm_drift, std::abs(obs.norm - first.norm));
    result.max_energy_drift =
        std::max(result.max_energy_drift, std::abs(obs.energy - first.energy));
    result.max_edge_density = std::max(result.max_edge_density, obs.edge_density);
  }
  return result;
}

}  // namespace qtsh
