#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string_view>

#include <Eigen/Dense>

#include "qtsh/errors.hpp"
#include "qtsh/model.hpp"

namespace qtsh {

enum class EngineKind { BornOppenheimer, FSSH, QTSH };

constexpr std::string_view to_string(EngineKind engine) {
  switch (engine) {
    case EngineKind::BornOppenheimer: return "bo";
    case EngineKind::FSSH: return "fssh";
    case EngineKind::QTSH: return "qtsh";
  }
  return "?";
}

enum class HopDirection { Down, Up };

enum class HopKind { NoHop, HopUp, HopDown, Frustrated };

/// Any model that exposes adiabatic data through eval_adiabatic(model, q)
/// and a nuclear mass.
template <typename Model>
concept AdiabaticModel = requires(const Model& m, typename Model::Scalar q) {
  { eval_adiabatic(m, q) } -> std::same_as<AdiabaticPoint<typename Model::Scalar>>;
  { m.mass } -> std::convertible_to<typename Model::Scalar>;
};

/// One walker. pk is the kinematic momentum m*dq/dt; sigma = 1 on the upper
/// surface. a_pp is the continuous upper-state proxy population.
template <typename Scalar>
struct TrajectoryState {
  Scalar q = 0;
  Scalar pk = 0;
  int sigma = 0;
  Scalar alpha = 0;
  Scalar beta = 0;
  Scalar a_pp = 0;
  Scalar work_acc = 0;    ///< integral of F^Q * pk/m dt
  Scalar hop_energy = 0;  ///< sum of electronic energy changes at hops
  Scalar t = 0;
  std::size_t id = 0;
};

template <typename Scalar>
struct StateRate {
  Scalar dq = 0, dpk = 0, dalpha = 0, dbeta = 0, da_pp = 0, dwork = 0;
};

template <typename Scalar>
struct HopOutcome {
  HopKind kind = HopKind::NoHop;
  Scalar delta_pk = 0;
};

template <typename Scalar>
struct HopResult {
  TrajectoryState<Scalar> state;
  HopOutcome<Scalar> outcome;
};

template <typename Scalar>
struct HopProbability {
  Scalar value = 0;
  bool consistency_loss = false;  ///< occupied proxy population vanished
};

using TrajectoryStated = TrajectoryState<double>;

template <AdiabaticModel Model>
auto derivatives(const TrajectoryState<typename Model::Scalar>& s, const Model& model,
                 EngineKind engine) {
  using Scalar = typename Model::Scalar;
  const AdiabaticPoint<Scalar> ap = eval_adiabatic(model, s.q);
  const Scalar v = s.pk / model.mass;
  const Scalar grad = s.sigma == 1 ? ap.dv_plus : ap.dv_minus;

  StateRate<Scalar> r;
  r.dq = v;
  r.dpk = -grad;
  r.dbeta = -ap.omega * s.alpha;
  if (engine == EngineKind::BornOppenheimer) {
    r.dalpha = ap.omega * s.beta;
    return r;
  }
  const Scalar dv = ap.d * v;
  r.dalpha = ap.omega * s.beta + dv * (2 * s.a_pp - 1);
  r.da_pp = -2 * dv * s.alpha;
  if (engine == EngineKind::QTSH) {
    const Scalar quantum_force = 2 * ap.omega * ap.d * s.alpha;
    r.dpk += quantum_force;
    r.dwork = quantum_force * v;
  }
  return r;
}

namespace detail {

template <typename Scalar>
using Phase6 = Eigen::Matrix<Scalar, 6, 1>;

template <typename Scalar>
Phase6<Scalar> pack(const TrajectoryState<Scalar>& s) {
  Phase6<Scalar> y;
  y << s.q, s.pk, s.alpha, s.beta, s.a_pp, s.work_acc;
  return y;
}

template <typename Scalar>
Phase6<Scalar> pack(const StateRate<Scalar>& r) {
  Phase6<Scalar> y;
  y << r.dq, r.dpk, r.dalpha, r.dbeta, r.da_pp, r.dwork;
  return y;
}

template <typename Scalar>
TrajectoryState<Scalar> unpack(const Phase6<Scalar>& y, TrajectoryState<Scalar> s) {
  s.q = y[0];
  s.pk = y[1];
  s.alpha = y[2];
  s.beta = y[3];
  s.a_pp = y[4];
  s.work_acc = y[5];
  return s;
}

}  // namespace detail

/// Classical RK4 over (q, pk, alpha, beta, a_pp, work) with sigma held fixed.
template <AdiabaticModel Model>
TrajectoryState<typename Model::Scalar> rk4_step(const TrajectoryState<typename Model::Scalar>& s,
                                                  typename Model::Scalar dt, const Model& model,
                                                  EngineKind engine) {
  using Scalar = typename Model::Scalar;
  using detail::pack;
  using detail::unpack;
  if (dt == Scalar(0)) return s;

  const auto y0 = pack(s);
  detail::Phase6<Scalar> y1;
  try {
    const auto k1 = pack(derivatives(s, model, engine));
    const auto k2 = pack(derivatives(unpack<Scalar>(y0 + (dt / 2) * k1, s), model, engine));
    const auto k3 = pack(derivatives(unpack<Scalar>(y0 + (dt / 2) * k2, s), model, engine));
    const auto k4 = pack(derivatives(unpack<Scalar>(y0 + dt * k3, s), model, engine));
    y1 = y0 + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
  } catch (const std::domain_error& e) {
    throw PropagationError(s.id, static_cast<double>(s.t + dt), e.what());
  }

  TrajectoryState<Scalar> out = unpack<Scalar>(y1, s);
  out.t = s.t + dt;
  if (!y1.allFinite()) {
    throw PropagationError(s.id, static_cast<double>(out.t), "non-finite state after RK4 step");
  }
  return out;
}

/// Fewest-switches probability of leaving the occupied surface during dt,
/// max(0, -d(a_occ)/dt * dt / a_occ) clamped to [0, 1].
template <AdiabaticModel Model>
HopProbability<typename Model::Scalar> hop_probability(
    const TrajectoryState<typename Model::Scalar>& s, typename Model::Scalar dt, const Model& model,
    EngineKind engine) {
  using Scalar = typename Model::Scalar;
  HopProbability<Scalar> g;
  if (engine == EngineKind::BornOppenheimer) return g;

  const Scalar eps = Scalar(1e-12);
  const Scalar a_pp = std::clamp(s.a_pp, Scalar(0), Scalar(1));
  const Scalar a_occ = s.sigma == 1 ? a_pp : Scalar(1) - a_pp;
  if (a_occ <= eps) {
    g.consistency_loss = true;
    return g;
  }
  const Scalar da_pp = derivatives(s, model, engine).da_pp;
  const Scalar da_occ = s.sigma == 1 ? da_pp : -da_pp;
  g.value = std::clamp(-da_occ * dt / a_occ, Scalar(0), Scalar(1));
  return g;
}

/// Sign-preserving root of (pk + dpk)^2 = pk^2 +/- 2 m gap (+ for down-hops).
/// Empty when an up-hop lacks the kinetic energy.
template <typename Scalar>
std::optional<Scalar> fssh_momentum_jump(Scalar pk, Scalar mass, Scalar gap, HopDirection dir) {
  using std::abs;
  using std::sqrt;
  const Scalar delta_sq = (dir == HopDirection::Down ? 2 : -2) * mass * gap;
  const Scalar target = pk * pk + delta_sq;
  if (target < 0) return std::nullopt;
  const Scalar sign = pk < 0 ? Scalar(-1) : Scalar(1);
  // sqrt(target) - |pk| written without cancellation.
  return sign * delta_sq / (sqrt(target) + abs(pk));
}

/// The other root of the same quadratic (reverses the direction of motion).
template <typename Scalar>
std::optional<Scalar> fssh_momentum_jump_reversing(Scalar pk, Scalar mass, Scalar gap,
                                                   HopDirection dir) {
  using std::sqrt;
  const Scalar target = pk * pk + (dir == HopDirection::Down ? 2 : -2) * mass * gap;
  if (target < 0) return std::nullopt;
  const Scalar sign = pk < 0 ? Scalar(-1) : Scalar(1);
  return -sign * sqrt(target) - pk;
}

/// Stochastic hop test with uniform draw u. QTSH flips sigma only; FSSH
/// also rescales pk to conserve pk^2/2m + V, or records a frustrated hop.
template <AdiabaticModel Model>
HopResult<typename Model::Scalar> attempt_hop(const TrajectoryState<typename Model::Scalar>& s,
                                              typename Model::Scalar u,
                                              typename Model::Scalar dt, const Model& model,
                                              EngineKind engine) {
  using Scalar = typename Model::Scalar;
  HopResult<Scalar> r{s, {}};
  if (engine == EngineKind::BornOppenheimer) return r;
  if (!(u < hop_probability(s, dt, model, engine).value)) return r;

  const bool down = s.sigma == 1;
  const Scalar gap = eval_adiabatic(model, s.q).omega;
  if (engine == EngineKind::FSSH) {
    const auto jump = fssh_momentum_jump(s.pk, Scalar(model.mass), gap,
                                         down ? HopDirection::Down : HopDirection::Up);
    if (!jump) {
      r.outcome.kind = HopKind::Frustrated;
      return r;
    }
    r.state.pk += *jump;
    r.outcome.delta_pk = *jump;
  }
  r.state.sigma = down ? 0 : 1;
  r.state.hop_energy += down ? -gap : gap;
  r.outcome.kind = down ? HopKind::HopDown : HopKind::HopUp;
  return r;
}

/// Impulsive-limit momentum jump +/- hbar w(q*) d(q*) m / (d(q*) pk).
template <AdiabaticModel Model>
typename Model::Scalar impulsive_jump(const Model& model, typename Model::Scalar q_star,
                                      typename Model::Scalar pk, HopDirection dir) {
  using Scalar = typename Model::Scalar;
  using std::isfinite;
  const AdiabaticPoint<Scalar> ap = eval_adiabatic(model, q_star);
  const Scalar denom = ap.d * pk;
  if (denom == Scalar(0) || !isfinite(denom)) {
    throw SingularJumpError("impulsive_jump: d(q*) * pk vanishes");
  }
  const Scalar jump = ap.omega * ap.d * Scalar(model.mass) / denom;
  return dir == HopDirection::Down ? jump : -jump;
}

template <AdiabaticModel Model>
typename Model::Scalar canonical_momentum(const TrajectoryState<typename Model::Scalar>& s,
                                          const Model& model) {
  return s.pk + 2 * s.beta * eval_adiabatic(model, s.q).d;
}

/// pk^2/2m + V(q, sigma).
template <AdiabaticModel Model>
typename Model::Scalar trajectory_energy(const TrajectoryState<typename Model::Scalar>& s,
                                         const Model& model) {
  const auto ap = eval_adiabatic(model, s.q);
  return s.pk * s.pk / (2 * model.mass) + (s.sigma == 1 ? ap.v_plus : ap.v_minus);
}

/// p^2/2m + V(q, sigma) - 2 beta d pk/m with the canonical p = pk + 2 beta d.
template <AdiabaticModel Model>
typename Model::Scalar trajectory_energy_canonical(const TrajectoryState<typename Model::Scalar>& s,
                                                   const Model& model) {
  const auto ap = eval_adiabatic(model, s.q);
  const auto p = s.pk + 2 * s.beta * ap.d;
  return p * p / (2 * model.mass) + (s.sigma == 1 ? ap.v_plus : ap.v_minus) -
         2 * s.beta * ap.d * s.pk / model.mass;
}

// ---------------------------------------------------------------------------
// Localized-transition analysis.

/// Momentum kick 2 w(q*) \int d(q) alpha dt accumulated while the nucleus
/// coasts through the coupling region at the constant velocity pk/m, with the
/// diabatic population frozen so that alpha follows the mixing angle.
/// Simpson's rule over [q* - half_width, q* + half_width].
template <AdiabaticModel Model>
typename Model::Scalar frozen_jump_quadrature(const Model& model, typename Model::Scalar q_star,
                                              typename Model::Scalar pk, HopDirection dir,
                                              typename Model::Scalar half_width = 10,
                                              int intervals = 20000) {
  using Scalar = typename Model::Scalar;
  if (intervals % 2 != 0) ++intervals;
  const Scalar heading = pk < 0 ? Scalar(-1) : Scalar(1);
  const Scalar q_start = q_star - heading * half_width;

  // Pure adiabatic state at the entry point, held fixed in the diabatic basis.
  DensityMatrix2<Scalar> rho_a;
  (dir == HopDirection::Down ? rho_a.rho11 : rho_a.rho22) = 1;
  const DensityMatrix2<Scalar> rho_d =
      density_to_diabatic(rho_a, eval_adiabatic(model, q_start).phi);

  const Scalar h = 2 * half_width / intervals;
  Scalar sum = 0;
  for (int i = 0; i <= intervals; ++i) {
    const Scalar q = q_star - half_width + i * h;
    const auto ap = eval_adiabatic(model, q);
    const Scalar alpha = density_to_adiabatic(rho_d, ap.phi).re12;
    const Scalar weight = (i == 0 || i == intervals) ? 1 : (i % 2 == 1 ? 4 : 2);
    sum += weight * ap.d * alpha;
  }
  const Scalar integral_dq = sum * h / 3;
  // dt = dq / v along the path, which runs against +q when pk < 0.
  return 2 * eval_adiabatic(model, q_star).omega * Scalar(model.mass) / pk * heading *
         integral_dq;
}

template <typename Scalar>
struct LocalizedTransition {
  Scalar impulse = 0;          ///< \int F^Q dt
  Scalar work = 0;             ///< \int F^Q pk/m dt
  Scalar pk_at_crossing = 0;   ///< kinematic momentum when q passes q*
  bool crossed = false;
  Scalar final_population = 0; ///< continuous upper-surface population at exit
  Scalar q = 0, pk = 0, t = 0;
};

/// Single trajectory under the full quantum-force equations with the surface
/// index replaced by its continuous population (sigma -> a_pp), integrated
/// with RK4 until q leaves [q_lo, q_hi] or max_time elapses.
template <AdiabaticModel Model>
LocalizedTransition<typename Model::Scalar> propagate_localized(
    const Model& model, typename Model::Scalar q0, typename Model::Scalar pk0,
    typename Model::Scalar population0, typename Model::Scalar q_star,
    typename Model::Scalar q_lo, typename Model::Scalar q_hi, typename Model::Scalar dt,
    typename Model::Scalar max_time) {
  using Scalar = typename Model::Scalar;
  using Vec = Eigen::Matrix<Scalar, 7, 1>;  // q, pk, alpha, beta, a, work, impulse

  const Scalar mass = model.mass;
  auto rate = [&](const Vec& y) {
    const auto ap = eval_adiabatic(model, y[0]);
    const Scalar v = y[1] / mass;
    const Scalar a = y[4];
    const Scalar quantum_force = 2 * ap.omega * ap.d * y[2];
    Vec r;
    r << v, -(a * ap.dv_plus + (1 - a) * ap.dv_minus) + quantum_force,
        ap.omega * y[3] + ap.d * v * (2 * a - 1), -ap.omega * y[2], -2 * ap.d * v * y[2],
        quantum_force * v, quantum_force;
    return r;
  };

  Vec y;
  y << q0, pk0, 0, 0, population0, 0, 0;
  LocalizedTransition<Scalar> out;
  Scalar t = 0;
  while (y[0] >= q_lo && y[0] <= q_hi && t < max_time) {
    const Vec k1 = rate(y);
    const Vec k2 = rate(y + (dt / 2) * k1);
    const Vec k3 = rate(y + (dt / 2) * k2);
    const Vec k4 = rate(y + dt * k3);
    const Vec next = y + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!out.crossed && (y[0] - q_star) * (next[0] - q_star) <= 0 && y[0] != next[0]) {
      // Linear interpolation of pk at the crossing.
      const Scalar f = (q_star - y[0]) / (next[0] - y[0]);
      out.pk_at_crossing = y[1] + f * (next[1] - y[1]);
      out.crossed = true;
    }
    y = next;
    t += dt;
    if (!y.allFinite()) throw PropagationError(0, static_cast<double>(t), "localized transition");
  }
  out.q = y[0];
  out.pk = y[1];
  out.final_population = y[4];
  out.work = y[5];
  out.impulse = y[6];
  out.t = t;
  return out;
}

}  // namespace qtsh
