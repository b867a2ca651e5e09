#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <type_traits>

#include <Eigen/Dense>

#include "qtsh/errors.hpp"

namespace qtsh {

/*
 * Two-state diabatic model in one nuclear dimension (atomic units, hbar = 1).
 *
 *   V1(q)  = sgn(q) a (1 - exp(-b|q|))
 *   V2(q)  = -V1(q)
 *   V12(q) = c exp(-d q^2)
 *
 * Defaults are the strengthened-coupling Tully-1 variant used throughout the
 * project (c = 0.002 instead of Tully's 0.005).
 */
template <typename Scalar_>
struct ModelPotential {
  using Scalar = Scalar_;

  Scalar a = Scalar(0.01);
  Scalar b = Scalar(1.6);
  Scalar c = Scalar(0.002);
  Scalar d_width = Scalar(1.0);
  Scalar mass = Scalar(2000.0);

  void validate() const {
    if (!(a > 0) || !(b > 0) || !(c > 0) || !(d_width > 0) || !(mass > 0)) {
      throw ConfigError("model parameters a, b, c, d_width and mass must be positive");
    }
  }
};

template <typename Scalar>
struct DiabaticPoint {
  Scalar v1, v2, v12;
  Scalar dv1, dv2, dv12;
};

template <typename Scalar>
struct AdiabaticPoint {
  Scalar v_plus, v_minus;
  Scalar omega;  ///< gap frequency, v_plus - v_minus
  Scalar phi;    ///< mixing angle in [0, pi]
  Scalar d;      ///< nonadiabatic coupling, -1/2 dphi/dq
  Scalar dv_plus, dv_minus;
};

/// Electronic 2x2 density matrix; rho12 = re12 + i im12.
/// In the adiabatic representation rho11/rho22 hold rho++/rho-- and
/// (re12, im12) hold (alpha, beta).
template <typename Scalar>
struct DensityMatrix2 {
  Scalar rho11 = 0, rho22 = 0;
  Scalar re12 = 0, im12 = 0;
};

using ModelPotentiald = ModelPotential<double>;
using DiabaticPointd = DiabaticPoint<double>;
using AdiabaticPointd = AdiabaticPoint<double>;
using DensityMatrix2d = DensityMatrix2<double>;

template <typename Scalar>
DiabaticPoint<Scalar> eval_diabatic(const ModelPotential<Scalar>& model,
                                    std::type_identity_t<Scalar> q) {
  using std::abs;
  using std::exp;
  using std::isfinite;
  if (!isfinite(q)) throw std::domain_error("eval_diabatic: non-finite position");

  const Scalar decay = exp(-model.b * abs(q));
  const Scalar sign = q > 0 ? Scalar(1) : (q < 0 ? Scalar(-1) : Scalar(0));
  DiabaticPoint<Scalar> p;
  p.v1 = sign * model.a * (Scalar(1) - decay);
  p.v2 = -p.v1;
  p.v12 = model.c * exp(-model.d_width * q * q);
  // Two-sided limit a*b at the origin.
  p.dv1 = model.a * model.b * decay;
  p.dv2 = -p.dv1;
  p.dv12 = Scalar(-2) * model.d_width * q * p.v12;
  return p;
}

/// Closed-form diagonalization of a real symmetric 2x2 potential with analytic
/// gradients. phi = atan2(2 V12, V1 - V2) keeps the angle continuous for V12 > 0.
template <typename Scalar>
AdiabaticPoint<Scalar> diagonalize(const DiabaticPoint<Scalar>& p) {
  using std::atan2;
  using std::hypot;
  const Scalar mean = (p.v1 + p.v2) / 2;
  const Scalar half_diff = (p.v1 - p.v2) / 2;
  const Scalar dmean = (p.dv1 + p.dv2) / 2;
  const Scalar dhalf_diff = (p.dv1 - p.dv2) / 2;
  const Scalar radius = hypot(half_diff, p.v12);

  AdiabaticPoint<Scalar> out;
  out.v_plus = mean + radius;
  out.v_minus = mean - radius;
  out.omega = 2 * radius;
  out.phi = atan2(p.v12, half_diff);
  if (radius > 0) {
    const Scalar dphi = (half_diff * p.dv12 - p.v12 * dhalf_diff) / (radius * radius);
    const Scalar dradius = (half_diff * dhalf_diff + p.v12 * p.dv12) / radius;
    out.d = -dphi / 2;
    out.dv_plus = dmean + dradius;
    out.dv_minus = dmean - dradius;
  } else {
    out.d = 0;
    out.dv_plus = dmean;
    out.dv_minus = dmean;
  }
  return out;
}

template <typename Scalar>
AdiabaticPoint<Scalar> eval_adiabatic(const ModelPotential<Scalar>& model,
                                      std::type_identity_t<Scalar> q) {
  return diagonalize(eval_diabatic(model, q));
}

template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> diabatic_matrix(const DiabaticPoint<Scalar>& p) {
  Eigen::Matrix<Scalar, 2, 2> v;
  v << p.v1, p.v12, p.v12, p.v2;
  return v;
}

/// U(phi); column 0 is |+>, column 1 is |-> in the diabatic basis.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> adiabatic_basis(Scalar phi) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(phi / 2);
  const Scalar s = sin(phi / 2);
  Eigen::Matrix<Scalar, 2, 2> u;
  u << c, -s, s, c;
  return u;
}

/// Localized-state transform rho_D -> rho_A at mixing angle phi.
template <typename Scalar>
DensityMatrix2<Scalar> density_to_adiabatic(const DensityMatrix2<Scalar>& rho, Scalar phi) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(phi);
  const Scalar s = sin(phi);
  const Scalar half_sum = (rho.rho11 + rho.rho22) / 2;
  const Scalar half_diff = (rho.rho11 - rho.rho22) / 2;
  DensityMatrix2<Scalar> out;
  out.rho11 = half_sum + half_diff * c + rho.re12 * s;
  out.rho22 = half_sum - half_diff * c - rho.re12 * s;
  out.re12 = -half_diff * s + rho.re12 * c;
  out.im12 = rho.im12;
  return out;
}

/// Inverse of density_to_adiabatic.
template <typename Scalar>
DensityMatrix2<Scalar> density_to_diabatic(const DensityMatrix2<Scalar>& rho, Scalar phi) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(phi);
  const Scalar s = sin(phi);
  const Scalar half_sum = (rho.rho11 + rho.rho22) / 2;
  const Scalar half_diff = (rho.rho11 - rho.rho22) / 2;
  DensityMatrix2<Scalar> out;
  out.rho11 = half_sum + half_diff * c - rho.re12 * s;
  out.rho22 = half_sum - half_diff * c + rho.re12 * s;
  out.re12 = half_diff * s + rho.re12 * c;
  out.im12 = rho.im12;
  return out;
}

}  // namespace qtsh
