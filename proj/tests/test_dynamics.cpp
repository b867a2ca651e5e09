#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qtsh/dynamics.hpp"
#include "qtsh/rng.hpp"
#include "support/test_models.hpp"

using namespace qtsh;
using qtsh_test::Harmonic;
using qtsh_test::NegatedCoupling;

namespace {

const ModelPotentiald kModel{};

TrajectoryStated at(double q, double pk, int sigma) {
  TrajectoryStated s;
  s.q = q;
  s.pk = pk;
  s.sigma = sigma;
  s.a_pp = sigma;
  return s;
}

bool same_state(const TrajectoryStated& a, const TrajectoryStated& b) {
  return a.q == b.q && a.pk == b.pk && a.sigma == b.sigma && a.alpha == b.alpha &&
         a.beta == b.beta && a.a_pp == b.a_pp && a.work_acc == b.work_acc && a.t == b.t;
}

}  // namespace

TEST_CASE("no coherence means no quantum force") {
  const auto s = at(-5, 10, 1);
  const auto r = derivatives(s, kModel, EngineKind::QTSH);
  CHECK(r.dq == doctest::Approx(10.0 / 2000));
  CHECK(r.dpk == -eval_adiabatic(kModel, -5.0).dv_plus);
  CHECK(r.dbeta == 0.0);
  CHECK(r.da_pp == 0.0);
  CHECK(r.dwork == 0.0);
}

TEST_CASE("quantum force at the crossing") {
  auto s = at(0, 10, 1);
  s.alpha = -0.5;
  const auto ap = eval_adiabatic(kModel, 0.0);
  REQUIRE(ap.d == doctest::Approx(4.0));
  REQUIRE(ap.dv_plus == 0.0);
  const auto r = derivatives(s, kModel, EngineKind::QTSH);
  CHECK(r.dpk == doctest::Approx(-0.016).epsilon(1e-12));
  CHECK(r.dwork == doctest::Approx(-0.016 * 10 / 2000).epsilon(1e-12));

  const auto f = derivatives(s, kModel, EngineKind::FSSH);
  CHECK(f.dpk == 0.0);
  CHECK(f.da_pp == r.da_pp);
  CHECK(f.dalpha == r.dalpha);
}

TEST_CASE("Born-Oppenheimer proxy is frozen") {
  auto s = at(0.3, 10, 1);
  s.alpha = 0.2;
  s.beta = -0.1;
  s.a_pp = 0.6;
  const auto r = derivatives(s, kModel, EngineKind::BornOppenheimer);
  CHECK(r.da_pp == 0.0);
  CHECK(r.dwork == 0.0);
  const auto ap = eval_adiabatic(kModel, 0.3);
  CHECK(r.dalpha == ap.omega * s.beta);
  CHECK(r.dbeta == -ap.omega * s.alpha);
}

TEST_CASE("zero step leaves the state untouched") {
  auto s = at(-1, 9, 1);
  s.alpha = 0.1;
  CHECK(same_state(rk4_step(s, 0.0, kModel, EngineKind::QTSH), s));
}

TEST_CASE("RK4 on a harmonic well conserves energy and tracks the analytic orbit") {
  const Harmonic model;
  auto s = at(1.0, 0.0, 0);
  const double e0 = trajectory_energy(s, model);
  const double w = std::sqrt(model.k / model.mass);
  double max_drift = 0;
  for (int i = 0; i < 10000; ++i) {
    s = rk4_step(s, 0.5, model, EngineKind::BornOppenheimer);
    max_drift = std::max(max_drift, std::abs(trajectory_energy(s, model) - e0));
  }
  CHECK(max_drift < 1e-10);
  CHECK(s.t == doctest::Approx(5000.0));
  CHECK(s.q == doctest::Approx(std::cos(w * 5000.0)).epsilon(1e-8));
  CHECK(s.pk == doctest::Approx(-model.mass * w * std::sin(w * 5000.0)).epsilon(1e-8));
}

TEST_CASE("QTSH reduces to BO when every coupling term vanishes") {
  const Harmonic model;
  auto a = at(0.5, 3.0, 1);
  auto b = a;
  for (int i = 0; i < 2000; ++i) {
    a = rk4_step(a, 0.5, model, EngineKind::QTSH);
    b = rk4_step(b, 0.5, model, EngineKind::BornOppenheimer);
  }
  CHECK(a.q == b.q);
  CHECK(a.pk == b.pk);
  CHECK(a.a_pp == b.a_pp);
  CHECK(a.work_acc == 0.0);
}

TEST_CASE("coherence rotates at the gap frequency without coupling") {
  const Harmonic model;
  auto s = at(0.0, 0.0, 1);
  s.a_pp = 0.5;
  s.alpha = 0.3;
  const double r0 = s.alpha * s.alpha;
  for (int i = 0; i < 4000; ++i) {
    s = rk4_step(s, 0.25, model, EngineKind::QTSH);
    REQUIRE(std::abs(s.alpha * s.alpha + s.beta * s.beta - r0) < 1e-10);
  }
  CHECK(s.alpha == doctest::Approx(0.3 * std::cos(model.gap * s.t)).epsilon(1e-8));
  CHECK(s.beta == doctest::Approx(-0.3 * std::sin(model.gap * s.t)).epsilon(1e-8));
}

TEST_CASE("hop probability") {
  SUBCASE("no coherence") {
    auto s = at(0, 10, 1);
    CHECK(hop_probability(s, 0.25, kModel, EngineKind::QTSH).value == 0.0);
  }
  SUBCASE("fewest-switches quotient") {
    // d v = 4 * 0.005 = 0.02; da_pp = -2 * 0.02 * 0.5 = -0.02 per unit time.
    auto s = at(0, 10, 1);
    s.alpha = 0.5;
    const auto g = hop_probability(s, 1.0, kModel, EngineKind::QTSH);
    CHECK(g.value == doctest::Approx(0.02).epsilon(1e-12));
    CHECK_FALSE(g.consistency_loss);
  }
  SUBCASE("population flowing into the occupied state") {
    auto s = at(0, 10, 1);
    s.alpha = -0.5;
    CHECK(hop_probability(s, 1.0, kModel, EngineKind::QTSH).value == 0.0);
  }
  SUBCASE("lower surface uses 1 - a_pp") {
    auto s = at(0, 10, 0);
    s.a_pp = 0.2;
    s.alpha = -0.1;  // da_pp = +0.004, so a_mm drains
    const auto g = hop_probability(s, 1.0, kModel, EngineKind::FSSH);
    CHECK(g.value == doctest::Approx(0.004 / 0.8).epsilon(1e-12));
  }
  SUBCASE("clamped to one") {
    auto s = at(0, 10, 1);
    s.alpha = 0.5;
    CHECK(hop_probability(s, 1000.0, kModel, EngineKind::QTSH).value == 1.0);
  }
  SUBCASE("vanishing occupied population") {
    auto s = at(0, 10, 1);
    s.a_pp = 0;
    s.alpha = 0.5;
    const auto g = hop_probability(s, 0.25, kModel, EngineKind::QTSH);
    CHECK(g.value == 0.0);
    CHECK(g.consistency_loss);
  }
  SUBCASE("never hops in BO") {
    auto s = at(0, 10, 1);
    s.alpha = 0.5;
    CHECK(hop_probability(s, 1.0, kModel, EngineKind::BornOppenheimer).value == 0.0);
  }
}

TEST_CASE("FSSH rescaling roots") {
  const auto down = fssh_momentum_jump(10.0, 2000.0, 0.004, HopDirection::Down);
  REQUIRE(down);
  CHECK(*down == doctest::Approx(std::sqrt(116.0) - 10).epsilon(1e-14));
  CHECK(*down == doctest::Approx(0.770330).epsilon(1e-6));
  const auto rev = fssh_momentum_jump_reversing(10.0, 2000.0, 0.004, HopDirection::Down);
  CHECK(*rev == doctest::Approx(-std::sqrt(116.0) - 10).epsilon(1e-14));

  const auto neg = fssh_momentum_jump(-10.0, 2000.0, 0.004, HopDirection::Down);
  CHECK(*neg == doctest::Approx(-(std::sqrt(116.0) - 10)).epsilon(1e-14));

  CHECK_FALSE(fssh_momentum_jump(3.0, 2000.0, 0.004, HopDirection::Up));
  const auto up = fssh_momentum_jump(10.0, 2000.0, 0.004, HopDirection::Up);
  CHECK(*up == doctest::Approx(std::sqrt(84.0) - 10).epsilon(1e-14));

  // Small gaps: no cancellation.
  const auto tiny = fssh_momentum_jump(10.0, 2000.0, 1e-15, HopDirection::Down);
  CHECK(*tiny == doctest::Approx(2000.0 * 1e-15 / 10).epsilon(1e-12));
}

TEST_CASE("hops") {
  auto s = at(0, 10, 1);
  s.a_pp = 0.5;
  s.alpha = 0.3;

  SUBCASE("draw above the probability") {
    const auto r = attempt_hop(s, 0.999, 0.25, kModel, EngineKind::FSSH);
    CHECK(r.outcome.kind == HopKind::NoHop);
    CHECK(same_state(r.state, s));
  }
  SUBCASE("FSSH down-hop conserves energy") {
    const auto r = attempt_hop(s, 0.0, 0.25, kModel, EngineKind::FSSH);
    CHECK(r.outcome.kind == HopKind::HopDown);
    CHECK(r.state.sigma == 0);
    CHECK(r.state.pk == doctest::Approx(std::sqrt(116.0)).epsilon(1e-14));
    CHECK(r.outcome.delta_pk == doctest::Approx(0.7703296143).epsilon(1e-9));
    CHECK(trajectory_energy(r.state, kModel) ==
          doctest::Approx(trajectory_energy(s, kModel)).epsilon(1e-14));
    CHECK(r.state.hop_energy == doctest::Approx(-0.004).epsilon(1e-12));
  }
  SUBCASE("QTSH hop flips the surface only") {
    const auto r = attempt_hop(s, 0.0, 0.25, kModel, EngineKind::QTSH);
    CHECK(r.outcome.kind == HopKind::HopDown);
    CHECK(r.state.sigma == 0);
    CHECK(r.state.pk == s.pk);
    CHECK(r.state.alpha == s.alpha);
    CHECK(r.state.a_pp == s.a_pp);
    CHECK(r.outcome.delta_pk == 0.0);
    CHECK(trajectory_energy(r.state, kModel) - trajectory_energy(s, kModel) ==
          doctest::Approx(-0.004).epsilon(1e-12));
  }
  SUBCASE("FSSH up-hop without enough kinetic energy is frustrated") {
    auto low = at(0, 3, 0);
    low.a_pp = 0.5;
    low.alpha = -0.3;
    REQUIRE(hop_probability(low, 0.25, kModel, EngineKind::FSSH).value > 0);
    const auto r = attempt_hop(low, 0.0, 0.25, kModel, EngineKind::FSSH);
    CHECK(r.outcome.kind == HopKind::Frustrated);
    CHECK(same_state(r.state, low));
    CHECK(r.state.hop_energy == 0.0);
  }
}

TEST_CASE("impulsive jump") {
  CHECK(impulsive_jump(kModel, 0.0, 10.0, HopDirection::Down) == doctest::Approx(0.8));
  CHECK(impulsive_jump(kModel, 0.0, 10.0, HopDirection::Up) == doctest::Approx(-0.8));
  CHECK(impulsive_jump(kModel, 0.0, -10.0, HopDirection::Down) == doctest::Approx(-0.8));
  CHECK_THROWS_AS(impulsive_jump(kModel, 0.0, 0.0, HopDirection::Down), SingularJumpError);
  // d underflows to zero far from the crossing.
  CHECK_THROWS_AS(impulsive_jump(kModel, -40.0, 10.0, HopDirection::Down), SingularJumpError);
}

TEST_CASE("frozen-position quadrature recovers the impulsive jump") {
  for (double width : {1.0, 4.0}) {
    ModelPotentiald m;
    m.d_width = width;
    for (double pk : {10.0, -10.0, 25.0}) {
      for (auto dir : {HopDirection::Down, HopDirection::Up}) {
        const double exact = impulsive_jump(m, 0.0, pk, dir);
        CHECK(frozen_jump_quadrature(m, 0.0, pk, dir) == doctest::Approx(exact).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("trajectory energy forms") {
  const auto s = at(-5, 10, 1);
  const double v1 = -0.01 * (1 - std::exp(-8.0));
  const double v12 = 0.002 * std::exp(-25.0);
  const double expected = 100.0 / 4000 + std::hypot(v1, v12);
  CHECK(trajectory_energy(s, kModel) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(std::abs(trajectory_energy(s, kModel) - 0.0349966) < 1e-7);
  CHECK(trajectory_energy_canonical(s, kModel) == trajectory_energy(s, kModel));

  auto c = at(0.1, 10, 1);
  c.beta = 0.3;
  const double d = eval_adiabatic(kModel, 0.1).d;
  CHECK(trajectory_energy_canonical(c, kModel) - trajectory_energy(c, kModel) ==
        doctest::Approx(2 * 0.09 * d * d / 2000).epsilon(1e-9));
  CHECK(canonical_momentum(c, kModel) == doctest::Approx(10 + 2 * 0.3 * d));

  auto flipped = c;
  flipped.sigma = 0;
  CHECK(trajectory_energy(flipped, kModel) - trajectory_energy(c, kModel) ==
        doctest::Approx(-eval_adiabatic(kModel, 0.1).omega).epsilon(1e-12));
}

TEST_CASE("non-finite states raise a propagation error") {
  const qtsh_test::PoisonedBeyond model;
  auto s = at(0.9, 10, 1);
  s.id = 17;
  try {
    for (int i = 0; i < 1000; ++i) s = rk4_step(s, 1.0, model, EngineKind::QTSH);
    FAIL("expected a propagation error");
  } catch (const PropagationError& e) {
    CHECK(e.trajectory() == 17);
    CHECK(e.time() > 0);
  }
}

namespace {

template <typename Model>
void hopping_trajectory(const Model& model, TrajectoryStated s, EngineKind engine,
                        std::vector<TrajectoryStated>& out, int steps, double dt) {
  TrajectoryStream stream(5, 3);
  out.push_back(s);
  for (int i = 0; i < steps; ++i) {
    s = rk4_step(s, dt, model, engine);
    s = attempt_hop(s, stream.uniform(), dt, model, engine).state;
    out.push_back(s);
  }
}

}  // namespace

TEST_CASE("sign covariance under d -> -d, alpha -> -alpha, beta -> -beta") {
  const NegatedCoupling negated;
  auto s = at(-3, 10, 1);
  s.alpha = 0.0;
  auto n = s;
  std::vector<TrajectoryStated> a, b;
  hopping_trajectory(kModel, s, EngineKind::QTSH, a, 10000, 0.25);
  hopping_trajectory(negated, n, EngineKind::QTSH, b, 10000, 0.25);
  int hops = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(std::abs(a[i].q - b[i].q) <= 1e-12);
    REQUIRE(std::abs(a[i].pk - b[i].pk) <= 1e-12);
    REQUIRE(a[i].sigma == b[i].sigma);
    REQUIRE(std::abs(a[i].a_pp - b[i].a_pp) <= 1e-12);
    REQUIRE(std::abs(a[i].alpha + b[i].alpha) <= 1e-12);
    REQUIRE(std::abs(a[i].beta + b[i].beta) <= 1e-12);
    if (i > 0 && a[i].sigma != a[i - 1].sigma) ++hops;
  }
  CHECK(a.back().q > 5);
  MESSAGE("hops along the covariance trajectory: " << hops);
}

TEST_CASE("proxy purity is preserved") {
  for (EngineKind engine : {EngineKind::QTSH, EngineKind::FSSH}) {
    std::vector<TrajectoryStated> path;
    hopping_trajectory(kModel, at(-4, 10, 1), engine, path, 10000, 0.25);
    for (const auto& s : path) {
      REQUIRE(s.alpha * s.alpha + s.beta * s.beta <= s.a_pp * (1 - s.a_pp) + 1e-8);
      REQUIRE(s.a_pp >= -1e-10);
      REQUIRE(s.a_pp <= 1 + 1e-10);
    }
  }
}

TEST_CASE("FSSH trajectories conserve energy across hops") {
  for (double pk0 : {10.0, 6.0, 20.0}) {
    std::vector<TrajectoryStated> path;
    hopping_trajectory(kModel, at(-4, pk0, 1), EngineKind::FSSH, path, 10000, 0.25);
    const double e0 = trajectory_energy(path.front(), kModel);
    for (const auto& s : path) REQUIRE(std::abs(trajectory_energy(s, kModel) - e0) < 1e-9);
  }
}

TEST_CASE("QTSH work balances the surface-energy change") {
  std::vector<TrajectoryStated> path;
  hopping_trajectory(kModel, at(-4, 10, 1), EngineKind::QTSH, path, 10000, 0.25);
  const double e0 = trajectory_energy(path.front(), kModel);
  for (const auto& s : path) {
    REQUIRE(std::abs(trajectory_energy(s, kModel) - e0 - s.work_acc - s.hop_energy) < 1e-9);
  }
}

TEST_CASE("reflected low-momentum QTSH trajectory returns its work") {
  auto s = at(-5, 5, 0);
  double peak = 0;
  for (int i = 0; i < 100000 && !(s.q < -5 && s.pk < 0); ++i) {
    s = rk4_step(s, 0.25, kModel, EngineKind::QTSH);
    peak = std::max(peak, std::abs(s.work_acc));
  }
  REQUIRE(s.pk < 0);
  REQUIRE(s.q < -5);
  CHECK(std::abs(s.work_acc) < 0.05 * eval_adiabatic(kModel, 0.0).omega);
  CHECK(peak > std::abs(s.work_acc));
}

TEST_CASE("localized transition integrator") {
  const auto r = propagate_localized(kModel, -5.0, 10.0, 1.0, 0.0, -6.0, 6.0, 0.25, 1e5);
  CHECK(r.crossed);
  CHECK(r.q > 6);
  CHECK(r.final_population >= 0);
  CHECK(r.final_population < 0.5);
  CHECK(r.impulse > 0);
  // Downhill on the upper surface from 0.01 to the crossing value 0.002.
  CHECK(r.pk_at_crossing == doctest::Approx(std::sqrt(100 + 2 * 2000 * 0.008)).epsilon(0.05));
}
