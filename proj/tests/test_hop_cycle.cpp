#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hoptraj/hop_cycle.hpp"

using namespace hoptraj;

namespace {

RobotParamsd nominal_params() {
  RobotParamsd p;
  p.m_r = 1.02;
  p.I_r = Vec3d(0.011, 0.012, 0.021);
  return p;
}

// Ballistic descent used for the contact-interpolation oracle.
State12d falling_state(double t) {
  State12d s;
  s.r_cm = Vec3d(0, 0, 1.0 - 2.0 * t - 0.5 * 9.81 * t * t);
  s.v = Vec3d(0, 0, -2.0 - 9.81 * t);
  return s;
}

}  // namespace

TEST_CASE("surfaces and signed distance") {
  const Surface g = Surface::ground(0.5);
  CHECK(signed_distance(g, Vec3d(3, 2, 1.0)) == doctest::Approx(0.5));

  const Surface w = Surface::wall(Vec3d(2, 0, 0), Vec3d(-1, 0, 0));
  CHECK(signed_distance(w, Vec3d(1.0, 5, 3)) == doctest::Approx(1.0));
  CHECK(signed_distance(w, Vec3d(2.5, 0, 0)) == doctest::Approx(-0.5));

  CHECK_THROWS_AS(Surface::wall(Vec3d(2, 0, 0), Vec3d(0, 0, 1)), Error);
}

TEST_CASE("detect_touchdown instantaneous") {
  const Surface g = Surface::ground(0.0);

  State12d high;
  high.r_cm = Vec3d(0, 0, 3.0);
  high.v = Vec3d(4, 0, -10);
  CHECK_FALSE(detect_touchdown(high, g, 0.2));

  State12d touching;  // tip exactly on the plane, moving inward
  touching.r_cm = Vec3d(0, 0, 0.2);
  touching.v = Vec3d(0, 0, -1.0);
  CHECK(detect_touchdown(touching, g, 0.2));

  touching.v(2) = +1.0;  // receding: no contact event
  CHECK_FALSE(detect_touchdown(touching, g, 0.2));
}

TEST_CASE("contact time interpolation is O(dt^2) against bisection") {
  const Surface g = Surface::ground(0.0);
  const double L = 0.2;

  // bisection oracle on the continuous signed distance
  double lo = 0.0, hi = 0.4;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (signed_distance(g, foot_tip(falling_state(mid), L)) > 0 ? lo : hi) = mid;
  }
  const double t_true = 0.5 * (lo + hi);

  const auto interp_error = [&](double dt) {
    const int k = int(t_true / dt);
    const auto ev =
        detect_touchdown(falling_state(k * dt), k * dt, falling_state((k + 1) * dt),
                         (k + 1) * dt, g, L);
    REQUIRE(ev.has_value());
    CHECK(ev->t > k * dt);
    CHECK(ev->t <= (k + 1) * dt);
    return std::abs(ev->t - t_true);
  };

  const double e1 = interp_error(0.02);
  const double e2 = interp_error(0.01);
  CHECK(e1 < 1e-3);
  CHECK(e2 < e1 / 2.5);  // ~4x per halving, allow slack for grid alignment
}

TEST_CASE("stance_map: vertical touchdown reflects velocity only") {
  const RobotParamsd p = nominal_params();
  StanceModel m;
  m.eta_e = 1.0;

  State12d td;
  td.r_cm = Vec3d(1, 2, 0.2);
  td.v = Vec3d(0, 0, -5.0);
  td.omega = Vec3d(0.1, -0.2, 0.3);

  const State12d lo = stance_map(p, td, m);
  CHECK((lo.r_cm - td.r_cm).norm() == 0.0);
  CHECK((lo.v - Vec3d(0, 0, 5.0)).norm() < 1e-14);
  CHECK(lo.eta.norm() == 0.0);  // zero roll/pitch: gravity moment vanishes
  CHECK(lo.omega.norm() == 0.0);
}

TEST_CASE("stance_map: energy retention and speed override") {
  const RobotParamsd p = nominal_params();
  StanceModel m;
  m.eta_e = 0.81;
  m.apply_gravity_torque = false;

  State12d td;
  td.eta = Vec3d(0.05, 0.4, 0.0);
  td.v = -5.0 * euler_to_rotation(td.eta).col(2);

  const State12d lo = stance_map(p, td, m);
  CHECK(lo.v.norm() == doctest::Approx(4.5).epsilon(1e-12));  // 0.9 * 5
  CHECK(lo.v.normalized().dot(euler_to_rotation(td.eta).col(2)) ==
        doctest::Approx(1.0).epsilon(1e-12));

  // kinetic energy scales exactly by eta_e
  const double ke_td = 0.5 * p.m_r * td.v.squaredNorm();
  const double ke_lo = 0.5 * p.m_r * lo.v.squaredNorm();
  CHECK(ke_lo == doctest::Approx(m.eta_e * ke_td).epsilon(1e-12));

  const State12d lo2 = stance_map(p, td, m, 3.3);
  CHECK(lo2.v.norm() == doctest::Approx(3.3).epsilon(1e-12));
}

TEST_CASE("stance_map: gravity torque tips the pitch outward") {
  const RobotParamsd p = nominal_params();
  StanceModel m;  // torque on, t_s = 80 ms

  State12d td;
  td.eta = Vec3d(0.0, EIGEN_PI / 6, 0.0);
  td.v = -5.0 * euler_to_rotation(td.eta).col(2);

  const State12d lo = stance_map(p, td, m);
  CHECK(lo.eta(1) > td.eta(1));
  CHECK(lo.eta(0) == doctest::Approx(0.0));
  CHECK(lo.eta(2) == doctest::Approx(0.0));

  // independent integration of the same pivot model
  {
    const double L = m.foot_len;
    const double Ip = p.I_r(1) + p.m_r * L * L;
    double th = td.eta(1), w = 0.0;
    const double h = 1e-6;
    for (double t = 0; t < m.t_s; t += h) {
      const double wd = p.m_r * p.g * L * std::sin(th) / Ip;
      w += h * wd;
      th += h * w;
    }
    CHECK(lo.eta(1) == doctest::Approx(th).epsilon(1e-3));
  }

  // negative pitch tips negative (magnitude grows)
  State12d tdn = td;
  tdn.eta(1) = -td.eta(1);
  tdn.v = -5.0 * euler_to_rotation(tdn.eta).col(2);
  const State12d lon = stance_map(p, tdn, m);
  CHECK(lon.eta(1) < tdn.eta(1));
}

TEST_CASE("update_gamma follows the printed rule exactly") {
  GammaAdapter a;  // mu = 0.1, gammas 1

  const GammaAdapter same = update_gamma(a, 0.5, 0.5, TiltAxis::Pitch);
  CHECK(same.gamma_theta == doctest::Approx(1.0));

  const GammaAdapter inc = update_gamma(a, 0.5, 0.6, TiltAxis::Pitch);
  CHECK(inc.gamma_theta == doctest::Approx(1.0 - 0.01).epsilon(1e-14));
  CHECK(inc.gamma_phi == 1.0);

  const GammaAdapter opp = update_gamma(a, 0.5, -0.2, TiltAxis::Pitch);
  CHECK(opp.gamma_theta == doctest::Approx(1.0 + 0.07).epsilon(1e-14));

  const GammaAdapter roll = update_gamma(a, -0.3, -0.4, TiltAxis::Roll);
  CHECK(roll.gamma_phi == doctest::Approx(1.0 - 0.01).epsilon(1e-14));
}

TEST_CASE("apply_gamma and the synthetic adaptation fixed point") {
  GammaAdapter a;
  CHECK((apply_gamma(a, {0.2, 0.5}) - Eigen::Vector2d(0.2, 0.5)).norm() == 0.0);

  a.gamma_theta = 0.9;
  CHECK(apply_gamma(a, {0.0, EIGEN_PI / 6})(1) ==
        doctest::Approx(0.9 * EIGEN_PI / 6).epsilon(1e-14));

  // synthetic plant beta_LO = 1.2 beta_TD: the gap |beta_TD - beta_LO|
  // contracts as gamma adapts
  GammaAdapter g;
  const double theta_des = 0.5;
  double first_gap = 0, last_gap = 0;
  for (int hop = 0; hop < 100; ++hop) {
    const double beta_td = apply_gamma(g, {0.0, theta_des})(1);
    const double beta_lo = 1.2 * beta_td;
    const double gap = std::abs(beta_td - beta_lo);
    if (hop == 0) first_gap = gap;
    last_gap = gap;
    g = update_gamma(g, beta_td, beta_lo, TiltAxis::Pitch);
  }
  CHECK(last_gap < 0.5 * first_gap);
}

TEST_CASE("hybrid_check") {
  const auto eq = hybrid_check(0.25, 0.25);
  CHECK(eq.delta_V == doctest::Approx(0.0));
  CHECK(eq.within_bound);

  const auto bad = hybrid_check(0.25, 0.75);
  CHECK(bad.delta_V == doctest::Approx(0.5));
  CHECK_FALSE(bad.within_bound);

  const auto ok = hybrid_check(0.75, 0.25, 0.0, 1e-6);
  CHECK(ok.within_bound);
}
