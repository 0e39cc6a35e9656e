#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hoptraj/controller.hpp"

using namespace hoptraj;

namespace {

RobotParamsd nominal_params() {
  RobotParamsd p;
  p.m_r = 1.02;
  p.I_r = Vec3d(0.011, 0.012, 0.021);
  p.C_T = 0.04 * Mat3d::Identity();
  p.C_R = 1e-4 * Mat3d::Identity();
  return p;
}

// Second transcription of the control laws, written with body-axis dot
// products instead of expanded trigonometry.
ControlInputd control_oracle(const RobotParamsd& p, const Gainsd& k, const State12d& x,
                             const FlatStated& d) {
  const Mat3d R = euler_to_rotation(x.eta);
  const Vec3d x_B = R.col(0), y_B = R.col(1), z_B = R.col(2);
  const Vec3d D = -translational_drag(p, R, x.v);
  const Vec3d Dr = -rotational_drag(p, x.omega);

  Vec3d ep = R.transpose() * (d.x_d.r_cm - x.r_cm);
  Vec3d ev = R.transpose() * (d.x_d.v - x.v);
  ep(1) = -ep(1);
  ev(1) = -ev(1);
  const Vec3d ea(d.x_d.eta(0) - x.eta(0), d.x_d.eta(1) - x.eta(1),
                 wrap_angle(d.x_d.eta(2) - x.eta(2)));
  const Vec3d er = d.x_d.omega - x.omega;

  const double m = p.m_r, g = p.g;
  const double sigma1 = -D.dot(z_B) / m + g * z_B(2);
  const double sigma2 = -D.dot(y_B) / m + g * y_B(2);
  const double sigma3 = D.dot(x_B) / m - g * x_B(2);

  const double Ix = p.I_r(0), Iy = p.I_r(1), Iz = p.I_r(2), Lt = p.L_t;
  const double pq = x.omega(0), qq = x.omega(1), rq = x.omega(2);

  ControlInputd u;
  u.U1 = m * ((d.x_dd(2) + sigma1) + ev(2) * k.kp_z) +
         k.kU1 * m * (ev(2) * k.kd_z + ep(2) * k.kp_z) / (2 * k.kd_z);
  u.U2 = Ix * (k.kd_y * (d.x_dd(1) + sigma2) + ev(1) * k.kp_y + er(0) * k.kp_phi) /
             (Lt * k.kd_phi) -
         Ix * (Dr(0) / Ix - d.x_dd(3) + rq * qq * (Iy - Iz) / Ix) / Lt +
         Ix * k.kU2 * (ev(1) * k.kd_y + er(0) * k.kd_phi + ea(0) * k.kp_phi + ep(1) * k.kp_y) /
             (2 * Lt * k.kd_phi);
  u.U3 = Iy * (ev(0) * k.kp_x + er(1) * k.kp_theta - k.kd_x * (-d.x_dd(0) + sigma3)) /
             (Lt * k.kd_theta) +
         Iy * (d.x_dd(4) - Dr(1) / Iy + pq * rq * (Ix - Iz) / Iy) / Lt +
         Iy * k.kU3 *
             (ev(0) * k.kd_x + er(1) * k.kd_theta + ea(1) * k.kp_theta + ep(0) * k.kp_x) /
             (2 * Lt * k.kd_theta);
  u.U4 = Iz * d.x_dd(5) - Dr(2) +
         (Iz * er(2) * k.kp_psi + Iz * ea(2) * k.kU4 * k.kp_psi / 2) / k.kd_psi;
  if (u.U1 < 0) u.U1 = 0;
  return u;
}

FlatStated desired_at_rest(const RobotParamsd& p) {
  FlatSampled hover;
  return flat_to_state(p, hover, nullptr, false);
}

}  // namespace

TEST_CASE("gains validation") {
  Gainsd g;
  CHECK_NOTHROW(g.validate());
  g.kd_y = 0.0;
  CHECK_THROWS_AS(g.validate(), Error);
}

TEST_CASE("compute_errors") {
  const RobotParamsd p = nominal_params();
  const Gainsd k;

  const FlatStated d = desired_at_rest(p);
  State12d x = d.x_d;
  const ErrorStated zero = compute_errors(k, x, d);
  CHECK(zero.e_U.cwiseAbs().maxCoeff() == 0.0);
  CHECK(zero.V == 0.0);

  // pure z offset of 1 m at identity attitude
  x.r_cm(2) -= 1.0;
  const ErrorStated ez = compute_errors(k, x, d);
  CHECK(ez.e_U(0) == doctest::Approx(k.kp_z * 1.0).epsilon(1e-14));

  // yaw error wraps into (-pi, pi]
  State12d y = d.x_d;
  FlatStated dy = d;
  dy.x_d.eta(2) = 2 * EIGEN_PI - 0.1;
  const ErrorStated ew = compute_errors(k, y, dy);
  CHECK(ew.e_eta(2) == doctest::Approx(-0.1).epsilon(1e-12));
}

TEST_CASE("control: hover feedforward and yaw read-off") {
  RobotParamsd p = nominal_params();
  p.C_T.setZero();
  p.C_R.setZero();
  const Gainsd k;

  const FlatStated d = desired_at_rest(p);
  const auto out = control(p, k, d.x_d, d);
  CHECK(out.u.U1 == doctest::Approx(p.m_r * p.g).epsilon(1e-13));
  CHECK(out.u.U2 == doctest::Approx(0.0));
  CHECK(out.u.U3 == doctest::Approx(0.0));
  CHECK(out.u.U4 == doctest::Approx(0.0));
  CHECK_FALSE(out.u1_clamped);

  // zero errors with a pure desired yaw acceleration
  RobotParamsd pd = nominal_params();  // rotational drag back on
  FlatStated dy = desired_at_rest(pd);
  dy.x_d.omega = Vec3d(0, 0, 2.0);
  dy.x_dd(5) = 3.0;
  State12d x = dy.x_d;
  const auto uy = control(pd, k, x, dy);
  const double D_psi = -rotational_drag(pd, x.omega)(2);
  CHECK(uy.u.U4 == doctest::Approx(pd.I_r(2) * 3.0 - D_psi).epsilon(1e-13));
}

TEST_CASE("control matches an independent transcription") {
  RobotParamsd p = nominal_params();
  p.C_T << 0.05, 0.004, 0.0, 0.002, 0.03, 0.001, 0.0, 0.003, 0.06;
  p.C_R << 2e-4, 1e-5, 0.0, 0.0, 3e-4, 2e-5, 1e-5, 0.0, 2.5e-4;
  Gainsd k;
  k.kp_x = 12;
  k.kd_y = 1.4;
  k.kU3 = 55;

  std::mt19937 rng(47);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 200; ++i) {
    State12d x;
    x.r_cm = Vec3d(u(rng), u(rng), u(rng)) * 4;
    x.v = Vec3d(u(rng), u(rng), u(rng)) * 6;
    x.eta = Vec3d(u(rng) * 1.1, u(rng) * 1.1, u(rng) * 3.0);
    x.omega = Vec3d(u(rng), u(rng), u(rng)) * 5;

    FlatStated d;
    d.x_d.r_cm = x.r_cm + Vec3d(u(rng), u(rng), u(rng));
    d.x_d.v = x.v + Vec3d(u(rng), u(rng), u(rng));
    d.x_d.eta = Vec3d(u(rng), u(rng), u(rng));
    d.x_d.omega = Vec3d(u(rng), u(rng), u(rng));
    d.x_dd << u(rng) * 5, u(rng) * 5, u(rng) * 5, u(rng) * 20, u(rng) * 20, u(rng) * 8;
    d.U1_d = 10.0;
    d.R_BW = euler_to_rotation(d.x_d.eta);

    const auto out = control(p, k, x, d);
    const ControlInputd oracle = control_oracle(p, k, x, d);
    CHECK((out.u.to_vector() - oracle.to_vector()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("lyapunov_rate") {
  const Gainsd k;
  ErrorStated e;
  CHECK(lyapunov_rate(k, e).V == 0.0);
  CHECK(lyapunov_rate(k, e).V_dot_design == 0.0);

  e.e_U << 1, 0, 0, 0;
  const auto r = lyapunov_rate(k, e);
  CHECK(r.V == doctest::Approx(0.5));
  CHECK(r.V_dot_design == doctest::Approx(-5.0));  // kU1 = 10

  std::mt19937 rng(53);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 100; ++i) {
    ErrorStated re;
    re.e_U << u(rng), u(rng), u(rng), u(rng);
    const auto rr = lyapunov_rate(k, re);
    CHECK(rr.V_dot_design <= 0.0);

    Gainsd twice = k;
    twice.kU1 *= 2;
    twice.kU2 *= 2;
    twice.kU3 *= 2;
    twice.kU4 *= 2;
    CHECK(lyapunov_rate(twice, re).V_dot_design ==
          doctest::Approx(2 * rr.V_dot_design).epsilon(1e-14));
  }
}

TEST_CASE("closed-loop z-channel regulation matches the designed decay") {
  RobotParamsd p = nominal_params();
  p.C_T.setZero();
  p.C_R.setZero();
  const Gainsd k;

  const FlatStated d = desired_at_rest(p);
  State12d x = d.x_d;
  x.r_cm(2) += 0.02;
  x.v(2) -= 0.05;

  const double dt = 1e-3;
  double V_prev = compute_errors(k, x, d).V;
  for (int i = 0; i < 2800; ++i) {
    const auto out = control(p, k, x, d);
    x = integrate_step(p, x, out.u, dt);
    const auto e = compute_errors(k, x, d);
    const auto r = lyapunov_rate(k, e);
    const double dVdt = (e.V - V_prev) / dt;
    CHECK(dVdt <= 1e-6);
    CHECK(std::abs(dVdt - r.V_dot_design) <= 1e-6 + 0.05 * std::abs(r.V_dot_design));
    V_prev = e.V;
  }
  CHECK(V_prev < 1e-12);  // converged
}

TEST_CASE("equilibrium: zero error is a fixed point of the law") {
  RobotParamsd p = nominal_params();
  const Gainsd k;
  FlatSampled s;
  s.r_dot = Vec3d(2.0, 0.5, 1.0);
  s.r_ddot = Vec3d(0.5, -0.3, 0.2);
  s.r_jerk = Vec3d(0.1, 0.0, -0.2);
  const FlatStated d = flat_to_state(p, s, nullptr, true);
  const auto out = control(p, k, d.x_d, d);
  CHECK(out.errors.e_U.cwiseAbs().maxCoeff() < 1e-12);
  // with zero errors the law reduces to pure feedforward terms
  const auto out2 = control(p, k, d.x_d, d);
  CHECK(out.u.to_vector() == out2.u.to_vector());
}

TEST_CASE("control is continuous in the state away from wrap/singularity") {
  const RobotParamsd p = nominal_params();
  const Gainsd k;
  FlatSampled s;
  s.r_dot = Vec3d(1.0, 0.0, 2.0);
  const FlatStated d = flat_to_state(p, s, nullptr, true);

  State12d x = d.x_d;
  x.r_cm += Vec3d(0.1, -0.2, 0.3);
  const Vec4d u0 = control(p, k, x, d).u.to_vector();
  for (int i = 0; i < 12; ++i) {
    State12d xp = x;
    Vec12<double> v = xp.to_vector();
    v(i) += 1e-8;
    xp = State12d::from_vector(v);
    const Vec4d up = control(p, k, xp, d).u.to_vector();
    CHECK((up - u0).cwiseAbs().maxCoeff() < 1e-4);  // bounded sensitivity * 1e-8
  }
}

TEST_CASE("saturation handling") {
  const RobotParamsd p = nominal_params();
  const Gainsd k;

  // a demanded descent far below free fall clamps U1 at zero
  FlatStated d = desired_at_rest(p);
  State12d x = d.x_d;
  x.r_cm(2) = 10.0;  // desired far below
  x.v(2) = 0.0;
  const auto out = control(p, k, x, d);
  CHECK(out.u.U1 == 0.0);
  CHECK(out.u1_clamped);

  // in-range inputs pass through the rotor projection untouched
  ControlInputd ok{0.5 * 4 * p.zeta_t * 500 * 500, 0.01, -0.01, 0.001};
  const auto pr = project_to_rotor_limits(p, ok);
  CHECK_FALSE(pr.saturated);
  CHECK((pr.u.to_vector() - ok.to_vector()).cwiseAbs().maxCoeff() == 0.0);

  // beyond-limit thrust gets projected to a feasible input
  ControlInputd big{4 * p.zeta_t * 800 * 800, 0.0, 0.0, 0.0};
  const auto pb = project_to_rotor_limits(p, big);
  CHECK(pb.saturated);
  CHECK(pb.u.U1 == doctest::Approx(4 * p.zeta_t * p.omega_rotor_max * p.omega_rotor_max));
  const auto remix = input_mixing(p, pb.rotors);
  CHECK((pb.u.to_vector() - remix.to_vector()).cwiseAbs().maxCoeff() < 1e-12);
}
