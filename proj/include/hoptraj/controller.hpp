#ifndef HOPTRAJ_CONTROLLER_HPP
#define HOPTRAJ_CONTROLLER_HPP

#include <cmath>

#include "hoptraj/dynamics.hpp"
#include "hoptraj/flatness.hpp"
#include "hoptraj/types.hpp"

namespace hoptraj {

/// Proportional/derivative gains per axis plus the four convergence gains.
template <class Scalar>
struct Gains {
  Scalar kp_x{10}, kd_x{1}, kp_y{10}, kd_y{1}, kp_z{10}, kd_z{1};
  Scalar kp_phi{30}, kd_phi{1}, kp_theta{30}, kd_theta{1}, kp_psi{30}, kd_psi{1};
  Scalar kU1{10}, kU2{80}, kU3{80}, kU4{80};

  void validate() const {
    const Scalar kp[] = {kp_x, kp_y, kp_z, kp_phi, kp_theta, kp_psi};
    const Scalar kd[] = {kd_x, kd_y, kd_z, kd_phi, kd_theta, kd_psi};
    const Scalar kU[] = {kU1, kU2, kU3, kU4};
    for (Scalar k : kp)
      if (!(k >= Scalar(0))) throw Error("Gains: proportional gains must be >= 0");
    for (Scalar k : kd)
      if (!(k > Scalar(0))) throw Error("Gains: derivative gains must be > 0");
    for (Scalar k : kU)
      if (!(k > Scalar(0))) throw Error("Gains: convergence gains must be > 0");
  }
};

/// Tracking errors: body-frame translational errors (y entries already
/// negated for proper control direction), Euler-angle and rate errors, the
/// four composite control errors and the Lyapunov value.
template <class Scalar>
struct ErrorState {
  Vec3<Scalar> e_pos = Vec3<Scalar>::Zero();   // body frame
  Vec3<Scalar> e_vel = Vec3<Scalar>::Zero();   // body frame
  Vec3<Scalar> e_eta = Vec3<Scalar>::Zero();   // (e_phi, e_theta, e_psi), psi wrapped
  Vec3<Scalar> e_rate = Vec3<Scalar>::Zero();  // (e_p, e_q, e_r)
  Vec4<Scalar> e_U = Vec4<Scalar>::Zero();
  Scalar V{0};
};

/// e = x_d - x with position/velocity errors rotated into the body frame by
/// the actual attitude; composites per the control-error split.
template <class Scalar>
ErrorState<Scalar> compute_errors(const Gains<Scalar>& gains, const State12<Scalar>& state,
                                  const FlatState<Scalar>& desired) {
  const Mat3<Scalar> R = euler_to_rotation(state.eta);
  ErrorState<Scalar> e;
  e.e_pos = R.transpose() * (desired.x_d.r_cm - state.r_cm);
  e.e_vel = R.transpose() * (desired.x_d.v - state.v);
  e.e_pos(1) = -e.e_pos(1);  // set [-e_y, -e_y_dot] for proper control direction
  e.e_vel(1) = -e.e_vel(1);
  e.e_eta = desired.x_d.eta - state.eta;
  e.e_eta(2) = wrap_angle(e.e_eta(2));
  e.e_rate = desired.x_d.omega - state.omega;

  e.e_U(0) = gains.kp_z * e.e_pos(2) + gains.kd_z * e.e_vel(2);
  e.e_U(1) = gains.kp_y * e.e_pos(1) + gains.kd_y * e.e_vel(1) +
             gains.kp_phi * e.e_eta(0) + gains.kd_phi * e.e_rate(0);
  e.e_U(2) = gains.kp_x * e.e_pos(0) + gains.kd_x * e.e_vel(0) +
             gains.kp_theta * e.e_eta(1) + gains.kd_theta * e.e_rate(1);
  e.e_U(3) = gains.kp_psi * e.e_eta(2) + gains.kd_psi * e.e_rate(2);
  e.V = Scalar(0.5) * e.e_U.squaredNorm();
  return e;
}

template <class Scalar>
struct LyapunovRate {
  Scalar V;
  Scalar V_dot_design;  // -1/2 sum k_Ui e_Ui^2, nonpositive by construction
};

template <class Scalar>
LyapunovRate<Scalar> lyapunov_rate(const Gains<Scalar>& gains,
                                   const ErrorState<Scalar>& e) {
  LyapunovRate<Scalar> r;
  r.V = Scalar(0.5) * e.e_U.squaredNorm();
  r.V_dot_design = Scalar(-0.5) * (gains.kU1 * e.e_U(0) * e.e_U(0) +
                                   gains.kU2 * e.e_U(1) * e.e_U(1) +
                                   gains.kU3 * e.e_U(2) * e.e_U(2) +
                                   gains.kU4 * e.e_U(3) * e.e_U(3));
  return r;
}

template <class Scalar>
struct ControlOutput {
  ControlInput<Scalar> u;
  ErrorState<Scalar> errors;
  bool u1_clamped = false;  // U1 hit the >= 0 floor
};

/// Closed-form control laws.  D_x..D_psi follow the dynamics module's sign
/// convention (negated drag components evaluated at the current state);
/// feedforward accelerations come from the flatness-derived desired state.
template <class Scalar>
ControlOutput<Scalar> control(const RobotParams<Scalar>& params, const Gains<Scalar>& gains,
                              const State12<Scalar>& state,
                              const FlatState<Scalar>& desired) {
  const Scalar cphi = std::cos(state.eta(0)), sphi = std::sin(state.eta(0));
  const Scalar cth = std::cos(state.eta(1)), sth = std::sin(state.eta(1));
  const Scalar cpsi = std::cos(state.eta(2)), spsi = std::sin(state.eta(2));

  const Mat3<Scalar> R = euler_to_rotation(state.eta);
  const Vec3<Scalar> D_t = -translational_drag(params, R, state.v);
  const Vec3<Scalar> D_r = -rotational_drag(params, state.omega);
  const Scalar Dx = D_t(0), Dy = D_t(1), Dz = D_t(2);
  const Scalar Dphi = D_r(0), Dth = D_r(1), Dpsi = D_r(2);

  const ErrorState<Scalar> e = compute_errors(gains, state, desired);
  const Scalar m = params.m_r, g = params.g;
  const Scalar Ix = params.I_r(0), Iy = params.I_r(1), Iz = params.I_r(2);
  const Scalar Lt = params.L_t;
  const Scalar pr = state.omega(0), qr = state.omega(1), rr = state.omega(2);

  const Scalar xdd_d = desired.x_dd(0), ydd_d = desired.x_dd(1), zdd_d = desired.x_dd(2);
  const Scalar pdot_d = desired.x_dd(3), qdot_d = desired.x_dd(4), rdot_d = desired.x_dd(5);

  const Scalar sigma1 = -Dx * (sphi * spsi + cphi * cpsi * sth) / m +
                        Dy * (cpsi * sphi - cphi * spsi * sth) / m -
                        cphi * cth * (Dz - g * m) / m;
  const Scalar sigma2 = Dx * (cphi * spsi - cpsi * sphi * sth) / m -
                        Dy * (cphi * cpsi + sphi * spsi * sth) / m -
                        cth * sphi * (Dz - g * m) / m;
  const Scalar sigma3 = (Dx * cpsi * cth + Dy * cth * spsi - (Dz - g * m) * sth) / m;

  ControlOutput<Scalar> out;
  out.errors = e;

  out.u.U1 = m * ((zdd_d + sigma1) + e.e_vel(2) * gains.kp_z) +
             gains.kU1 * m * (e.e_vel(2) * gains.kd_z + e.e_pos(2) * gains.kp_z) /
                 (Scalar(2) * gains.kd_z);

  out.u.U2 = Ix *
                 (gains.kd_y * (ydd_d + sigma2) + e.e_vel(1) * gains.kp_y +
                  e.e_rate(0) * gains.kp_phi) /
                 (Lt * gains.kd_phi) -
             Ix * (Dphi / Ix - pdot_d + rr * qr * (Iy - Iz) / Ix) / Lt +
             Ix * gains.kU2 *
                 (e.e_vel(1) * gains.kd_y + e.e_rate(0) * gains.kd_phi +
                  e.e_eta(0) * gains.kp_phi + e.e_pos(1) * gains.kp_y) /
                 (Scalar(2) * Lt * gains.kd_phi);

  out.u.U3 = Iy *
                 (e.e_vel(0) * gains.kp_x + e.e_rate(1) * gains.kp_theta -
                  gains.kd_x * (-xdd_d + sigma3)) /
                 (Lt * gains.kd_theta) +
             Iy * (qdot_d - Dth / Iy + pr * rr * (Ix - Iz) / Iy) / Lt +
             Iy * gains.kU3 *
                 (e.e_vel(0) * gains.kd_x + e.e_rate(1) * gains.kd_theta +
                  e.e_eta(1) * gains.kp_theta + e.e_pos(0) * gains.kp_x) /
                 (Scalar(2) * Lt * gains.kd_theta);

  out.u.U4 = Iz * rdot_d - Dpsi + (Iz * e.e_rate(2) * gains.kp_psi +
                                   Iz * e.e_eta(2) * gains.kU4 * gains.kp_psi / Scalar(2)) /
                                      gains.kd_psi;

  if (out.u.U1 < Scalar(0)) {
    out.u.U1 = Scalar(0);
    out.u1_clamped = true;
  }
  return out;
}

template <class Scalar>
struct SaturatedInput {
  ControlInput<Scalar> u;        // after projection through feasible rotor speeds
  RotorSpeeds<Scalar> rotors;
  bool saturated = false;
};

/// Project a commanded input through the feasible rotor-speed box:
/// inverse mixing, clamp to [0, omega_rotor_max], re-mix.
template <class Scalar>
SaturatedInput<Scalar> project_to_rotor_limits(const RobotParams<Scalar>& params,
                                               const ControlInput<Scalar>& u) {
  const RotorSolution<Scalar> sol = inverse_mixing(params, u);
  SaturatedInput<Scalar> out;
  out.rotors = sol.rotors;
  out.saturated = sol.infeasible || sol.clamped_low || sol.clamped_high;
  out.u = out.saturated ? input_mixing(params, sol.rotors) : u;
  return out;
}

using Gainsd = Gains<double>;
using ErrorStated = ErrorState<double>;
using ControlOutputd = ControlOutput<double>;

}  // namespace hoptraj

#endif  // HOPTRAJ_CONTROLLER_HPP
