#ifndef HOPTRAJ_DYNAMICS_HPP
#define HOPTRAJ_DYNAMICS_HPP

#include <cmath>

#include "hoptraj/rotation.hpp"
#include "hoptraj/types.hpp"

namespace hoptraj {

// Sign convention: the Newton-Euler equations subtract the drag vectors
// (m r''  = -m g z_W + U1 z_B - D_T,  I w' = -w x I w + U - D_R), while the
// expanded per-axis accelerations add drag components D_x..D_psi.  The two
// agree with D_x..D_psi defined as the negated components of D_T and D_R;
// translational_drag / rotational_drag return the un-negated vectors of the
// Newton-Euler form.

/// D_T = sign(v) o (R_BW C_T) (v o v), world-frame, N.
template <class Scalar, class DerivedR, class DerivedV>
Vec3<Scalar> translational_drag(const RobotParams<Scalar>& params,
                                const Eigen::MatrixBase<DerivedR>& R_BW,
                                const Eigen::MatrixBase<DerivedV>& v_world) {
  const Vec3<Scalar> v = v_world;
  const Vec3<Scalar> mag = (R_BW * params.C_T) * v.cwiseProduct(v);
  return Vec3<Scalar>(sign0(v(0)) * mag(0), sign0(v(1)) * mag(1), sign0(v(2)) * mag(2));
}

/// D_R = sign(w) o C_R (w o w), body-frame, N m.
template <class Scalar, class DerivedW>
Vec3<Scalar> rotational_drag(const RobotParams<Scalar>& params,
                             const Eigen::MatrixBase<DerivedW>& omega) {
  const Vec3<Scalar> w = omega;
  const Vec3<Scalar> mag = params.C_R * w.cwiseProduct(w);
  return Vec3<Scalar>(sign0(w(0)) * mag(0), sign0(w(1)) * mag(1), sign0(w(2)) * mag(2));
}

/// Continuous-time derivative of the 12-state under thrust/torque input.
template <class Scalar>
State12<Scalar> state_derivative(const RobotParams<Scalar>& params,
                                 const State12<Scalar>& state,
                                 const ControlInput<Scalar>& u) {
  const Mat3<Scalar> R = euler_to_rotation(state.eta);
  const Vec3<Scalar> D_T = translational_drag(params, R, state.v);
  const Vec3<Scalar> D_R = rotational_drag(params, state.omega);

  State12<Scalar> d;
  d.r_cm = state.v;
  d.v = (-params.m_r * params.g * Vec3<Scalar>::UnitZ() + u.U1 * R.col(2) - D_T) / params.m_r;

  d.eta = euler_rate_matrix(state.eta) * state.omega;

  const Vec3<Scalar>& w = state.omega;
  const Vec3<Scalar>& I = params.I_r;
  d.omega(0) = (w(1) * w(2) * (I(1) - I(2)) + u.U2 - D_R(0)) / I(0);
  d.omega(1) = (w(0) * w(2) * (I(2) - I(0)) + u.U3 - D_R(1)) / I(1);
  d.omega(2) = (w(0) * w(1) * (I(0) - I(1)) + u.U4 - D_R(2)) / I(2);
  return d;
}

/// Map from squared rotor speeds to [U1, U2, U3, U4].
template <class Scalar>
Mat4<Scalar> mixing_matrix(const RobotParams<Scalar>& params) {
  const Scalar zt = params.zeta_t, zd = params.zeta_d, L = params.L_m;
  Mat4<Scalar> M;
  M << zt, zt, zt, zt,
       -zt * L, -zt * L, zt * L, zt * L,
       -zt * L, zt * L, zt * L, -zt * L,
       zd, -zd, zd, -zd;
  return M;
}

template <class Scalar>
ControlInput<Scalar> input_mixing(const RobotParams<Scalar>& params,
                                  const RotorSpeeds<Scalar>& rotors) {
  const Vec4<Scalar> u = mixing_matrix(params) * rotors.omega.cwiseProduct(rotors.omega);
  return ControlInput<Scalar>::from_vector(u);
}

template <class Scalar>
struct RotorSolution {
  RotorSpeeds<Scalar> rotors;
  bool infeasible = false;    // some (M^-1 U)_i < -1e-9
  bool clamped_low = false;   // negative squared speed clamped to 0
  bool clamped_high = false;  // speed clamped to omega_rotor_max
};

template <class Scalar>
RotorSolution<Scalar> inverse_mixing(const RobotParams<Scalar>& params,
                                     const ControlInput<Scalar>& u) {
  const Vec4<Scalar> w2 = mixing_matrix(params).inverse() * u.to_vector();
  RotorSolution<Scalar> sol;
  for (int i = 0; i < 4; ++i) {
    if (w2(i) < Scalar(-1e-9)) sol.infeasible = true;
    Scalar s = w2(i);
    if (s < Scalar(0)) {
      s = Scalar(0);
      sol.clamped_low = true;
    }
    Scalar w = std::sqrt(s);
    if (w > params.omega_rotor_max) {
      w = params.omega_rotor_max;
      sol.clamped_high = true;
    }
    sol.rotors.omega(i) = w;
  }
  return sol;
}

/// One classical 4th-order explicit step; deterministic, fixed dt.
template <class Scalar>
State12<Scalar> integrate_step(const RobotParams<Scalar>& params,
                               const State12<Scalar>& state,
                               const ControlInput<Scalar>& u, Scalar dt) {
  if (!(dt > Scalar(0))) throw DomainError("integrate_step: dt must be > 0");
  using V = Vec12<Scalar>;
  const auto f = [&](const V& x) {
    return state_derivative(params, State12<Scalar>::from_vector(x), u).to_vector();
  };
  const V x0 = state.to_vector();
  const V k1 = f(x0);
  const V k2 = f(x0 + Scalar(0.5) * dt * k1);
  const V k3 = f(x0 + Scalar(0.5) * dt * k2);
  const V k4 = f(x0 + dt * k3);
  return State12<Scalar>::from_vector(x0 + dt / Scalar(6) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4));
}

}  // namespace hoptraj

#endif  // HOPTRAJ_DYNAMICS_HPP
