#ifndef HOPTRAJ_FLATNESS_HPP
#define HOPTRAJ_FLATNESS_HPP

#include <cmath>
#include <type_traits>

#include "hoptraj/dynamics.hpp"
#include "hoptraj/rotation.hpp"
#include "hoptraj/types.hpp"

namespace hoptraj {

/// Flat outputs (position, yaw) and their derivatives at one time instant.
template <class Scalar>
struct FlatSample {
  Scalar t{0};
  Vec3<Scalar> r = Vec3<Scalar>::Zero();
  Vec3<Scalar> r_dot = Vec3<Scalar>::Zero();
  Vec3<Scalar> r_ddot = Vec3<Scalar>::Zero();
  Vec3<Scalar> r_jerk = Vec3<Scalar>::Zero();
  Vec3<Scalar> r_snap = Vec3<Scalar>::Zero();
  Scalar psi{0}, psi_dot{0}, psi_ddot{0};
};

/// Full desired state recovered from a flat sample, with the feedforward
/// thrust and the attitude actually used in the recovery.
template <class Scalar>
struct FlatState {
  State12<Scalar> x_d;
  Eigen::Vector<Scalar, 6> x_dd = Eigen::Vector<Scalar, 6>::Zero();  // xdd ydd zdd pdot qdot rdot
  Scalar U1_d{0};
  Mat3<Scalar> R_BW = Mat3<Scalar>::Identity();
};

enum class DragJerkMode {
  Full,           // Hadamard drag-derivative terms with a caller-supplied omega estimate
  PreviousOmega,  // same terms, estimate understood to be the previous step's omega
  Symmetric,      // scalar drag coefficient shortcut, rotation dropped
};

inline constexpr double kFreeFallEps = 1e-6;       // minimum ||r'' + g z_W + D_T/m||
inline constexpr double kYawAlignEps = 1e-6;       // minimum ||z_B x x_psi||
inline constexpr double kThrustEpsFactor = 1e-4;   // eps_U = factor * m_r * g

template <class Scalar>
struct ThrustAttitude {
  Scalar U1;
  Mat3<Scalar> R_BW;
};

namespace detail {

// Attitude from the mass-normalized thrust vector and yaw: z_B along a_U1,
// y_B orthogonal to the yaw intermediate axis, x_B completing a right-handed
// frame (det +1).
template <class Scalar>
ThrustAttitude<Scalar> attitude_from_accel(const Vec3<Scalar>& a_U1, Scalar psi, Scalar m_r,
                                           Scalar t) {
  const Scalar na = a_U1.norm();
  if (na <= Scalar(kFreeFallEps))
    throw SingularityError("flatness: free-fall thrust (||a_U1|| ~ 0)", double(t));
  const Vec3<Scalar> z_B = a_U1 / na;
  const Vec3<Scalar> x_psi(std::cos(psi), std::sin(psi), Scalar(0));
  const Vec3<Scalar> c = z_B.cross(x_psi);
  const Scalar nc = c.norm();
  if (nc <= Scalar(kYawAlignEps))
    throw SingularityError("flatness: yaw-alignment singularity (z_B || x_psi)", double(t));
  const Vec3<Scalar> y_B = c / nc;
  const Vec3<Scalar> x_B = y_B.cross(z_B);
  ThrustAttitude<Scalar> out;
  out.U1 = m_r * na;
  out.R_BW.col(0) = x_B;
  out.R_BW.col(1) = y_B;
  out.R_BW.col(2) = z_B;
  return out;
}

}  // namespace detail

/// Feedforward thrust and attitude for a flat sample.  With drag
/// compensation on, D_T depends on the attitude being solved for; the
/// circular dependency is resolved by fixed-point iteration warm-started
/// from R_prev (or the drag-free attitude when absent).
template <class Scalar>
ThrustAttitude<Scalar> thrust_attitude(const RobotParams<Scalar>& params,
                                               const FlatSample<Scalar>& sample,
                                               const std::type_identity_t<Mat3<Scalar>>* R_prev,
                                               bool drag_comp,
                                               int max_iters = 60, Scalar tol = Scalar(1e-12)) {
  const Vec3<Scalar> a0 = sample.r_ddot + params.g * Vec3<Scalar>::UnitZ();
  if (!drag_comp) return detail::attitude_from_accel(a0, sample.psi, params.m_r, sample.t);

  Mat3<Scalar> R = R_prev != nullptr
                       ? *R_prev
                       : detail::attitude_from_accel(a0, sample.psi, params.m_r, sample.t).R_BW;
  for (int it = 0; it < max_iters; ++it) {
    const Vec3<Scalar> a = a0 + translational_drag(params, R, sample.r_dot) / params.m_r;
    const Mat3<Scalar> Rn =
        detail::attitude_from_accel(a, sample.psi, params.m_r, sample.t).R_BW;
    const Scalar delta = (Rn - R).norm();
    R = Rn;
    if (delta < tol) break;
  }
  // Close the loop at the converged attitude so U1 z_B equals
  // m (r'' + g z_W + D_T(R)/m) evaluated at the returned R.
  const Vec3<Scalar> a = a0 + translational_drag(params, R, sample.r_dot) / params.m_r;
  return detail::attitude_from_accel(a, sample.psi, params.m_r, sample.t);
}

/// Jerk corrected for the derivative of the nonlinear drag force.
template <class Scalar>
Vec3<Scalar> drag_adjusted_jerk(const RobotParams<Scalar>& params,
                                const FlatSample<Scalar>& sample,
                                const std::type_identity_t<Mat3<Scalar>>& R_BW,
                                const std::type_identity_t<Vec3<Scalar>>& omega_est,
                                DragJerkMode mode) {
  const Vec3<Scalar>& v = sample.r_dot;
  Vec3<Scalar> term;
  if (mode == DragJerkMode::Symmetric) {
    const Scalar ct = params.C_T.trace() / Scalar(3);
    term = Scalar(2) * ct * v.cwiseProduct(sample.r_ddot);
  } else {
    term = ((R_BW * skew(omega_est)) * params.C_T) * v.cwiseProduct(v) +
           (R_BW * params.C_T) * (Scalar(2) * v.cwiseProduct(sample.r_ddot));
  }
  Vec3<Scalar> adj;
  for (int i = 0; i < 3; ++i) adj(i) = sign0(v(i)) * term(i) / params.m_r;
  return sample.r_jerk + adj;
}

/// Body rates from the drag-adjusted jerk: h_w = m/U1 (j* - (z_B . j*) z_B),
/// p = -h_w . y_B, q = h_w . x_B, r = psi_dot z_W . z_B.
template <class Scalar>
Vec3<Scalar> angular_velocity(const RobotParams<Scalar>& params,
                              const FlatSample<Scalar>& sample, std::type_identity_t<Scalar> U1,
                              const std::type_identity_t<Mat3<Scalar>>& R_BW,
                              const std::type_identity_t<Vec3<Scalar>>& r_jerk_star) {
  const Scalar eps_U = Scalar(kThrustEpsFactor) * params.m_r * params.g;
  if (U1 <= eps_U)
    throw SingularityError("flatness: near-zero thrust in angular velocity", double(sample.t));
  const Vec3<Scalar> z_B = R_BW.col(2);
  const Vec3<Scalar> h_w = params.m_r / U1 * (r_jerk_star - z_B.dot(r_jerk_star) * z_B);
  return Vec3<Scalar>(-h_w.dot(R_BW.col(1)), h_w.dot(R_BW.col(0)),
                      sample.psi_dot * z_B(2));
}

/// Flat sample advanced by dt via Taylor expansion of the stored derivatives
/// (snap and psi_ddot held constant).
template <class Scalar>
FlatSample<Scalar> taylor_shift(const FlatSample<Scalar>& s, Scalar dt) {
  FlatSample<Scalar> o;
  o.t = s.t + dt;
  const Scalar d2 = dt * dt / Scalar(2), d3 = dt * dt * dt / Scalar(6),
               d4 = dt * dt * dt * dt / Scalar(24);
  o.r = s.r + dt * s.r_dot + d2 * s.r_ddot + d3 * s.r_jerk + d4 * s.r_snap;
  o.r_dot = s.r_dot + dt * s.r_ddot + d2 * s.r_jerk + d3 * s.r_snap;
  o.r_ddot = s.r_ddot + dt * s.r_jerk + d2 * s.r_snap;
  o.r_jerk = s.r_jerk + dt * s.r_snap;
  o.r_snap = s.r_snap;
  o.psi = s.psi + dt * s.psi_dot + d2 * s.psi_ddot;
  o.psi_dot = s.psi_dot + dt * s.psi_ddot;
  o.psi_ddot = s.psi_ddot;
  return o;
}

/// Body rates for a sample, composing thrust_attitude and the jerk
/// correction.  omega_est feeds the Full/PreviousOmega drag term.
template <class Scalar>
Vec3<Scalar> flat_angular_velocity(const RobotParams<Scalar>& params,
                                   const FlatSample<Scalar>& sample, bool drag_comp,
                                   DragJerkMode mode,
                                   const std::type_identity_t<Vec3<Scalar>>& omega_est,
                                   const std::type_identity_t<Mat3<Scalar>>* R_warm = nullptr) {
  const auto ta = thrust_attitude(params, sample, R_warm, drag_comp);
  const Vec3<Scalar> j = drag_comp
                             ? drag_adjusted_jerk(params, sample, ta.R_BW, omega_est, mode)
                             : sample.r_jerk;
  return angular_velocity(params, sample, ta.U1, ta.R_BW, j);
}

/// Body angular acceleration by central finite differences of the
/// angular-velocity map over trajectory samples at t -h and t +h.
template <class Scalar, class Sampler>
Vec3<Scalar> angular_acceleration(const RobotParams<Scalar>& params, Sampler&& eval, Scalar t,
                                  Scalar h, bool drag_comp = true,
                                  DragJerkMode mode = DragJerkMode::PreviousOmega,
                                  const std::type_identity_t<Vec3<Scalar>>& omega_est = Vec3<Scalar>::Zero(),
                                  const std::type_identity_t<Mat3<Scalar>>* R_warm = nullptr) {
  const FlatSample<Scalar> sm = eval(t - h);
  const FlatSample<Scalar> sp = eval(t + h);
  const Vec3<Scalar> wm = flat_angular_velocity(params, sm, drag_comp, mode, omega_est, R_warm);
  const Vec3<Scalar> wp = flat_angular_velocity(params, sp, drag_comp, mode, omega_est, R_warm);
  return (wp - wm) / (Scalar(2) * h);
}

/// Full desired state from one flat sample.  prev supplies the attitude
/// warm start and the previous-step omega estimate; pass nullptr at the
/// start of a trajectory.
template <class Scalar>
FlatState<Scalar> flat_to_state(const RobotParams<Scalar>& params,
                                const FlatSample<Scalar>& sample,
                                const std::type_identity_t<FlatState<Scalar>>* prev,
                                bool drag_comp,
                                DragJerkMode mode = DragJerkMode::PreviousOmega,
                                Scalar fd_step = Scalar(1e-4)) {
  try {
    const Mat3<Scalar>* R_prev = prev != nullptr ? &prev->R_BW : nullptr;
    const Vec3<Scalar> omega_est =
        prev != nullptr ? prev->x_d.omega : Vec3<Scalar>::Zero();

    const auto ta = thrust_attitude(params, sample, R_prev, drag_comp);
    const Vec3<Scalar> jerk_star =
        drag_comp ? drag_adjusted_jerk(params, sample, ta.R_BW, omega_est, mode)
                  : sample.r_jerk;
    const Vec3<Scalar> omega = angular_velocity(params, sample, ta.U1, ta.R_BW, jerk_star);

    const auto shifted = [&](Scalar tq) { return taylor_shift(sample, tq - sample.t); };
    const Vec3<Scalar> omega_dot = angular_acceleration(
        params, shifted, sample.t, fd_step, drag_comp, mode, omega_est, &ta.R_BW);

    FlatState<Scalar> out;
    out.x_d.r_cm = sample.r;
    out.x_d.v = sample.r_dot;
    out.x_d.eta = rotation_to_euler(ta.R_BW);
    out.x_d.omega = omega;
    out.x_dd << sample.r_ddot, omega_dot;
    out.U1_d = ta.U1;
    out.R_BW = ta.R_BW;
    return out;
  } catch (SingularityError& e) {
    if (std::isnan(e.time)) throw SingularityError(e.what(), double(sample.t));
    throw;
  }
}

using FlatSampled = FlatSample<double>;
using FlatStated = FlatState<double>;

}  // namespace hoptraj

#endif  // HOPTRAJ_FLATNESS_HPP
