#ifndef HOPTRAJ_HOP_CYCLE_HPP
#define HOPTRAJ_HOP_CYCLE_HPP

#include <cmath>
#include <optional>

#include "hoptraj/dynamics.hpp"
#include "hoptraj/rotation.hpp"
#include "hoptraj/types.hpp"

namespace hoptraj {

/// Contact plane n . x = offset with n the inward unit normal (pointing into
/// the free space the robot moves in).
struct Surface {
  enum class Kind { Ground, Wall };
  Kind kind{Kind::Ground};
  Vec3d normal = Vec3d::UnitZ();
  double offset{0};

  static Surface ground(double z0) { return {Kind::Ground, Vec3d::UnitZ(), z0}; }

  static Surface wall(const Vec3d& point, const Vec3d& inward_normal) {
    if (std::abs(inward_normal(2)) > 1e-9)
      throw Error("Surface: wall normal must be horizontal");
    const Vec3d n = inward_normal.normalized();
    return {Kind::Wall, n, n.dot(point)};
  }
};

inline double signed_distance(const Surface& s, const Vec3d& point) {
  return s.normal.dot(point) - s.offset;
}

/// Discrete stance model: energy retention, stance duration, and whether to
/// integrate the gravity moment about the foot during stance.
struct StanceModel {
  double eta_e{0.9};
  double t_s{0.08};
  bool apply_gravity_torque{true};
  double foot_len{0.2};  // foot along -z_B

  void validate() const {
    if (!(eta_e > 0.0 && eta_e <= 1.0)) throw Error("StanceModel: eta_e must be in (0, 1]");
    if (!(t_s >= 0.0)) throw Error("StanceModel: t_s must be >= 0");
    if (!(foot_len > 0.0)) throw Error("StanceModel: foot_len must be > 0");
  }
};

/// Multiplicative touchdown roll/pitch adjustment learned across hops.
struct GammaAdapter {
  double gamma_phi{1.0};
  double gamma_theta{1.0};
  double mu{0.1};
};

enum class HopPhase { Aerial, Stance };

struct PhaseTransition {
  HopPhase phase;  // phase being entered
  double t;
};

inline Vec3d foot_tip(const State12d& state, double foot_len) {
  return state.r_cm - foot_len * euler_to_rotation(state.eta).col(2);
}

inline Vec3d foot_tip_velocity(const State12d& state, double foot_len) {
  const Mat3d R = euler_to_rotation(state.eta);
  return state.v - foot_len * (R * state.omega.cross(Vec3d::UnitZ()));
}

/// Instantaneous contact test: foot tip at or behind the plane and moving
/// inward.
inline bool detect_touchdown(const State12d& state, const Surface& surface,
                             double foot_len) {
  return signed_distance(surface, foot_tip(state, foot_len)) <= 0.0 &&
         surface.normal.dot(foot_tip_velocity(state, foot_len)) < 0.0;
}

struct ContactEvent {
  double t;  // interpolated contact time
};

/// Crossing detector between two integration steps; contact time by linear
/// interpolation of the signed distance (O(dt^2) against the true crossing).
inline std::optional<ContactEvent> detect_touchdown(const State12d& prev, double t_prev,
                                                    const State12d& curr, double t_curr,
                                                    const Surface& surface,
                                                    double foot_len) {
  const double s0 = signed_distance(surface, foot_tip(prev, foot_len));
  const double s1 = signed_distance(surface, foot_tip(curr, foot_len));
  if (s0 <= 0.0) {
    if (surface.normal.dot(foot_tip_velocity(prev, foot_len)) < 0.0)
      return ContactEvent{t_prev};
    return std::nullopt;
  }
  if (s1 > 0.0) return std::nullopt;
  return ContactEvent{t_prev + (t_curr - t_prev) * s0 / (s0 - s1)};
}

/// Discrete stance map x_LO = h(x_TD): position held, velocity reflected
/// along the body z-axis and scaled by sqrt(eta_e) (or set to
/// next_LO_speed), body rates zeroed, roll/pitch perturbed by the gravity
/// moment about the fixed foot when enabled.
inline State12d stance_map(const RobotParamsd& params, const State12d& x_td,
                           const StanceModel& model,
                           std::optional<double> next_LO_speed = std::nullopt) {
  model.validate();
  State12d lo = x_td;

  const Mat3d R = euler_to_rotation(x_td.eta);
  const double speed =
      next_LO_speed ? *next_LO_speed : x_td.v.norm() * std::sqrt(model.eta_e);
  lo.v = speed * R.col(2);
  lo.omega.setZero();

  if (model.apply_gravity_torque && model.t_s > 0.0) {
    // Rigid pivot about the foot tip: inertia by parallel axis on the
    // transverse axes, gravity the only moment.  Integrated from rest.
    const double L = model.foot_len;
    const Vec3d I_p(params.I_r(0) + params.m_r * L * L,
                    params.I_r(1) + params.m_r * L * L, params.I_r(2));
    Vec3d eta = x_td.eta;
    Vec3d w = Vec3d::Zero();
    const int steps = std::max(1, int(std::ceil(model.t_s / 1e-4)));
    const double h = model.t_s / steps;
    for (int i = 0; i < steps; ++i) {
      const double cth = std::cos(eta(1)), sth = std::sin(eta(1));
      const double sphi = std::sin(eta(0));
      const Vec3d tau = params.m_r * params.g * L * Vec3d(cth * sphi, sth, 0.0);
      const Vec3d w_dot = (tau - w.cross(I_p.asDiagonal() * w)).cwiseQuotient(I_p);
      const Vec3d eta_dot = euler_rate_matrix(eta) * w;
      w += h * w_dot;
      eta(0) += h * eta_dot(0);
      eta(1) += h * eta_dot(1);  // yaw held
    }
    lo.eta = Vec3d(eta(0), eta(1), x_td.eta(2));
  }
  return lo;
}

/// gamma_beta <- gamma_beta - mu sign(beta_TD) sign(beta_LO) |beta_TD - beta_LO|
enum class TiltAxis { Roll, Pitch };

inline GammaAdapter update_gamma(const GammaAdapter& adapter, double beta_td,
                                 double beta_lo, TiltAxis axis) {
  GammaAdapter out = adapter;
  const double step =
      adapter.mu * sign0(beta_td) * sign0(beta_lo) * std::abs(beta_td - beta_lo);
  (axis == TiltAxis::Roll ? out.gamma_phi : out.gamma_theta) -= step;
  return out;
}

inline Eigen::Vector2d apply_gamma(const GammaAdapter& adapter,
                                   const Eigen::Vector2d& td_roll_pitch) {
  return {td_roll_pitch(0) * adapter.gamma_phi, td_roll_pitch(1) * adapter.gamma_theta};
}

struct HybridReport {
  double V_td{0};
  double V_lo{0};
  double delta_V{0};  // V_LO - V_TD
  double bound{0};
  bool within_bound{true};
};

/// Stance-phase stability bookkeeping: reports Delta V = V(x_LO) - V(x_TD)
/// against the bound; never halts a simulation.
inline HybridReport hybrid_check(double V_td, double V_lo, double bound = 0.0,
                                 double tol = 1e-6) {
  HybridReport r;
  r.V_td = V_td;
  r.V_lo = V_lo;
  r.delta_V = V_lo - V_td;
  r.bound = bound;
  r.within_bound = r.delta_V <= bound + tol;
  return r;
}

}  // namespace hoptraj

#endif  // HOPTRAJ_HOP_CYCLE_HPP
