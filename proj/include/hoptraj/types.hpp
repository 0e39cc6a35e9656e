#ifndef HOPTRAJ_TYPES_HPP
#define HOPTRAJ_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hoptraj {

template <class Scalar> using Vec3 = Eigen::Vector3<Scalar>;
template <class Scalar> using Vec4 = Eigen::Vector4<Scalar>;
template <class Scalar> using Mat3 = Eigen::Matrix3<Scalar>;
template <class Scalar> using Mat4 = Eigen::Matrix4<Scalar>;
template <class Scalar> using Vec12 = Eigen::Vector<Scalar, 12>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Euler-angle pitch near +-pi/2, free-fall thrust, or yaw-alignment
/// degeneracy. `time` is the trajectory time stamp when known.
struct SingularityError : Error {
  explicit SingularityError(const std::string& what,
                            double t = std::numeric_limits<double>::quiet_NaN())
      : Error(what), time(t) {}
  double time;
};

struct DomainError : Error {
  using Error::Error;
};

/// Linear-system failure; carries the condition estimate when available.
struct SolveError : Error {
  explicit SolveError(const std::string& what, double cond = 0.0)
      : Error(what), condition(cond) {}
  double condition;
};

struct GenerationError : Error {
  explicit GenerationError(const std::string& what,
                           double t = std::numeric_limits<double>::quiet_NaN())
      : Error(what), time(t) {}
  double time;
};

/// Mass, inertia, rotor geometry/factors and body-frame drag coefficient
/// matrices. C_T and C_R already fold in air density and effective area.
template <class Scalar>
struct RobotParams {
  Scalar m_r{Scalar(1)};
  Vec3<Scalar> I_r{Scalar(0.01), Scalar(0.01), Scalar(0.02)};
  Scalar g{Scalar(9.81)};
  Scalar zeta_t{Scalar(1e-5)};
  Scalar zeta_d{Scalar(1.6e-7)};
  Scalar L_m{Scalar(0.12)};
  Scalar L_t{Scalar(0.12)};
  Mat3<Scalar> C_T = Mat3<Scalar>::Zero();
  Mat3<Scalar> C_R = Mat3<Scalar>::Zero();
  Scalar omega_rotor_max{Scalar(700)};

  void validate() const {
    if (!(m_r > Scalar(0))) throw Error("RobotParams: m_r must be > 0");
    if (!(I_r.minCoeff() > Scalar(0))) throw Error("RobotParams: inertia entries must be > 0");
    if (!(g > Scalar(0))) throw Error("RobotParams: g must be > 0");
    if (!(zeta_t > Scalar(0))) throw Error("RobotParams: zeta_t must be > 0");
    if (!(L_m > Scalar(0))) throw Error("RobotParams: L_m must be > 0");
    if (!(C_T.minCoeff() >= Scalar(0)) || !(C_R.minCoeff() >= Scalar(0)))
      throw Error("RobotParams: drag coefficient matrices must be entrywise >= 0");
  }
};

/// 12-state x = [position, velocity, ZYX Euler angles, body rates].
template <class Scalar>
struct State12 {
  Vec3<Scalar> r_cm = Vec3<Scalar>::Zero();
  Vec3<Scalar> v = Vec3<Scalar>::Zero();
  Vec3<Scalar> eta = Vec3<Scalar>::Zero();    // (phi, theta, psi)
  Vec3<Scalar> omega = Vec3<Scalar>::Zero();  // (p, q, r)

  Vec12<Scalar> to_vector() const {
    Vec12<Scalar> x;
    x << r_cm, v, eta, omega;
    return x;
  }
  static State12 from_vector(const Vec12<Scalar>& x) {
    State12 s;
    s.r_cm = x.template segment<3>(0);
    s.v = x.template segment<3>(3);
    s.eta = x.template segment<3>(6);
    s.omega = x.template segment<3>(9);
    return s;
  }
};

/// Collective thrust U1 (N) and body torques U2..U4 (N m).
template <class Scalar>
struct ControlInput {
  Scalar U1{0}, U2{0}, U3{0}, U4{0};

  Vec4<Scalar> to_vector() const { return Vec4<Scalar>(U1, U2, U3, U4); }
  static ControlInput from_vector(const Vec4<Scalar>& u) {
    return ControlInput{u(0), u(1), u(2), u(3)};
  }
};

template <class Scalar>
struct RotorSpeeds {
  Vec4<Scalar> omega = Vec4<Scalar>::Zero();  // Omega_m1..Omega_m4, rad/s
};

// sign with sign(0) = 0; keeps the Hadamard drag terms continuous at rest.
template <class Scalar>
Scalar sign0(Scalar x) {
  return x > Scalar(0) ? Scalar(1) : (x < Scalar(0) ? Scalar(-1) : Scalar(0));
}

template <class Scalar>
Scalar wrap_angle(Scalar a) {
  const Scalar pi = Scalar(EIGEN_PI);
  a = std::fmod(a + pi, Scalar(2) * pi);
  if (a <= Scalar(0)) a += Scalar(2) * pi;
  return a - pi;  // (-pi, pi]
}

using RobotParamsd = RobotParams<double>;
using State12d = State12<double>;
using ControlInputd = ControlInput<double>;
using RotorSpeedsd = RotorSpeeds<double>;
using Vec3d = Vec3<double>;
using Vec4d = Vec4<double>;
using Mat3d = Mat3<double>;
using Mat4d = Mat4<double>;

}  // namespace hoptraj

#endif  // HOPTRAJ_TYPES_HPP
