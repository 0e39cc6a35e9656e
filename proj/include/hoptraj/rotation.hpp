#ifndef HOPTRAJ_ROTATION_HPP
#define HOPTRAJ_ROTATION_HPP

#include <cmath>

#include "hoptraj/types.hpp"

namespace hoptraj {

inline constexpr double kPitchSingularityMargin = 1e-6;

template <class Scalar>
void check_pitch(Scalar theta, Scalar t = std::numeric_limits<Scalar>::quiet_NaN()) {
  if (std::abs(theta) >= Scalar(EIGEN_PI) / Scalar(2) - Scalar(kPitchSingularityMargin))
    throw SingularityError("ZYX Euler pitch at singularity (|theta| >= pi/2)", double(t));
}

/// ZYX composition R_BW = Rz(psi) Ry(theta) Rx(phi).
/// Columns are the body axes [x_B, y_B, z_B] expressed in the world frame.
template <class Derived>
Mat3<typename Derived::Scalar> euler_to_rotation(const Eigen::MatrixBase<Derived>& eta) {
  using Scalar = typename Derived::Scalar;
  check_pitch(Scalar(eta(1)));
  const Scalar cphi = std::cos(eta(0)), sphi = std::sin(eta(0));
  const Scalar cth = std::cos(eta(1)), sth = std::sin(eta(1));
  const Scalar cpsi = std::cos(eta(2)), spsi = std::sin(eta(2));
  Mat3<Scalar> R;
  R << cpsi * cth, cpsi * sth * sphi - spsi * cphi, cpsi * sth * cphi + spsi * sphi,
       spsi * cth, spsi * sth * sphi + cpsi * cphi, spsi * sth * cphi - cpsi * sphi,
       -sth,       cth * sphi,                      cth * cphi;
  return R;
}

/// Inverse of euler_to_rotation for |theta| < pi/2.
template <class Derived>
Vec3<typename Derived::Scalar> rotation_to_euler(const Eigen::MatrixBase<Derived>& R) {
  using Scalar = typename Derived::Scalar;
  Vec3<Scalar> eta;
  eta(1) = std::asin(std::clamp(Scalar(-R(2, 0)), Scalar(-1), Scalar(1)));
  check_pitch(eta(1));
  eta(0) = std::atan2(Scalar(R(2, 1)), Scalar(R(2, 2)));
  eta(2) = std::atan2(Scalar(R(1, 0)), Scalar(R(0, 0)));
  return eta;
}

/// Kinematic map from body rates (p, q, r) to ZYX Euler-angle rates.
template <class Derived>
Mat3<typename Derived::Scalar> euler_rate_matrix(const Eigen::MatrixBase<Derived>& eta) {
  using Scalar = typename Derived::Scalar;
  check_pitch(Scalar(eta(1)));
  const Scalar cphi = std::cos(eta(0)), sphi = std::sin(eta(0));
  const Scalar cth = std::cos(eta(1)), tth = std::tan(eta(1));
  Mat3<Scalar> T;
  T << Scalar(1), sphi * tth, cphi * tth,
       Scalar(0), cphi,       -sphi,
       Scalar(0), sphi / cth, cphi / cth;
  return T;
}

template <class Derived>
Mat3<typename Derived::Scalar> skew(const Eigen::MatrixBase<Derived>& w) {
  using Scalar = typename Derived::Scalar;
  Mat3<Scalar> S;
  S << Scalar(0), -w(2), w(1),
       w(2), Scalar(0), -w(0),
       -w(1), w(0), Scalar(0);
  return S;
}

template <class Derived>
Vec3<typename Derived::Scalar> unskew(const Eigen::MatrixBase<Derived>& S) {
  return Vec3<typename Derived::Scalar>(S(2, 1), S(0, 2), S(1, 0));
}

}  // namespace hoptraj

#endif  // HOPTRAJ_ROTATION_HPP
