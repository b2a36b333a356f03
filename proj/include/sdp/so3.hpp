#pragma once

// Rotation group utilities. Rotation vectors are axis-angle coordinates in
// so(3); canonical vectors live in the closed ball of radius pi.

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Core>
#include <Eigen/LU>

#include "sdp/errors.hpp"

namespace sdp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

namespace so3 {

inline constexpr double kPi = std::numbers::pi;

/// Angles below this use Taylor expansions of sin(x)/x and friends.
inline constexpr double kSmallAngle = 1e-8;

/// Tolerance on orthogonality / determinant accepted by log_map.
inline constexpr double kRotationTolerance = 1e-6;

/// Cross-product matrix: hat(r) * v == r.cross(v).
inline Mat3 hat(const Vec3& r) {
  Mat3 m;
  m << 0.0, -r.z(), r.y(),
       r.z(), 0.0, -r.x(),
       -r.y(), r.x(), 0.0;
  return m;
}

inline Vec3 vee(const Mat3& m) {
  return Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)) * 0.5;
}

/// Rodrigues formula.
inline Mat3 exp_map(const Vec3& r) {
  const double theta2 = r.squaredNorm();
  const double theta = std::sqrt(theta2);
  double a;  // sin(theta) / theta
  double b;  // (1 - cos(theta)) / theta^2
  if (theta < kSmallAngle) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    const double half_sin = std::sin(0.5 * theta);
    a = std::sin(theta) / theta;
    b = 2.0 * half_sin * half_sin / theta2;
  }
  const Mat3 k = hat(r);
  return Mat3::Identity() + a * k + b * k * k;
}

/// Max elementwise deviation of R^T R from I and |det R - 1|, whichever is larger.
inline double rotation_defect(const Mat3& rot) {
  const double ortho = (rot.transpose() * rot - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = std::abs(rot.determinant() - 1.0);
  return std::max(ortho, det);
}

inline bool is_rotation(const Mat3& rot, double tol = kRotationTolerance) {
  return rot.allFinite() && rotation_defect(rot) <= tol;
}

/// Rotation angle in [0, pi], computed without acos cancellation near 0 and pi.
inline double rotation_angle(const Mat3& rot) {
  const double s = vee(rot - rot.transpose()).norm();  // 2 sin(theta)
  const double c = rot.trace() - 1.0;                  // 2 cos(theta)
  return std::atan2(s, c);
}

/// Inverse of exp_map onto the canonical ball. Throws DataError when the input
/// is not a rotation within kRotationTolerance.
inline Vec3 log_map(const Mat3& rot) {
  if (!is_rotation(rot)) {
    throw DataError("log_map: matrix is not a rotation (defect " +
                    std::to_string(rot.allFinite() ? rotation_defect(rot) : NAN) + ")");
  }
  const Vec3 w = vee(rot);  // sin(theta) * axis
  const double theta = rotation_angle(rot);
  if (theta < kSmallAngle) {
    return w * (1.0 + theta * theta / 6.0);
  }
  // sin(theta) loses relative precision near pi; recover the axis from the
  // symmetric part instead, using the largest diagonal entry of u u^T.
  if (theta > kPi - 1e-3) {
    const double cos_theta = std::cos(theta);
    const Mat3 sym = 0.5 * (rot + rot.transpose());
    const Mat3 uu = (sym - cos_theta * Mat3::Identity()) / (1.0 - cos_theta);
    Eigen::Index i = 0;
    uu.diagonal().maxCoeff(&i);
    Vec3 axis = uu.col(i) / std::sqrt(std::max(uu(i, i), 0.0));
    axis.normalize();
    if (axis.dot(w) < 0.0) axis = -axis;
    return theta * axis;
  }
  return w * (theta / std::sin(theta));
}

/// Canonical representative of the same rotation, norm <= pi. Vectors already
/// in the ball are returned unchanged.
inline Vec3 wrap_to_ball(const Vec3& r) {
  const double theta = r.norm();
  if (theta <= kPi) return r;
  double phi = std::fmod(theta, 2.0 * kPi);
  if (phi > kPi) phi -= 2.0 * kPi;
  return r * (phi / theta);
}

/// Log-linear interpolation exp(t log R1 + (1 - t) log R0).
inline Mat3 interp_log(const Mat3& r0, const Mat3& r1, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw UsageError("interp_log: t must lie in [0, 1]");
  }
  return exp_map(t * log_map(r1) + (1.0 - t) * log_map(r0));
}

/// Isotropic Gaussian in the tangent space, wrapped to the canonical ball.
template <class Rng>
Vec3 sample_tangent_gaussian(Rng& rng, double sigma) {
  if (!(sigma > 0.0)) throw UsageError("sample_tangent_gaussian: sigma must be > 0");
  std::normal_distribution<double> normal(0.0, sigma);
  Vec3 r;
  r.x() = normal(rng);
  r.y() = normal(rng);
  r.z() = normal(rng);
  return wrap_to_ball(r);
}

/// Angle of Ra^T Rb, in [0, pi].
inline double geodesic_distance(const Mat3& ra, const Mat3& rb) {
  return rotation_angle(ra.transpose() * rb);
}

}  // namespace so3
}  // namespace sdp
