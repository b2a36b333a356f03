#pragma once

// Test-only reference implementations, written independently of the library
// code paths they check.

#include <cmath>

#include <Eigen/Core>

namespace oracle {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return Vec3(a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0));
}

/// exp of the cross-product matrix via a truncated power series.
inline Mat3 exp_series(const Vec3& r, int terms = 30) {
  Mat3 k;
  k << 0, -r(2), r(1), r(2), 0, -r(0), -r(1), r(0), 0;
  Mat3 sum = Mat3::Identity();
  Mat3 term = Mat3::Identity();
  for (int n = 1; n < terms; ++n) {
    term = term * k / static_cast<double>(n);
    sum += term;
  }
  return sum;
}

struct Quat {
  double w, x, y, z;
};

inline Quat quat_from_axis_angle(const Vec3& axis_unit, double angle) {
  const double s = std::sin(angle / 2);
  return {std::cos(angle / 2), s * axis_unit(0), s * axis_unit(1), s * axis_unit(2)};
}

inline Quat quat_from_rotvec(const Vec3& r) {
  const double n = std::sqrt(r(0) * r(0) + r(1) * r(1) + r(2) * r(2));
  if (n == 0) return {1, 0, 0, 0};
  return quat_from_axis_angle(r / n, n);
}

inline Mat3 quat_to_matrix(const Quat& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Mat3 m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return m;
}

inline Quat conj(const Quat& q) { return {q.w, -q.x, -q.y, -q.z}; }

inline Quat mul(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

/// Canonical rotation vector of a unit quaternion (w >= 0 hemisphere).
inline Vec3 quat_to_rotvec(Quat q) {
  if (q.w < 0) q = {-q.w, -q.x, -q.y, -q.z};
  const double vn = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  if (vn == 0) return Vec3::Zero();
  const double angle = 2 * std::atan2(vn, q.w);
  return Vec3(q.x, q.y, q.z) * (angle / vn);
}

inline double quat_angle(const Quat& q) {
  const double vn = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  return 2 * std::atan2(vn, std::abs(q.w));
}

}  // namespace oracle
