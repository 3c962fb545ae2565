#pragma once

#include <array>

#include "graspmimic/types.hpp"

namespace graspmimic {

using Rot6d = Eigen::Matrix<double, 6, 1>;

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

namespace detail {
inline void check_rot6d(const Vec3& a1, const Vec3& u) {
  if (!a1.allFinite() || !u.allFinite()) throw NumericalError("non-finite 6D rotation");
  if (a1.norm() <= 1e-9 || u.norm() <= 1e-9) throw NumericalError("degenerate 6D rotation");
}
}  // namespace detail

/// Gram-Schmidt map from two stacked 3-vectors to a rotation matrix whose first two
/// columns span the same oriented plane.
inline Mat3 rot6d_to_matrix(const Rot6d& r6) {
  const Vec3 a1 = r6.head<3>();
  const Vec3 a2 = r6.tail<3>();
  if (!a1.allFinite() || a1.norm() <= 1e-9) throw NumericalError("degenerate 6D rotation");
  const Vec3 b1 = a1.normalized();
  const Vec3 u = a2 - a2.dot(b1) * b1;
  detail::check_rot6d(a1, u);
  const Vec3 b2 = u.normalized();
  Mat3 r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b1.cross(b2);
  return r;
}

inline Rot6d matrix_to_rot6d(const Mat3& r) {
  Rot6d out;
  out << r.col(0), r.col(1);
  return out;
}

/// Partial derivatives dR/dr6[k] of rot6d_to_matrix, k = 0..5.
inline std::array<Mat3, 6> rot6d_jacobian(const Rot6d& r6) {
  const Vec3 a1 = r6.head<3>();
  const Vec3 a2 = r6.tail<3>();
  if (!a1.allFinite() || a1.norm() <= 1e-9) throw NumericalError("degenerate 6D rotation");
  const double n1 = a1.norm();
  const Vec3 b1 = a1 / n1;
  const Vec3 u = a2 - a2.dot(b1) * b1;
  detail::check_rot6d(a1, u);
  const double nu = u.norm();
  const Vec3 b2 = u / nu;

  const Mat3 eye = Mat3::Identity();
  const Mat3 p1 = (eye - b1 * b1.transpose()) / n1;          // d b1 / d a1
  const Mat3 du_db1 = -(a2.dot(b1) * eye + b1 * a2.transpose());
  const Mat3 du_da1 = du_db1 * p1;
  const Mat3 du_da2 = eye - b1 * b1.transpose();
  const Mat3 p2 = (eye - b2 * b2.transpose()) / nu;          // d b2 / d u

  Eigen::Matrix<double, 3, 6> db1 = Eigen::Matrix<double, 3, 6>::Zero();
  Eigen::Matrix<double, 3, 6> db2;
  db1.leftCols<3>() = p1;
  db2.leftCols<3>() = p2 * du_da1;
  db2.rightCols<3>() = p2 * du_da2;
  const Eigen::Matrix<double, 3, 6> db3 = -skew(b2) * db1 + skew(b1) * db2;

  std::array<Mat3, 6> out;
  for (int k = 0; k < 6; ++k) {
    out[k].col(0) = db1.col(k);
    out[k].col(1) = db2.col(k);
    out[k].col(2) = db3.col(k);
  }
  return out;
}

/// Rotation by `angle` radians about the unit `axis`.
inline Mat3 axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

}  // namespace graspmimic
