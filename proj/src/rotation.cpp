#include "promptmotion/rotation.hpp"

#include <Eigen/Geometry>

#include <fmt/format.h>

#include "promptmotion/errors.hpp"

namespace promptmotion {

namespace {

// Index of the basis axis least aligned with v.
int least_aligned_axis(const Eigen::Vector3d& v) {
  int axis = 0;
  v.cwiseAbs().minCoeff(&axis);
  return axis;
}

}  // namespace

Eigen::Matrix3d sixd_to_rotmat(const Vector6d& r, RotationMode mode) {
  Eigen::Vector3d a1 = r.head<3>();
  Eigen::Vector3d a2 = r.tail<3>();
  if (!a1.allFinite() || !a2.allFinite()) fail(ErrorCode::DegenerateInput, "6D input is not finite");

  if (a1.norm() < kDegenerateThreshold) {
    if (mode == RotationMode::Strict) fail(ErrorCode::DegenerateInput, "first 6D column is near zero");
    a1 += kJitter * Eigen::Vector3d::Unit(least_aligned_axis(a2));
  }
  const Eigen::Vector3d b1 = a1.normalized();
  Eigen::Vector3d u2 = a2 - b1.dot(a2) * b1;
  if (u2.norm() < kDegenerateThreshold) {
    if (mode == RotationMode::Strict) {
      fail(ErrorCode::DegenerateInput, "6D columns are near parallel");
    }
    a2 += kJitter * Eigen::Vector3d::Unit(least_aligned_axis(b1));
    u2 = a2 - b1.dot(a2) * b1;
  }
  const Eigen::Vector3d b2 = u2.normalized();

  Eigen::Matrix3d rotation;
  rotation.col(0) = b1;
  rotation.col(1) = b2;
  rotation.col(2) = b1.cross(b2);
  return rotation;
}

Vector6d rotmat_to_sixd(const Eigen::Matrix3d& rotation) {
  const double orth_error = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!rotation.allFinite() || orth_error > 1e-5 || rotation.determinant() < 0.0) {
    fail(ErrorCode::NotARotation, fmt::format("matrix is not a rotation (orthonormality error {:.3g})", orth_error));
  }
  Vector6d r;
  r << rotation.col(0), rotation.col(1);
  return r;
}

}  // namespace promptmotion
