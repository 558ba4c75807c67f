#pragma once

#include <Eigen/Core>

namespace promptmotion {

using Vector6d = Eigen::Matrix<double, 6, 1>;

// Degenerate 6D input handling. Strict throws DegenerateInput; Lenient nudges
// the offending column by 1e-6 along a basis vector and orthonormalizes that.
enum class RotationMode { Strict, Lenient };

inline constexpr double kDegenerateThreshold = 1e-8;
inline constexpr double kJitter = 1e-6;

// Gram-Schmidt on the two stacked columns (a1 = r[0:3], a2 = r[3:6]); the third
// column is a1_hat x a2_hat.
Eigen::Matrix3d sixd_to_rotmat(const Vector6d& r, RotationMode mode = RotationMode::Strict);

// First two columns of R, flattened column-major. Throws NotARotation unless R
// is orthonormal with det +1 within 1e-5.
Vector6d rotmat_to_sixd(const Eigen::Matrix3d& rotation);

}  // namespace promptmotion
