#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "promptmotion/rotation.hpp"
#include "promptmotion/skeleton.hpp"

namespace promptmotion {

// |J| x 6, one 6D rotation (relative to the parent) per row.
using JointRotations = Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor>;
// |J| x 3 positions, one joint per row.
using JointPositionFrame = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

struct Pose {
  JointRotations rotations;
  Eigen::Vector3d root_translation = Eigen::Vector3d::Zero();

  bool operator==(const Pose& other) const {
    return rotations == other.rotations && root_translation == other.root_translation;
  }
};

struct MotionSequence {
  std::vector<Pose> poses;
  double frame_rate = 20.0;

  int frame_count() const noexcept { return static_cast<int>(poses.size()); }
  int joint_count() const noexcept { return poses.empty() ? 0 : static_cast<int>(poses.front().rotations.rows()); }

  // Throws ShapeMismatch (or SkeletonMismatch when `joints` is given) if the
  // sequence is empty, ragged, non-finite or sized for another skeleton.
  void validate(std::optional<int> joints = std::nullopt) const;

  bool operator==(const MotionSequence&) const = default;
};

// Identity rotations for every joint at the given root translation.
Pose rest_pose(int joints, const Eigen::Vector3d& root_translation = Eigen::Vector3d::Zero());

struct JointPositions {
  std::vector<JointPositionFrame> global;  // N frames of |J| x 3, world frame
  std::vector<JointPositionFrame> local;   // root-relative: global minus root global
  Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> trajectory;  // root X, Y

  int frame_count() const noexcept { return static_cast<int>(global.size()); }
  int joint_count() const noexcept { return global.empty() ? 0 : static_cast<int>(global.front().rows()); }
};

// Global position of j = parent position + parent global rotation * rest offset;
// the root sits at root_translation with its own rotation.
JointPositions forward_kinematics(const MotionSequence& seq, const Skeleton& skeleton,
                                  RotationMode mode = RotationMode::Strict);

// Row n is [rotations_6d (|J|*6, joint-major) | root_translation (3)]; the
// root columns are omitted when include_root is false.
Eigen::MatrixXd motion_to_features(const MotionSequence& seq, bool include_root = true);
MotionSequence motion_from_features(const Eigen::MatrixXd& features, int joints, bool has_root,
                                    double frame_rate);

inline constexpr int kMotionSchemaVersion = 1;

nlohmann::json motion_to_json(const MotionSequence& seq, const Skeleton& skeleton);
// Throws SchemaError; SkeletonMismatch when joint names differ from `skeleton`.
MotionSequence motion_from_json(const nlohmann::json& j, const Skeleton& skeleton);

void save_motion(const MotionSequence& seq, const Skeleton& skeleton, const std::filesystem::path& path);
MotionSequence load_motion(const std::filesystem::path& path, const Skeleton& skeleton);

}  // namespace promptmotion
