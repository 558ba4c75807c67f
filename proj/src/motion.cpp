#include "promptmotion/motion.hpp"

#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "promptmotion/errors.hpp"

namespace promptmotion {

void MotionSequence::validate(std::optional<int> joints) const {
  if (poses.empty()) fail(ErrorCode::ShapeMismatch, "motion sequence has no frames");
  if (!(frame_rate > 0.0)) fail(ErrorCode::ShapeMismatch, "frame rate must be positive");
  const int j0 = joint_count();
  if (joints && *joints != j0) {
    fail(ErrorCode::SkeletonMismatch, fmt::format("motion has {} joints, skeleton has {}", j0, *joints));
  }
  for (std::size_t n = 0; n < poses.size(); ++n) {
    if (poses[n].rotations.rows() != j0) fail(ErrorCode::ShapeMismatch, fmt::format("frame {} joint count differs", n));
    if (!poses[n].rotations.allFinite() || !poses[n].root_translation.allFinite()) {
      fail(ErrorCode::ShapeMismatch, fmt::format("frame {} has non-finite values", n));
    }
  }
}

Pose rest_pose(int joints, const Eigen::Vector3d& root_translation) {
  Pose pose;
  pose.rotations.resize(joints, 6);
  for (int j = 0; j < joints; ++j) pose.rotations.row(j) << 1, 0, 0, 0, 1, 0;
  pose.root_translation = root_translation;
  return pose;
}

JointPositions forward_kinematics(const MotionSequence& seq, const Skeleton& skeleton, RotationMode mode) {
  const int joints = skeleton.joint_count();
  if (seq.joint_count() != joints) {
    fail(ErrorCode::SkeletonMismatch, fmt::format("motion has {} joints, skeleton has {}", seq.joint_count(), joints));
  }
  const int frames = seq.frame_count();
  JointPositions out;
  out.global.reserve(static_cast<std::size_t>(frames));
  out.local.reserve(static_cast<std::size_t>(frames));
  out.trajectory.resize(frames, 2);

  std::vector<Eigen::Matrix3d> world_rotation(static_cast<std::size_t>(joints));
  for (int n = 0; n < frames; ++n) {
    const Pose& pose = seq.poses[static_cast<std::size_t>(n)];
    if (pose.rotations.rows() != joints) fail(ErrorCode::SkeletonMismatch, fmt::format("frame {} is ragged", n));
    JointPositionFrame global(joints, 3);
    for (int j = 0; j < joints; ++j) {
      const Eigen::Matrix3d local_rotation = sixd_to_rotmat(pose.rotations.row(j).transpose(), mode);
      const int parent = skeleton.parents[static_cast<std::size_t>(j)];
      if (parent < 0) {
        world_rotation[static_cast<std::size_t>(j)] = local_rotation;
        global.row(j) = pose.root_translation.transpose();
      } else {
        const Eigen::Matrix3d& parent_rotation = world_rotation[static_cast<std::size_t>(parent)];
        world_rotation[static_cast<std::size_t>(j)] = parent_rotation * local_rotation;
        global.row(j) = global.row(parent) +
                        (parent_rotation * skeleton.rest_offsets[static_cast<std::size_t>(j)]).transpose();
      }
    }
    JointPositionFrame local = global.rowwise() - global.row(0);
    out.trajectory.row(n) = global.row(0).head<2>();
    out.global.push_back(std::move(global));
    out.local.push_back(std::move(local));
  }
  return out;
}

Eigen::MatrixXd motion_to_features(const MotionSequence& seq, bool include_root) {
  const int joints = seq.joint_count();
  const Eigen::Index width = joints * 6 + (include_root ? 3 : 0);
  Eigen::MatrixXd features(seq.frame_count(), width);
  for (int n = 0; n < seq.frame_count(); ++n) {
    const Pose& pose = seq.poses[static_cast<std::size_t>(n)];
    for (int j = 0; j < joints; ++j) features.block(n, j * 6, 1, 6) = pose.rotations.row(j);
    if (include_root) features.block(n, joints * 6, 1, 3) = pose.root_translation.transpose();
  }
  return features;
}

MotionSequence motion_from_features(const Eigen::MatrixXd& features, int joints, bool has_root, double frame_rate) {
  const Eigen::Index expected = joints * 6 + (has_root ? 3 : 0);
  if (features.cols() != expected) {
    fail(ErrorCode::ShapeMismatch, fmt::format("feature width {} != expected {}", features.cols(), expected));
  }
  MotionSequence seq;
  seq.frame_rate = frame_rate;
  seq.poses.resize(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index n = 0; n < features.rows(); ++n) {
    Pose& pose = seq.poses[static_cast<std::size_t>(n)];
    pose.rotations.resize(joints, 6);
    for (int j = 0; j < joints; ++j) pose.rotations.row(j) = features.block(n, j * 6, 1, 6);
    pose.root_translation = has_root ? Eigen::Vector3d(features.block(n, joints * 6, 1, 3).transpose())
                                     : Eigen::Vector3d::Zero();
  }
  return seq;
}

nlohmann::json motion_to_json(const MotionSequence& seq, const Skeleton& skeleton) {
  seq.validate(skeleton.joint_count());
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& pose : seq.poses) {
    nlohmann::json rotations = nlohmann::json::array();
    for (Eigen::Index j = 0; j < pose.rotations.rows(); ++j) {
      rotations.push_back(std::vector<double>(pose.rotations.row(j).data(), pose.rotations.row(j).data() + 6));
    }
    frames.push_back({{"root_translation", {pose.root_translation.x(), pose.root_translation.y(), pose.root_translation.z()}},
                      {"rotations_6d", std::move(rotations)}});
  }
  return {{"schema_version", kMotionSchemaVersion},
          {"frame_rate", seq.frame_rate},
          {"joint_names", skeleton.joint_names},
          {"frames", std::move(frames)}};
}

MotionSequence motion_from_json(const nlohmann::json& j, const Skeleton& skeleton) {
  MotionSequence seq;
  std::vector<std::string> names;
  try {
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kMotionSchemaVersion) {
      fail(ErrorCode::SchemaError, fmt::format("unsupported motion schema_version {}", j.at("schema_version").dump()));
    }
    seq.frame_rate = j.at("frame_rate").get<double>();
    names = j.at("joint_names").get<std::vector<std::string>>();
    const auto& frames = j.at("frames");
    if (!frames.is_array() || frames.empty()) fail(ErrorCode::SchemaError, "motion 'frames' must be a nonempty array");
    for (const auto& frame : frames) {
      Pose pose;
      const auto root = frame.at("root_translation").get<std::vector<double>>();
      if (root.size() != 3) fail(ErrorCode::SchemaError, "root_translation must have 3 components");
      pose.root_translation = Eigen::Vector3d(root[0], root[1], root[2]);
      const auto& rotations = frame.at("rotations_6d");
      pose.rotations.resize(static_cast<Eigen::Index>(rotations.size()), 6);
      for (std::size_t r = 0; r < rotations.size(); ++r) {
        const auto row = rotations[r].get<std::vector<double>>();
        if (row.size() != 6) fail(ErrorCode::SchemaError, "each rotations_6d entry must have 6 components");
        for (int c = 0; c < 6; ++c) pose.rotations(static_cast<Eigen::Index>(r), c) = row[static_cast<std::size_t>(c)];
      }
      seq.poses.push_back(std::move(pose));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, fmt::format("motion: {}", e.what()));
  }
  if (names != skeleton.joint_names) {
    fail(ErrorCode::SkeletonMismatch,
         fmt::format("motion joint names ({} joints) do not match the skeleton ({} joints)", names.size(),
                     skeleton.joint_count()));
  }
  try {
    seq.validate(skeleton.joint_count());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SkeletonMismatch) throw;
    fail(ErrorCode::SchemaError, e.what());
  }
  return seq;
}

void save_motion(const MotionSequence& seq, const Skeleton& skeleton, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
  out << motion_to_json(seq, skeleton).dump(1) << '\n';
  if (!out) fail(ErrorCode::IoError, fmt::format("short write to {}", path.string()));
}

MotionSequence load_motion(const std::filesystem::path& path, const Skeleton& skeleton) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, fmt::format("cannot open {}", path.string()));
  try {
    return motion_from_json(nlohmann::json::parse(in), skeleton);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::SchemaError, fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace promptmotion
