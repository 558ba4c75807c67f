#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace promptmotion {

// Kinematic tree. Joint 0 is the root; every other joint's parent has a lower
// index, which makes a single forward sweep sufficient for FK.
struct Skeleton {
  std::vector<std::string> joint_names;
  std::vector<int> parents;  // -1 for the root
  std::vector<Eigen::Vector3d> rest_offsets;  // meters, in the parent frame

  int joint_count() const noexcept { return static_cast<int>(joint_names.size()); }

  // Throws SchemaError if the tree invariants fail.
  void validate() const;

  bool operator==(const Skeleton&) const = default;
};

// 22-joint body tree with SMPL joint names and parents; Z up, Y forward.
const Skeleton& default_skeleton();

nlohmann::json skeleton_to_json(const Skeleton& skeleton);
Skeleton skeleton_from_json(const nlohmann::json& j);
Skeleton load_skeleton(const std::filesystem::path& path);

int joint_index(const Skeleton& skeleton, std::string_view name);

}  // namespace promptmotion
