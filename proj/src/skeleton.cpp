#include "promptmotion/skeleton.hpp"

#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "promptmotion/errors.hpp"

namespace promptmotion {

void Skeleton::validate() const {
  const auto n = joint_names.size();
  if (n == 0) fail(ErrorCode::SchemaError, "skeleton has no joints");
  if (parents.size() != n || rest_offsets.size() != n) {
    fail(ErrorCode::SchemaError, "skeleton arrays differ in length");
  }
  if (parents[0] != -1) fail(ErrorCode::SchemaError, "joint 0 must be the root");
  for (std::size_t j = 1; j < n; ++j) {
    if (parents[j] < 0 || parents[j] >= static_cast<int>(j)) {
      fail(ErrorCode::SchemaError,
           fmt::format("joint {} ('{}') has parent {}; parents must precede children", j, joint_names[j], parents[j]));
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!rest_offsets[j].allFinite()) fail(ErrorCode::SchemaError, fmt::format("joint {} offset is not finite", j));
  }
}

const Skeleton& default_skeleton() {
  static const Skeleton skeleton = [] {
    Skeleton s;
    s.joint_names = {"pelvis",     "left_hip",       "right_hip",      "spine1",      "left_knee",
                     "right_knee", "spine2",         "left_ankle",     "right_ankle", "spine3",
                     "left_foot",  "right_foot",     "neck",           "left_collar", "right_collar",
                     "head",       "left_shoulder",  "right_shoulder", "left_elbow",  "right_elbow",
                     "left_wrist", "right_wrist"};
    s.parents = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19};
    s.rest_offsets = {
        {0.0, 0.0, 0.0},       // pelvis
        {0.06, 0.0, -0.09},    // left_hip
        {-0.06, 0.0, -0.09},   // right_hip
        {0.0, -0.02, 0.11},    // spine1
        {0.04, 0.0, -0.38},    // left_knee
        {-0.04, 0.0, -0.38},   // right_knee
        {0.0, 0.01, 0.13},     // spine2
        {-0.01, -0.04, -0.40}, // left_ankle
        {0.01, -0.04, -0.40},  // right_ankle
        {0.0, 0.0, 0.05},      // spine3
        {0.02, 0.12, -0.05},   // left_foot
        {-0.02, 0.12, -0.05},  // right_foot
        {0.0, 0.0, 0.21},      // neck
        {0.07, 0.0, 0.11},     // left_collar
        {-0.07, 0.0, 0.11},    // right_collar
        {0.0, 0.05, 0.09},     // head
        {0.12, 0.0, 0.03},     // left_shoulder
        {-0.12, 0.0, 0.03},    // right_shoulder
        {0.26, 0.0, 0.0},      // left_elbow
        {-0.26, 0.0, 0.0},     // right_elbow
        {0.25, 0.0, 0.0},      // left_wrist
        {-0.25, 0.0, 0.0},     // right_wrist
    };
    s.validate();
    return s;
  }();
  return skeleton;
}

nlohmann::json skeleton_to_json(const Skeleton& skeleton) {
  nlohmann::json offsets = nlohmann::json::array();
  for (const auto& o : skeleton.rest_offsets) offsets.push_back({o.x(), o.y(), o.z()});
  return {{"joint_names", skeleton.joint_names}, {"parents", skeleton.parents}, {"rest_offsets", offsets}};
}

Skeleton skeleton_from_json(const nlohmann::json& j) {
  Skeleton s;
  try {
    s.joint_names = j.at("joint_names").get<std::vector<std::string>>();
    s.parents = j.at("parents").get<std::vector<int>>();
    for (const auto& o : j.at("rest_offsets")) {
      const auto v = o.get<std::vector<double>>();
      if (v.size() != 3) fail(ErrorCode::SchemaError, "rest offset must have 3 components");
      s.rest_offsets.emplace_back(v[0], v[1], v[2]);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, fmt::format("skeleton: {}", e.what()));
  }
  s.validate();
  return s;
}

Skeleton load_skeleton(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, fmt::format("cannot open skeleton file {}", path.string()));
  try {
    return skeleton_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::SchemaError, fmt::format("{}: {}", path.string(), e.what()));
  }
}

int joint_index(const Skeleton& skeleton, std::string_view name) {
  for (int j = 0; j < skeleton.joint_count(); ++j) {
    if (skeleton.joint_names[static_cast<std::size_t>(j)] == name) return j;
  }
  fail(ErrorCode::SchemaError, fmt::format("skeleton has no joint '{}'", name));
}

}  // namespace promptmotion
