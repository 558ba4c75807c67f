#include "promptmotion/dataset.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "promptmotion/errors.hpp"
#include "promptmotion/random.hpp"

namespace promptmotion {

using nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "unknown";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  fail(ErrorCode::SchemaError, fmt::format("unknown split '{}'", name));
}

std::vector<const DatasetRecord*> Dataset::split(Split which) const {
  std::vector<const DatasetRecord*> out;
  for (const auto& r : records) {
    if (r.split == which) out.push_back(&r);
  }
  return out;
}

json dataset_to_json(const Dataset& dataset) {
  json records = json::array();
  for (const auto& r : dataset.records) {
    json rec = {{"id", r.id}, {"split", to_string(r.split)}};
    if (r.is_pair()) {
      json segments = json::array();
      for (const auto& s : r.segments) {
        segments.push_back({{"phrase", s.phrase.text()}, {"motion", motion_to_json(s.motion, dataset.skeleton)}});
      }
      rec["segments"] = std::move(segments);
    } else {
      rec["phrase"] = r.phrase().text();
      rec["motion"] = motion_to_json(r.motion(), dataset.skeleton);
    }
    records.push_back(std::move(rec));
  }
  return {{"schema_version", kDatasetSchemaVersion},
          {"skeleton", skeleton_to_json(dataset.skeleton)},
          {"records", std::move(records)}};
}

Dataset dataset_from_json(const json& j) {
  Dataset dataset;
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kDatasetSchemaVersion) fail(ErrorCode::SchemaError, fmt::format("unsupported dataset schema_version {}", version));
    dataset.skeleton = j.contains("skeleton") ? skeleton_from_json(j.at("skeleton")) : default_skeleton();
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaError, fmt::format("dataset header: {}", e.what()));
  }

  std::size_t index = 0;
  for (const auto& rec : j.at("records")) {
    std::string id = rec.contains("id") && rec["id"].is_string() ? rec["id"].get<std::string>()
                                                                  : fmt::format("#{}", index);
    std::string field = "id";
    try {
      DatasetRecord record;
      record.id = rec.at("id").get<std::string>();
      field = "split";
      record.split = split_from_string(rec.at("split").get<std::string>());
      auto segment_from = [&](const json& s) {
        field = "phrase";
        ActionPhrase phrase = ActionPhrase::make(s.at("phrase").get<std::string>());
        field = "motion";
        MotionSequence motion = motion_from_json(s.at("motion"), dataset.skeleton);
        return Segment{std::move(phrase), std::move(motion)};
      };
      if (rec.contains("segments")) {
        field = "segments";
        for (const auto& s : rec.at("segments")) record.segments.push_back(segment_from(s));
        if (record.segments.size() != 2) fail(ErrorCode::SchemaError, "pair records need exactly two segments");
      } else {
        record.segments.push_back(segment_from(rec));
      }
      dataset.records.push_back(std::move(record));
    } catch (const std::exception& e) {
      fail(ErrorCode::SchemaError, fmt::format("record '{}', field '{}': {}", id, field, e.what()));
    }
    ++index;
  }
  std::sort(dataset.records.begin(), dataset.records.end(),
            [](const DatasetRecord& a, const DatasetRecord& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < dataset.records.size(); ++i) {
    if (dataset.records[i].id == dataset.records[i - 1].id) {
      fail(ErrorCode::SchemaError, fmt::format("record '{}', field 'id': duplicate id", dataset.records[i].id));
    }
  }
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
  out << dataset_to_json(dataset).dump() << '\n';
  if (!out) fail(ErrorCode::IoError, fmt::format("short write to {}", path.string()));
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, fmt::format("cannot open dataset {}", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::SchemaError, fmt::format("{}: {}", path.string(), e.what()));
  }
  return dataset_from_json(j);
}

namespace {

namespace joint {
constexpr int pelvis = 0, left_hip = 1, right_hip = 2, spine1 = 3, left_knee = 4, right_knee = 5, spine2 = 6,
              left_ankle = 7, right_ankle = 8, neck = 12, left_shoulder = 16, right_shoulder = 17,
              left_elbow = 18, right_elbow = 19;
}

constexpr double kPi = std::numbers::pi;
constexpr double kStandingHeight = 0.92;
constexpr double kArmsDown = 1.2;  // shoulder angle of the relaxed A-pose

// Local joint rotations plus root translation for one frame.
struct FrameState {
  std::vector<Eigen::Matrix3d> rotations;
  Eigen::Vector3d root{0.0, 0.0, kStandingHeight};

  explicit FrameState(int joints) : rotations(static_cast<std::size_t>(joints), Eigen::Matrix3d::Identity()) {
    set(joint::left_shoulder, Eigen::Vector3d::UnitY(), kArmsDown);
    set(joint::right_shoulder, Eigen::Vector3d::UnitY(), -kArmsDown);
  }

  void set(int j, const Eigen::Vector3d& axis, double angle) {
    rotations[static_cast<std::size_t>(j)] = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  }
};

// Smooth 0 -> 1 -> 0 bump over [0, 1].
double bump(double u) { return u <= 0.0 || u >= 1.0 ? 0.0 : std::sin(kPi * u) * std::sin(kPi * u); }
double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

struct Archetype {
  std::string phrase;
  // Fills `state` for time t (seconds) of a clip lasting `duration` seconds.
  std::function<void(FrameState& state, double t, double duration, double amp)> pose;
};

const Eigen::Vector3d kX = Eigen::Vector3d::UnitX();
const Eigen::Vector3d kY = Eigen::Vector3d::UnitY();
const Eigen::Vector3d kZ = Eigen::Vector3d::UnitZ();

void walk_cycle(FrameState& s, double t, double speed, double cadence, double amp) {
  const double phase = 2.0 * kPi * cadence * t;
  const double swing = 0.45 * amp * std::sin(phase);
  s.set(joint::left_hip, kX, swing);
  s.set(joint::right_hip, kX, -swing);
  s.set(joint::left_knee, kX, -0.5 * amp * std::max(0.0, -std::sin(phase)));
  s.set(joint::right_knee, kX, -0.5 * amp * std::max(0.0, std::sin(phase)));
  s.set(joint::left_shoulder, kY, kArmsDown);
  s.set(joint::right_shoulder, kY, -kArmsDown);
  s.root.y() = speed * t;
  s.root.z() = kStandingHeight - 0.02 * amp * std::abs(std::sin(phase));
}

// Index order matters: positions 4 and 10 land in val, 5 and 11 in test.
const std::vector<Archetype>& archetypes() {
  static const std::vector<Archetype> list = {
      {"raise the left arm",
       [](FrameState& s, double t, double T, double amp) {
         s.set(joint::left_shoulder, kY, kArmsDown - 2.2 * amp * smoothstep(2.0 * t / T));
       }},
      {"raise the right arm",
       [](FrameState& s, double t, double T, double amp) {
         s.set(joint::right_shoulder, kY, -kArmsDown + 2.2 * amp * smoothstep(2.0 * t / T));
       }},
      {"walk forward", [](FrameState& s, double t, double, double amp) { walk_cycle(s, t, 0.9 * amp, 1.0, amp); }},
      {"squat down",
       [](FrameState& s, double t, double T, double amp) {
         const double depth = amp * bump(t / T);
         s.set(joint::left_hip, kX, 1.1 * depth);
         s.set(joint::right_hip, kX, 1.1 * depth);
         s.set(joint::left_knee, kX, -2.0 * depth);
         s.set(joint::right_knee, kX, -2.0 * depth);
         s.set(joint::left_ankle, kX, 0.9 * depth);
         s.set(joint::right_ankle, kX, 0.9 * depth);
         s.root.z() = kStandingHeight - 0.35 * depth;
       }},
      {"bend the torso forward",
       [](FrameState& s, double t, double T, double amp) {
         const double bend = amp * bump(t / T);
         s.set(joint::spine1, kX, -0.6 * bend);
         s.set(joint::spine2, kX, -0.3 * bend);
       }},
      {"walk forward quickly",
       [](FrameState& s, double t, double, double amp) { walk_cycle(s, t, 1.5 * amp, 1.6, amp); }},
      {"wave the right hand",
       [](FrameState& s, double t, double T, double amp) {
         const double lift = smoothstep(3.0 * t / T);
         s.set(joint::right_shoulder, kY, -kArmsDown + 1.9 * lift);
         s.set(joint::right_elbow, kY, lift * (0.9 + 0.5 * amp * std::sin(2.0 * kPi * 1.5 * t)));
       }},
      {"turn around",
       [](FrameState& s, double t, double T, double amp) {
         s.set(joint::pelvis, kZ, kPi * amp * smoothstep(t / T));
         const double step = 0.25 * std::sin(2.0 * kPi * 1.2 * t);
         s.set(joint::left_hip, kX, step);
         s.set(joint::right_hip, kX, -step);
       }},
      {"kick with the left leg",
       [](FrameState& s, double t, double T, double amp) {
         const double kick = amp * bump(1.4 * t / T - 0.2);
         s.set(joint::left_hip, kX, 1.3 * kick);
         s.set(joint::left_knee, kX, -0.4 * kick);
         s.set(joint::right_knee, kX, -0.1 * kick);
       }},
      {"nod the head",
       [](FrameState& s, double t, double, double amp) {
         s.set(joint::neck, kX, -0.35 * amp * std::max(0.0, std::sin(2.0 * kPi * 1.0 * t)));
       }},
      {"jump in place",
       [](FrameState& s, double t, double T, double amp) {
         const double u = t / T;
         const double crouch = bump(3.0 * u) + bump(3.0 * u - 2.0);
         const double air = bump(3.0 * u - 1.0);
         s.set(joint::left_hip, kX, 0.6 * crouch);
         s.set(joint::right_hip, kX, 0.6 * crouch);
         s.set(joint::left_knee, kX, -1.1 * crouch);
         s.set(joint::right_knee, kX, -1.1 * crouch);
         s.root.z() = kStandingHeight - 0.15 * crouch + 0.3 * amp * air;
       }},
      {"raise both arms",
       [](FrameState& s, double t, double T, double amp) {
         const double lift = 2.2 * amp * smoothstep(2.0 * t / T);
         s.set(joint::left_shoulder, kY, kArmsDown - lift);
         s.set(joint::right_shoulder, kY, -kArmsDown + lift);
       }},
  };
  return list;
}

Split split_for_index(int i) {
  switch (i % 6) {
    case 4: return Split::Val;
    case 5: return Split::Test;
    default: return Split::Train;
  }
}

MotionSequence script_motion(const Archetype& a, int frames, double frame_rate, double amp, int joints,
                             const Eigen::Vector3d& start_offset) {
  MotionSequence seq;
  seq.frame_rate = frame_rate;
  const double duration = static_cast<double>(frames) / frame_rate;
  for (int n = 0; n < frames; ++n) {
    FrameState state(joints);
    a.pose(state, static_cast<double>(n) / frame_rate, duration, amp);
    Pose pose;
    pose.rotations.resize(joints, 6);
    for (int j = 0; j < joints; ++j) {
      pose.rotations.row(j) = rotmat_to_sixd(state.rotations[static_cast<std::size_t>(j)]).transpose();
    }
    pose.root_translation = state.root + start_offset;
    seq.poses.push_back(std::move(pose));
  }
  return seq;
}

}  // namespace

Dataset make_synthetic_dataset(std::uint64_t seed, int count, const Skeleton& skeleton, int pairs) {
  if (count < 1) fail(ErrorCode::InvalidConfig, "synthetic dataset needs count >= 1");
  if (pairs < 0) fail(ErrorCode::InvalidConfig, "pairs must be >= 0");
  skeleton.validate();
  if (skeleton.joint_count() <= joint::right_elbow) {
    fail(ErrorCode::SkeletonMismatch, "synthetic archetypes need the 22-joint body layout");
  }
  const int joints = skeleton.joint_count();
  constexpr double frame_rate = 20.0;
  const auto& kinds = archetypes();
  Rng rng(seed);

  Dataset dataset;
  dataset.skeleton = skeleton;
  for (int i = 0; i < count; ++i) {
    const Archetype& a = kinds[static_cast<std::size_t>(i) % kinds.size()];
    const int frames = 32 + static_cast<int>(rng.next_u64() % 9);
    // The first pass over the archetypes uses the nominal amplitude so each
    // phrase maps to one motion; later repeats are jittered.
    const double amp = i < static_cast<int>(kinds.size()) ? 1.0 : rng.uniform(0.8, 1.2);
    DatasetRecord record;
    record.id = fmt::format("s{:03d}", i);
    record.split = split_for_index(i);
    record.segments.push_back(
        Segment{ActionPhrase::make(a.phrase), script_motion(a, frames, frame_rate, amp, joints, Eigen::Vector3d::Zero())});
    dataset.records.push_back(std::move(record));
  }
  for (int p = 0; p < pairs; ++p) {
    const Archetype& a = kinds[static_cast<std::size_t>(2 * p) % kinds.size()];
    const Archetype& b = kinds[static_cast<std::size_t>(2 * p + 1) % kinds.size()];
    const int frames_a = 32 + static_cast<int>(rng.next_u64() % 9);
    const int frames_b = 32 + static_cast<int>(rng.next_u64() % 9);
    MotionSequence first = script_motion(a, frames_a, frame_rate, 1.0, joints, Eigen::Vector3d::Zero());
    Eigen::Vector3d carry = first.poses.back().root_translation;
    carry.z() = 0.0;
    MotionSequence second = script_motion(b, frames_b, frame_rate, 1.0, joints, carry);
    DatasetRecord record;
    record.id = fmt::format("p{:03d}", p);
    record.split = split_for_index(p);
    record.segments.push_back(Segment{ActionPhrase::make(a.phrase), std::move(first)});
    record.segments.push_back(Segment{ActionPhrase::make(b.phrase), std::move(second)});
    dataset.records.push_back(std::move(record));
  }
  std::sort(dataset.records.begin(), dataset.records.end(),
            [](const DatasetRecord& x, const DatasetRecord& y) { return x.id < y.id; });
  return dataset;
}

}  // namespace promptmotion
