#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "promptmotion/motion.hpp"
#include "promptmotion/prompting.hpp"
#include "promptmotion/skeleton.hpp"

namespace promptmotion {

enum class Split { Train, Val, Test };

std::string_view to_string(Split split);
Split split_from_string(std::string_view name);

struct Segment {
  ActionPhrase phrase;
  MotionSequence motion;

  bool operator==(const Segment&) const = default;
};

// A labelled motion. Single-action records hold one segment; pair records
// (two consecutive actions) hold exactly two.
struct DatasetRecord {
  std::string id;
  Split split = Split::Train;
  std::vector<Segment> segments;

  bool is_pair() const noexcept { return segments.size() == 2; }
  const ActionPhrase& phrase() const { return segments.front().phrase; }
  const MotionSequence& motion() const { return segments.front().motion; }

  bool operator==(const DatasetRecord&) const = default;
};

struct Dataset {
  Skeleton skeleton;
  std::vector<DatasetRecord> records;  // sorted by id

  std::vector<const DatasetRecord*> split(Split which) const;
};

inline constexpr int kDatasetSchemaVersion = 1;

nlohmann::json dataset_to_json(const Dataset& dataset);
// Validates every record against the embedded skeleton; throws SchemaError
// naming the offending record and field.
Dataset dataset_from_json(const nlohmann::json& j);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

// Procedural stand-in for a mocap corpus: scripted rotation curves for arm
// raises, waves, squats, kicks, nods, torso bends, jumps, turns and forward
// walking (the locomotion archetype). Splits follow a fixed 4:1:1 pattern,
// so 12 records give 8 train / 2 val / 2 test. `pairs` extra records chain two
// actions for past-conditioned training. Assumes the default skeleton layout.
Dataset make_synthetic_dataset(std::uint64_t seed, int count, const Skeleton& skeleton = default_skeleton(),
                               int pairs = 0);

}  // namespace promptmotion
