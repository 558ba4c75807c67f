#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "promptmotion/pipeline.hpp"

namespace promptmotion {

struct AblationRow {
  int k = 0;
  MetricReport report;
};

struct AblationTable {
  std::vector<AblationRow> rows;  // in the order of the requested k values
};

// One train + evaluate run per k with the base config's seed; only llm.k
// changes between runs, and each k has its own cache key.
AblationTable ablate_k(const RunConfig& base, const std::vector<int>& k_values, const Dataset& dataset,
                       Split split = Split::Test, const StepCallback& on_step = {});

// Two header rows (metric group, column names) then one row per k; absent
// cells print as "-".
std::string format_ablation_table(const AblationTable& table);
nlohmann::json ablation_to_json(const AblationTable& table);

struct ExportOptions {
  // Flattened global joint positions: header "frame,joint,x,y,z", then N * |J| rows.
  std::optional<std::filesystem::path> csv_path;
  bool force = false;  // overwrite existing files
};

// Writes motion JSON (and optionally CSV). Refuses to overwrite unless forced;
// throws IoError.
void export_motion(const MotionSequence& seq, const Skeleton& skeleton, const std::filesystem::path& path,
                   const ExportOptions& options = {});

}  // namespace promptmotion
