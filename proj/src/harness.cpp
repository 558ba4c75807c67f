#include "promptmotion/harness.hpp"

#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "promptmotion/errors.hpp"

namespace promptmotion {

using nlohmann::json;

AblationTable ablate_k(const RunConfig& base, const std::vector<int>& k_values, const Dataset& dataset, Split split,
                       const StepCallback& on_step) {
  if (k_values.empty()) fail(ErrorCode::EmptyList, "no k values to ablate");
  AblationTable table;
  for (int k : k_values) {
    RunConfig config = base;
    config.llm.k = k;
    config.validate();
    spdlog::info("ablation run k = {}", k);
    auto client = make_client(config);
    TrainingResult trained = train_model(dataset, config, *client, on_step);
    table.rows.push_back({k, evaluate_testset(trained.checkpoint, dataset, split, *client, config.seed)});
  }
  return table;
}

std::string format_ablation_table(const AblationTable& table) {
  constexpr int label_width = 40;
  constexpr int cell = 12;
  std::string out;
  out += fmt::format("{:<{}}{:<{}}{:<{}}\n", "", label_width, "Average Positional Error", cell * 4,
                     "Average Variance Error", cell * 4);
  out += fmt::format("{:<{}}", "Architectural Component | Details", label_width);
  for (int group = 0; group < 2; ++group) {
    for (auto v : kMetricVariants) out += fmt::format("{:<{}}", column_name(v), cell);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    out += fmt::format("{:<{}}", fmt::format("number of descriptions (K) | k={}", row.k), label_width);
    for (const auto* group : {&row.report.ape, &row.report.ave}) {
      for (auto v : kMetricVariants) {
        const auto it = group->find(v);
        const bool present = it != group->end() && it->second.has_value();
        out += fmt::format("{:<{}}", present ? fmt::format("{:.4f}", *it->second) : std::string("-"), cell);
      }
    }
    out += '\n';
  }
  return out;
}

json ablation_to_json(const AblationTable& table) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    json r = report_to_json(row.report);
    r["k"] = row.k;
    rows.push_back(std::move(r));
  }
  return {{"schema_version", kReportSchemaVersion},
          {"component", "number of generated descriptions (K)"},
          {"rows", std::move(rows)}};
}

namespace {

void refuse_collision(const std::filesystem::path& path, bool force) {
  if (!force && std::filesystem::exists(path)) {
    fail(ErrorCode::IoError, fmt::format("{} exists; pass --force to overwrite", path.string()));
  }
}

}  // namespace

void export_motion(const MotionSequence& seq, const Skeleton& skeleton, const std::filesystem::path& path,
                   const ExportOptions& options) {
  seq.validate(skeleton.joint_count());
  refuse_collision(path, options.force);
  if (options.csv_path) refuse_collision(*options.csv_path, options.force);
  save_motion(seq, skeleton, path);
  if (!options.csv_path) return;

  const JointPositions positions = forward_kinematics(seq, skeleton, RotationMode::Lenient);
  std::ofstream out(*options.csv_path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, fmt::format("cannot write {}", options.csv_path->string()));
  out << "frame,joint,x,y,z\n";
  for (int n = 0; n < positions.frame_count(); ++n) {
    const auto& frame = positions.global[static_cast<std::size_t>(n)];
    for (int j = 0; j < positions.joint_count(); ++j) {
      out << fmt::format("{},{},{:.9f},{:.9f},{:.9f}\n", n, skeleton.joint_names[static_cast<std::size_t>(j)],
                         frame(j, 0), frame(j, 1), frame(j, 2));
    }
  }
  if (!out) fail(ErrorCode::IoError, fmt::format("short write to {}", options.csv_path->string()));
}

}  // namespace promptmotion
