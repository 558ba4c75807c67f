#include "promptmotion/metrics.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "promptmotion/errors.hpp"

namespace promptmotion {

namespace {

constexpr const char* kApeTitle = "Average Positional Error";
constexpr const char* kAveTitle = "Average Variance Error";

void check_shapes(std::span<const JointPositions> gen, std::span<const JointPositions> gt) {
  if (gen.size() != gt.size()) {
    fail(ErrorCode::ShapeMismatch, fmt::format("{} generated vs {} ground-truth samples", gen.size(), gt.size()));
  }
  if (gen.empty()) fail(ErrorCode::ShapeMismatch, "metrics need at least one sample");
  for (std::size_t s = 0; s < gen.size(); ++s) {
    if (gen[s].frame_count() != gt[s].frame_count() || gen[s].frame_count() < 1) {
      fail(ErrorCode::ShapeMismatch, fmt::format("sample {}: {} vs {} frames", s, gen[s].frame_count(),
                                                 gt[s].frame_count()));
    }
    if (gen[s].joint_count() != gt[s].joint_count()) {
      fail(ErrorCode::ShapeMismatch, fmt::format("sample {}: {} vs {} joints", s, gen[s].joint_count(),
                                                 gt[s].joint_count()));
    }
  }
}

struct Restriction {
  CoordinateFrame frame;
  int first_joint;
  int last_joint;  // exclusive
  int coords;
};

Restriction restriction_for(MetricVariant variant, int joints) {
  switch (variant) {
    case MetricVariant::RootJoint: return {CoordinateFrame::Global, 0, 1, 3};
    case MetricVariant::GlobalTraj: return {CoordinateFrame::Global, 0, 1, 2};
    case MetricVariant::MeanLocal: return {CoordinateFrame::Local, 1, joints, 3};
    case MetricVariant::MeanGlobal: return {CoordinateFrame::Global, 0, joints, 3};
  }
  return {CoordinateFrame::Global, 0, joints, 3};
}

const std::vector<JointPositionFrame>& frames_of(const JointPositions& p, CoordinateFrame frame) {
  return frame == CoordinateFrame::Global ? p.global : p.local;
}

}  // namespace

std::string_view column_name(MetricVariant variant) {
  switch (variant) {
    case MetricVariant::RootJoint: return "root joint";
    case MetricVariant::GlobalTraj: return "global traj";
    case MetricVariant::MeanLocal: return "mean local";
    case MetricVariant::MeanGlobal: return "mean global";
  }
  return "unknown";
}

Eigen::Vector3d joint_variance(const JointPositions& seq, int joint, CoordinateFrame frame) {
  const auto& frames = frames_of(seq, frame);
  const auto n = static_cast<int>(frames.size());
  if (n < 2) {
    spdlog::debug("joint_variance: {} frame(s); variance taken as zero", n);
    return Eigen::Vector3d::Zero();
  }
  // Centred on frame 0 first: a constant joint then yields exactly zero.
  const Eigen::Vector3d origin = frames.front().row(joint).transpose();
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& f : frames) mean += f.row(joint).transpose() - origin;
  mean /= static_cast<double>(n);
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  for (const auto& f : frames) acc += (f.row(joint).transpose() - origin - mean).cwiseAbs2();
  return acc / static_cast<double>(n - 1);
}

double ape(std::span<const JointPositions> generated, std::span<const JointPositions> ground_truth,
           MetricVariant variant) {
  check_shapes(generated, ground_truth);
  const Restriction r = restriction_for(variant, generated.front().joint_count());
  if (r.last_joint <= r.first_joint) return 0.0;

  double joint_sum = 0.0;
  for (int j = r.first_joint; j < r.last_joint; ++j) {
    double sample_sum = 0.0;
    for (std::size_t s = 0; s < generated.size(); ++s) {
      const auto& gen = frames_of(generated[s], r.frame);
      const auto& gt = frames_of(ground_truth[s], r.frame);
      double frame_sum = 0.0;
      for (std::size_t n = 0; n < gen.size(); ++n) {
        frame_sum += (gen[n].row(j).head(r.coords) - gt[n].row(j).head(r.coords)).norm();
      }
      sample_sum += frame_sum / static_cast<double>(gen.size());
    }
    joint_sum += sample_sum / static_cast<double>(generated.size());
  }
  return joint_sum / static_cast<double>(r.last_joint - r.first_joint);
}

double ave(std::span<const JointPositions> generated, std::span<const JointPositions> ground_truth,
           MetricVariant variant) {
  check_shapes(generated, ground_truth);
  const Restriction r = restriction_for(variant, generated.front().joint_count());
  if (r.last_joint <= r.first_joint) return 0.0;

  double joint_sum = 0.0;
  for (int j = r.first_joint; j < r.last_joint; ++j) {
    double sample_sum = 0.0;
    for (std::size_t s = 0; s < generated.size(); ++s) {
      const Eigen::Vector3d gen = joint_variance(generated[s], j, r.frame);
      const Eigen::Vector3d gt = joint_variance(ground_truth[s], j, r.frame);
      sample_sum += (gen.head(r.coords) - gt.head(r.coords)).norm();
    }
    joint_sum += sample_sum / static_cast<double>(generated.size());
  }
  return joint_sum / static_cast<double>(r.last_joint - r.first_joint);
}

MetricReport compute_report(std::span<const JointPositions> generated, std::span<const JointPositions> ground_truth,
                            bool include_root) {
  check_shapes(generated, ground_truth);
  MetricReport report;
  report.sample_count = generated.size();
  for (const auto& g : ground_truth) report.frame_counts.push_back(g.frame_count());
  for (MetricVariant v : kMetricVariants) {
    const bool root_cell = v == MetricVariant::RootJoint || v == MetricVariant::GlobalTraj;
    if (root_cell && !include_root) {
      report.ape[v] = std::nullopt;
      report.ave[v] = std::nullopt;
      continue;
    }
    report.ape[v] = ape(generated, ground_truth, v);
    report.ave[v] = ave(generated, ground_truth, v);
  }
  return report;
}

nlohmann::json report_to_json(const MetricReport& report) {
  nlohmann::json ape_obj = nlohmann::json::object();
  nlohmann::json ave_obj = nlohmann::json::object();
  for (MetricVariant v : kMetricVariants) {
    const std::string name(column_name(v));
    auto cell = [](const std::map<MetricVariant, std::optional<double>>& m, MetricVariant key) -> nlohmann::json {
      auto it = m.find(key);
      if (it == m.end() || !it->second) return nullptr;
      return *it->second;
    };
    ape_obj[name] = cell(report.ape, v);
    ave_obj[name] = cell(report.ave, v);
  }
  return {{"schema_version", kReportSchemaVersion},
          {kApeTitle, ape_obj},
          {kAveTitle, ave_obj},
          {"sample_count", report.sample_count},
          {"frame_counts", report.frame_counts},
          {"joint_averaging", {{"mean local", "joints 1..J-1 (root excluded)"}, {"mean global", "all joints"}}}};
}

MetricReport report_from_json(const nlohmann::json& j) {
  MetricReport report;
  try {
    for (MetricVariant v : kMetricVariants) {
      const std::string name(column_name(v));
      const auto& a = j.at(kApeTitle).at(name);
      const auto& e = j.at(kAveTitle).at(name);
      report.ape[v] = a.is_null() ? std::nullopt : std::optional<double>(a.get<double>());
      report.ave[v] = e.is_null() ? std::nullopt : std::optional<double>(e.get<double>());
    }
    report.sample_count = j.at("sample_count").get<std::size_t>();
    report.frame_counts = j.at("frame_counts").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, fmt::format("metric report: {}", e.what()));
  }
  return report;
}

}  // namespace promptmotion
