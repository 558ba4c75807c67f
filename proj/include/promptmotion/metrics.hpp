#pragma once

#include <Eigen/Core>

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "promptmotion/motion.hpp"

namespace promptmotion {

enum class MetricVariant { RootJoint, GlobalTraj, MeanLocal, MeanGlobal };

inline constexpr std::array<MetricVariant, 4> kMetricVariants = {
    MetricVariant::RootJoint, MetricVariant::GlobalTraj, MetricVariant::MeanLocal, MetricVariant::MeanGlobal};

// Table column names: "root joint", "global traj", "mean local", "mean global".
std::string_view column_name(MetricVariant variant);

enum class CoordinateFrame { Global, Local };

// Per-coordinate sample variance (N - 1 denominator) of one joint over time.
// A single frame has zero variance.
Eigen::Vector3d joint_variance(const JointPositions& seq, int joint, CoordinateFrame frame = CoordinateFrame::Global);

// mean over samples of the per-sample temporal mean L2 error. Root variants use
// the root joint (XYZ, or XY for global traj); mean local averages joints
// 1..J-1 in root-relative coordinates; mean global averages all joints.
double ape(std::span<const JointPositions> generated, std::span<const JointPositions> ground_truth,
           MetricVariant variant);

// mean over samples of ||sigma_gen[j] - sigma_gt[j]||, with the same joint and
// coordinate restriction as ape().
double ave(std::span<const JointPositions> generated, std::span<const JointPositions> ground_truth,
           MetricVariant variant);

struct MetricReport {
  std::map<MetricVariant, std::optional<double>> ape;
  std::map<MetricVariant, std::optional<double>> ave;
  std::size_t sample_count = 0;
  std::vector<int> frame_counts;
};

// All eight numbers. With include_root = false the root joint and global traj
// cells are left empty (models that decode no root motion).
MetricReport compute_report(std::span<const JointPositions> generated, std::span<const JointPositions> ground_truth,
                            bool include_root = true);

inline constexpr int kReportSchemaVersion = 1;

nlohmann::json report_to_json(const MetricReport& report);
MetricReport report_from_json(const nlohmann::json& j);

}  // namespace promptmotion
