#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "promptmotion/errors.hpp"
#include "promptmotion/harness.hpp"

namespace py = pybind11;
namespace pm = promptmotion;
using nlohmann::json;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

pm::RunConfig config_from(const std::string& config_json, bool offline) {
  pm::RunConfig c = pm::run_config_from_json(config_json.empty() ? json::object() : json::parse(config_json));
  if (offline) c.offline = true;
  return c;
}

// N x (J*6) rotations and N x 3 root translations.
pm::MotionSequence motion_from_arrays(const RowMatrix& rotations, const RowMatrix& root, double frame_rate) {
  if (rotations.cols() % 6 != 0 || root.cols() != 3 || root.rows() != rotations.rows()) {
    pm::fail(pm::ErrorCode::ShapeMismatch, "expected rotations N x (J*6) and root N x 3");
  }
  Eigen::MatrixXd features(rotations.rows(), rotations.cols() + 3);
  features << rotations, root;
  return pm::motion_from_features(features, static_cast<int>(rotations.cols() / 6), true, frame_rate);
}

py::dict motion_to_dict(const pm::MotionSequence& seq) {
  const Eigen::MatrixXd f = pm::motion_to_features(seq, true);
  py::dict d;
  d["rotations"] = RowMatrix(f.leftCols(f.cols() - 3));
  d["root_translation"] = RowMatrix(f.rightCols(3));
  d["frame_rate"] = seq.frame_rate;
  return d;
}

pm::JointPositions positions_from_global(const std::vector<RowMatrix>& frames) {
  pm::JointPositions p;
  p.trajectory.resize(static_cast<Eigen::Index>(frames.size()), 2);
  for (std::size_t n = 0; n < frames.size(); ++n) {
    const RowMatrix& g = frames[n];
    if (g.cols() != 3 || g.rows() < 1) pm::fail(pm::ErrorCode::ShapeMismatch, "each frame must be J x 3");
    p.global.emplace_back(g);
    pm::JointPositionFrame local = g;
    local.rowwise() -= g.row(0);
    p.local.push_back(std::move(local));
    p.trajectory.row(static_cast<Eigen::Index>(n)) = g.row(0).head<2>();
  }
  return p;
}

pm::MetricVariant variant_from(const std::string& name) {
  for (auto v : pm::kMetricVariants) {
    if (pm::column_name(v) == name) return v;
  }
  pm::fail(pm::ErrorCode::InvalidConfig, "unknown metric variant '" + name + "'");
}

std::vector<pm::JointPositions> positions_list(const std::vector<std::vector<RowMatrix>>& samples) {
  std::vector<pm::JointPositions> out;
  for (const auto& s : samples) out.push_back(positions_from_global(s));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "promptmotion core bindings";

  static py::exception<pm::Error> error(m, "PromptMotionError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const pm::Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error)(e.what());
      exc.attr("code") = std::string(pm::to_string(e.code()));
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  m.def("build_prompt", [](const std::string& phrase, const std::string& version) {
    return pm::build_prompt(pm::ActionPhrase::make(phrase), version).text;
  }, py::arg("phrase"), py::arg("prompt_version") = "v1");

  m.def("stub_descriptions", [](const std::string& phrase, int k, std::uint64_t seed, const std::string& version) {
    pm::LlmConfig config;
    config.k = k;
    pm::StubLlmClient client(seed);
    const auto a = pm::ActionPhrase::make(phrase);
    return pm::generate_descriptions(a, pm::build_prompt(a, version), config, client).descriptions;
  }, py::arg("phrase"), py::arg("k") = 4, py::arg("seed") = 0, py::arg("prompt_version") = "v1");

  m.def("embed_texts", [](const std::vector<std::string>& texts, const std::string& kind, int dimension,
                          std::uint64_t seed) {
    pm::EmbedderConfig config;
    config.kind = pm::embedder_kind_from_string(kind);
    config.dimension = dimension;
    config.seed = seed;
    const auto embedder = pm::make_embedder(config);
    const pm::AggregatedEmbedding e = pm::embed_and_aggregate(texts, *embedder);
    return py::make_tuple(RowMatrix(e.values), std::vector<bool>(e.mask));
  }, py::arg("texts"), py::arg("kind") = "token-matrix", py::arg("dimension") = 16, py::arg("seed") = 0);

  m.def("aggregate_vectors", [](const std::vector<Eigen::VectorXd>& vs) {
    return Eigen::VectorXd(pm::aggregate_vectors(vs).vector());
  });
  m.def("aggregate_token_matrices", [](const std::vector<Eigen::MatrixXd>& ms) {
    const pm::AggregatedEmbedding e = pm::aggregate_token_matrices(ms);
    return py::make_tuple(RowMatrix(e.values), e.mask);
  });

  m.def("sixd_to_rotmat", [](const pm::Vector6d& r, bool lenient) {
    return Eigen::Matrix3d(pm::sixd_to_rotmat(r, lenient ? pm::RotationMode::Lenient : pm::RotationMode::Strict));
  }, py::arg("r"), py::arg("lenient") = false);
  m.def("rotmat_to_sixd", [](const Eigen::Matrix3d& r) { return pm::Vector6d(pm::rotmat_to_sixd(r)); });

  m.def("forward_kinematics", [](const RowMatrix& rotations, const RowMatrix& root, const std::string& skeleton_path) {
    const pm::Skeleton skel = skeleton_path.empty() ? pm::default_skeleton() : pm::load_skeleton(skeleton_path);
    const pm::JointPositions p = pm::forward_kinematics(motion_from_arrays(rotations, root, 20.0), skel);
    std::vector<RowMatrix> global(p.global.begin(), p.global.end());
    std::vector<RowMatrix> local(p.local.begin(), p.local.end());
    return py::make_tuple(global, local, RowMatrix(p.trajectory));
  }, py::arg("rotations"), py::arg("root"), py::arg("skeleton_path") = "");

  m.def("ape", [](const std::vector<std::vector<RowMatrix>>& gen, const std::vector<std::vector<RowMatrix>>& gt,
                  const std::string& variant) {
    return pm::ape(positions_list(gen), positions_list(gt), variant_from(variant));
  });
  m.def("ave", [](const std::vector<std::vector<RowMatrix>>& gen, const std::vector<std::vector<RowMatrix>>& gt,
                  const std::string& variant) {
    return pm::ave(positions_list(gen), positions_list(gt), variant_from(variant));
  });

  m.def("default_config", [](const std::string& variant) {
    return pm::run_config_to_json(pm::default_run_config(pm::variant_from_string(variant))).dump();
  }, py::arg("variant") = "vae");

  m.def("make_synthetic_dataset", [](const std::filesystem::path& path, std::uint64_t seed, int count, int pairs) {
    pm::save_dataset(pm::make_synthetic_dataset(seed, count, pm::default_skeleton(), pairs), path);
  }, py::arg("path"), py::arg("seed") = 0, py::arg("count") = 12, py::arg("pairs") = 0);

  m.def("train", [](const std::filesystem::path& dataset, const std::filesystem::path& checkpoint,
                    const std::string& config_json, bool offline) {
    const pm::RunConfig config = config_from(config_json, offline);
    const pm::Dataset data = pm::load_dataset(dataset);
    auto client = pm::make_client(config);
    pm::TrainingResult result;
    {
      py::gil_scoped_release release;
      result = pm::train_model(data, config, *client);
    }
    pm::save_checkpoint(result.checkpoint, checkpoint);
    std::vector<double> rec;
    for (const auto& r : result.history) rec.push_back(r.reconstruction);
    return rec;
  }, py::arg("dataset"), py::arg("checkpoint"), py::arg("config_json") = "", py::arg("offline") = true);

  m.def("generate", [](const std::filesystem::path& checkpoint, const std::vector<std::string>& phrases,
                       const std::vector<int>& frames, std::uint64_t seed, bool offline, const std::string& mode) {
    pm::Checkpoint cp = pm::load_checkpoint(checkpoint);
    if (offline) cp.config.offline = true;
    cp.config.cache_root.clear();
    pm::PhraseSeries series;
    for (const auto& p : phrases) series.phrases.push_back(pm::ActionPhrase::make(p));
    series.durations = frames;
    std::optional<pm::GenerationMode> m;
    if (!mode.empty()) m = pm::generation_mode_from_string(mode);
    auto client = pm::make_client(cp.config);
    return motion_to_dict(pm::generate(cp, series, *client, seed, m));
  }, py::arg("checkpoint"), py::arg("phrases"), py::arg("frames"), py::arg("seed") = 0, py::arg("offline") = true,
     py::arg("mode") = "");

  m.def("evaluate", [](const std::filesystem::path& checkpoint, const std::filesystem::path& dataset,
                       const std::string& split, std::uint64_t seed, bool offline) {
    pm::Checkpoint cp = pm::load_checkpoint(checkpoint);
    if (offline) cp.config.offline = true;
    cp.config.cache_root.clear();
    auto client = pm::make_client(cp.config);
    const pm::Dataset data = pm::load_dataset(dataset);
    return pm::report_to_json(pm::evaluate_testset(cp, data, pm::split_from_string(split), *client, seed)).dump();
  }, py::arg("checkpoint"), py::arg("dataset"), py::arg("split") = "test", py::arg("seed") = 0,
     py::arg("offline") = true);
}
