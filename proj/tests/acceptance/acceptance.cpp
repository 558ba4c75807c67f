// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <Eigen/Geometry>
#include <Eigen/LU>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <unistd.h>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "promptmotion/errors.hpp"
#include "promptmotion/harness.hpp"
#include "promptmotion/random.hpp"

namespace pm = promptmotion;
namespace ad = promptmotion::ad;
namespace fs = std::filesystem;

namespace {

// Collects failed checks; a criterion passes when none were recorded.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
    ++total_;
  }
  void note(std::string text) { notes_.push_back(std::move(text)); }
  bool passed() const { return failed_ == 0; }
  std::string summary() const {
    std::string s = fmt::format("{}/{} checks", total_ - failed_, total_);
    for (const auto& n : notes_) s += "; " + n;
    for (const auto& f : failures_) s += "; FAILED: " + f;
    return s;
  }

 private:
  int total_ = 0;
  int failed_ = 0;
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

template <typename F>
std::optional<pm::ErrorCode> error_code(F&& f) {
  try {
    f();
  } catch (const pm::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Eigen::MatrixXd random_matrix(pm::Rng& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-2.0, 2.0);
  return m;
}

Eigen::Matrix3d random_rotation(pm::Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return q.toRotationMatrix();
}

pm::MotionSequence random_motion(pm::Rng& rng, int frames, int joints, bool valid_rotations = true) {
  pm::MotionSequence seq;
  for (int n = 0; n < frames; ++n) {
    pm::Pose p;
    p.rotations.resize(joints, 6);
    for (int j = 0; j < joints; ++j) {
      if (valid_rotations) {
        p.rotations.row(j) = pm::rotmat_to_sixd(random_rotation(rng)).transpose();
      } else {
        for (int c = 0; c < 6; ++c) p.rotations(j, c) = rng.uniform(-1, 1);
      }
    }
    p.root_translation = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0, 1));
    seq.poses.push_back(p);
  }
  return seq;
}

fs::path scratch_dir() {
  const fs::path p = fs::temp_directory_path() / fmt::format("promptmotion-acceptance-{}", ::getpid());
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------

void prompt_fidelity(Checks& c) {
  const auto prompt = pm::build_prompt(pm::ActionPhrase::make("act like a dog"), "v1");
  c.expect(prompt.text == "Describe a person's body movements who is performing the action act like a dog in detail",
           "v1 template text: " + prompt.text);
}

void aggregator_algebra(Checks& c) {
  Eigen::MatrixXd a(2, 2), b(3, 2), expected(3, 2);
  a << 1, 1, 1, 1;
  b << 3, 3, 3, 3, 4, 4;
  expected << 2, 2, 2, 2, 2, 2;
  c.expect(pm::aggregate_token_matrices(std::vector<Eigen::MatrixXd>{a, b}).values == expected, "zero-pad hand case");

  pm::Rng rng(2024);
  constexpr double tol = 1e-12;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + static_cast<int>(rng.next_u64() % 8);
    const int e = 1 + static_cast<int>(rng.next_u64() % 16);
    const double alpha = rng.uniform(-3, 3), beta = rng.uniform(-3, 3);

    std::vector<Eigen::VectorXd> vs, ws, combo;
    for (int i = 0; i < k; ++i) {
      vs.push_back(random_matrix(rng, e, 1));
      ws.push_back(random_matrix(rng, e, 1));
      combo.push_back(alpha * vs.back() + beta * ws.back());
    }
    const Eigen::VectorXd v = pm::aggregate_vectors(vs).vector();
    auto vs_perm = vs;
    std::reverse(vs_perm.begin(), vs_perm.end());
    if (k > 2) std::swap(vs_perm[0], vs_perm[1]);
    c.expect(max_abs(pm::aggregate_vectors(vs_perm).vector() - v) < tol, "vector permutation");
    c.expect(max_abs(pm::aggregate_vectors(std::vector<Eigen::VectorXd>(static_cast<std::size_t>(k), vs[0])).vector() -
                     vs[0]) < tol,
             "vector duplicates");
    c.expect(max_abs(pm::aggregate_vectors(combo).vector() -
                     (alpha * v + beta * pm::aggregate_vectors(ws).vector())) < tol,
             "vector linearity");

    std::vector<Eigen::MatrixXd> ms, ns, mcombo;
    for (int i = 0; i < k; ++i) {
      const int rows = 1 + static_cast<int>(rng.next_u64() % 12);
      ms.push_back(random_matrix(rng, rows, e));
      ns.push_back(random_matrix(rng, rows, e));
      mcombo.push_back(alpha * ms.back() + beta * ns.back());
    }
    const auto m = pm::aggregate_token_matrices(ms);
    auto ms_perm = ms;
    std::reverse(ms_perm.begin(), ms_perm.end());
    if (k > 2) std::swap(ms_perm[0], ms_perm[1]);
    c.expect(max_abs(pm::aggregate_token_matrices(ms_perm).values - m.values) < tol, "token permutation");
    c.expect(max_abs(pm::aggregate_token_matrices(std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(k), ms[0]))
                         .values -
                     ms[0]) < tol,
             "token duplicates");
    c.expect(max_abs(pm::aggregate_token_matrices(mcombo).values -
                     (alpha * m.values + beta * pm::aggregate_token_matrices(ns).values)) < tol,
             "token linearity");
  }
}

struct Transform {
  Eigen::Matrix3d rotation;
  Eigen::Vector3d position;
};

Transform world_transform(const pm::Pose& pose, const pm::Skeleton& skel, int j) {
  const Eigen::Matrix3d local = pm::sixd_to_rotmat(pose.rotations.row(j).transpose());
  const int parent = skel.parents[static_cast<std::size_t>(j)];
  if (parent < 0) return {local, pose.root_translation};
  const Transform p = world_transform(pose, skel, parent);
  return {p.rotation * local, p.position + p.rotation * skel.rest_offsets[static_cast<std::size_t>(j)]};
}

void rotation_fk_oracles(Checks& c) {
  pm::Rng rng(7);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Matrix3d r = random_rotation(rng);
    const pm::Vector6d six = pm::rotmat_to_sixd(r);
    worst = std::max(worst, max_abs(pm::sixd_to_rotmat(six) - r));
    worst = std::max(worst, max_abs(pm::rotmat_to_sixd(pm::sixd_to_rotmat(six)) - six));
  }
  c.expect(worst < 1e-6, fmt::format("round-trip error {:.3g}", worst));
  c.note(fmt::format("round-trip max error {:.2e}", worst));

  const auto& skel = pm::default_skeleton();
  double fk_worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    const int frames = 1 + static_cast<int>(rng.next_u64() % 64);
    const auto seq = random_motion(rng, frames, skel.joint_count());
    const auto fk = pm::forward_kinematics(seq, skel);
    for (int n = 0; n < frames; ++n) {
      for (int j = 0; j < skel.joint_count(); ++j) {
        const Eigen::Vector3d want = world_transform(seq.poses[static_cast<std::size_t>(n)], skel, j).position;
        fk_worst = std::max(fk_worst, max_abs(fk.global[static_cast<std::size_t>(n)].row(j).transpose() - want));
      }
    }
  }
  c.expect(skel.joint_count() == 22, "22-joint skeleton");
  c.expect(fk_worst < 1e-9, fmt::format("FK error {:.3g}", fk_worst));
  c.note(fmt::format("FK max error {:.2e}", fk_worst));
}

// Loop oracle over raw global positions; local coordinates are recomputed here.
double metric_oracle(const std::vector<pm::JointPositions>& gen, const std::vector<pm::JointPositions>& gt,
                     pm::MetricVariant v, bool variance) {
  const int joints = gen[0].joint_count();
  int first = 0, last = joints, coords = 3;
  bool local = false;
  if (v == pm::MetricVariant::RootJoint) last = 1;
  if (v == pm::MetricVariant::GlobalTraj) last = 1, coords = 2;
  if (v == pm::MetricVariant::MeanLocal) first = 1, local = true;
  auto at = [&](const pm::JointPositions& p, std::size_t n, int j, int k) {
    return local ? p.global[n](j, k) - p.global[n](0, k) : p.global[n](j, k);
  };
  double total = 0.0;
  for (int j = first; j < last; ++j) {
    double joint_sum = 0.0;
    for (std::size_t s = 0; s < gen.size(); ++s) {
      const std::size_t frames = gen[s].global.size();
      if (!variance) {
        double acc = 0.0;
        for (std::size_t n = 0; n < frames; ++n) {
          double sq = 0.0;
          for (int k = 0; k < coords; ++k) sq += std::pow(at(gen[s], n, j, k) - at(gt[s], n, j, k), 2);
          acc += std::sqrt(sq);
        }
        joint_sum += acc / static_cast<double>(frames);
      } else {
        double sq = 0.0;
        for (int k = 0; k < coords; ++k) {
          double var[2] = {0.0, 0.0};
          const pm::JointPositions* src[2] = {&gen[s], &gt[s]};
          for (int w = 0; w < 2; ++w) {
            double mean = 0.0;
            for (std::size_t n = 0; n < frames; ++n) mean += at(*src[w], n, j, k);
            mean /= static_cast<double>(frames);
            for (std::size_t n = 0; n < frames; ++n) var[w] += std::pow(mean - at(*src[w], n, j, k), 2);
            var[w] = frames > 1 ? var[w] / static_cast<double>(frames - 1) : 0.0;
          }
          sq += std::pow(var[0] - var[1], 2);
        }
        joint_sum += std::sqrt(sq);
      }
    }
    total += joint_sum / static_cast<double>(gen.size());
  }
  return total / (last - first);
}

void metric_oracles(Checks& c) {
  pm::Rng rng(11);
  const auto& skel = pm::default_skeleton();
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<pm::JointPositions> gen, gt;
    const int samples = 1 + static_cast<int>(rng.next_u64() % 4);
    for (int s = 0; s < samples; ++s) {
      const int frames = 2 + static_cast<int>(rng.next_u64() % 30);
      gen.push_back(pm::forward_kinematics(random_motion(rng, frames, 22), skel));
      gt.push_back(pm::forward_kinematics(random_motion(rng, frames, 22), skel));
    }
    for (auto v : pm::kMetricVariants) {
      worst = std::max(worst, std::abs(pm::ape(gen, gt, v) - metric_oracle(gen, gt, v, false)));
      worst = std::max(worst, std::abs(pm::ave(gen, gt, v) - metric_oracle(gen, gt, v, true)));
    }
  }
  c.expect(worst < 1e-12, fmt::format("oracle error {:.3g}", worst));
  c.note(fmt::format("oracle max error {:.2e}", worst));

  std::vector<pm::JointPositions> gt = {pm::forward_kinematics(random_motion(rng, 20, 22), skel),
                                        pm::forward_kinematics(random_motion(rng, 13, 22), skel)};
  auto shifted = gt;
  for (auto& p : shifted) {
    for (auto& f : p.global) f.rowwise() += Eigen::RowVector3d(0.3, 0.4, 0.0);
    p.trajectory.rowwise() += Eigen::RowVector2d(0.3, 0.4);
  }
  c.expect(std::abs(pm::ape(shifted, gt, pm::MetricVariant::MeanGlobal) - 0.5) < 1e-12, "offset mean_global 0.5");
  c.expect(std::abs(pm::ape(shifted, gt, pm::MetricVariant::MeanLocal)) < 1e-12, "offset mean_local 0");
  for (auto v : pm::kMetricVariants) {
    c.expect(std::abs(pm::ave(shifted, gt, v)) < 1e-12, fmt::format("AVE shift invariance ({})", pm::column_name(v)));
  }
  const auto same = pm::compute_report(gt, gt);
  for (auto v : pm::kMetricVariants) {
    c.expect(same.ape.at(v) == 0.0 && same.ave.at(v) == 0.0, fmt::format("gen=gt zero ({})", pm::column_name(v)));
  }
}

pm::ModelConfig toy_model(pm::Variant variant) {
  pm::ModelConfig m;
  m.variant = variant;
  m.joints = 3;
  m.latent_dim = 4;
  m.embed_dim = 3;
  m.width = 8;
  m.layers = 1;
  m.heads = 2;
  m.ff_width = 16;
  m.past_frames = 2;
  m.init_seed = 1;
  return m;
}

void vae_correctness(Checks& c) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4), one = Eigen::VectorXd::Ones(4);
  c.expect(pm::kl_to_standard_normal({zero, one}) == 0.0, "KL = 0 at N(0, I)");

  const Eigen::VectorXd mu = Eigen::Vector4d(0.3, -0.2, 0.1, 0.0), sigma = Eigen::Vector4d(0.9, 1.1, 0.8, 1.0);
  pm::Rng rng(5);
  double acc = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    double log_ratio = 0.0;
    for (int d = 0; d < 4; ++d) {
      const double eps = rng.normal();
      const double x = mu[d] + sigma[d] * eps;
      log_ratio += -0.5 * eps * eps - std::log(sigma[d]) + 0.5 * x * x;
    }
    acc += log_ratio;
  }
  const double closed = pm::kl_to_standard_normal({mu, sigma});
  c.expect(std::abs(acc / n - closed) < 0.02, fmt::format("KL closed {:.4f} vs MC {:.4f}", closed, acc / n));
  c.note(fmt::format("KL closed {:.4f} MC {:.4f}", closed, acc / n));

  // loss_total on 2 frames x 3 joints, every parameter perturbed.
  const auto config = toy_model(pm::Variant::Vae);
  pm::MotionModel model(config);
  pm::AggregatedEmbedding text;
  text.kind = pm::EmbedderKind::TokenMatrix;
  text.values = random_matrix(rng, 2, 3);
  text.mask = {true, true};
  const std::vector<pm::TrainingSample> batch = {{text, random_motion(rng, 2, 3, false)}};
  auto objective = [&] { return pm::loss_graph(model, batch, 17).total; };
  c.expect(std::abs(objective().item() - pm::loss_total(model, batch, 17).total) < 1e-12, "loss_total consistency");
  model.parameters().zero_grad();
  ad::backward(objective());
  const double h = 1e-4;
  double diff = 0.0, scale = 0.0;
  for (const auto& p : model.parameters().parameters()) {
    ad::Tensor t = p.tensor;
    const ad::Matrix analytic = t.grad();
    const ad::Matrix saved = t.value();
    for (Eigen::Index e = 0; e < saved.size(); ++e) {
      t.mutable_value().data()[e] = saved.data()[e] + h;
      const double up = objective().item();
      t.mutable_value().data()[e] = saved.data()[e] - h;
      const double down = objective().item();
      t.mutable_value().data()[e] = saved.data()[e];
      const double numeric = (up - down) / (2 * h);
      diff += std::pow(numeric - analytic.data()[e], 2);
      scale += numeric * numeric + analytic.data()[e] * analytic.data()[e];
    }
  }
  const double rel = std::sqrt(diff) / std::sqrt(scale);
  c.expect(rel < 1e-3, fmt::format("FD relative error {:.3g}", rel));
  c.note(fmt::format("FD relative error {:.2e} over {} parameters", rel, model.parameters().scalar_count()));
}

struct Shared {
  fs::path dir;
  pm::Dataset dataset;
  std::optional<pm::Checkpoint> vae;
};

void toy_convergence(Checks& c, Shared& shared) {
  pm::RunConfig config = pm::default_run_config(pm::Variant::Vae);
  config.offline = true;
  config.cache_root = shared.dir / "cache";
  config.training.steps = 500;
  auto client = pm::make_client(config);
  auto result = pm::train_model(shared.dataset, config, *client);
  const double first = result.history.front().reconstruction, last = result.history.back().reconstruction;
  c.expect(result.history.size() == 500, "500 steps");
  c.expect(last < 0.01 * first, fmt::format("reconstruction {:.4g} -> {:.4g}", first, last));
  const auto report = pm::evaluate_testset(result.checkpoint, shared.dataset, pm::Split::Train, *client, config.seed);
  const double local = *report.ape.at(pm::MetricVariant::MeanLocal);
  c.expect(local < 0.05, fmt::format("on-train mean_local APE {:.4f}", local));
  c.note(fmt::format("L_rec {:.4g} -> {:.4g} ({:.2f}%), on-train mean_local APE {:.4f} m over {} samples", first,
                     last, 100.0 * last / first, local, report.sample_count));
  shared.vae = std::move(result.checkpoint);
}

void two_pass(Checks& c, Shared& shared) {
  const pm::Dataset data = pm::make_synthetic_dataset(0, 6, pm::default_skeleton(), 2);
  pm::RunConfig config = pm::default_run_config(pm::Variant::PastConditionedVae);
  config.offline = true;
  config.cache_root = shared.dir / "cache";
  auto client = pm::make_client(config);
  const pm::TextPipeline text(config, *client);
  std::vector<pm::SegmentPair> pairs;
  for (const auto& r : data.records) {
    if (!r.is_pair()) continue;
    pairs.push_back({{text.embed(r.segments[0].phrase), r.segments[0].motion},
                     {text.embed(r.segments[1].phrase), r.segments[1].motion}});
  }
  c.expect(pairs.size() == 2, "pair records");
  pm::MotionModel model(config.model);

  std::vector<pm::TwoPassTrace> traces;
  const ad::Tensor loss = pm::two_pass_loss_graph(model, pairs, 9, &traces).total;
  const ad::Tensor zero = model.zero_past();
  c.expect(zero.value().isZero(0.0) && zero.rows() == config.model.past_frames, "zero PastContext shape");
  pm::Rng seeds = pm::Rng(9).fork(0);
  const auto first_alone = pm::sample_loss(model, pairs[0].first, &zero, seeds.next_u64());
  c.expect(first_alone.generated.value() == traces[0].first_generated.value(),
           "first segment decodes under the zero context");

  // Pass-2 loss reaches pass-1 outputs and, through them, the decoder weights.
  model.parameters().zero_grad();
  ad::backward(traces[0].second.total);
  c.expect(max_abs(traces[0].first_generated.grad()) > 0.0, "pass-2 gradient on pass-1 output");
  const ad::Matrix attached = model.parameters().find("decoder.output.weight").grad();
  model.parameters().zero_grad();
  pm::Rng probe = pm::Rng(9).fork(0);
  const auto first = pm::sample_loss(model, pairs[0].first, &zero, probe.next_u64());
  const ad::Tensor past = model.past_graph(ad::detach(first.generated));
  const auto second = pm::sample_loss(model, pairs[0].second, &past, probe.next_u64());
  const auto& w = config.model.loss_weights;
  ad::backward(ad::add(ad::add(ad::scale(second.reconstruction, w.reconstruction), ad::scale(second.kl, w.kl)),
                       ad::scale(second.alignment, w.alignment)));
  const ad::Matrix detached = model.parameters().find("decoder.output.weight").grad();
  const double through_pass_one = max_abs(attached - detached);
  c.expect(through_pass_one > 0.0, "decoder gradient via the pass-1 path");
  c.note(fmt::format("pass-1 path decoder gradient {:.3e}", through_pass_one));
  c.expect(std::isfinite(loss.item()), "finite two-pass loss");

  pm::ModelConfig wide = config.model;
  wide.past_frames = 64;
  pm::MotionModel wide_model(wide);
  pm::AdamOptimizer opt;
  c.expect(error_code([&] { pm::teach_two_pass_step(wide_model, opt, pairs, 1); }) ==
               pm::ErrorCode::PastWindowTooLarge,
           "P > segment length raises PastWindowTooLarge");
  c.expect(error_code([&] { wide_model.encode_past(pairs[0].first.motion); }) == pm::ErrorCode::PastWindowTooLarge,
           "encode_past precondition");
  pm::AdamOptimizer ok;
  c.expect(std::isfinite(pm::teach_two_pass_step(model, ok, pairs, 2).total), "two-pass step trains");
}

void pipeline_totality(Checks& c, Shared& shared) {
  if (!shared.vae) {
    c.expect(false, "needs the trained VAE checkpoint");
    return;
  }
  const pm::Checkpoint& cp = *shared.vae;
  auto client = pm::make_client(cp.config);
  const auto series = pm::PhraseSeries::single(pm::ActionPhrase::make("pirouette on one foot"), 48);
  const auto a = pm::generate(cp, series, *client, 21);
  const auto b = pm::generate(cp, series, *client, 21);
  c.expect(a == b, "equal seeds are bit-identical");
  const auto json = pm::motion_to_json(a, cp.skeleton);
  c.expect(json.dump() == pm::motion_to_json(b, cp.skeleton).dump(), "serialized output identical");
  bool finite = a.frame_count() == 48;
  for (const auto& p : a.poses) finite = finite && p.rotations.allFinite() && p.root_translation.allFinite();
  c.expect(finite, "48 finite frames");
  c.expect(!error_code([&] { pm::motion_from_json(nlohmann::json::parse(json.dump()), cp.skeleton); }),
           "schema-valid motion JSON");
  c.expect(!error_code([&] { pm::forward_kinematics(a, cp.skeleton); }), "generated rotations pass strict FK");

  pm::RunConfig base = cp.config;
  base.training.steps = 20;
  const std::vector<int> ks = {1, 2, 4, 8};
  const auto t1 = pm::ablate_k(base, ks, shared.dataset);
  const auto t2 = pm::ablate_k(base, ks, shared.dataset);
  const std::string text = pm::format_ablation_table(t1);
  c.expect(text == pm::format_ablation_table(t2), "deterministic table");
  c.expect(t1.rows.size() == 4, "4 rows");
  for (const auto& row : t1.rows) {
    c.expect(row.report.ape.size() == 4 && row.report.ave.size() == 4, "8 metric columns");
  }
  c.expect(text.find("Average Positional Error") != std::string::npos &&
               text.find("Average Variance Error") != std::string::npos,
           "column groups");
  std::fputs(text.c_str(), stdout);
}

void table_shape(Checks& c, Shared& shared) {
  pm::RunConfig config = pm::default_run_config(pm::Variant::DeterministicAe);
  config.offline = true;
  config.cache_root = shared.dir / "cache";
  config.training.steps = 20;
  auto client = pm::make_client(config);
  const auto trained = pm::train_model(shared.dataset, config, *client);
  const auto report = pm::evaluate_testset(trained.checkpoint, shared.dataset, pm::Split::Test, *client, 0);
  for (auto v : {pm::MetricVariant::RootJoint, pm::MetricVariant::GlobalTraj}) {
    c.expect(!report.ape.at(v) && !report.ave.at(v), fmt::format("{} absent", pm::column_name(v)));
  }
  for (auto v : {pm::MetricVariant::MeanLocal, pm::MetricVariant::MeanGlobal}) {
    c.expect(report.ape.at(v).has_value() && report.ave.at(v).has_value(), fmt::format("{} present", pm::column_name(v)));
  }
  const auto j = pm::report_to_json(report);
  c.expect(j.at("Average Positional Error").at("root joint").is_null(), "JSON null cell");
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  Shared shared;
  shared.dir = scratch_dir();
  shared.dataset = pm::make_synthetic_dataset(0, 12);

  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<void(Checks&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "prompt fidelity", 1.0, prompt_fidelity},
      {2, "aggregator algebra", 10.0, aggregator_algebra},
      {3, "rotation/FK oracles", 30.0, rotation_fk_oracles},
      {4, "metric oracles", 30.0, metric_oracles},
      {5, "VAE correctness", 120.0, vae_correctness},
      {6, "toy convergence", 600.0, [&](Checks& c) { toy_convergence(c, shared); }},
      {7, "two-pass training", 60.0, [&](Checks& c) { two_pass(c, shared); }},
      {8, "pipeline totality and reproducibility", 300.0, [&](Checks& c) { pipeline_totality(c, shared); }},
      {9, "table-shape parity", 300.0, [&](Checks& c) { table_shape(c, shared); }},
  };

  int failed = 0;
  for (const auto& criterion : criteria) {
    Checks checks;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.run(checks);
    } catch (const std::exception& e) {
      checks.expect(false, fmt::format("exception: {}", e.what()));
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    checks.expect(seconds < criterion.budget_seconds,
                  fmt::format("runtime {:.1f}s over {:.0f}s budget", seconds, criterion.budget_seconds));
    const bool ok = checks.passed();
    failed += ok ? 0 : 1;
    std::printf("criterion %d %s: %s [%.2fs] %s\n", criterion.id, ok ? "PASS" : "FAIL", criterion.name, seconds,
                checks.summary().c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  fs::remove_all(shared.dir);
  return failed == 0 ? 0 : 1;
}
