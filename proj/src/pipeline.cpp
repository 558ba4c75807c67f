#include "promptmotion/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "promptmotion/errors.hpp"
#include "promptmotion/hashing.hpp"
#include "promptmotion/random.hpp"

namespace promptmotion {

using nlohmann::json;

namespace {

constexpr std::uint64_t kTrainSalt = 0x7261696eULL;
constexpr std::uint64_t kGenerateSalt = 0x67656e65ULL;

// Re-orthonormalizes decoded 6D rows so exported motions hold proper rotations.
MotionSequence canonicalize(MotionSequence seq) {
  for (auto& pose : seq.poses) {
    for (Eigen::Index j = 0; j < pose.rotations.rows(); ++j) {
      const Vector6d raw = pose.rotations.row(j).transpose();
      pose.rotations.row(j) = rotmat_to_sixd(sixd_to_rotmat(raw, RotationMode::Lenient)).transpose();
    }
  }
  return seq;
}

MotionSequence concatenate(const std::vector<MotionSequence>& parts) {
  MotionSequence out;
  if (!parts.empty()) out.frame_rate = parts.front().frame_rate;
  for (const auto& p : parts) out.poses.insert(out.poses.end(), p.poses.begin(), p.poses.end());
  return out;
}

LatentEmbedding choose_latent(const Encoding& encoding, GenerationMode mode, std::uint64_t seed) {
  if (const auto* z = std::get_if<LatentEmbedding>(&encoding)) return *z;
  const auto& params = std::get<GaussianParams>(encoding);
  return mode == GenerationMode::Mean ? params.mu : sample_latent(params, seed);
}

json matrix_to_json(const ad::Matrix& m) {
  std::vector<double> values(m.data(), m.data() + m.size());
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", std::move(values)}};
}

}  // namespace

PhraseSeries PhraseSeries::single(ActionPhrase phrase, int frames) {
  PhraseSeries s;
  s.phrases.push_back(std::move(phrase));
  s.durations.push_back(frames);
  return s;
}

void PhraseSeries::validate() const {
  if (phrases.empty()) fail(ErrorCode::ShapeMismatch, "phrase series is empty");
  if (phrases.size() != durations.size()) {
    fail(ErrorCode::ShapeMismatch,
         fmt::format("series has {} phrases but {} durations", phrases.size(), durations.size()));
  }
  for (int n : durations) {
    if (n < 1) fail(ErrorCode::ShapeMismatch, fmt::format("segment duration {} < 1", n));
  }
}

std::unique_ptr<LlmClient> make_client(const RunConfig& config) {
  if (config.offline) return std::make_unique<StubLlmClient>(config.seed);
  return std::make_unique<CompletionsApiClient>(config.api);
}

TextPipeline::TextPipeline(const RunConfig& config, LlmClient& client)
    : config_(config), client_(&client), embedder_(make_embedder(config.embedder)) {
  config_.llm.validate();
  if (auto dir = cache_dir()) cache_.emplace(*dir);
}

std::optional<std::filesystem::path> TextPipeline::cache_dir() const {
  if (config_.cache_root.empty()) return std::nullopt;
  return config_.cache_root / (config_.offline ? "stub" : "live");
}

DescriptionSet TextPipeline::describe(const ActionPhrase& phrase) const {
  if (cache_) return cached_descriptions(phrase, config_.llm, config_.prompt_version, *cache_, *client_);
  return generate_descriptions(phrase, build_prompt(phrase, config_.prompt_version), config_.llm, *client_);
}

AggregatedEmbedding TextPipeline::embed(const ActionPhrase& phrase) const {
  const DescriptionSet set = describe(phrase);
  return embed_and_aggregate(set.descriptions, *embedder_);
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  if (!checkpoint.model) fail(ErrorCode::InvalidConfig, "checkpoint has no model");
  json params = json::array();
  for (const auto& p : checkpoint.model->parameters().parameters()) {
    json entry = matrix_to_json(p.tensor.value());
    entry["name"] = p.name;
    params.push_back(std::move(entry));
  }
  const json j = {{"schema_version", kCheckpointSchemaVersion},
                  {"config", run_config_to_json(checkpoint.config)},
                  {"skeleton", skeleton_to_json(checkpoint.skeleton)},
                  {"parameters", std::move(params)}};
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, fmt::format("cannot write {}", tmp.string()));
    out << j.dump() << '\n';
    if (!out) fail(ErrorCode::IoError, fmt::format("short write to {}", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoError, fmt::format("cannot move checkpoint to {}: {}", path.string(), ec.message()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, fmt::format("cannot open checkpoint {}", path.string()));
  Checkpoint cp;
  try {
    const json j = json::parse(in);
    const int version = j.at("schema_version").get<int>();
    if (version != kCheckpointSchemaVersion) {
      fail(ErrorCode::SchemaError, fmt::format("unsupported checkpoint schema_version {}", version));
    }
    cp.config = run_config_from_json(j.at("config"));
    cp.skeleton = skeleton_from_json(j.at("skeleton"));
    cp.model = std::make_unique<MotionModel>(cp.config.model);
    const auto& stored = j.at("parameters");
    const auto& params = cp.model->parameters().parameters();
    if (stored.size() != params.size()) {
      fail(ErrorCode::SchemaError,
           fmt::format("checkpoint holds {} parameters, model expects {}", stored.size(), params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& entry = stored[i];
      ad::Tensor tensor = params[i].tensor;
      const auto name = entry.at("name").get<std::string>();
      const auto rows = entry.at("rows").get<Eigen::Index>();
      const auto cols = entry.at("cols").get<Eigen::Index>();
      const auto values = entry.at("values").get<std::vector<double>>();
      if (name != params[i].name || rows != tensor.rows() || cols != tensor.cols() ||
          static_cast<Eigen::Index>(values.size()) != rows * cols) {
        fail(ErrorCode::SchemaError, fmt::format("parameter '{}' does not match the model layout", name));
      }
      tensor.mutable_value() = Eigen::Map<const ad::Matrix>(values.data(), rows, cols);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaError, fmt::format("{}: {}", path.string(), e.what()));
  }
  if (cp.model->config().joints != cp.skeleton.joint_count()) {
    fail(ErrorCode::SkeletonMismatch, "checkpoint skeleton does not match the model joint count");
  }
  return cp;
}

TrainingResult train_model(const Dataset& dataset, const RunConfig& config, LlmClient& client,
                           const StepCallback& on_step) {
  config.validate();
  if (config.model.joints != dataset.skeleton.joint_count()) {
    fail(ErrorCode::SkeletonMismatch, fmt::format("model expects {} joints, dataset skeleton has {}",
                                                  config.model.joints, dataset.skeleton.joint_count()));
  }
  const TextPipeline text(config, client);
  std::map<std::string, AggregatedEmbedding> embeddings;
  auto embed = [&](const ActionPhrase& phrase) -> const AggregatedEmbedding& {
    auto it = embeddings.find(phrase.normalized());
    if (it == embeddings.end()) it = embeddings.emplace(phrase.normalized(), text.embed(phrase)).first;
    return it->second;
  };

  std::vector<TrainingSample> singles;
  std::vector<SegmentPair> pairs;
  const auto train = dataset.split(Split::Train);
  for (const auto* r : train) {
    for (const auto& seg : r->segments) singles.push_back({embed(seg.phrase), seg.motion});
    if (r->is_pair()) {
      pairs.push_back({{embed(r->segments[0].phrase), r->segments[0].motion},
                       {embed(r->segments[1].phrase), r->segments[1].motion}});
    }
  }
  if (singles.empty()) fail(ErrorCode::EmptyList, "dataset has no train records");
  if (config.model.past_conditioned() && pairs.empty()) {
    for (std::size_t i = 0; i + 1 < singles.size(); ++i) pairs.push_back({singles[i], singles[i + 1]});
  }

  TrainingResult result;
  result.checkpoint.config = config;
  result.checkpoint.skeleton = dataset.skeleton;
  result.checkpoint.model = std::make_unique<MotionModel>(config.model);
  MotionModel& model = *result.checkpoint.model;

  AdamOptimizer::Options options;
  options.learning_rate = config.training.learning_rate;
  options.clip_norm = config.training.clip_norm;
  AdamOptimizer optimizer(options);

  Rng order_rng = Rng(config.seed).fork(kTrainSalt);
  auto minibatch = [&](auto& pool, int step) {
    using T = typename std::decay_t<decltype(pool)>::value_type;
    const int b = config.training.batch_size;
    if (b <= 0 || b >= static_cast<int>(pool.size())) return std::vector<T>(pool.begin(), pool.end());
    std::vector<T> out;
    const std::size_t start = static_cast<std::size_t>(step) * static_cast<std::size_t>(b);
    for (int i = 0; i < b; ++i) out.push_back(pool[(start + static_cast<std::size_t>(i)) % pool.size()]);
    return out;
  };
  // Fixed shuffle so minibatches do not follow the id order.
  for (std::size_t i = singles.size(); i > 1; --i) std::swap(singles[i - 1], singles[order_rng.next_u64() % i]);

  for (int step = 0; step < config.training.steps; ++step) {
    const std::uint64_t step_seed = Rng(config.seed).fork(kTrainSalt + 1 + static_cast<std::uint64_t>(step)).next_u64();
    LossReport report;
    if (config.model.past_conditioned() && step % 2 == 1) {
      report = teach_two_pass_step(model, optimizer, minibatch(pairs, step / 2), step_seed);
    } else {
      report = train_step(model, optimizer, minibatch(singles, step), step_seed);
    }
    result.history.push_back(report);
    if (on_step) on_step(step, report);
  }
  return result;
}

std::vector<MotionSequence> generate_segments(const Checkpoint& checkpoint, const PhraseSeries& series,
                                              LlmClient& client, std::uint64_t seed,
                                              std::optional<GenerationMode> mode) {
  series.validate();
  if (!checkpoint.model) fail(ErrorCode::InvalidConfig, "checkpoint has no model");
  const MotionModel& model = *checkpoint.model;
  const TextPipeline text(checkpoint.config, client);
  const GenerationMode use = mode.value_or(checkpoint.config.generation_mode);
  const Rng rng = Rng(seed).fork(kGenerateSalt);

  std::vector<MotionSequence> out;
  std::optional<PastContext> past;
  if (model.config().past_conditioned()) past = PastContext::zero(model.config().past_frames, model.config().width);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const AggregatedEmbedding v = text.embed(series.phrases[i]);
    const PastContext* p = past ? &*past : nullptr;
    const Encoding enc = model.encode_text(v, p);
    const LatentEmbedding z = choose_latent(enc, use, rng.fork(i).next_u64());
    MotionSequence seg = canonicalize(model.decode_motion(z, series.durations[i], p));
    if (model.config().past_conditioned() && i + 1 < series.size()) past = model.encode_past(seg);
    out.push_back(std::move(seg));
  }
  return out;
}

MotionSequence generate(const Checkpoint& checkpoint, const PhraseSeries& series, LlmClient& client,
                        std::uint64_t seed, std::optional<GenerationMode> mode) {
  return concatenate(generate_segments(checkpoint, series, client, seed, mode));
}

MotionSequence latent_interpolate(const MotionModel& model, const LatentEmbedding& z_a, const LatentEmbedding& z_b,
                                  double t, int frames, const PastContext* past) {
  const Eigen::Index d = model.config().latent_dim;
  if (z_a.size() != d || z_b.size() != d) {
    fail(ErrorCode::ShapeMismatch, fmt::format("latents of size {} and {} for d = {}", z_a.size(), z_b.size(), d));
  }
  if (!(t >= 0.0 && t <= 1.0)) fail(ErrorCode::InvalidConfig, fmt::format("t = {} outside [0, 1]", t));
  LatentEmbedding z;
  if (t == 0.0) {
    z = z_a;
  } else if (t == 1.0) {
    z = z_b;
  } else {
    z = (1.0 - t) * z_a + t * z_b;
  }
  std::optional<PastContext> zero;
  if (model.config().past_conditioned() && !past) {
    zero = PastContext::zero(model.config().past_frames, model.config().width);
    past = &*zero;
  }
  return model.decode_motion(z, frames, past);
}

MetricReport evaluate_testset(const Checkpoint& checkpoint, const Dataset& dataset, Split split, LlmClient& client,
                              std::uint64_t seed) {
  if (!checkpoint.model) fail(ErrorCode::InvalidConfig, "checkpoint has no model");
  if (!(checkpoint.skeleton == dataset.skeleton)) {
    fail(ErrorCode::SkeletonMismatch, "dataset skeleton differs from the checkpoint skeleton");
  }
  const auto records = dataset.split(split);
  if (records.empty()) fail(ErrorCode::EmptyList, fmt::format("split '{}' is empty", to_string(split)));
  std::vector<JointPositions> generated, truth;
  for (const auto* r : records) {
    PhraseSeries series;
    std::vector<MotionSequence> gt;
    for (const auto& seg : r->segments) {
      series.phrases.push_back(seg.phrase);
      series.durations.push_back(seg.motion.frame_count());
      gt.push_back(seg.motion);
    }
    // Seeding by id keeps each record's draw independent of split order.
    const MotionSequence gen = generate(checkpoint, series, client, seed ^ fnv1a64(r->id));
    generated.push_back(forward_kinematics(gen, checkpoint.skeleton, RotationMode::Lenient));
    truth.push_back(forward_kinematics(concatenate(gt), dataset.skeleton));
  }
  spdlog::debug("evaluated {} records of split {}", records.size(), to_string(split));
  return compute_report(generated, truth, checkpoint.model->config().decodes_root());
}

}  // namespace promptmotion
