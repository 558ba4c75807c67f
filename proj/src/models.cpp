#include "promptmotion/models.hpp"

#include <fmt/format.h>

#include "promptmotion/errors.hpp"
#include "promptmotion/random.hpp"

namespace promptmotion {

namespace {
constexpr Eigen::Index kPositionTableRows = 256;
constexpr double kTokenInitLimit = 0.1;
}  // namespace

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::DeterministicAe: return "deterministic_ae";
    case Variant::Vae: return "vae";
    case Variant::PastConditionedVae: return "past_conditioned_vae";
  }
  return "unknown";
}

Variant variant_from_string(std::string_view name) {
  if (name == "deterministic_ae") return Variant::DeterministicAe;
  if (name == "vae") return Variant::Vae;
  if (name == "past_conditioned_vae") return Variant::PastConditionedVae;
  fail(ErrorCode::InvalidConfig, fmt::format("unknown model variant '{}'", name));
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::InvalidConfig, what);
  };
  require(latent_dim >= 1, "latent_dim must be positive");
  require(embed_dim >= 1, "embed_dim must be positive");
  require(width >= 1 && heads >= 1 && width % heads == 0, "width must be a positive multiple of heads");
  require(layers >= 1, "layers must be positive");
  require(ff_width >= 1, "ff_width must be positive");
  require(joints >= 1, "joints must be positive");
  require(loss_weights.reconstruction >= 0 && loss_weights.kl >= 0 && loss_weights.alignment >= 0,
          "loss weights must be non-negative");
  if (variant == Variant::DeterministicAe) {
    require(embed_dim == latent_dim,
            fmt::format("deterministic_ae uses v_aggr as Z_T, so embed_dim ({}) must equal latent_dim ({})",
                        embed_dim, latent_dim));
  }
  if (variant == Variant::PastConditionedVae) require(past_frames >= 1, "past_frames must be >= 1");
}

PastContext PastContext::zero(int frames, int width) {
  return PastContext{Eigen::MatrixXd::Zero(frames, width)};
}

MotionModel::MotionModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  Rng rng(config_.init_seed);
  const Eigen::Index w = config_.width;
  const Eigen::Index d = config_.latent_dim;
  const int layers = config_.layers;
  const int heads = config_.heads;
  const Eigen::Index ff = config_.ff_width;
  position_table_ = nn::sinusoidal_positions(kPositionTableRows, w);

  if (config_.stochastic()) {
    text_in_ = nn::Linear(store_, "text.input", config_.embed_dim, w, rng);
    text_mu_token_ = store_.uniform("text.mu_token", 1, w, kTokenInitLimit, rng);
    text_logvar_token_ = store_.uniform("text.logvar_token", 1, w, kTokenInitLimit, rng);
    if (config_.past_conditioned()) sep_token_ = store_.uniform("text.sep_token", 1, w, kTokenInitLimit, rng);
    text_encoder_ = nn::TransformerEncoder(store_, "text.encoder", layers, w, heads, ff, rng);
    text_mu_head_ = nn::Linear(store_, "text.mu_head", w, d, rng);
    text_logvar_head_ = nn::Linear(store_, "text.logvar_head", w, d, rng);
  }

  motion_in_ = nn::Linear(store_, "motion.input", config_.input_features(), w, rng);
  motion_mu_token_ = store_.uniform("motion.mu_token", 1, w, kTokenInitLimit, rng);
  if (config_.stochastic()) motion_logvar_token_ = store_.uniform("motion.logvar_token", 1, w, kTokenInitLimit, rng);
  motion_encoder_ = nn::TransformerEncoder(store_, "motion.encoder", layers, w, heads, ff, rng);
  motion_mu_head_ = nn::Linear(store_, "motion.mu_head", w, d, rng);
  if (config_.stochastic()) motion_logvar_head_ = nn::Linear(store_, "motion.logvar_head", w, d, rng);

  latent_in_ = nn::Linear(store_, "decoder.latent_input", d, w, rng);
  decoder_ = nn::TransformerEncoder(store_, "decoder.encoder", layers, w, heads, ff, rng);
  decoder_out_ = nn::Linear(store_, "decoder.output", w, config_.output_features(), rng);

  if (config_.past_conditioned()) {
    past_in_ = nn::Linear(store_, "past.input", config_.input_features(), w, rng);
    past_encoder_ = nn::TransformerEncoder(store_, "past.encoder", 1, w, heads, ff, rng);
  }
}

ad::Tensor MotionModel::positions(Eigen::Index rows) const {
  if (rows <= position_table_.rows()) return ad::constant(position_table_.topRows(rows));
  return ad::constant(nn::sinusoidal_positions(rows, config_.width));
}

void MotionModel::check_past(const ad::Tensor* past) const {
  if (config_.past_conditioned()) {
    if (!past) fail(ErrorCode::MissingPastContext, "past_conditioned_vae needs a PastContext");
    if (past->rows() != config_.past_frames || past->cols() != config_.width) {
      fail(ErrorCode::ShapeMismatch, fmt::format("past context is {}x{}, expected {}x{}", past->rows(), past->cols(),
                                                 config_.past_frames, config_.width));
    }
  } else if (past) {
    fail(ErrorCode::ShapeMismatch, fmt::format("{} takes no past context", to_string(config_.variant)));
  }
}

ad::Tensor MotionModel::zero_past() const {
  return ad::constant(ad::Matrix::Zero(config_.past_frames, config_.width));
}

LatentGraph MotionModel::text_graph(const AggregatedEmbedding& text, const ad::Tensor* past) const {
  if (text.kind != config_.expected_embedder()) {
    fail(ErrorCode::ShapeMismatch, fmt::format("{} expects a {} embedding, got {}", to_string(config_.variant),
                                               to_string(config_.expected_embedder()), to_string(text.kind)));
  }
  if (text.dimension() != config_.embed_dim || text.rows() < 1) {
    fail(ErrorCode::ShapeMismatch,
         fmt::format("text embedding width {} != configured {}", text.dimension(), config_.embed_dim));
  }
  check_past(past);

  if (!config_.stochastic()) return LatentGraph{ad::constant(text.values.topRows(1)), {}};

  std::vector<ad::Tensor> rows = {text_mu_token_, text_logvar_token_,
                                  ad::add(text_in_(ad::constant(text.values)), positions(text.rows()))};
  std::vector<bool> mask = {true, true};
  mask.insert(mask.end(), text.mask.begin(), text.mask.end());
  if (static_cast<Eigen::Index>(text.mask.size()) != text.rows()) mask.resize(static_cast<std::size_t>(text.rows()) + 2, true);
  if (past) {
    rows.push_back(sep_token_);
    rows.push_back(*past);
    mask.insert(mask.end(), static_cast<std::size_t>(past->rows()) + 1, true);
  }
  const ad::Tensor encoded = text_encoder_(ad::concat_rows(rows), &mask);
  return LatentGraph{text_mu_head_(ad::slice_rows(encoded, 0, 1)), text_logvar_head_(ad::slice_rows(encoded, 1, 1))};
}

LatentGraph MotionModel::motion_graph(const ad::Tensor& features) const {
  if (features.cols() != config_.input_features() || features.rows() < 1) {
    fail(ErrorCode::ShapeMismatch, fmt::format("motion features are {}x{}, expected Nx{}", features.rows(),
                                               features.cols(), config_.input_features()));
  }
  const ad::Tensor frames = ad::add(motion_in_(features), positions(features.rows()));
  std::vector<ad::Tensor> rows = {motion_mu_token_};
  if (config_.stochastic()) rows.push_back(motion_logvar_token_);
  rows.push_back(frames);
  const ad::Tensor encoded = motion_encoder_(ad::concat_rows(rows));
  LatentGraph out{motion_mu_head_(ad::slice_rows(encoded, 0, 1)), {}};
  if (config_.stochastic()) out.logvar = motion_logvar_head_(ad::slice_rows(encoded, 1, 1));
  return out;
}

ad::Tensor MotionModel::decode_graph(const ad::Tensor& z, int frames, const ad::Tensor* past) const {
  if (frames < 1) fail(ErrorCode::ShapeMismatch, "duration must be at least one frame");
  if (z.rows() != 1 || z.cols() != config_.latent_dim) {
    fail(ErrorCode::ShapeMismatch,
         fmt::format("latent is {}x{}, expected 1x{}", z.rows(), z.cols(), config_.latent_dim));
  }
  check_past(past);
  ad::Tensor queries = ad::add_row(positions(frames), latent_in_(z));
  if (past) {
    std::vector<ad::Tensor> rows = {queries, *past};
    queries = ad::concat_rows(rows);
  }
  const ad::Tensor decoded = decoder_(queries);
  return decoder_out_(past ? ad::slice_rows(decoded, 0, frames) : decoded);
}

ad::Tensor MotionModel::past_graph(const ad::Tensor& features) const {
  if (!config_.past_conditioned()) fail(ErrorCode::InvalidConfig, "variant has no past encoder");
  const int p = config_.past_frames;
  if (features.rows() < p) {
    fail(ErrorCode::PastWindowTooLarge,
         fmt::format("past window of {} frames exceeds the {}-frame segment", p, features.rows()));
  }
  if (features.cols() != config_.input_features()) {
    fail(ErrorCode::ShapeMismatch, fmt::format("past features have {} columns, expected {}", features.cols(),
                                               config_.input_features()));
  }
  const ad::Tensor window = ad::slice_rows(features, features.rows() - p, p);
  return past_encoder_(ad::add(past_in_(window), positions(p)));
}

Encoding MotionModel::encode_text(const AggregatedEmbedding& text, const PastContext* past) const {
  std::optional<ad::Tensor> past_tensor;
  if (past) past_tensor = ad::constant(past->features);
  const LatentGraph g = text_graph(text, past_tensor ? &*past_tensor : nullptr);
  if (!g.stochastic()) return LatentEmbedding(g.mean.value().row(0).transpose());
  return GaussianParams{g.mean.value().row(0).transpose(),
                        (0.5 * g.logvar.value().row(0).transpose().array()).exp().matrix()};
}

Encoding MotionModel::encode_motion(const MotionSequence& seq) const {
  seq.validate(config_.joints);
  const LatentGraph g = motion_graph(ad::constant(motion_to_features(seq, true)));
  if (!g.stochastic()) return LatentEmbedding(g.mean.value().row(0).transpose());
  return GaussianParams{g.mean.value().row(0).transpose(),
                        (0.5 * g.logvar.value().row(0).transpose().array()).exp().matrix()};
}

MotionSequence MotionModel::decode_motion(const LatentEmbedding& z, int frames, const PastContext* past,
                                          double frame_rate) const {
  if (z.size() != config_.latent_dim) {
    fail(ErrorCode::ShapeMismatch, fmt::format("latent has {} entries, expected {}", z.size(), config_.latent_dim));
  }
  std::optional<ad::Tensor> past_tensor;
  if (past) past_tensor = ad::constant(past->features);
  const ad::Tensor out = decode_graph(ad::constant(z.transpose()), frames, past_tensor ? &*past_tensor : nullptr);
  return motion_from_features(out.value(), config_.joints, config_.decodes_root(), frame_rate);
}

PastContext MotionModel::encode_past(const MotionSequence& previous) const {
  if (!config_.past_conditioned()) fail(ErrorCode::InvalidConfig, "variant has no past encoder");
  if (previous.frame_count() < config_.past_frames) {
    fail(ErrorCode::PastWindowTooLarge, fmt::format("past window of {} frames exceeds the {}-frame segment",
                                                    config_.past_frames, previous.frame_count()));
  }
  return PastContext{past_graph(ad::constant(motion_to_features(previous, true))).value()};
}

Eigen::VectorXd standard_normal_noise(Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd eps(d);
  for (Eigen::Index i = 0; i < d; ++i) eps[i] = rng.normal();
  return eps;
}

LatentEmbedding sample_latent(const GaussianParams& params, std::uint64_t seed) {
  if (params.mu.size() != params.sigma.size()) fail(ErrorCode::ShapeMismatch, "mu and sigma lengths differ");
  if (!params.mu.allFinite() || !params.sigma.allFinite() || (params.sigma.array() <= 0.0).any()) {
    fail(ErrorCode::ShapeMismatch, "GaussianParams need finite mu and positive sigma");
  }
  return params.mu + params.sigma.cwiseProduct(standard_normal_noise(params.mu.size(), seed));
}

}  // namespace promptmotion
