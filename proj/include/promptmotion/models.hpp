#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string_view>
#include <variant>

#include "promptmotion/autodiff.hpp"
#include "promptmotion/embedding.hpp"
#include "promptmotion/motion.hpp"
#include "promptmotion/nn.hpp"

namespace promptmotion {

enum class Variant { DeterministicAe, Vae, PastConditionedVae };

std::string_view to_string(Variant variant);
Variant variant_from_string(std::string_view name);

struct LossWeights {
  double reconstruction = 1.0;
  double kl = 1e-5;
  double alignment = 1e-5;

  bool operator==(const LossWeights&) const = default;
};

struct ModelConfig {
  Variant variant = Variant::Vae;
  int latent_dim = 32;   // d
  int embed_dim = 16;    // e for token matrices, c for vectors
  int width = 64;
  int layers = 2;
  int heads = 2;
  int ff_width = 128;
  int joints = 22;
  int past_frames = 5;   // P, past-conditioned variant only
  LossWeights loss_weights;
  std::uint64_t init_seed = 0;

  // Throws InvalidConfig; the deterministic variant needs embed_dim == latent_dim.
  void validate() const;

  EmbedderKind expected_embedder() const noexcept {
    return variant == Variant::DeterministicAe ? EmbedderKind::Vector : EmbedderKind::TokenMatrix;
  }
  bool stochastic() const noexcept { return variant != Variant::DeterministicAe; }
  bool past_conditioned() const noexcept { return variant == Variant::PastConditionedVae; }
  // The deterministic variant decodes local pose only; root translation stays zero.
  bool decodes_root() const noexcept { return variant != Variant::DeterministicAe; }
  int input_features() const noexcept { return joints * 6 + 3; }
  int output_features() const noexcept { return joints * 6 + (decodes_root() ? 3 : 0); }

  bool operator==(const ModelConfig&) const = default;
};

using LatentEmbedding = Eigen::VectorXd;

struct GaussianParams {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;  // diagonal standard deviations, > 0
};

using Encoding = std::variant<LatentEmbedding, GaussianParams>;

// Past Encoder output over the last P frames of the previous segment.
struct PastContext {
  Eigen::MatrixXd features;  // P x width

  static PastContext zero(int frames, int width);
};

// Encoder output inside the autodiff graph: a 1 x d mean and, for the VAE
// variants, a 1 x d log-variance (sigma = exp(logvar / 2)).
struct LatentGraph {
  ad::Tensor mean;
  ad::Tensor logvar;

  bool stochastic() const noexcept { return logvar.defined(); }
};

class MotionModel {
 public:
  explicit MotionModel(ModelConfig config);

  MotionModel(const MotionModel&) = delete;
  MotionModel& operator=(const MotionModel&) = delete;
  MotionModel(MotionModel&&) = default;
  MotionModel& operator=(MotionModel&&) = default;

  const ModelConfig& config() const noexcept { return config_; }
  nn::ParameterStore& parameters() noexcept { return store_; }
  const nn::ParameterStore& parameters() const noexcept { return store_; }

  // Graph-level API used by training.
  LatentGraph text_graph(const AggregatedEmbedding& text, const ad::Tensor* past) const;
  LatentGraph motion_graph(const ad::Tensor& features) const;
  ad::Tensor decode_graph(const ad::Tensor& z, int frames, const ad::Tensor* past) const;
  // Encodes the last P rows of `features` (N x input_features).
  ad::Tensor past_graph(const ad::Tensor& features) const;
  ad::Tensor zero_past() const;

  // Value-level API. Deterministic_ae returns LatentEmbedding, otherwise GaussianParams.
  Encoding encode_text(const AggregatedEmbedding& text, const PastContext* past = nullptr) const;
  Encoding encode_motion(const MotionSequence& seq) const;
  MotionSequence decode_motion(const LatentEmbedding& z, int frames, const PastContext* past = nullptr,
                               double frame_rate = 20.0) const;
  // Throws PastWindowTooLarge if the sequence is shorter than P.
  PastContext encode_past(const MotionSequence& previous) const;

 private:
  ad::Tensor positions(Eigen::Index rows) const;
  void check_past(const ad::Tensor* past) const;

  ModelConfig config_;
  nn::ParameterStore store_;
  ad::Matrix position_table_;

  // Text encoder (VAE variants).
  nn::Linear text_in_;
  ad::Tensor text_mu_token_, text_logvar_token_, sep_token_;
  nn::TransformerEncoder text_encoder_;
  nn::Linear text_mu_head_, text_logvar_head_;

  // Motion encoder.
  nn::Linear motion_in_;
  ad::Tensor motion_mu_token_, motion_logvar_token_;
  nn::TransformerEncoder motion_encoder_;
  nn::Linear motion_mu_head_, motion_logvar_head_;

  // Decoder.
  nn::Linear latent_in_;
  nn::TransformerEncoder decoder_;
  nn::Linear decoder_out_;

  // Past encoder (past-conditioned variant).
  nn::Linear past_in_;
  nn::TransformerEncoder past_encoder_;
};

// z = mu + sigma * eps with eps ~ N(0, I) drawn from `seed`.
LatentEmbedding sample_latent(const GaussianParams& params, std::uint64_t seed);

// Standard-normal noise of length d from `seed`; the stream sample_latent uses.
Eigen::VectorXd standard_normal_noise(Eigen::Index d, std::uint64_t seed);

}  // namespace promptmotion
