#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "promptmotion/autodiff.hpp"
#include "promptmotion/models.hpp"

namespace promptmotion {

struct TrainingSample {
  AggregatedEmbedding text;
  MotionSequence motion;
};

// Two consecutive segments of one series, for the two-pass step.
struct SegmentPair {
  TrainingSample first;
  TrainingSample second;
};

struct LossReport {
  double total = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
  double alignment = 0.0;
};

// Unweighted loss terms as graph nodes, each 1 x 1.
struct LossTerms {
  ad::Tensor reconstruction;
  ad::Tensor kl;
  ad::Tensor alignment;
  ad::Tensor total;  // weighted sum

  LossReport report() const;
};

// Closed-form KL(N(mu1, s1^2) || N(mu2, s2^2)) for diagonal Gaussians.
double kl_diagonal(const Eigen::VectorXd& mu1, const Eigen::VectorXd& sigma1, const Eigen::VectorXd& mu2,
                   const Eigen::VectorXd& sigma2);
double kl_to_standard_normal(const GaussianParams& q);

namespace losses {
ad::Tensor kl_to_standard_normal(const LatentGraph& q);
ad::Tensor kl_between(const LatentGraph& p, const LatentGraph& q);
// mean of squared differences
ad::Tensor mean_squared_error(const ad::Tensor& a, const ad::Tensor& b);
// Reparameterized draw; returns the mean for deterministic latents.
ad::Tensor sample(const LatentGraph& q, std::uint64_t seed);
}  // namespace losses

// Per-sample pieces, also exposing the text-path reconstruction so a second
// pass can condition on it.
struct SampleLoss {
  ad::Tensor reconstruction;
  ad::Tensor kl;
  ad::Tensor alignment;
  ad::Tensor generated;  // N x output_features, decoded from Z_T
};

SampleLoss sample_loss(const MotionModel& model, const TrainingSample& sample, const ad::Tensor* past,
                       std::uint64_t noise_seed);

// Batch mean of every term; total = w_rec * L_rec + w_KL * L_KL + w_align * L_align.
LossTerms loss_graph(const MotionModel& model, std::span<const TrainingSample> batch, std::uint64_t seed);
LossReport loss_total(const MotionModel& model, std::span<const TrainingSample> batch, std::uint64_t seed);

struct TwoPassTrace {
  ad::Tensor first_generated;  // pass-1 text-path motion
  ad::Tensor past;             // PastContext fed to pass 2
  LossTerms first;
  LossTerms second;
};

// Pass 1 runs against the zero context; pass 2 conditions on the Past Encoder
// over the last P frames of pass 1's generated motion. Terms are summed.
LossTerms two_pass_loss_graph(const MotionModel& model, std::span<const SegmentPair> batch, std::uint64_t seed,
                              std::vector<TwoPassTrace>* traces = nullptr);

class AdamOptimizer {
 public:
  struct Options {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double clip_norm = 0.0;  // global gradient-norm clip, 0 disables
  };

  AdamOptimizer() : AdamOptimizer(Options{}) {}
  explicit AdamOptimizer(Options options) : options_(options) {}

  void step(nn::ParameterStore& store);

  const Options& options() const noexcept { return options_; }
  int step_count() const noexcept { return steps_; }

 private:
  Options options_;
  int steps_ = 0;
  std::vector<ad::Matrix> first_moment_;
  std::vector<ad::Matrix> second_moment_;
};

// One gradient step. Throws NonFiniteLoss (weights untouched) on divergence.
LossReport train_step(MotionModel& model, AdamOptimizer& optimizer, std::span<const TrainingSample> batch,
                      std::uint64_t seed);

// Throws PastWindowTooLarge when P exceeds a first segment's length.
LossReport teach_two_pass_step(MotionModel& model, AdamOptimizer& optimizer, std::span<const SegmentPair> batch,
                               std::uint64_t seed);

}  // namespace promptmotion
