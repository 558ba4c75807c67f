#include "promptmotion/training.hpp"

#include <cmath>

#include <fmt/format.h>

#include "promptmotion/errors.hpp"
#include "promptmotion/random.hpp"

namespace promptmotion {

LossReport LossTerms::report() const {
  return LossReport{total.item(), reconstruction.item(), kl.item(), alignment.item()};
}

double kl_diagonal(const Eigen::VectorXd& mu1, const Eigen::VectorXd& sigma1, const Eigen::VectorXd& mu2,
                   const Eigen::VectorXd& sigma2) {
  if (mu1.size() != sigma1.size() || mu1.size() != mu2.size() || mu2.size() != sigma2.size()) {
    fail(ErrorCode::ShapeMismatch, "KL arguments differ in dimension");
  }
  const auto var1 = sigma1.array().square();
  const auto var2 = sigma2.array().square();
  return 0.5 * ((var2 / var1).log() + (var1 + (mu1 - mu2).array().square()) / var2 - 1.0).sum();
}

double kl_to_standard_normal(const GaussianParams& q) {
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(q.mu.size());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(q.mu.size());
  return kl_diagonal(q.mu, q.sigma, zeros, ones);
}

namespace losses {

ad::Tensor kl_to_standard_normal(const LatentGraph& q) {
  // 0.5 * sum(exp(lv) + mu^2 - 1 - lv)
  ad::Tensor inner = ad::sub(ad::add(ad::exp(q.logvar), ad::square(q.mean)), q.logvar);
  return ad::scale(ad::add_scalar(ad::sum(inner), -static_cast<double>(q.mean.cols())), 0.5);
}

ad::Tensor kl_between(const LatentGraph& p, const LatentGraph& q) {
  // 0.5 * sum(lv_q - lv_p + (exp(lv_p) + (mu_p - mu_q)^2) * exp(-lv_q) - 1)
  ad::Tensor ratio = ad::mul(ad::add(ad::exp(p.logvar), ad::square(ad::sub(p.mean, q.mean))),
                             ad::exp(ad::scale(q.logvar, -1.0)));
  ad::Tensor inner = ad::add(ad::sub(q.logvar, p.logvar), ratio);
  return ad::scale(ad::add_scalar(ad::sum(inner), -static_cast<double>(p.mean.cols())), 0.5);
}

ad::Tensor mean_squared_error(const ad::Tensor& a, const ad::Tensor& b) { return ad::mean(ad::square(ad::sub(a, b))); }

ad::Tensor sample(const LatentGraph& q, std::uint64_t seed) {
  if (!q.stochastic()) return q.mean;
  ad::Matrix eps = standard_normal_noise(q.mean.cols(), seed).transpose();
  ad::Tensor sigma = ad::exp(ad::scale(q.logvar, 0.5));
  return ad::add(q.mean, ad::mul(sigma, ad::constant(std::move(eps))));
}

}  // namespace losses

SampleLoss sample_loss(const MotionModel& model, const TrainingSample& sample, const ad::Tensor* past,
                       std::uint64_t noise_seed) {
  const ModelConfig& cfg = model.config();
  sample.motion.validate(cfg.joints);
  const int frames = sample.motion.frame_count();
  const ad::Tensor input = ad::constant(motion_to_features(sample.motion, true));
  const ad::Tensor target = cfg.decodes_root() ? input : ad::constant(motion_to_features(sample.motion, false));

  Rng rng(noise_seed);
  const LatentGraph text = model.text_graph(sample.text, past);
  const LatentGraph motion = model.motion_graph(input);
  const ad::Tensor z_text = losses::sample(text, rng.next_u64());
  const ad::Tensor z_motion = losses::sample(motion, rng.next_u64());

  SampleLoss out;
  out.generated = model.decode_graph(z_text, frames, past);
  const ad::Tensor from_motion = model.decode_graph(z_motion, frames, past);
  out.reconstruction = ad::add(losses::mean_squared_error(out.generated, target),
                               losses::mean_squared_error(from_motion, target));
  out.alignment = losses::mean_squared_error(z_text, z_motion);
  if (cfg.stochastic()) {
    out.kl = ad::add(ad::add(losses::kl_to_standard_normal(text), losses::kl_to_standard_normal(motion)),
                     ad::add(losses::kl_between(text, motion), losses::kl_between(motion, text)));
  } else {
    out.kl = ad::constant(ad::Matrix::Zero(1, 1));
  }
  return out;
}

namespace {

LossTerms combine(const ModelConfig& cfg, ad::Tensor rec, ad::Tensor kl, ad::Tensor align) {
  const LossWeights& w = cfg.loss_weights;
  ad::Tensor total = ad::add(ad::add(ad::scale(rec, w.reconstruction), ad::scale(kl, w.kl)),
                             ad::scale(align, w.alignment));
  return LossTerms{std::move(rec), std::move(kl), std::move(align), std::move(total)};
}

struct TermSums {
  std::vector<ad::Tensor> rec, kl, align;

  void push(const SampleLoss& s) {
    rec.push_back(s.reconstruction);
    kl.push_back(s.kl);
    align.push_back(s.alignment);
  }
};

ad::Tensor average(std::span<const ad::Tensor> terms) {
  return ad::scale(ad::sum(ad::concat_rows(terms)), 1.0 / static_cast<double>(terms.size()));
}

void require_finite(const LossTerms& terms) {
  const LossReport r = terms.report();
  if (!std::isfinite(r.total) || !std::isfinite(r.reconstruction) || !std::isfinite(r.kl) ||
      !std::isfinite(r.alignment)) {
    fail(ErrorCode::NonFiniteLoss, fmt::format("loss diverged (total={}, rec={}, kl={}, align={})", r.total,
                                               r.reconstruction, r.kl, r.alignment));
  }
}

}  // namespace

LossTerms loss_graph(const MotionModel& model, std::span<const TrainingSample> batch, std::uint64_t seed) {
  if (batch.empty()) fail(ErrorCode::EmptyList, "empty training batch");
  const std::optional<ad::Tensor> zero_past =
      model.config().past_conditioned() ? std::optional<ad::Tensor>(model.zero_past()) : std::nullopt;
  Rng rng(seed);
  TermSums sums;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    sums.push(sample_loss(model, batch[i], zero_past ? &*zero_past : nullptr, rng.fork(i).next_u64()));
  }
  return combine(model.config(), average(sums.rec), average(sums.kl), average(sums.align));
}

LossReport loss_total(const MotionModel& model, std::span<const TrainingSample> batch, std::uint64_t seed) {
  LossTerms terms = loss_graph(model, batch, seed);
  require_finite(terms);
  return terms.report();
}

LossTerms two_pass_loss_graph(const MotionModel& model, std::span<const SegmentPair> batch, std::uint64_t seed,
                              std::vector<TwoPassTrace>* traces) {
  if (!model.config().past_conditioned()) {
    fail(ErrorCode::InvalidConfig, "two-pass training needs the past_conditioned_vae variant");
  }
  if (batch.empty()) fail(ErrorCode::EmptyList, "empty training batch");
  const ModelConfig& cfg = model.config();
  Rng rng(seed);
  TermSums sums;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const SegmentPair& pair = batch[i];
    if (pair.first.motion.frame_count() < cfg.past_frames) {
      fail(ErrorCode::PastWindowTooLarge, fmt::format("P={} exceeds the {}-frame first segment", cfg.past_frames,
                                                      pair.first.motion.frame_count()));
    }
    Rng sample_rng = rng.fork(i);
    const ad::Tensor zero = model.zero_past();
    const SampleLoss first = sample_loss(model, pair.first, &zero, sample_rng.next_u64());
    const ad::Tensor past = model.past_graph(first.generated);
    const SampleLoss second = sample_loss(model, pair.second, &past, sample_rng.next_u64());
    const SampleLoss summed{ad::add(first.reconstruction, second.reconstruction), ad::add(first.kl, second.kl),
                            ad::add(first.alignment, second.alignment), {}};
    sums.push(summed);
    if (traces) {
      traces->push_back(TwoPassTrace{first.generated, past,
                                     combine(cfg, first.reconstruction, first.kl, first.alignment),
                                     combine(cfg, second.reconstruction, second.kl, second.alignment)});
    }
  }
  return combine(cfg, average(sums.rec), average(sums.kl), average(sums.align));
}

void AdamOptimizer::step(nn::ParameterStore& store) {
  const auto& params = store.parameters();
  if (first_moment_.empty()) {
    for (const auto& p : params) {
      first_moment_.push_back(ad::Matrix::Zero(p.tensor.rows(), p.tensor.cols()));
      second_moment_.push_back(ad::Matrix::Zero(p.tensor.rows(), p.tensor.cols()));
    }
  }
  if (first_moment_.size() != params.size()) fail(ErrorCode::ShapeMismatch, "optimizer bound to another model");

  double scale = 1.0;
  if (options_.clip_norm > 0.0) {
    double norm_sq = 0.0;
    for (const auto& p : params) norm_sq += p.tensor.grad().squaredNorm();
    const double norm = std::sqrt(norm_sq);
    if (norm > options_.clip_norm) scale = options_.clip_norm / norm;
  }

  ++steps_;
  const double correction1 = 1.0 - std::pow(options_.beta1, steps_);
  const double correction2 = 1.0 - std::pow(options_.beta2, steps_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Tensor t = params[i].tensor;
    const ad::Matrix g = t.grad() * scale;
    first_moment_[i] = options_.beta1 * first_moment_[i] + (1.0 - options_.beta1) * g;
    second_moment_[i] = options_.beta2 * second_moment_[i] + (1.0 - options_.beta2) * g.cwiseProduct(g);
    if (options_.learning_rate == 0.0) continue;
    const ad::Matrix m_hat = first_moment_[i] / correction1;
    const ad::Matrix v_hat = second_moment_[i] / correction2;
    t.mutable_value().array() -= options_.learning_rate * m_hat.array() / (v_hat.array().sqrt() + options_.epsilon);
  }
}

LossReport train_step(MotionModel& model, AdamOptimizer& optimizer, std::span<const TrainingSample> batch,
                      std::uint64_t seed) {
  model.parameters().zero_grad();
  LossTerms terms = loss_graph(model, batch, seed);
  require_finite(terms);
  ad::backward(terms.total);
  optimizer.step(model.parameters());
  return terms.report();
}

LossReport teach_two_pass_step(MotionModel& model, AdamOptimizer& optimizer, std::span<const SegmentPair> batch,
                               std::uint64_t seed) {
  model.parameters().zero_grad();
  LossTerms terms = two_pass_loss_graph(model, batch, seed);
  require_finite(terms);
  ad::backward(terms.total);
  optimizer.step(model.parameters());
  return terms.report();
}

}  // namespace promptmotion
