#include "promptmotion/nn.hpp"

#include <cmath>

#include <fmt/format.h>

#include "promptmotion/errors.hpp"

namespace promptmotion::nn {

ad::Tensor ParameterStore::add(std::string name, ad::Matrix init) {
  for (const auto& p : params_) {
    if (p.name == name) fail(ErrorCode::InvalidConfig, fmt::format("duplicate parameter '{}'", name));
  }
  ad::Tensor t = ad::variable(std::move(init));
  params_.push_back({std::move(name), t});
  return t;
}

ad::Tensor ParameterStore::xavier(const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  return uniform(name, in, out, limit, rng);
}

ad::Tensor ParameterStore::zeros(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  return add(name, ad::Matrix::Zero(rows, cols));
}

ad::Tensor ParameterStore::ones(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  return add(name, ad::Matrix::Ones(rows, cols));
}

ad::Tensor ParameterStore::uniform(const std::string& name, Eigen::Index rows, Eigen::Index cols, double limit,
                                   Rng& rng) {
  ad::Matrix m(rows, cols);
  // Column-major fill order is part of the seeded-init contract.
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
  return add(name, std::move(m));
}

const ad::Tensor& ParameterStore::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.tensor;
  }
  fail(ErrorCode::InvalidConfig, fmt::format("no parameter '{}'", name));
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.tensor.value().size());
  return n;
}

void ParameterStore::zero_grad() const {
  for (const auto& p : params_) ad::zero_grad(p.tensor);
}

void ParameterStore::load_values(const ParameterStore& other) {
  if (other.params_.size() != params_.size()) {
    fail(ErrorCode::ShapeMismatch, fmt::format("parameter count {} != {}", other.params_.size(), params_.size()));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& src = other.params_[i];
    auto& dst = params_[i];
    if (src.name != dst.name || src.tensor.rows() != dst.tensor.rows() || src.tensor.cols() != dst.tensor.cols()) {
      fail(ErrorCode::ShapeMismatch, fmt::format("parameter '{}' does not match '{}'", src.name, dst.name));
    }
    dst.tensor.mutable_value() = src.tensor.value();
  }
}

Linear::Linear(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng)
    : weight_(store.xavier(name + ".weight", in, out, rng)), bias_(store.zeros(name + ".bias", 1, out)) {}

ad::Tensor Linear::operator()(const ad::Tensor& x) const { return ad::add_row(ad::matmul(x, weight_), bias_); }

LayerNorm::LayerNorm(ParameterStore& store, const std::string& name, Eigen::Index width)
    : gain_(store.ones(name + ".gain", 1, width)), bias_(store.zeros(name + ".bias", 1, width)) {}

ad::Tensor LayerNorm::operator()(const ad::Tensor& x) const { return ad::layer_norm_rows(x, gain_, bias_); }

SelfAttention::SelfAttention(ParameterStore& store, const std::string& name, Eigen::Index width, int heads, Rng& rng)
    : query_(store, name + ".query", width, width, rng),
      key_(store, name + ".key", width, width, rng),
      value_(store, name + ".value", width, width, rng),
      output_(store, name + ".output", width, width, rng),
      heads_(heads) {
  if (heads < 1 || width % heads != 0) {
    fail(ErrorCode::InvalidConfig, fmt::format("width {} is not divisible by {} heads", width, heads));
  }
}

ad::Tensor SelfAttention::operator()(const ad::Tensor& x, const std::vector<bool>* key_mask) const {
  const Eigen::Index rows = x.rows();
  const Eigen::Index head_width = x.cols() / heads_;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_width));

  std::optional<ad::Matrix> bias;
  if (key_mask) {
    if (static_cast<Eigen::Index>(key_mask->size()) != rows) {
      fail(ErrorCode::ShapeMismatch, "attention key mask length differs from sequence length");
    }
    bias = ad::Matrix::Zero(rows, rows);
    for (Eigen::Index c = 0; c < rows; ++c) {
      if (!(*key_mask)[static_cast<std::size_t>(c)]) bias->col(c).setConstant(-1e9);
    }
  }

  const ad::Tensor q = query_(x);
  const ad::Tensor k = key_(x);
  const ad::Tensor v = value_(x);
  std::vector<ad::Tensor> head_outputs;
  head_outputs.reserve(static_cast<std::size_t>(heads_));
  for (int h = 0; h < heads_; ++h) {
    const Eigen::Index start = h * head_width;
    ad::Tensor qh = ad::slice_cols(q, start, head_width);
    ad::Tensor kh = ad::slice_cols(k, start, head_width);
    ad::Tensor vh = ad::slice_cols(v, start, head_width);
    ad::Tensor scores = ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt);
    ad::Tensor weights = ad::softmax_rows(scores, bias ? &*bias : nullptr);
    head_outputs.push_back(ad::matmul(weights, vh));
  }
  return output_(heads_ == 1 ? head_outputs.front() : ad::concat_cols(head_outputs));
}

TransformerBlock::TransformerBlock(ParameterStore& store, const std::string& name, Eigen::Index width, int heads,
                                   Eigen::Index ff_width, Rng& rng)
    : norm_attn_(store, name + ".norm_attn", width),
      norm_ff_(store, name + ".norm_ff", width),
      attention_(store, name + ".attn", width, heads, rng),
      ff_in_(store, name + ".ff_in", width, ff_width, rng),
      ff_out_(store, name + ".ff_out", ff_width, width, rng) {}

ad::Tensor TransformerBlock::operator()(const ad::Tensor& x, const std::vector<bool>* key_mask) const {
  ad::Tensor h = ad::add(x, attention_(norm_attn_(x), key_mask));
  return ad::add(h, ff_out_(ad::gelu(ff_in_(norm_ff_(h)))));
}

TransformerEncoder::TransformerEncoder(ParameterStore& store, const std::string& name, int layers,
                                       Eigen::Index width, int heads, Eigen::Index ff_width, Rng& rng) {
  for (int l = 0; l < layers; ++l) {
    blocks_.emplace_back(store, fmt::format("{}.block{}", name, l), width, heads, ff_width, rng);
  }
  final_norm_ = LayerNorm(store, name + ".final_norm", width);
}

ad::Tensor TransformerEncoder::operator()(const ad::Tensor& x, const std::vector<bool>* key_mask) const {
  ad::Tensor h = x;
  for (const auto& block : blocks_) h = block(h, key_mask);
  return final_norm_(h);
}

ad::Matrix sinusoidal_positions(Eigen::Index rows, Eigen::Index width) {
  ad::Matrix table(rows, width);
  for (Eigen::Index pos = 0; pos < rows; ++pos) {
    for (Eigen::Index i = 0; i < width; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(width));
      const double angle = static_cast<double>(pos) * rate;
      table(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return table;
}

}  // namespace promptmotion::nn
