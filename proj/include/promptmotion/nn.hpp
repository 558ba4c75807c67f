#pragma once

#include <optional>
#include <string>
#include <vector>

#include "promptmotion/autodiff.hpp"
#include "promptmotion/random.hpp"

namespace promptmotion::nn {

struct NamedParameter {
  std::string name;
  ad::Tensor tensor;
};

// Owns every trainable leaf of a model, in registration order.
class ParameterStore {
 public:
  ad::Tensor add(std::string name, ad::Matrix init);

  ad::Tensor xavier(const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng);
  ad::Tensor zeros(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  ad::Tensor ones(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  ad::Tensor uniform(const std::string& name, Eigen::Index rows, Eigen::Index cols, double limit, Rng& rng);

  const std::vector<NamedParameter>& parameters() const noexcept { return params_; }
  const ad::Tensor& find(const std::string& name) const;
  std::size_t scalar_count() const;

  void zero_grad() const;

  // Copies values (not gradients) from `other`; names and shapes must match.
  void load_values(const ParameterStore& other);

 private:
  std::vector<NamedParameter> params_;
};

class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng);
  ad::Tensor operator()(const ad::Tensor& x) const;

 private:
  ad::Tensor weight_;
  ad::Tensor bias_;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterStore& store, const std::string& name, Eigen::Index width);
  ad::Tensor operator()(const ad::Tensor& x) const;

 private:
  ad::Tensor gain_;
  ad::Tensor bias_;
};

// Multi-head self-attention. key_mask[i] false hides row i as a key.
class SelfAttention {
 public:
  SelfAttention() = default;
  SelfAttention(ParameterStore& store, const std::string& name, Eigen::Index width, int heads, Rng& rng);
  ad::Tensor operator()(const ad::Tensor& x, const std::vector<bool>* key_mask = nullptr) const;

 private:
  Linear query_, key_, value_, output_;
  int heads_ = 1;
};

// Pre-norm transformer block: x + attn(ln(x)), then x + mlp(ln(x)).
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(ParameterStore& store, const std::string& name, Eigen::Index width, int heads,
                   Eigen::Index ff_width, Rng& rng);
  ad::Tensor operator()(const ad::Tensor& x, const std::vector<bool>* key_mask = nullptr) const;

 private:
  LayerNorm norm_attn_, norm_ff_;
  SelfAttention attention_;
  Linear ff_in_, ff_out_;
};

class TransformerEncoder {
 public:
  TransformerEncoder() = default;
  TransformerEncoder(ParameterStore& store, const std::string& name, int layers, Eigen::Index width, int heads,
                     Eigen::Index ff_width, Rng& rng);
  ad::Tensor operator()(const ad::Tensor& x, const std::vector<bool>* key_mask = nullptr) const;

 private:
  std::vector<TransformerBlock> blocks_;
  LayerNorm final_norm_;
};

// Sinusoidal position table, rows x width.
ad::Matrix sinusoidal_positions(Eigen::Index rows, Eigen::Index width);

}  // namespace promptmotion::nn
