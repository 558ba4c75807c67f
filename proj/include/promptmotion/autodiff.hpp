#pragma once

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <span>
#include <vector>

// Minimal reverse-mode automatic differentiation over dense double matrices.
// Rows are sequence positions (tokens, frames); columns are features.
namespace promptmotion::ad {

using Matrix = Eigen::MatrixXd;

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  bool defined() const noexcept { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  // Zero matrix of the right shape when no gradient reached this node.
  Matrix grad() const;
  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double item() const { return node_->value(0, 0); }

  const std::shared_ptr<Node>& node() const noexcept { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

Tensor constant(Matrix value);
// A leaf whose gradient accumulates across backward() calls.
Tensor variable(Matrix value);
Tensor detach(const Tensor& t);

void zero_grad(const Tensor& leaf);

// Seeds d(root)/d(root) = 1 and propagates to every reachable node. `root`
// must be 1 x 1.
void backward(const Tensor& root);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
// a (n x c) + row (1 x c) broadcast over rows.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor square(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor gelu(const Tensor& a);
Tensor transpose(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Row softmax with an additive constant bias (e.g. -1e9 on masked keys).
Tensor softmax_rows(const Tensor& a, const Matrix* bias = nullptr);
Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& a, Eigen::Index start, Eigen::Index count);
Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }

}  // namespace promptmotion::ad
