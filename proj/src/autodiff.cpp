#include "promptmotion/autodiff.hpp"

#include <cmath>
#include <numbers>
#include <unordered_set>

#include <fmt/format.h>

#include "promptmotion/errors.hpp"

namespace promptmotion::ad {

namespace {

void accumulate(Node& node, const Matrix& g) {
  if (!node.requires_grad) return;
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

// Builds an op node; the backward closure is only kept if some input needs it.
Tensor make_op(Matrix value, std::vector<std::shared_ptr<Node>> inputs, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  for (const auto& in : inputs) node->requires_grad = node->requires_grad || in->requires_grad;
  if (node->requires_grad) {
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorCode::ShapeMismatch,
         fmt::format("{}: {}x{} vs {}x{}", op, a.rows(), a.cols(), b.rows(), b.cols()));
  }
}

}  // namespace

Matrix Tensor::grad() const {
  if (node_->grad.size() == 0) return Matrix::Zero(node_->value.rows(), node_->value.cols());
  return node_->grad;
}

Tensor constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Tensor(std::move(node));
}

Tensor variable(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Tensor(std::move(node));
}

Tensor detach(const Tensor& t) { return constant(t.value()); }

void zero_grad(const Tensor& leaf) { leaf.node()->grad.resize(0, 0); }

void backward(const Tensor& root) {
  if (root.rows() != 1 || root.cols() != 1) fail(ErrorCode::ShapeMismatch, "backward() needs a scalar root");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order without recursion depth limits.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  accumulate(*root.node(), Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && node->grad.size() != 0) node->backward(*node);
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    fail(ErrorCode::ShapeMismatch, fmt::format("matmul: {}x{} * {}x{}", a.rows(), a.cols(), b.rows(), b.cols()));
  }
  auto an = a.node(), bn = b.node();
  return make_op(a.value() * b.value(), {an, bn}, [an, bn](Node& self) {
    if (an->requires_grad) accumulate(*an, self.grad * bn->value.transpose());
    if (bn->requires_grad) accumulate(*bn, an->value.transpose() * self.grad);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto an = a.node(), bn = b.node();
  return make_op(a.value() + b.value(), {an, bn}, [an, bn](Node& self) {
    accumulate(*an, self.grad);
    accumulate(*bn, self.grad);
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    fail(ErrorCode::ShapeMismatch, fmt::format("add_row: {}x{} + {}x{}", a.rows(), a.cols(), row.rows(), row.cols()));
  }
  auto an = a.node(), rn = row.node();
  Matrix value = a.value().rowwise() + row.value().row(0);
  return make_op(std::move(value), {an, rn}, [an, rn](Node& self) {
    accumulate(*an, self.grad);
    if (rn->requires_grad) accumulate(*rn, self.grad.colwise().sum());
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto an = a.node(), bn = b.node();
  return make_op(a.value() - b.value(), {an, bn}, [an, bn](Node& self) {
    accumulate(*an, self.grad);
    if (bn->requires_grad) accumulate(*bn, -self.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto an = a.node(), bn = b.node();
  return make_op(a.value().cwiseProduct(b.value()), {an, bn}, [an, bn](Node& self) {
    if (an->requires_grad) accumulate(*an, self.grad.cwiseProduct(bn->value));
    if (bn->requires_grad) accumulate(*bn, self.grad.cwiseProduct(an->value));
  });
}

Tensor scale(const Tensor& a, double s) {
  auto an = a.node();
  return make_op(a.value() * s, {an}, [an, s](Node& self) { accumulate(*an, self.grad * s); });
}

Tensor add_scalar(const Tensor& a, double s) {
  auto an = a.node();
  return make_op(a.value().array() + s, {an}, [an](Node& self) { accumulate(*an, self.grad); });
}

Tensor square(const Tensor& a) {
  auto an = a.node();
  return make_op(a.value().array().square().matrix(), {an},
                 [an](Node& self) { accumulate(*an, 2.0 * self.grad.cwiseProduct(an->value)); });
}

Tensor exp(const Tensor& a) {
  auto an = a.node();
  Matrix value = a.value().array().exp().matrix();
  return make_op(value, {an}, [an](Node& self) { accumulate(*an, self.grad.cwiseProduct(self.value)); });
}

Tensor gelu(const Tensor& a) {
  constexpr double c = 0.7978845608028654;  // sqrt(2 / pi)
  constexpr double k = 0.044715;
  auto an = a.node();
  const Matrix& x = a.value();
  Matrix value(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    value.data()[i] = 0.5 * v * (1.0 + std::tanh(c * (v + k * v * v * v)));
  }
  return make_op(std::move(value), {an}, [an](Node& self) {
    const Matrix& x = an->value;
    Matrix g(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double v = x.data()[i];
      const double t = std::tanh(c * (v + k * v * v * v));
      const double dt = (1.0 - t * t) * c * (1.0 + 3.0 * k * v * v);
      g.data()[i] = self.grad.data()[i] * (0.5 * (1.0 + t) + 0.5 * v * dt);
    }
    accumulate(*an, g);
  });
}

Tensor transpose(const Tensor& a) {
  auto an = a.node();
  return make_op(a.value().transpose(), {an}, [an](Node& self) { accumulate(*an, self.grad.transpose()); });
}

Tensor sum(const Tensor& a) {
  auto an = a.node();
  Matrix value(1, 1);
  value(0, 0) = a.value().sum();
  return make_op(std::move(value), {an}, [an](Node& self) {
    accumulate(*an, Matrix::Constant(an->value.rows(), an->value.cols(), self.grad(0, 0)));
  });
}

Tensor mean(const Tensor& a) {
  const auto count = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / count);
}

Tensor softmax_rows(const Tensor& a, const Matrix* bias) {
  Matrix logits = a.value();
  if (bias) {
    if (bias->rows() != logits.rows() || bias->cols() != logits.cols()) {
      fail(ErrorCode::ShapeMismatch, "softmax bias shape differs from logits");
    }
    logits += *bias;
  }
  Matrix value(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    auto e = (logits.row(r).array() - m).exp();
    value.row(r) = e / e.sum();
  }
  auto an = a.node();
  return make_op(std::move(value), {an}, [an](Node& self) {
    const Matrix& s = self.value;
    Matrix g = s.cwiseProduct(self.grad);
    Eigen::VectorXd row_dot = g.rowwise().sum();
    g -= s.cwiseProduct(row_dot.replicate(1, s.cols()));
    accumulate(*an, g);
  });
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const Eigen::Index cols = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != cols || beta.rows() != 1 || beta.cols() != cols) {
    fail(ErrorCode::ShapeMismatch, "layer_norm: gain/bias must be 1 x features");
  }
  const Matrix& in = x.value();
  Matrix normalized(in.rows(), cols);
  Eigen::VectorXd inv_std(in.rows());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const double mu = in.row(r).mean();
    const double var = (in.row(r).array() - mu).square().mean();
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    normalized.row(r) = (in.row(r).array() - mu) * inv_std[r];
  }
  Matrix value = (normalized.array().rowwise() * gamma.value().row(0).array()).matrix();
  value.rowwise() += beta.value().row(0);

  auto xn = x.node(), gn = gamma.node(), bn = beta.node();
  return make_op(std::move(value), {xn, gn, bn},
                 [xn, gn, bn, normalized = std::move(normalized), inv_std = std::move(inv_std)](Node& self) {
                   const Matrix& g = self.grad;
                   if (gn->requires_grad) accumulate(*gn, g.cwiseProduct(normalized).colwise().sum());
                   if (bn->requires_grad) accumulate(*bn, g.colwise().sum());
                   if (xn->requires_grad) {
                     Matrix dnorm = (g.array().rowwise() * gn->value.row(0).array()).matrix();
                     Matrix dx(dnorm.rows(), dnorm.cols());
                     for (Eigen::Index r = 0; r < dnorm.rows(); ++r) {
                       const double m1 = dnorm.row(r).mean();
                       const double m2 = dnorm.row(r).cwiseProduct(normalized.row(r)).mean();
                       dx.row(r) = inv_std[r] * (dnorm.row(r).array() - m1 - normalized.row(r).array() * m2);
                     }
                     accumulate(*xn, dx);
                   }
                 });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) fail(ErrorCode::ShapeMismatch, "concat_rows of nothing");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  std::vector<std::shared_ptr<Node>> inputs;
  for (const auto& p : parts) {
    if (p.cols() != cols) fail(ErrorCode::ShapeMismatch, "concat_rows: column counts differ");
    rows += p.rows();
    inputs.push_back(p.node());
  }
  Matrix value(rows, cols);
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    value.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  return make_op(std::move(value), inputs, [inputs](Node& self) {
    Eigen::Index off = 0;
    for (const auto& in : inputs) {
      const Eigen::Index r = in->value.rows();
      if (in->requires_grad) accumulate(*in, self.grad.middleRows(off, r));
      off += r;
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) fail(ErrorCode::ShapeMismatch, "concat_cols of nothing");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  std::vector<std::shared_ptr<Node>> inputs;
  for (const auto& p : parts) {
    if (p.rows() != rows) fail(ErrorCode::ShapeMismatch, "concat_cols: row counts differ");
    cols += p.cols();
    inputs.push_back(p.node());
  }
  Matrix value(rows, cols);
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    value.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  return make_op(std::move(value), inputs, [inputs](Node& self) {
    Eigen::Index off = 0;
    for (const auto& in : inputs) {
      const Eigen::Index c = in->value.cols();
      if (in->requires_grad) accumulate(*in, self.grad.middleCols(off, c));
      off += c;
    }
  });
}

Tensor slice_rows(const Tensor& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    fail(ErrorCode::ShapeMismatch, fmt::format("slice_rows [{}, {}) of {} rows", start, start + count, a.rows()));
  }
  auto an = a.node();
  return make_op(a.value().middleRows(start, count), {an}, [an, start, count](Node& self) {
    Matrix g = Matrix::Zero(an->value.rows(), an->value.cols());
    g.middleRows(start, count) = self.grad;
    accumulate(*an, g);
  });
}

Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    fail(ErrorCode::ShapeMismatch, fmt::format("slice_cols [{}, {}) of {} cols", start, start + count, a.cols()));
  }
  auto an = a.node();
  return make_op(a.value().middleCols(start, count), {an}, [an, start, count](Node& self) {
    Matrix g = Matrix::Zero(an->value.rows(), an->value.cols());
    g.middleCols(start, count) = self.grad;
    accumulate(*an, g);
  });
}

}  // namespace promptmotion::ad
