#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "trajllm/rng.hpp"

namespace trajllm {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
int64_t shape_numel(const Shape& s);

struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

// One node of the recorded computation. Ops link nodes parent-wise; the tape
// consumed by backward() is the reverse topological order over these links.
struct TensorNode {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;  // allocated lazily, same length as data
  bool requires_grad = false;
  bool consumed = false;  // set once backward() has run through this node
  std::vector<NodePtr> parents;
  std::function<void(TensorNode&)> backward_fn;

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0f);
  }
};

// Value handle over a graph node. Copies share the node, like a shared_ptr.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<float> data,
                          bool requires_grad = false);
  static Tensor randn(Shape shape, Rng& rng, float stddev,
                      bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  int64_t numel() const { return node_->numel(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const float> data() const { return node_->data; }
  std::span<float> mutable_data() { return node_->data; }
  std::span<const float> grad() const { return node_->grad; }
  float item() const;
  float at(int64_t i) const { return node_->data[static_cast<size_t>(i)]; }
  float at(int r, int c) const {
    return node_->data[static_cast<size_t>(r) * dim(1) + c];
  }

  void zero_grad() {
    if (node_->requires_grad) node_->ensure_grad();
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0f);
  }

  TensorNode* node() const { return node_.get(); }
  const NodePtr& node_ptr() const { return node_; }

 private:
  NodePtr node_;
};

// RAII guard: ops executed while one is alive record nothing on the tape.
struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

bool grad_enabled();

// ---- elementwise / structural ops ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);
// broadcast a [n] vector over every row of a [m x n] matrix
Tensor add_rows(const Tensor& a, const Tensor& v);
// scale row i of a [m x n] matrix by w[i]
Tensor mul_rows(const Tensor& a, const Tensor& w);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor gather_rows(const Tensor& x, std::vector<int> indices);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& x, int c0, int c1);
Tensor concat_cols(const std::vector<Tensor>& parts);

// ---- nonlinearities / reductions ----
Tensor softmax_lastdim(const Tensor& x);
// rowwise softmax over the lower triangle of an [L x L] score matrix;
// entries above the diagonal come out exactly zero
Tensor causal_softmax(const Tensor& scores);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  float eps = 1e-5f);
Tensor gelu(const Tensor& x);
Tensor tanh_op(const Tensor& x);
Tensor sum_all(const Tensor& x);
Tensor mean_of(const std::vector<Tensor>& scalars);
// mean cross-entropy of rowwise logits against integer targets
Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& targets);

// Reverse-mode sweep from a scalar loss. `seed` is the incoming dL/dloss,
// useful when per-sample losses are backed through one at a time.
void backward(const Tensor& loss, float seed = 1.0f);

}  // namespace trajllm
