#include "trajllm/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace trajllm {

void zero_grads(ParamList& params) {
  for (auto& p : params) p.tensor.zero_grad();
}

float clip_global_norm(ParamList& params, float max_norm) {
  double sq = 0.0;
  for (auto& p : params) {
    for (float g : p.tensor.grad()) sq += static_cast<double>(g) * g;
  }
  const float norm = static_cast<float>(std::sqrt(sq));
  if (max_norm > 0.0f && norm > max_norm) {
    const float s = max_norm / norm;
    for (auto& p : params) {
      auto* node = p.tensor.node();
      for (auto& g : node->grad) g *= s;
    }
  }
  return norm;
}

AdamW::AdamW(const ParamList& params, AdamWConfig cfg) : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    m_.emplace_back(static_cast<size_t>(p.tensor.numel()), 0.0f);
    v_.emplace_back(static_cast<size_t>(p.tensor.numel()), 0.0f);
  }
}

void AdamW::step(ParamList& params, float lr_override) {
  if (params.size() != m_.size()) {
    throw std::invalid_argument("AdamW::step: optimizer built for " +
                                std::to_string(m_.size()) + " parameters, got " +
                                std::to_string(params.size()));
  }
  const float lr = lr_override >= 0.0f ? lr_override : cfg_.lr;
  ++t_;
  const float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(t_));
  const float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(t_));
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi].tensor;
    if (static_cast<size_t>(p.numel()) != m_[pi].size()) {
      throw std::invalid_argument("AdamW::step: state/param shape mismatch for " +
                                  params[pi].name);
    }
    auto* node = p.node();
    node->ensure_grad();
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (size_t i = 0; i < m.size(); ++i) {
      const float g = node->grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0f - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0f - cfg_.beta2) * g * g;
      const float mhat = m[i] / bc1;
      const float vhat = v[i] / bc2;
      node->data[i] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) +
                             cfg_.weight_decay * node->data[i]);
    }
  }
}

}  // namespace trajllm
