#pragma once

#include <string>
#include <vector>

#include "trajllm/tensor.hpp"

namespace trajllm {

struct NamedParam {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<NamedParam>;

void zero_grads(ParamList& params);

// Scales all gradients so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
float clip_global_norm(ParamList& params, float max_norm);

struct AdamWConfig {
  float lr = 3e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  float weight_decay = 0.01f;
};

// Decoupled-weight-decay Adam. State arrays are keyed by parameter order,
// which is stable for a given model.
class AdamW {
 public:
  explicit AdamW(const ParamList& params, AdamWConfig cfg = {});

  // One update from the gradients currently stored on the parameters.
  // `lr_override` < 0 keeps the configured rate.
  void step(ParamList& params, float lr_override = -1.0f);

  int64_t timestep() const { return t_; }
  const AdamWConfig& config() const { return cfg_; }

  // Exposed so checkpoints can round-trip optimizer state.
  std::vector<std::vector<float>>& first_moments() { return m_; }
  std::vector<std::vector<float>>& second_moments() { return v_; }
  void set_timestep(int64_t t) { t_ = t; }

 private:
  AdamWConfig cfg_;
  int64_t t_ = 0;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
};

}  // namespace trajllm
