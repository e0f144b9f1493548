#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trajllm/model.hpp"
#include "trajllm/optim.hpp"

namespace trajllm {

// Binary checkpoint: magic "TRJL", version u32, length-prefixed UTF-8 config
// block (key=value lines), tensor count u32, then per tensor
// {name len u16 + UTF-8, ndim u8, dims u32 x ndim, f32 LE payload}.
struct Checkpoint {
  ModelConfig config;
  int64_t global_step = 0;
  uint64_t config_hash = 0;
  uint64_t seed = 0;
  int64_t opt_timestep = -1;  // -1: no optimizer state stored
  std::vector<NamedParam> tensors;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

  const Tensor* find(const std::string& name) const;
};

Checkpoint make_checkpoint(const ModelConfig& config, const ParamList& params,
                           int64_t global_step, uint64_t config_hash,
                           uint64_t seed, const AdamW* opt = nullptr);

// Throws naming the first differing field.
void check_config_match(const ModelConfig& expected, const ModelConfig& actual);

// Strict: every model parameter must be present with its exact shape.
void apply_checkpoint(const Checkpoint& ckpt, ParamList& params);

// Warm start: copies tensors whose name and shape match, leaves the rest as
// initialized. Returns how many were copied.
size_t apply_checkpoint_partial(const Checkpoint& ckpt, ParamList& params);

// Restores AdamW moment vectors saved alongside the parameters.
void apply_optimizer_state(const Checkpoint& ckpt, const ParamList& params,
                           AdamW& opt);

}  // namespace trajllm
