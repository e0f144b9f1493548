#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trajllm/model.hpp"
#include "trajllm/tensor.hpp"

namespace trajllm {

enum class TokenKind : uint8_t { Text, Rtg, State, Action };

enum class LossMode { None, V1, V2, V3 };

std::string loss_mode_name(LossMode mode);
LossMode loss_mode_from_name(const std::string& name);

// A trajectory slice carrying returns-to-go. RTGs are suffix sums over the
// full source episode, not the slice.
struct RtgTrajectory {
  int state_dim = 4;
  int action_dim = 2;
  std::vector<float> states;   // T * state_dim, row-major
  std::vector<float> actions;  // T * action_dim
  std::vector<float> rewards;  // T
  std::vector<float> rtgs;     // T

  int length() const { return static_cast<int>(rewards.size()); }
  void validate() const;  // length + range invariants
};

// Embedding stream after splicing trajectory triplets into the prompt.
struct FusedSequence {
  Tensor embeddings;  // L x d_model
  std::vector<TokenKind> kinds;
  std::vector<int> timesteps;  // global timestep per trajectory position, -1 for text
  std::vector<int> action_target_positions;  // fused indices of state tokens
  std::vector<float> action_targets;         // T * action_dim
  std::vector<float> step_weights;           // T
  std::vector<uint8_t> target_valid;         // T; 0 marks padding steps
  int steps = 0;

  int length() const { return static_cast<int>(kinds.size()); }
};

// Per-component linear projections plus a shared learned timestep embedding.
class TrajEncoder {
 public:
  TrajEncoder(const ModelConfig& cfg, uint64_t seed);

  // (rtg, state, action) triplets interleaved by timestep: row 3t holds the
  // projected rtg, 3t+1 the state, 3t+2 the action, all with the timestep-t
  // embedding added. `window_cap` is the sliding-window bound W.
  Tensor encode(const RtgTrajectory& window, int start_timestep,
                int window_cap) const;

  ParamList params();
  static int64_t parameter_count(const ModelConfig& cfg);

 private:
  ModelConfig cfg_;
  Tensor w_rtg_;
  Tensor w_state_;
  Tensor w_action_;
  Tensor timestep_emb_;
};

// Backbone + trajectory encoder + action head: the whole trainable model.
class DecisionModel {
 public:
  DecisionModel(const ModelConfig& cfg, uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  Backbone& backbone() { return backbone_; }
  const Backbone& backbone() const { return backbone_; }
  const TrajEncoder& encoder() const { return encoder_; }

  ParamList params();
  static int64_t parameter_count(const ModelConfig& cfg);
  int64_t parameter_count() const { return parameter_count(cfg_); }

  // Splices trajectory embeddings between the placeholder pair of the prompt.
  // The prompt must contain exactly one begin marker immediately followed by
  // one end marker.
  FusedSequence fuse(const std::vector<int>& prompt_ids, const Tensor& traj_emb,
                     int start_timestep) const;

  // Actions read from the hidden states at the state-token positions,
  // tanh-squashed into [-1, 1]. Returns [T x action_dim].
  Tensor predict_actions(const Tensor& hidden_final,
                         const FusedSequence& fused) const;

 private:
  ModelConfig cfg_;
  Backbone backbone_;
  TrajEncoder encoder_;
  Tensor head_w_, head_b_;
};

// Action-regression loss over one window. `weights` are per-step loss weights
// in [0,1]; `valid`, when given, marks padding steps that are excluded from
// both numerator and denominator in every mode.
//
//   none: sum(e) / (T*A)          e = squared error, T = valid steps
//   v1:   sum(w*e) / (A*sum(w))   hard 0/1 mask; all-zero mask is an error
//   v2:   sum(w*e) / (T*A)        soft down-weight, unnormalized
//   v3:   sum(w*e) / (A*sum(w))   soft down-weight, weighted-mean normalized
Tensor weighted_mse(const Tensor& pred, const Tensor& target,
                    const std::vector<float>& weights, LossMode mode,
                    const std::vector<uint8_t>* valid = nullptr);

}  // namespace trajllm
