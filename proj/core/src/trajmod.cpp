#include "trajllm/trajmod.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trajllm {

std::string loss_mode_name(LossMode mode) {
  switch (mode) {
    case LossMode::None: return "none";
    case LossMode::V1: return "v1";
    case LossMode::V2: return "v2";
    case LossMode::V3: return "v3";
  }
  return "none";
}

LossMode loss_mode_from_name(const std::string& name) {
  if (name == "none") return LossMode::None;
  if (name == "v1") return LossMode::V1;
  if (name == "v2") return LossMode::V2;
  if (name == "v3") return LossMode::V3;
  throw std::invalid_argument("unknown loss mode: " + name +
                              " (expected none|v1|v2|v3)");
}

void RtgTrajectory::validate() const {
  const size_t t = rewards.size();
  if (t == 0) throw std::invalid_argument("trajectory is empty");
  if (states.size() != t * static_cast<size_t>(state_dim) ||
      actions.size() != t * static_cast<size_t>(action_dim) || rtgs.size() != t) {
    throw std::invalid_argument("trajectory arrays are not length-consistent");
  }
  for (float v : states) {
    if (v < -1.0f || v > 1.0f) {
      throw std::invalid_argument("state component " + std::to_string(v) +
                                  " outside [-1, 1]");
    }
  }
  for (float v : actions) {
    if (v < -1.0f || v > 1.0f) {
      throw std::invalid_argument("action component " + std::to_string(v) +
                                  " outside [-1, 1]");
    }
  }
}

TrajEncoder::TrajEncoder(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.resolve_defaults();
  Rng rng(Rng::mix(seed, 0x74726a65ULL));
  const int d = cfg_.d_model;
  const float s = 0.02f;
  // bias-free component projections keep the encoder linear in its inputs;
  // per-timestep offsets come from the shared timestep embedding
  w_rtg_ = Tensor::randn({1, d}, rng, s, true);
  w_state_ = Tensor::randn({cfg_.state_dim, d}, rng, s, true);
  w_action_ = Tensor::randn({cfg_.action_dim, d}, rng, s, true);
  timestep_emb_ = Tensor::randn({cfg_.max_timesteps, d}, rng, s, true);
}

Tensor TrajEncoder::encode(const RtgTrajectory& window, int start_timestep,
                           int window_cap) const {
  const int t = window.length();
  if (t < 1) throw std::invalid_argument("encode: empty trajectory window");
  if (t > window_cap) {
    throw std::invalid_argument("encode: window of " + std::to_string(t) +
                                " steps exceeds W=" + std::to_string(window_cap));
  }
  if (window.state_dim != cfg_.state_dim || window.action_dim != cfg_.action_dim) {
    throw std::invalid_argument(
        "encode: trajectory dims (" + std::to_string(window.state_dim) + "," +
        std::to_string(window.action_dim) + ") do not match model config (" +
        std::to_string(cfg_.state_dim) + "," + std::to_string(cfg_.action_dim) + ")");
  }

  Tensor rtg_col = Tensor::from_data({t, 1}, window.rtgs);
  Tensor states = Tensor::from_data({t, cfg_.state_dim}, window.states);
  Tensor actions = Tensor::from_data({t, cfg_.action_dim}, window.actions);

  std::vector<int> steps(static_cast<size_t>(t));
  for (int i = 0; i < t; ++i) {
    steps[static_cast<size_t>(i)] =
        std::clamp(start_timestep + i, 0, cfg_.max_timesteps - 1);
  }
  Tensor te = gather_rows(timestep_emb_, steps);

  Tensor r = add(matmul(rtg_col, w_rtg_), te);
  Tensor s = add(matmul(states, w_state_), te);
  Tensor a = add(matmul(actions, w_action_), te);

  // stacked rows [r0..r(T-1), s0.., a0..] -> interleaved (r0, s0, a0, r1, ...)
  std::vector<int> perm(static_cast<size_t>(3 * t));
  for (int i = 0; i < t; ++i) {
    perm[static_cast<size_t>(3 * i)] = i;
    perm[static_cast<size_t>(3 * i + 1)] = t + i;
    perm[static_cast<size_t>(3 * i + 2)] = 2 * t + i;
  }
  return gather_rows(concat_rows({r, s, a}), perm);
}

ParamList TrajEncoder::params() {
  return {
      {"traj.rtg.w", w_rtg_},
      {"traj.state.w", w_state_},
      {"traj.action.w", w_action_},
      {"traj.timestep_emb", timestep_emb_},
  };
}

int64_t TrajEncoder::parameter_count(const ModelConfig& cfg) {
  const int64_t d = cfg.d_model;
  return (1 + cfg.state_dim + cfg.action_dim) * d +
         static_cast<int64_t>(cfg.max_timesteps) * d;
}

DecisionModel::DecisionModel(const ModelConfig& cfg, uint64_t seed)
    : cfg_(cfg), backbone_(cfg, seed), encoder_(backbone_.config(), seed) {
  cfg_ = backbone_.config();  // with defaults resolved
  Rng rng(Rng::mix(seed, 0x68656164ULL));
  head_w_ = Tensor::randn({cfg_.d_model, cfg_.action_dim}, rng, 0.02f, true);
  head_b_ = Tensor::zeros({cfg_.action_dim}, true);
}

ParamList DecisionModel::params() {
  ParamList out = backbone_.params();
  for (auto& p : encoder_.params()) out.push_back(p);
  out.push_back({"head.w", head_w_});
  out.push_back({"head.b", head_b_});
  return out;
}

int64_t DecisionModel::parameter_count(const ModelConfig& cfg) {
  ModelConfig c = cfg;
  c.resolve_defaults();
  return Backbone::parameter_count(c) + TrajEncoder::parameter_count(c) +
         static_cast<int64_t>(c.d_model) * c.action_dim + c.action_dim;
}

FusedSequence DecisionModel::fuse(const std::vector<int>& prompt_ids,
                                  const Tensor& traj_emb,
                                  int start_timestep) const {
  const auto& vocab = Vocabulary::standard();
  int begin_at = -1, end_at = -1;
  int begins = 0, ends = 0;
  for (size_t i = 0; i < prompt_ids.size(); ++i) {
    if (prompt_ids[i] == vocab.traj_begin_id()) {
      ++begins;
      begin_at = static_cast<int>(i);
    } else if (prompt_ids[i] == vocab.traj_end_id()) {
      ++ends;
      end_at = static_cast<int>(i);
    }
  }
  if (begins != 1 || ends != 1 || begin_at > end_at) {
    throw std::invalid_argument("fuse: prompt must contain exactly one "
                                "<|traj_begin|> followed by one <|traj_end|>");
  }
  if (end_at != begin_at + 1) {
    throw std::invalid_argument("fuse: tokens between the trajectory "
                                "placeholders are not allowed");
  }
  if (traj_emb.ndim() != 2 || traj_emb.dim(0) % 3 != 0 || traj_emb.dim(0) == 0 ||
      traj_emb.dim(1) != cfg_.d_model) {
    throw std::invalid_argument("fuse: trajectory embedding " +
                                shape_str(traj_emb.shape()) +
                                " is not a [3T x d_model] triplet stream");
  }
  const int t = traj_emb.dim(0) / 3;
  const int p = static_cast<int>(prompt_ids.size());

  Tensor text = backbone_.embed_tokens(prompt_ids);
  std::vector<int> pre_idx, post_idx;
  for (int i = 0; i <= begin_at; ++i) pre_idx.push_back(i);
  for (int i = end_at; i < p; ++i) post_idx.push_back(i);

  FusedSequence fused;
  fused.embeddings = concat_rows(
      {gather_rows(text, pre_idx), traj_emb, gather_rows(text, post_idx)});
  fused.steps = t;
  const int l = fused.embeddings.dim(0);
  fused.kinds.assign(static_cast<size_t>(l), TokenKind::Text);
  fused.timesteps.assign(static_cast<size_t>(l), -1);
  const int base = begin_at + 1;
  for (int i = 0; i < t; ++i) {
    fused.kinds[static_cast<size_t>(base + 3 * i)] = TokenKind::Rtg;
    fused.kinds[static_cast<size_t>(base + 3 * i + 1)] = TokenKind::State;
    fused.kinds[static_cast<size_t>(base + 3 * i + 2)] = TokenKind::Action;
    for (int k = 0; k < 3; ++k)
      fused.timesteps[static_cast<size_t>(base + 3 * i + k)] = start_timestep + i;
    fused.action_target_positions.push_back(base + 3 * i + 1);
  }
  return fused;
}

Tensor DecisionModel::predict_actions(const Tensor& hidden_final,
                                      const FusedSequence& fused) const {
  if (hidden_final.dim(0) != fused.length()) {
    throw std::invalid_argument("predict_actions: hidden length " +
                                std::to_string(hidden_final.dim(0)) +
                                " != fused length " +
                                std::to_string(fused.length()));
  }
  Tensor at_states = gather_rows(hidden_final, fused.action_target_positions);
  return tanh_op(add_rows(matmul(at_states, head_w_), head_b_));
}

Tensor weighted_mse(const Tensor& pred, const Tensor& target,
                    const std::vector<float>& weights, LossMode mode,
                    const std::vector<uint8_t>* valid) {
  if (pred.shape() != target.shape()) {
    throw std::invalid_argument("weighted_mse: shape mismatch " +
                                shape_str(pred.shape()) + " vs " +
                                shape_str(target.shape()));
  }
  const int t = pred.dim(0);
  const int a = pred.dim(1);
  if (static_cast<int>(weights.size()) != t) {
    throw std::invalid_argument("weighted_mse: " + std::to_string(weights.size()) +
                                " weights for " + std::to_string(t) + " steps");
  }
  for (float w : weights) {
    if (w < 0.0f || w > 1.0f) {
      throw std::invalid_argument("weighted_mse: weight " + std::to_string(w) +
                                  " outside [0, 1]");
    }
  }

  std::vector<float> eff(weights);
  int t_valid = t;
  if (valid) {
    t_valid = 0;
    for (int i = 0; i < t; ++i) {
      if ((*valid)[static_cast<size_t>(i)]) {
        ++t_valid;
      } else {
        eff[static_cast<size_t>(i)] = 0.0f;
      }
    }
    if (t_valid == 0) throw std::invalid_argument("weighted_mse: window is all padding");
  }

  double weight_sum = 0.0;
  for (int i = 0; i < t; ++i) weight_sum += eff[static_cast<size_t>(i)];

  double denom = 0.0;
  switch (mode) {
    case LossMode::None:
    case LossMode::V2:
      denom = static_cast<double>(t_valid) * a;
      break;
    case LossMode::V1:
    case LossMode::V3:
      if (weight_sum <= 0.0) {
        throw std::invalid_argument(
            "weighted_mse: degenerate window (all step weights zero under " +
            loss_mode_name(mode) + ")");
      }
      denom = weight_sum * a;
      break;
  }

  Tensor diff = sub(pred, target);
  Tensor sq = mul(diff, diff);
  Tensor wrow = Tensor::from_data({t}, std::move(eff));
  Tensor weighted = mul_rows(sq, wrow);
  return scale(sum_all(weighted), static_cast<float>(1.0 / denom));
}

}  // namespace trajllm
