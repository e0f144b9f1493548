#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trajllm/checkpoint.hpp"
#include "trajllm/data.hpp"
#include "trajllm/rollout.hpp"
#include "trajllm/trajmod.hpp"

namespace trajllm {

struct TrainConfig {
  int batch_size = 16;
  float lr = 3e-4f;
  int epochs = 5;
  int max_steps = 0;  // 0: derive total steps from epochs
  int eval_every = 200;
  int eval_episodes = 16;
  double eval_rtg = 250.0;
  uint64_t seed = 1;
  int warmup_steps = 100;
  float weight_decay = 0.01f;
  float clip_norm = 1.0f;  // <= 0 disables clipping
  LossMode loss_mode = LossMode::V3;
  std::string init_checkpoint;  // empty: random init

  void validate() const;
};

// Linear warmup to the peak rate, then cosine decay to exactly zero at
// `total_steps`.
double lr_at(const TrainConfig& cfg, int64_t step, int64_t total_steps);

// One batch: per-window fused sequences with targets aligned so the hidden
// state at each state token predicts that step's action. Windows shorter
// than `window` are padded with zero-weight, invalid steps.
std::vector<FusedSequence> make_batch(const DecisionModel& model,
                                      const std::vector<const TrajectoryWindow*>& windows,
                                      const std::vector<int>& prompt_ids,
                                      int window);

// Forward + loss for one prepared sequence.
Tensor sequence_loss(const DecisionModel& model, FusedSequence& fused,
                     LossMode mode);

struct TrainOptions {
  TrainConfig cfg;
  int window = 20;
  std::vector<int> prompt_ids;
  MazeConfig maze;  // periodic-eval environment
  double r_random = 0.0;
  double r_expert = 1.0;
  int eval_threads = 2;
  std::string metrics_path;    // empty: no CSV
  std::string best_ckpt_path;  // empty: keep best in memory only
  uint64_t config_hash = 0;
};

struct TrainResult {
  int64_t total_steps = 0;
  double final_loss = 0.0;
  double best_eval_return = 0.0;
  double best_eval_score = 0.0;
  int64_t best_step = -1;  // -1: never evaluated
  std::optional<Checkpoint> best;
};

// Supervised loop: shuffled minibatches, weighted-MSE action loss, AdamW with
// warmup+cosine schedule, periodic environment evaluation, best-checkpoint
// retention. Aborts with an error if the loss turns NaN.
TrainResult train_model(DecisionModel& model,
                        const std::vector<TrajectoryWindow>& windows,
                        const TrainOptions& opts);

}  // namespace trajllm
