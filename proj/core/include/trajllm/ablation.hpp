#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trajllm/config.hpp"
#include "trajllm/train.hpp"

namespace trajllm {

// Shared inputs for a family of ablation cells: one collected episode pool,
// measured baselines, and the prompt.
struct SweepContext {
  MazeConfig maze;
  std::vector<Trajectory> pool;
  double r_random = 0.0;
  double r_expert = 1.0;
  std::vector<int> prompt_ids;
  uint64_t config_hash = 0;
};

struct AblationSpec {
  std::string label;
  ModelConfig model;
  int data_windows = 4000;
  LossMode mode = LossMode::V3;
  double epsilon = 0.5;
  bool pretrain_init = false;
  std::string pretrain_checkpoint;  // used when pretrain_init is set
  uint64_t seed = 1;
};

struct AblationResult {
  AblationSpec spec;
  int64_t param_count = 0;
  int windows_used = 0;
  double best_return = 0.0;
  double best_score = 0.0;
  int64_t steps_to_best = -1;
  double final_loss = 0.0;
};

// One full pipeline cell: curate the shared pool under the spec, train a
// fresh model, evaluate periodically, report the peak.
AblationResult run_ablation_cell(const SweepContext& ctx, const AblationSpec& spec,
                                 const TrainConfig& base_train,
                                 const CurationConfig& base_curation);

void write_ablation_csv(const std::vector<AblationResult>& rows,
                        const std::string& path, const std::string& provenance);

// Reported (not asserted): is best return nondecreasing in data size for the
// largest model of the sweep?
std::string monotonicity_report(const std::vector<AblationResult>& rows);

}  // namespace trajllm
