#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trajllm/data.hpp"
#include "trajllm/env.hpp"
#include "trajllm/model.hpp"
#include "trajllm/pretrain.hpp"
#include "trajllm/train.hpp"

namespace trajllm {

struct EvaluationConfig {
  int episodes = 100;
  std::vector<double> rtgs{50, 100, 150, 200, 250};
  uint64_t seed = 2;
  // baselines for the normalized score; NaN means "estimate by Monte Carlo"
  double r_random = std::numeric_limits<double>::quiet_NaN();
  double r_expert = std::numeric_limits<double>::quiet_NaN();
  int baseline_episodes = 100;
};

struct AnalysisConfig {
  int trajectories = 100;
  uint64_t seed = 5;
  std::string probe_text;  // empty: built-in null probe string
};

struct RunConfig {
  MazeConfig maze = MazeConfig::u_maze();
  CollectConfig collection;
  CurationConfig curation;
  ModelConfig model;
  TrainConfig training;
  EvaluationConfig evaluation;
  PretrainConfig pretrain;
  AnalysisConfig analysis;
  std::string training_prompt = "compact";  // compact|full

  // tracks which seeds the file set, for the env-var fallback
  bool collection_seed_set = false;
  bool curation_seed_set = false;
  bool training_seed_set = false;
  bool evaluation_seed_set = false;
  bool pretrain_seed_set = false;
  bool analysis_seed_set = false;

  std::vector<int> prompt_ids() const;
  void validate() const;          // cross-field checks
  std::string normalized() const; // canonical key=value text, re-parseable
  uint64_t hash() const;          // fnv1a over normalized()
};

// Parses the flat sectioned key=value format. Unknown sections or keys are
// rejected with their path. An empty file yields all defaults.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

// --seed override > config value > TRAJLLM_SEED > built-in default
void apply_seed_override(RunConfig& cfg, const std::string& env_seed,
                         bool has_flag, uint64_t flag_seed);

}  // namespace trajllm
