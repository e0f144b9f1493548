#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "trajllm/env.hpp"
#include "trajllm/trajmod.hpp"

namespace trajllm {

struct RolloutResult {
  double commanded_rtg = 0.0;
  double achieved_return = 0.0;
  int steps = 0;
  bool success = false;  // return > 0
  Trajectory trajectory;
};

struct EvalReport {
  std::vector<RolloutResult> results;
  double return_mean = 0.0;
  double return_std = 0.0;
  double score_mean = 0.0;
  double score_std = 0.0;
  int episodes = 0;
};

// Test instrumentation: called once per step with the context RTG and the
// number of trajectory tokens in the fused sequence.
using RolloutHook = std::function<void(int step, double context_rtg, int traj_tokens)>;

struct RolloutOptions {
  std::vector<int> prompt_ids;
  int window = 20;
  int max_steps = 300;
  const RolloutHook* hook = nullptr;
};

// RTG-conditioned autoregressive control loop. The context keeps the most
// recent `window` timesteps; the running RTG is decremented by each observed
// reward and never clamped.
RolloutResult rollout(const DecisionModel& model, const MazeConfig& maze,
                      double initial_rtg, uint64_t seed,
                      const RolloutOptions& opts);

struct EvalOptions {
  RolloutOptions rollout;
  int episodes = 100;
  uint64_t base_seed = 0;  // episode e uses base_seed + e
  double r_random = 0.0;
  double r_expert = 1.0;
  int threads = 1;
};

EvalReport evaluate(const DecisionModel& model, const MazeConfig& maze,
                    double initial_rtg, const EvalOptions& opts);

struct RtgSweepRow {
  double commanded = 0.0;
  double achieved_mean = 0.0;
  double achieved_std = 0.0;
  double score_mean = 0.0;
  double score_std = 0.0;
};

struct RtgSweepResult {
  std::vector<RtgSweepRow> rows;
  double spearman = 0.0;  // commanded vs achieved mean
};

RtgSweepResult rtg_sweep(const DecisionModel& model, const MazeConfig& maze,
                         const std::vector<double>& rtg_list,
                         const EvalOptions& opts);

void write_sweep_csv(const RtgSweepResult& sweep, const std::string& path,
                     const std::string& provenance);

// rank correlation with averaged ties
double spearman_correlation(const std::vector<double>& x,
                            const std::vector<double>& y);

}  // namespace trajllm
