#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trajllm/env.hpp"
#include "trajllm/trajmod.hpp"

namespace trajllm {

struct CurationConfig {
  double epsilon = 0.5;  // episode-return threshold
  double beta = 0.5;     // soft down-weight factor
  double step_threshold = 0.5;
  enum class ThresholdTarget { Reward, Rtg } step_threshold_target = ThresholdTarget::Rtg;
  LossMode mode = LossMode::V3;
  int window = 20;
  int stride = 1;
  int max_windows = 0;  // 0 keeps everything; otherwise uniform subsample
  uint64_t seed = 1;

  void validate() const;
};

CurationConfig::ThresholdTarget threshold_target_from_name(const std::string& name);
std::string threshold_target_name(CurationConfig::ThresholdTarget t);

// Training window: a slice of one episode whose RTGs were computed over the
// full episode before slicing.
struct TrajectoryWindow {
  uint32_t episode_id = 0;
  uint16_t start = 0;
  RtgTrajectory slice;
  std::vector<float> step_weights;
};

// suffix sums of rewards over the whole episode
RtgTrajectory compute_rtg(const Trajectory& traj);

struct FilterReport {
  std::vector<Trajectory> kept;
  size_t dropped = 0;
};

// keeps episodes with cumulative reward >= epsilon ("below" drops strictly)
FilterReport filter_trajectories(std::vector<Trajectory> dataset, double epsilon);

// Dense strided windows, deduplicated by (episode, start); optional uniform
// without-replacement subsample down to cfg.max_windows under cfg.seed.
std::vector<TrajectoryWindow> sample_windows(const std::vector<Trajectory>& dataset,
                                             const CurationConfig& cfg);

void assign_step_weights(TrajectoryWindow& window, const CurationConfig& cfg);

struct DatasetStats {
  std::vector<int64_t> return_hist;      // episode returns
  std::vector<int64_t> initial_rtg_hist; // window-initial RTGs
  double bin_width = 10.0;
  double below_epsilon_fraction = 0.0;   // long-tail share of episodes
  double initial_rtg_mean = 0.0;
  double initial_rtg_stddev = 0.0;
};

DatasetStats dataset_stats(const std::vector<Trajectory>& episodes,
                           const std::vector<TrajectoryWindow>& windows,
                           double epsilon, int max_episode_length);

void write_stats_csv(const DatasetStats& stats, const std::string& returns_path,
                     const std::string& initial_rtg_path,
                     const std::string& provenance);

// ---- on-disk formats ----

// One episode per line: {"meta":{...},"states":[[x,y,vx,vy],...],
// "actions":[[ax,ay],...],"rewards":[...]}. A sidecar manifest carries the
// checksum, episode count and env-config hash.
void write_trajectory_file(const std::string& path,
                           const std::vector<Trajectory>& episodes,
                           uint64_t env_config_hash, uint64_t run_config_hash,
                           uint64_t seed);
std::vector<Trajectory> read_trajectory_file(const std::string& path);

// Binary window file, little-endian: magic "TJWN", version u32, count u64,
// then per window: episode id u32, start u16, T u16, then T x
// (rtg f32, state 4xf32, action 2xf32, weight f32).
void write_window_file(const std::string& path,
                       const std::vector<TrajectoryWindow>& windows,
                       uint64_t run_config_hash, uint64_t seed);
std::vector<TrajectoryWindow> read_window_file(const std::string& path);

}  // namespace trajllm
