#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "trajllm/rng.hpp"

namespace trajllm {

struct WallRect {
  float x0, y0, x1, y1;  // axis-aligned, x0 < x1, y0 < y1

  bool contains(float x, float y) const {
    return x > x0 && x < x1 && y > y0 && y < y1;
  }
};

struct MazeConfig {
  std::vector<WallRect> walls;
  std::array<float, 2> goal{-0.8f, 0.8f};
  float goal_radius = 0.1f;
  float dt = 0.1f;
  float velocity_decay = 0.95f;
  int max_episode_length = 300;
  std::array<float, 2> start{-0.8f, -0.8f};
  float start_jitter = 0.05f;

  // U-shaped default: one interior bar forces the long way around.
  static MazeConfig u_maze();
  void validate() const;
};

struct State {
  float x = 0.0f, y = 0.0f, vx = 0.0f, vy = 0.0f;
};

struct EnvAction {
  float ax = 0.0f, ay = 0.0f;
};

struct StepRecord {
  std::array<float, 4> state;   // observed before acting
  std::array<float, 2> action;  // executed action
  float reward;                 // received after acting
};

struct TrajectoryMeta {
  std::string policy;
  uint64_t seed = 0;
  int episode = 0;
};

struct Trajectory {
  TrajectoryMeta meta;
  std::vector<StepRecord> steps;

  float episode_return() const {
    float r = 0.0f;
    for (const auto& s : steps) r += s.reward;
    return r;
  }
};

// One transition. Returns the next state and the sparse in-goal reward.
std::pair<State, float> env_step(const State& s, const EnvAction& a,
                                 const MazeConfig& cfg);

// PD controller chasing a waypoint path laid out around the walls.
struct ExpertPolicy {
  std::vector<std::array<float, 2>> waypoints;
  float kp = 3.0f;
  float kd = 1.0f;
  float advance_radius = 0.15f;
  size_t current = 0;

  EnvAction act(const State& s);
  void reset() { current = 0; }
};

std::vector<std::array<float, 2>> default_waypoints(const MazeConfig& cfg);

enum class PolicyKind { Expert, Noisy, Random };

PolicyKind policy_from_name(const std::string& name);
std::string policy_name(PolicyKind kind);

struct CollectConfig {
  PolicyKind policy = PolicyKind::Noisy;
  float sigma = 0.3f;
  int episodes = 100;
  uint64_t seed = 1;
};

// Fixed-length, non-terminating episodes; deterministic per (seed, episode).
std::vector<Trajectory> collect(const MazeConfig& maze, const CollectConfig& cc);

// 100*(ret - r_random)/(r_expert - r_random)
double normalized_score(double episode_return, double r_random, double r_expert);

// Monte-Carlo estimate of a policy's mean/std return on this maze.
struct BaselineStats {
  double mean = 0.0;
  double stddev = 0.0;
};
BaselineStats measure_baseline(const MazeConfig& maze, PolicyKind kind,
                               int episodes, uint64_t seed, float sigma = 0.3f);

}  // namespace trajllm
