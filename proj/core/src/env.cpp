#include "trajllm/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trajllm {

namespace {

float clip1(float v) { return std::clamp(v, -1.0f, 1.0f); }

bool inside_any_wall(const std::vector<WallRect>& walls, float x, float y) {
  for (const auto& w : walls)
    if (w.contains(x, y)) return true;
  return false;
}

void check_range(const char* what, float v) {
  if (!(v >= -1.0f && v <= 1.0f)) {
    throw std::invalid_argument(std::string(what) + " component " +
                                std::to_string(v) + " outside [-1, 1]");
  }
}

}  // namespace

MazeConfig MazeConfig::u_maze() {
  MazeConfig cfg;
  cfg.walls = {{-1.0f, -0.1f, 0.4f, 0.1f}};
  return cfg;
}

void MazeConfig::validate() const {
  if (goal_radius <= 0.0f) {
    throw std::invalid_argument("maze.goal_radius must be positive, got " +
                                std::to_string(goal_radius));
  }
  if (dt <= 0.0f) throw std::invalid_argument("maze.dt must be positive");
  if (max_episode_length < 1) {
    throw std::invalid_argument("maze.max_episode_length must be >= 1");
  }
  for (const auto& w : walls) {
    if (!(w.x0 < w.x1 && w.y0 < w.y1)) {
      throw std::invalid_argument("maze wall rectangle is degenerate");
    }
  }
  if (inside_any_wall(walls, goal[0], goal[1])) {
    throw std::invalid_argument("maze goal lies inside a wall");
  }
  if (inside_any_wall(walls, start[0], start[1])) {
    throw std::invalid_argument("maze start lies inside a wall");
  }
}

std::pair<State, float> env_step(const State& s, const EnvAction& a,
                                 const MazeConfig& cfg) {
  check_range("state", s.x);
  check_range("state", s.y);
  check_range("state", s.vx);
  check_range("state", s.vy);
  check_range("action", a.ax);
  check_range("action", a.ay);

  State n;
  n.vx = clip1(cfg.velocity_decay * s.vx + cfg.dt * a.ax);
  n.vy = clip1(cfg.velocity_decay * s.vy + cfg.dt * a.ay);

  // per-axis collision: an axis whose motion would enter a wall is cancelled
  // and its velocity zeroed
  float px = clip1(s.x + cfg.dt * n.vx);
  if (inside_any_wall(cfg.walls, px, s.y)) {
    px = s.x;
    n.vx = 0.0f;
  }
  float py = clip1(s.y + cfg.dt * n.vy);
  if (inside_any_wall(cfg.walls, px, py)) {
    py = s.y;
    n.vy = 0.0f;
  }
  n.x = px;
  n.y = py;

  const float dx = n.x - cfg.goal[0];
  const float dy = n.y - cfg.goal[1];
  const float reward =
      std::sqrt(dx * dx + dy * dy) <= cfg.goal_radius ? 1.0f : 0.0f;
  return {n, reward};
}

std::vector<std::array<float, 2>> default_waypoints(const MazeConfig& cfg) {
  // Around the interior bar: along the bottom, through the right-hand gap,
  // then across the top to the goal.
  if (cfg.walls.empty()) return {cfg.goal};
  const WallRect& w = cfg.walls.front();
  const float gap_x = std::min(1.0f, w.x1 + 0.3f);
  return {{gap_x, w.y0 - 0.3f}, {gap_x, w.y1 + 0.3f}, cfg.goal};
}

EnvAction ExpertPolicy::act(const State& s) {
  if (waypoints.empty()) return {};
  while (current + 1 < waypoints.size()) {
    const auto& wp = waypoints[current];
    const float dx = wp[0] - s.x, dy = wp[1] - s.y;
    if (std::sqrt(dx * dx + dy * dy) <= advance_radius) {
      ++current;
    } else {
      break;
    }
  }
  const auto& wp = waypoints[current];
  return {clip1(kp * (wp[0] - s.x) - kd * s.vx),
          clip1(kp * (wp[1] - s.y) - kd * s.vy)};
}

PolicyKind policy_from_name(const std::string& name) {
  if (name == "expert") return PolicyKind::Expert;
  if (name == "noisy") return PolicyKind::Noisy;
  if (name == "random") return PolicyKind::Random;
  throw std::invalid_argument("unknown policy: " + name +
                              " (expected expert|noisy|random)");
}

std::string policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Expert: return "expert";
    case PolicyKind::Noisy: return "noisy";
    case PolicyKind::Random: return "random";
  }
  return "expert";
}

namespace {

Trajectory run_episode(const MazeConfig& maze, PolicyKind kind, float sigma,
                       uint64_t seed, int episode) {
  Rng rng(Rng::mix(seed, static_cast<uint64_t>(episode)));
  Trajectory traj;
  traj.meta = {policy_name(kind), seed, episode};
  traj.steps.reserve(static_cast<size_t>(maze.max_episode_length));

  State s;
  s.x = clip1(maze.start[0] + rng.uniform(-maze.start_jitter, maze.start_jitter));
  s.y = clip1(maze.start[1] + rng.uniform(-maze.start_jitter, maze.start_jitter));

  ExpertPolicy expert{default_waypoints(maze)};
  for (int t = 0; t < maze.max_episode_length; ++t) {
    EnvAction a;
    switch (kind) {
      case PolicyKind::Expert:
        a = expert.act(s);
        break;
      case PolicyKind::Noisy: {
        a = expert.act(s);
        a.ax = clip1(a.ax + rng.normal(0.0f, sigma));
        a.ay = clip1(a.ay + rng.normal(0.0f, sigma));
        break;
      }
      case PolicyKind::Random:
        a.ax = rng.uniform(-1.0f, 1.0f);
        a.ay = rng.uniform(-1.0f, 1.0f);
        break;
    }
    auto [next, reward] = env_step(s, a, maze);
    traj.steps.push_back({{s.x, s.y, s.vx, s.vy}, {a.ax, a.ay}, reward});
    s = next;
  }
  return traj;
}

}  // namespace

std::vector<Trajectory> collect(const MazeConfig& maze, const CollectConfig& cc) {
  if (cc.episodes < 1) {
    throw std::invalid_argument("collect: episodes must be >= 1, got " +
                                std::to_string(cc.episodes));
  }
  maze.validate();
  const float sigma = cc.policy == PolicyKind::Noisy ? cc.sigma : 0.0f;
  std::vector<Trajectory> out;
  out.reserve(static_cast<size_t>(cc.episodes));
  for (int e = 0; e < cc.episodes; ++e) {
    out.push_back(run_episode(maze, cc.policy, sigma, cc.seed, e));
  }
  return out;
}

double normalized_score(double episode_return, double r_random, double r_expert) {
  if (!(r_expert > r_random)) {
    throw std::invalid_argument("normalized_score: r_expert (" +
                                std::to_string(r_expert) +
                                ") must exceed r_random (" +
                                std::to_string(r_random) + ")");
  }
  return 100.0 * (episode_return - r_random) / (r_expert - r_random);
}

BaselineStats measure_baseline(const MazeConfig& maze, PolicyKind kind,
                               int episodes, uint64_t seed, float sigma) {
  CollectConfig cc{kind, sigma, episodes, seed};
  auto trajs = collect(maze, cc);
  double sum = 0.0, sumsq = 0.0;
  for (const auto& t : trajs) {
    const double r = t.episode_return();
    sum += r;
    sumsq += r * r;
  }
  const double mean = sum / episodes;
  const double var = std::max(0.0, sumsq / episodes - mean * mean);
  return {mean, std::sqrt(var)};
}

}  // namespace trajllm
