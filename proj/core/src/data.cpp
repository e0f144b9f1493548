#include "trajllm/data.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <stdexcept>

#include "trajllm/io.hpp"

namespace trajllm {

using nlohmann::json;

void CurationConfig::validate() const {
  if (epsilon < 0.0) throw std::invalid_argument("curation.epsilon must be >= 0");
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("curation.beta must be in (0, 1], got " +
                                std::to_string(beta));
  }
  if (window < 1) throw std::invalid_argument("curation.window must be >= 1");
  if (stride < 1) throw std::invalid_argument("curation.stride must be >= 1");
  if (max_windows < 0) throw std::invalid_argument("curation.max_windows must be >= 0");
}

CurationConfig::ThresholdTarget threshold_target_from_name(const std::string& name) {
  if (name == "reward") return CurationConfig::ThresholdTarget::Reward;
  if (name == "rtg") return CurationConfig::ThresholdTarget::Rtg;
  throw std::invalid_argument("unknown step_threshold_target: " + name +
                              " (expected reward|rtg)");
}

std::string threshold_target_name(CurationConfig::ThresholdTarget t) {
  return t == CurationConfig::ThresholdTarget::Reward ? "reward" : "rtg";
}

RtgTrajectory compute_rtg(const Trajectory& traj) {
  if (traj.steps.empty()) throw std::invalid_argument("compute_rtg: empty trajectory");
  const int t = static_cast<int>(traj.steps.size());
  RtgTrajectory out;
  out.states.reserve(static_cast<size_t>(t) * 4);
  out.actions.reserve(static_cast<size_t>(t) * 2);
  out.rewards.reserve(static_cast<size_t>(t));
  out.rtgs.assign(static_cast<size_t>(t), 0.0f);
  for (const auto& s : traj.steps) {
    out.states.insert(out.states.end(), s.state.begin(), s.state.end());
    out.actions.insert(out.actions.end(), s.action.begin(), s.action.end());
    out.rewards.push_back(s.reward);
  }
  float acc = 0.0f;
  for (int i = t - 1; i >= 0; --i) {
    acc += out.rewards[static_cast<size_t>(i)];
    out.rtgs[static_cast<size_t>(i)] = acc;
  }
  return out;
}

FilterReport filter_trajectories(std::vector<Trajectory> dataset, double epsilon) {
  FilterReport report;
  report.kept.reserve(dataset.size());
  for (auto& traj : dataset) {
    if (static_cast<double>(traj.episode_return()) >= epsilon) {
      report.kept.push_back(std::move(traj));
    } else {
      ++report.dropped;
    }
  }
  return report;
}

std::vector<TrajectoryWindow> sample_windows(const std::vector<Trajectory>& dataset,
                                             const CurationConfig& cfg) {
  cfg.validate();
  std::vector<TrajectoryWindow> out;
  for (size_t ep = 0; ep < dataset.size(); ++ep) {
    const auto& traj = dataset[ep];
    const int len = static_cast<int>(traj.steps.size());
    if (cfg.window > len) {
      throw std::invalid_argument("sample_windows: window " +
                                  std::to_string(cfg.window) +
                                  " exceeds episode length " + std::to_string(len));
    }
    const RtgTrajectory full = compute_rtg(traj);
    for (int start = 0; start + cfg.window <= len; start += cfg.stride) {
      TrajectoryWindow w;
      w.episode_id = static_cast<uint32_t>(ep);
      w.start = static_cast<uint16_t>(start);
      w.slice.state_dim = full.state_dim;
      w.slice.action_dim = full.action_dim;
      const auto s0 = static_cast<size_t>(start);
      w.slice.states.assign(full.states.begin() + static_cast<long>(s0 * 4),
                            full.states.begin() + static_cast<long>((s0 + cfg.window) * 4));
      w.slice.actions.assign(full.actions.begin() + static_cast<long>(s0 * 2),
                             full.actions.begin() + static_cast<long>((s0 + cfg.window) * 2));
      w.slice.rewards.assign(full.rewards.begin() + static_cast<long>(s0),
                             full.rewards.begin() + static_cast<long>(s0 + cfg.window));
      w.slice.rtgs.assign(full.rtgs.begin() + static_cast<long>(s0),
                          full.rtgs.begin() + static_cast<long>(s0 + cfg.window));
      w.step_weights.assign(static_cast<size_t>(cfg.window), 1.0f);
      out.push_back(std::move(w));
    }
  }
  if (cfg.max_windows > 0 && static_cast<int>(out.size()) > cfg.max_windows) {
    // uniform without replacement, order-preserving
    std::vector<size_t> idx(out.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(Rng::mix(cfg.seed, 0x73616d70ULL));
    rng.shuffle(idx);
    idx.resize(static_cast<size_t>(cfg.max_windows));
    std::sort(idx.begin(), idx.end());
    std::vector<TrajectoryWindow> kept;
    kept.reserve(idx.size());
    for (size_t i : idx) kept.push_back(std::move(out[i]));
    out = std::move(kept);
  }
  return out;
}

void assign_step_weights(TrajectoryWindow& window, const CurationConfig& cfg) {
  const int t = window.slice.length();
  window.step_weights.assign(static_cast<size_t>(t), 1.0f);
  if (cfg.mode == LossMode::None) return;
  for (int i = 0; i < t; ++i) {
    const float target =
        cfg.step_threshold_target == CurationConfig::ThresholdTarget::Reward
            ? window.slice.rewards[static_cast<size_t>(i)]
            : window.slice.rtgs[static_cast<size_t>(i)];
    if (static_cast<double>(target) < cfg.step_threshold) {
      window.step_weights[static_cast<size_t>(i)] =
          cfg.mode == LossMode::V1 ? 0.0f : static_cast<float>(cfg.beta);
    }
  }
}

DatasetStats dataset_stats(const std::vector<Trajectory>& episodes,
                           const std::vector<TrajectoryWindow>& windows,
                           double epsilon, int max_episode_length) {
  DatasetStats stats;
  const int bins = std::max(1, static_cast<int>(std::ceil(
                                   max_episode_length / stats.bin_width)) + 1);
  stats.return_hist.assign(static_cast<size_t>(bins), 0);
  stats.initial_rtg_hist.assign(static_cast<size_t>(bins), 0);
  auto bin_of = [&](double v) {
    const int b = static_cast<int>(std::floor(v / stats.bin_width));
    return static_cast<size_t>(std::clamp(b, 0, bins - 1));
  };
  size_t below = 0;
  for (const auto& ep : episodes) {
    const double r = ep.episode_return();
    ++stats.return_hist[bin_of(r)];
    if (r < epsilon) ++below;
  }
  stats.below_epsilon_fraction =
      episodes.empty() ? 0.0 : static_cast<double>(below) / episodes.size();
  double sum = 0.0, sumsq = 0.0;
  for (const auto& w : windows) {
    const double r0 = w.slice.rtgs.empty() ? 0.0 : w.slice.rtgs.front();
    ++stats.initial_rtg_hist[bin_of(r0)];
    sum += r0;
    sumsq += r0 * r0;
  }
  if (!windows.empty()) {
    stats.initial_rtg_mean = sum / static_cast<double>(windows.size());
    const double var = std::max(
        0.0, sumsq / static_cast<double>(windows.size()) -
                 stats.initial_rtg_mean * stats.initial_rtg_mean);
    stats.initial_rtg_stddev = std::sqrt(var);
  }
  return stats;
}

void write_stats_csv(const DatasetStats& stats, const std::string& returns_path,
                     const std::string& initial_rtg_path,
                     const std::string& provenance) {
  {
    CsvWriter csv(returns_path,
                  provenance + " below_epsilon_fraction=" +
                      fmt_float(stats.below_epsilon_fraction),
                  {"bin_lo", "bin_hi", "count"});
    for (size_t b = 0; b < stats.return_hist.size(); ++b) {
      csv.row({fmt_float(static_cast<double>(b) * stats.bin_width),
               fmt_float(static_cast<double>(b + 1) * stats.bin_width),
               std::to_string(stats.return_hist[b])});
    }
  }
  {
    CsvWriter csv(initial_rtg_path,
                  provenance + " mean=" + fmt_float(stats.initial_rtg_mean) +
                      " stddev=" + fmt_float(stats.initial_rtg_stddev),
                  {"bin_lo", "bin_hi", "count"});
    for (size_t b = 0; b < stats.initial_rtg_hist.size(); ++b) {
      csv.row({fmt_float(static_cast<double>(b) * stats.bin_width),
               fmt_float(static_cast<double>(b + 1) * stats.bin_width),
               std::to_string(stats.initial_rtg_hist[b])});
    }
  }
}

// ---------------------------------------------------------------------------
// files

namespace {

json traj_to_json(const Trajectory& t) {
  json j;
  j["meta"] = {{"policy", t.meta.policy}, {"seed", t.meta.seed},
               {"episode", t.meta.episode}};
  auto& states = j["states"] = json::array();
  auto& actions = j["actions"] = json::array();
  auto& rewards = j["rewards"] = json::array();
  for (const auto& s : t.steps) {
    states.push_back({s.state[0], s.state[1], s.state[2], s.state[3]});
    actions.push_back({s.action[0], s.action[1]});
    rewards.push_back(s.reward);
  }
  return j;
}

Trajectory traj_from_json(const json& j) {
  Trajectory t;
  t.meta.policy = j.at("meta").at("policy").get<std::string>();
  t.meta.seed = j.at("meta").at("seed").get<uint64_t>();
  t.meta.episode = j.at("meta").at("episode").get<int>();
  const auto& states = j.at("states");
  const auto& actions = j.at("actions");
  const auto& rewards = j.at("rewards");
  if (states.size() != actions.size() || states.size() != rewards.size()) {
    throw std::runtime_error("trajectory record arrays differ in length");
  }
  t.steps.reserve(states.size());
  for (size_t i = 0; i < states.size(); ++i) {
    StepRecord s{};
    for (int k = 0; k < 4; ++k) s.state[static_cast<size_t>(k)] = states[i][static_cast<size_t>(k)].get<float>();
    for (int k = 0; k < 2; ++k) s.action[static_cast<size_t>(k)] = actions[i][static_cast<size_t>(k)].get<float>();
    s.reward = rewards[i].get<float>();
    t.steps.push_back(s);
  }
  return t;
}

}  // namespace

void write_trajectory_file(const std::string& path,
                           const std::vector<Trajectory>& episodes,
                           uint64_t env_config_hash, uint64_t run_config_hash,
                           uint64_t seed) {
  std::string body;
  for (const auto& ep : episodes) {
    body += traj_to_json(ep).dump();
    body += "\n";
  }
  write_file(path, body);
  json manifest;
  manifest["file"] = path.substr(path.find_last_of('/') + 1);
  manifest["episodes"] = episodes.size();
  manifest["checksum_fnv64"] = hex64(fnv1a(body));
  manifest["env_config_hash"] = hex64(env_config_hash);
  manifest["config_hash"] = hex64(run_config_hash);
  manifest["seed"] = seed;
  write_file(path + ".manifest.json", manifest.dump(2) + "\n");
}

std::vector<Trajectory> read_trajectory_file(const std::string& path) {
  const std::string body = read_file(path);
  std::vector<Trajectory> out;
  size_t pos = 0;
  while (pos < body.size()) {
    size_t nl = body.find('\n', pos);
    if (nl == std::string::npos) nl = body.size();
    if (nl > pos) {
      out.push_back(traj_from_json(json::parse(body.substr(pos, nl - pos))));
    }
    pos = nl + 1;
  }
  return out;
}

void write_window_file(const std::string& path,
                       const std::vector<TrajectoryWindow>& windows,
                       uint64_t run_config_hash, uint64_t seed) {
  BinWriter w(path);
  w.str("TJWN");
  w.u32(1);
  w.u64(windows.size());
  for (const auto& win : windows) {
    const int t = win.slice.length();
    w.u32(win.episode_id);
    w.u16(win.start);
    w.u16(static_cast<uint16_t>(t));
    for (int i = 0; i < t; ++i) {
      w.f32(win.slice.rtgs[static_cast<size_t>(i)]);
      for (int k = 0; k < 4; ++k) w.f32(win.slice.states[static_cast<size_t>(i * 4 + k)]);
      for (int k = 0; k < 2; ++k) w.f32(win.slice.actions[static_cast<size_t>(i * 2 + k)]);
      w.f32(win.step_weights[static_cast<size_t>(i)]);
    }
  }
  json manifest;
  manifest["file"] = path.substr(path.find_last_of('/') + 1);
  manifest["windows"] = windows.size();
  manifest["checksum_fnv64"] = hex64(file_checksum(path));
  manifest["config_hash"] = hex64(run_config_hash);
  manifest["seed"] = seed;
  write_file(path + ".manifest.json", manifest.dump(2) + "\n");
}

std::vector<TrajectoryWindow> read_window_file(const std::string& path) {
  BinReader r(path);
  if (r.str(4) != "TJWN") throw std::runtime_error("corrupt window file (bad magic): " + path);
  const uint32_t version = r.u32();
  if (version != 1) {
    throw std::runtime_error("unsupported window file version " +
                             std::to_string(version) + ": " + path);
  }
  const uint64_t count = r.u64();
  std::vector<TrajectoryWindow> out;
  out.reserve(count);
  for (uint64_t wi = 0; wi < count; ++wi) {
    TrajectoryWindow win;
    win.episode_id = r.u32();
    win.start = r.u16();
    const int t = r.u16();
    win.slice.states.resize(static_cast<size_t>(t) * 4);
    win.slice.actions.resize(static_cast<size_t>(t) * 2);
    win.slice.rewards.assign(static_cast<size_t>(t), 0.0f);
    win.slice.rtgs.resize(static_cast<size_t>(t));
    win.step_weights.resize(static_cast<size_t>(t));
    for (int i = 0; i < t; ++i) {
      win.slice.rtgs[static_cast<size_t>(i)] = r.f32();
      for (int k = 0; k < 4; ++k) win.slice.states[static_cast<size_t>(i * 4 + k)] = r.f32();
      for (int k = 0; k < 2; ++k) win.slice.actions[static_cast<size_t>(i * 2 + k)] = r.f32();
      win.step_weights[static_cast<size_t>(i)] = r.f32();
    }
    // rewards are recoverable from rtg differences inside the window; the
    // final step's reward is not, so the telescoped tail is kept as-is
    for (int i = 0; i + 1 < t; ++i) {
      win.slice.rewards[static_cast<size_t>(i)] =
          win.slice.rtgs[static_cast<size_t>(i)] - win.slice.rtgs[static_cast<size_t>(i + 1)];
    }
    out.push_back(std::move(win));
  }
  return out;
}

}  // namespace trajllm
