#include "trajllm/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "trajllm/io.hpp"

namespace trajllm {

RolloutResult rollout(const DecisionModel& model, const MazeConfig& maze,
                      double initial_rtg, uint64_t seed,
                      const RolloutOptions& opts) {
  if (!std::isfinite(initial_rtg)) {
    throw std::invalid_argument("rollout: initial_rtg must be finite");
  }
  if (opts.max_steps < 1) {
    throw std::invalid_argument("rollout: max_steps must be >= 1");
  }
  maze.validate();
  NoGradGuard ng;

  Rng rng(Rng::mix(seed, 0x726f6c6cULL));
  State s;
  s.x = std::clamp(maze.start[0] + rng.uniform(-maze.start_jitter, maze.start_jitter), -1.0f, 1.0f);
  s.y = std::clamp(maze.start[1] + rng.uniform(-maze.start_jitter, maze.start_jitter), -1.0f, 1.0f);

  // full history; the fused context sees only the trailing window
  std::vector<float> rtgs, states, actions;
  double rtg = initial_rtg;
  double achieved = 0.0;

  RolloutResult result;
  result.commanded_rtg = initial_rtg;
  result.trajectory.meta = {"model", seed, 0};

  const int w = opts.window;
  for (int t = 0; t < opts.max_steps; ++t) {
    rtgs.push_back(static_cast<float>(rtg));
    states.insert(states.end(), {s.x, s.y, s.vx, s.vy});
    actions.insert(actions.end(), {0.0f, 0.0f});  // placeholder, behind the causal mask

    const int len = static_cast<int>(rtgs.size());
    const int ctx = std::min(len, w);
    const int first = len - ctx;

    RtgTrajectory window;
    window.rtgs.assign(rtgs.begin() + first, rtgs.end());
    window.states.assign(states.begin() + static_cast<long>(first) * 4, states.end());
    window.actions.assign(actions.begin() + static_cast<long>(first) * 2, actions.end());
    window.rewards.assign(static_cast<size_t>(ctx), 0.0f);

    Tensor traj_emb = model.encoder().encode(window, first, w);
    FusedSequence fused = model.fuse(opts.prompt_ids, traj_emb, first);
    if (opts.hook && *opts.hook) (*opts.hook)(t, rtg, 3 * ctx);

    ForwardResult fwd = model.backbone().forward(fused.embeddings, true);
    Tensor preds = model.predict_actions(fwd.final, fused);
    const int last = preds.dim(0) - 1;
    EnvAction a{preds.at(last, 0), preds.at(last, 1)};

    auto [next, reward] = env_step(s, a, maze);
    result.trajectory.steps.push_back({{s.x, s.y, s.vx, s.vy}, {a.ax, a.ay}, reward});
    actions[actions.size() - 2] = a.ax;
    actions[actions.size() - 1] = a.ay;
    achieved += reward;
    rtg -= reward;
    s = next;
  }
  result.achieved_return = achieved;
  result.steps = opts.max_steps;
  result.success = achieved > 0.0;
  return result;
}

EvalReport evaluate(const DecisionModel& model, const MazeConfig& maze,
                    double initial_rtg, const EvalOptions& opts) {
  if (opts.episodes < 1) {
    throw std::invalid_argument("evaluate: episodes must be >= 1");
  }
  EvalReport report;
  report.episodes = opts.episodes;
  report.results.resize(static_cast<size_t>(opts.episodes));

  const int n_threads = std::max(1, std::min(opts.threads, opts.episodes));
  auto worker = [&](int tid) {
    for (int e = tid; e < opts.episodes; e += n_threads) {
      report.results[static_cast<size_t>(e)] =
          rollout(model, maze, initial_rtg, opts.base_seed + static_cast<uint64_t>(e),
                  opts.rollout);
    }
  };
  if (n_threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker, t);
    for (auto& t : threads) t.join();
  }

  double sum = 0.0, sumsq = 0.0, ssum = 0.0, ssumsq = 0.0;
  for (const auto& r : report.results) {
    sum += r.achieved_return;
    sumsq += r.achieved_return * r.achieved_return;
    const double score = normalized_score(r.achieved_return, opts.r_random, opts.r_expert);
    ssum += score;
    ssumsq += score * score;
  }
  const double n = static_cast<double>(opts.episodes);
  report.return_mean = sum / n;
  report.return_std = std::sqrt(std::max(0.0, sumsq / n - report.return_mean * report.return_mean));
  report.score_mean = ssum / n;
  report.score_std = std::sqrt(std::max(0.0, ssumsq / n - report.score_mean * report.score_mean));
  return report;
}

RtgSweepResult rtg_sweep(const DecisionModel& model, const MazeConfig& maze,
                         const std::vector<double>& rtg_list,
                         const EvalOptions& opts) {
  if (rtg_list.empty()) throw std::invalid_argument("rtg_sweep: empty rtg list");
  RtgSweepResult sweep;
  std::vector<double> commanded, achieved;
  for (double rtg : rtg_list) {
    EvalReport report = evaluate(model, maze, rtg, opts);
    sweep.rows.push_back({rtg, report.return_mean, report.return_std,
                          report.score_mean, report.score_std});
    commanded.push_back(rtg);
    achieved.push_back(report.return_mean);
  }
  sweep.spearman = rtg_list.size() > 1 ? spearman_correlation(commanded, achieved) : 0.0;
  return sweep;
}

void write_sweep_csv(const RtgSweepResult& sweep, const std::string& path,
                     const std::string& provenance) {
  CsvWriter csv(path, provenance + " spearman=" + fmt_float(sweep.spearman),
                {"commanded_rtg", "achieved_mean", "achieved_std", "score_mean",
                 "score_std"});
  for (const auto& row : sweep.rows) {
    csv.row({fmt_float(row.commanded), fmt_float(row.achieved_mean),
             fmt_float(row.achieved_std), fmt_float(row.score_mean),
             fmt_float(row.score_std)});
  }
}

namespace {

std::vector<double> ranks_with_ties(const std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("spearman: need two equal-length series of >= 2 points");
  }
  const auto rx = ranks_with_ties(x);
  const auto ry = ranks_with_ties(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = rx[i] - mx, dy = ry[i] - my;
    cov += dx * dy;
    vx += dx * dx;
    vy += dy * dy;
  }
  if (vx == 0.0 || vy == 0.0) return 0.0;
  return cov / std::sqrt(vx * vy);
}

}  // namespace trajllm
