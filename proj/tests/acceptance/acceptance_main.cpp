// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Heavy artifacts (datasets, trained checkpoints) are shared across
// criteria inside a work directory and reused when already present.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "trajllm/ablation.hpp"
#include "trajllm/analysis.hpp"
#include "trajllm/checkpoint.hpp"
#include "trajllm/data.hpp"
#include "trajllm/env.hpp"
#include "trajllm/io.hpp"
#include "trajllm/pretrain.hpp"
#include "trajllm/prompts.hpp"
#include "trajllm/rollout.hpp"
#include "trajllm/train.hpp"

namespace fs = std::filesystem;
using namespace trajllm;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// shared artifacts

struct Workspace {
  std::string dir = "acceptance_work";
  MazeConfig maze = MazeConfig::u_maze();
  std::vector<int> prompt = Vocabulary::standard().tokenize(kCompactMazePrompt);
  int window = 20;

  static constexpr uint64_t kNoisySeed = 101;
  static constexpr uint64_t kRandomSeed = 202;
  // long-tail pool: a small slice of competent noisy-expert data in a sea of
  // zero-return episodes, so curation changes what a fixed step budget sees
  static constexpr int kNoisyEpisodes = 200;
  static constexpr int kRandomEpisodes = 800;
  static constexpr int kDatasetWindows = 50000;
  static constexpr int kTrainSteps = 1200;

  std::vector<Trajectory> pool_;  // noisy + random episodes
  BaselineStats random_base_;
  BaselineStats expert_base_;
  bool baselines_done_ = false;

  const std::vector<Trajectory>& pool() {
    if (pool_.empty()) {
      auto noisy = collect(maze, {PolicyKind::Noisy, 0.3f, kNoisyEpisodes, kNoisySeed});
      auto random =
          collect(maze, {PolicyKind::Random, 0.0f, kRandomEpisodes, kRandomSeed});
      pool_ = std::move(noisy);
      pool_.insert(pool_.end(), random.begin(), random.end());
    }
    return pool_;
  }

  void ensure_baselines() {
    if (baselines_done_) return;
    random_base_ = measure_baseline(maze, PolicyKind::Random, 100, 7001);
    expert_base_ = measure_baseline(maze, PolicyKind::Expert, 100, 7002);
    baselines_done_ = true;
  }

  std::vector<TrajectoryWindow> make_dataset(double epsilon, LossMode mode,
                                             int max_windows, uint64_t seed) {
    CurationConfig cfg;
    cfg.epsilon = epsilon;
    cfg.mode = mode;
    cfg.window = window;
    cfg.max_windows = max_windows;
    cfg.seed = seed;
    auto kept = filter_trajectories(pool(), epsilon).kept;
    auto windows = sample_windows(kept, cfg);
    for (auto& w : windows) assign_step_weights(w, cfg);
    return windows;
  }

  ModelConfig main_model_config() const {
    ModelConfig cfg;
    cfg.d_model = 64;
    cfg.n_layers = 4;
    cfg.n_heads = 4;
    cfg.max_positions = 2048;
    return cfg;
  }

  TrainConfig main_train_config() const {
    TrainConfig cfg;
    cfg.batch_size = 16;
    cfg.lr = 3e-4f;
    cfg.max_steps = kTrainSteps;
    cfg.eval_every = 200;
    cfg.eval_episodes = 12;
    cfg.eval_rtg = 250.0;
    cfg.warmup_steps = 100;
    cfg.seed = 11;
    return cfg;
  }

  struct RunOutcome {
    double best_return = 0.0;
    double best_score = 0.0;
    int64_t best_step = -1;
  };

  RunOutcome train_run(const std::string& tag, std::vector<TrajectoryWindow> windows,
                       LossMode mode) {
    ensure_baselines();
    const std::string ckpt = dir + "/" + tag + "_best.ckpt";
    const std::string marker = dir + "/" + tag + "_result.txt";
    if (fs::exists(ckpt) && fs::exists(marker)) {
      std::istringstream is(read_file(marker));
      RunOutcome out;
      is >> out.best_return >> out.best_score >> out.best_step;
      std::cout << "  (reusing " << tag << ": best return " << fmt_float(out.best_return)
                << ")\n";
      return out;
    }
    DecisionModel model(main_model_config(), 11);
    TrainOptions opts;
    opts.cfg = main_train_config();
    opts.cfg.loss_mode = mode;
    opts.window = window;
    opts.prompt_ids = prompt;
    opts.maze = maze;
    opts.r_random = random_base_.mean;
    opts.r_expert = expert_base_.mean;
    opts.eval_threads = 1;  // runs execute pairwise in parallel
    opts.metrics_path = dir + "/" + tag + "_metrics.csv";
    opts.best_ckpt_path = ckpt;
    TrainResult tr = train_model(model, windows, opts);
    RunOutcome out{tr.best_eval_return, tr.best_eval_score, tr.best_step};
    write_file(marker, fmt_float(out.best_return) + " " + fmt_float(out.best_score) +
                           " " + std::to_string(out.best_step) + "\n");
    return out;
  }

  // criterion 4 artifacts, shared with 5 and 6
  RunOutcome curated_outcome_, uncurated_outcome_;
  bool trained_ = false;

  void ensure_trained() {
    if (trained_) return;
    ensure_baselines();
    auto curated = make_dataset(0.5, LossMode::V3, kDatasetWindows, 31);
    auto uncurated = make_dataset(0.0, LossMode::None, kDatasetWindows, 32);
    std::cout << "  datasets: curated " << curated.size() << " windows, uncurated "
              << uncurated.size() << " windows\n";
    std::thread curated_thread([&] {
      curated_outcome_ = train_run("curated", std::move(curated), LossMode::V3);
    });
    uncurated_outcome_ = train_run("uncurated", std::move(uncurated), LossMode::None);
    curated_thread.join();
    trained_ = true;
  }

  DecisionModel load_best() {
    ensure_trained();
    Checkpoint ckpt = Checkpoint::load(dir + "/curated_best.ckpt");
    DecisionModel model(ckpt.config, 0);
    ParamList params = model.params();
    apply_checkpoint(ckpt, params);
    return model;
  }
};

Workspace g_work;

// ---------------------------------------------------------------------------
// criterion 1: gradient suite

Outcome criterion_gradients() {
  const auto start = Clock::now();
  double worst = 0.0;
  std::string worst_op = "none";
  int checked = 0;

  auto fd_sweep = [&](const char* op, const std::function<Tensor()>& loss,
                      Tensor leaf, double floor) {
    leaf.zero_grad();
    Tensor l = loss();
    backward(l);
    std::vector<float> analytic(leaf.grad().begin(), leaf.grad().end());
    auto data = leaf.mutable_data();
    for (size_t i = 0; i < data.size(); ++i) {
      const float saved = data[i];
      const float h = 1e-3f;
      data[i] = saved + h;
      const double fp = loss().item();
      data[i] = saved - h;
      const double fm = loss().item();
      data[i] = saved;
      const double fd = (fp - fm) / (2.0 * h);
      const double an = analytic[i];
      const double rel =
          std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), floor});
      ++checked;
      if (rel > worst) {
        worst = rel;
        worst_op = op;
      }
    }
  };

  auto rand_t = [](Shape shape, Rng& rng, float lo, float hi, bool rg) {
    std::vector<float> data(static_cast<size_t>(shape_numel(shape)));
    for (auto& v : data) v = rng.uniform(lo, hi);
    return Tensor::from_data(std::move(shape), std::move(data), rg);
  };
  auto signed_w = [](Shape shape, Rng& rng) {
    std::vector<float> data(static_cast<size_t>(shape_numel(shape)));
    for (auto& v : data) {
      const float mag = rng.uniform(0.5f, 1.5f);
      v = rng.uniform() < 0.5 ? -mag : mag;
    }
    return Tensor::from_data(std::move(shape), std::move(data));
  };

  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed * 31 + 1);
    {
      Tensor a = rand_t({4, 3}, rng, -1, 1, true);
      Tensor b = rand_t({3, 2}, rng, -1, 1, true);
      Tensor r = signed_w({4, 2}, rng);
      auto loss = [&] { return sum_all(mul(matmul(a, b), r)); };
      fd_sweep("matmul", loss, a, 0.5);
      fd_sweep("matmul", loss, b, 0.5);
    }
    {
      Tensor x = rand_t({5}, rng, -1, 1, true);
      Tensor r = signed_w({5}, rng);
      auto loss = [&] { return sum_all(mul(softmax_lastdim(x), r)); };
      fd_sweep("softmax", loss, x, 0.5);
    }
    {
      Tensor s = rand_t({4, 4}, rng, -1, 1, true);
      Tensor r = signed_w({4, 4}, rng);
      auto loss = [&] { return sum_all(mul(causal_softmax(s), r)); };
      fd_sweep("causal_softmax", loss, s, 0.5);
    }
    {
      Tensor x = rand_t({3, 6}, rng, -1, 1, true);
      Tensor g = rand_t({6}, rng, 0.5f, 1.5f, true);
      Tensor b = rand_t({6}, rng, -0.5f, 0.5f, true);
      Tensor r = signed_w({3, 6}, rng);
      auto loss = [&] { return sum_all(mul(layer_norm(x, g, b), r)); };
      fd_sweep("layer_norm.x", loss, x, 0.5);
      fd_sweep("layer_norm.gain", loss, g, 0.5);
      fd_sweep("layer_norm.bias", loss, b, 0.5);
    }
    {
      Tensor x = rand_t({7}, rng, -2, 2, true);
      Tensor r = signed_w({7}, rng);
      auto gl = [&] { return sum_all(mul(gelu(x), r)); };
      fd_sweep("gelu", gl, x, 0.5);
      Tensor y = rand_t({7}, rng, -2, 2, true);
      auto tl = [&] { return sum_all(mul(tanh_op(y), r)); };
      fd_sweep("tanh", tl, y, 0.5);
    }
    {
      Tensor x = rand_t({4, 6}, rng, -1, 1, true);
      Tensor v = rand_t({6}, rng, -1, 1, true);
      Tensor r = signed_w({5, 3}, rng);
      auto loss = [&] {
        return sum_all(mul(slice_cols(add_rows(gather_rows(x, {0, 2, 2, 3, 1}), v), 1, 4), r));
      };
      fd_sweep("gather/slice/add_rows", loss, x, 0.5);
      fd_sweep("gather/slice/add_rows", loss, v, 0.5);
    }
    {
      Tensor logits = rand_t({4, 6}, rng, -1, 1, true);
      const std::vector<int> targets{1, 0, 5, 3};
      auto loss = [&] { return cross_entropy_rows(logits, targets); };
      fd_sweep("cross_entropy", loss, logits, 0.5);
    }
    for (LossMode mode : {LossMode::None, LossMode::V1, LossMode::V2, LossMode::V3}) {
      Tensor pred = rand_t({3, 2}, rng, -1, 1, true);
      Tensor target = rand_t({3, 2}, rng, -1, 1, false);
      std::vector<float> weights{mode == LossMode::V1 ? 0.0f : 0.5f, 1.0f, 1.0f};
      auto loss = [&] { return weighted_mse(pred, target, weights, mode); };
      fd_sweep(("weighted_mse." + loss_mode_name(mode)).c_str(), loss, pred, 0.5);
    }
  }

  // end-to-end loss through the full model: the highest-|grad| coordinates of
  // every parameter tensor are probed (tiny gradients sit below the f32
  // finite-difference noise floor and are not measurable at h=1e-3)
  ModelConfig cfg;
  cfg.d_model = 16;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.max_positions = 64;
  cfg.max_timesteps = 32;
  const auto& vocab = Vocabulary::standard();
  const std::vector<int> prompt{vocab.byte_id('m'), vocab.traj_begin_id(),
                                vocab.traj_end_id()};
  for (uint64_t seed = 0; seed < 10; ++seed) {
    DecisionModel model(cfg, seed + 900);
    Rng rng(seed + 901);
    TrajectoryWindow w;
    w.start = 2;
    for (int i = 0; i < 4; ++i) {
      for (int k = 0; k < 4; ++k) w.slice.states.push_back(rng.uniform(-1.0f, 1.0f));
      for (int k = 0; k < 2; ++k) w.slice.actions.push_back(rng.uniform(-1.0f, 1.0f));
      w.slice.rewards.push_back(0.0f);
      w.slice.rtgs.push_back(rng.uniform(0.0f, 3.0f));
      w.step_weights.push_back(1.0f);
    }
    std::vector<const TrajectoryWindow*> batch{&w};
    auto loss_fn = [&]() -> Tensor {
      auto fused = make_batch(model, batch, prompt, 6);
      return sequence_loss(model, fused[0], LossMode::V3);
    };

    ParamList params = model.params();
    zero_grads(params);
    backward(loss_fn());
    for (auto& p : params) {
      std::vector<float> analytic(p.tensor.grad().begin(), p.tensor.grad().end());
      double gmax = 0.0;
      for (float g : analytic) gmax = std::max(gmax, static_cast<double>(std::abs(g)));
      const double measurable = std::max(0.1, 0.05 * gmax);
      // probe the three strongest coordinates
      std::vector<size_t> order(analytic.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::partial_sort(order.begin(), order.begin() + std::min<size_t>(3, order.size()),
                        order.end(), [&](size_t a, size_t b) {
                          return std::abs(analytic[a]) > std::abs(analytic[b]);
                        });
      for (size_t k = 0; k < std::min<size_t>(3, order.size()); ++k) {
        const size_t idx = order[k];
        if (std::abs(analytic[idx]) < measurable) continue;
        auto data = p.tensor.mutable_data();
        const float saved = data[idx];
        const float h = 1e-3f;
        data[idx] = saved + h;
        double fp;
        {
          NoGradGuard ng;
          fp = loss_fn().item();
        }
        data[idx] = saved - h;
        double fm;
        {
          NoGradGuard ng;
          fm = loss_fn().item();
        }
        data[idx] = saved;
        const double fd = (fp - fm) / (2.0 * h);
        const double rel = std::abs(fd - analytic[idx]) /
                           std::max({std::abs(fd), std::abs(static_cast<double>(analytic[idx])),
                                     measurable});
        ++checked;
        if (rel > worst) {
          worst = rel;
          worst_op = "end_to_end." + p.name;
        }
      }
    }
  }

  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = worst < 1e-3 && elapsed < 60.0;
  out.detail = "max rel err " + fmt_float(worst) + " (" + worst_op + ", " +
               std::to_string(checked) + " coords), " + fmt_float(elapsed) + "s";
  return out;
}

// ---------------------------------------------------------------------------
// criterion 2: structural suite

Outcome criterion_structure() {
  const auto start = Clock::now();
  std::string failure;

  ModelConfig cfg;
  cfg.d_model = 16;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.max_positions = 256;
  cfg.max_timesteps = 300;
  DecisionModel model(cfg, 5);
  const auto& vocab = Vocabulary::standard();

  // interleaving and splice positions over enumerated prompt/window sizes
  Rng rng(5);
  for (int pre = 1; pre <= 3 && failure.empty(); ++pre) {
    for (int t = 1; t <= 4 && failure.empty(); ++t) {
      std::vector<int> prompt;
      for (int i = 0; i < pre; ++i) prompt.push_back(vocab.byte_id('a'));
      prompt.push_back(vocab.traj_begin_id());
      prompt.push_back(vocab.traj_end_id());
      prompt.push_back(vocab.byte_id('b'));
      RtgTrajectory w;
      for (int i = 0; i < t; ++i) {
        for (int k = 0; k < 4; ++k) w.states.push_back(rng.uniform(-1.0f, 1.0f));
        for (int k = 0; k < 2; ++k) w.actions.push_back(rng.uniform(-1.0f, 1.0f));
        w.rewards.push_back(0.0f);
        w.rtgs.push_back(1.0f);
      }
      FusedSequence fused = model.fuse(prompt, model.encoder().encode(w, 0, 20), 0);
      if (fused.length() != pre + 3 + 3 * t) failure = "fused length";
      for (int i = 0; i < t; ++i) {
        if (fused.kinds[static_cast<size_t>(pre + 1 + 3 * i)] != TokenKind::Rtg ||
            fused.kinds[static_cast<size_t>(pre + 2 + 3 * i)] != TokenKind::State ||
            fused.kinds[static_cast<size_t>(pre + 3 + 3 * i)] != TokenKind::Action) {
          failure = "interleaving order";
        }
        if (fused.action_target_positions[static_cast<size_t>(i)] != pre + 2 + 3 * i) {
          failure = "action target positions";
        }
      }
    }
  }

  // causal independence: future embedding perturbations leave prefixes intact
  if (failure.empty()) {
    Backbone& bb = model.backbone();
    Tensor base = Tensor::zeros({10, 16});
    {
      Rng r2(9);
      auto data = base.mutable_data();
      for (auto& v : data) v = r2.uniform(-1.0f, 1.0f);
    }
    ForwardResult fa = bb.forward(base);
    std::vector<float> mod(base.data().begin(), base.data().end());
    for (int k = 0; k < 16; ++k) mod[static_cast<size_t>(7 * 16 + k)] += 1.0f;
    ForwardResult fb = bb.forward(Tensor::from_data({10, 16}, std::move(mod)));
    for (int pos = 0; pos < 7 && failure.empty(); ++pos) {
      for (int k = 0; k < 16; ++k) {
        if (fa.final.at(pos, k) != fb.final.at(pos, k)) failure = "causal independence";
      }
    }
  }

  // sliding-window bound and RTG bookkeeping on an instrumented rollout
  if (failure.empty()) {
    MazeConfig maze = MazeConfig::u_maze();
    maze.goal = {-0.8f, -0.8f};
    maze.goal_radius = 0.4f;
    maze.walls.clear();
    std::vector<double> rtgs;
    std::vector<int> tokens;
    RolloutHook hook = [&](int, double rtg, int tk) {
      rtgs.push_back(rtg);
      tokens.push_back(tk);
    };
    RolloutOptions opts;
    opts.prompt_ids = {vocab.byte_id('m'), vocab.traj_begin_id(), vocab.traj_end_id()};
    opts.window = 6;
    opts.max_steps = 40;
    opts.hook = &hook;
    RolloutResult result = rollout(model, maze, 25.0, 3, opts);
    double seen = 0.0;
    for (size_t t = 0; t < rtgs.size() && failure.empty(); ++t) {
      if (tokens[t] > 18 || tokens[t] % 3 != 0) failure = "context bound";
      if (std::abs(rtgs[t] - (25.0 - seen)) > 1e-9) failure = "rtg bookkeeping";
      seen += result.trajectory.steps[t].reward;
    }
    if (failure.empty() && result.achieved_return < 1.0) {
      failure = "instrumented rollout saw no reward";
    }
  }

  // RTG telescoping on random rewards
  if (failure.empty()) {
    Rng r3(12);
    Trajectory traj;
    traj.meta = {"synthetic", 0, 0};
    for (int i = 0; i < 300; ++i) {
      StepRecord s{};
      s.reward = r3.uniform() < 0.4 ? 1.0f : 0.0f;
      traj.steps.push_back(s);
    }
    RtgTrajectory rtg = compute_rtg(traj);
    for (int t = 0; t + 1 < 300 && failure.empty(); ++t) {
      if (rtg.rtgs[static_cast<size_t>(t)] !=
          rtg.rtgs[static_cast<size_t>(t + 1)] + traj.steps[static_cast<size_t>(t)].reward) {
        failure = "rtg telescoping";
      }
    }
  }

  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = failure.empty() && elapsed < 60.0;
  out.detail = (failure.empty() ? "all exact assertions hold" : failure) + ", " +
               fmt_float(elapsed) + "s";
  return out;
}

// ---------------------------------------------------------------------------
// criterion 3: curation oracle

Outcome criterion_curation() {
  const auto start = Clock::now();
  std::string failure;

  // 100 synthetic 300-step episodes with known returns: 40 hopeless runs
  // (return 0) and 60 with k trailing rewards, k = 1..60
  std::vector<Trajectory> episodes;
  int64_t expected_windows = 0;
  const int window = 20;
  for (int e = 0; e < 100; ++e) {
    Trajectory traj;
    traj.meta = {"synthetic", 0, e};
    const int k = e < 40 ? 0 : e - 39;
    for (int t = 0; t < 300; ++t) {
      StepRecord s{};
      s.reward = t >= 300 - k ? 1.0f : 0.0f;
      traj.steps.push_back(s);
    }
    episodes.push_back(std::move(traj));
    if (k >= 1) expected_windows += 300 - window + 1;
  }

  FilterReport report = filter_trajectories(episodes, 0.5);
  if (report.kept.size() != 60 || report.dropped != 40) failure = "filter counts";
  for (const auto& t : report.kept) {
    if (t.episode_return() < 0.5f) failure = "kept a below-threshold episode";
  }

  CurationConfig cfg;
  cfg.window = window;
  auto windows = sample_windows(report.kept, cfg);
  if (static_cast<int64_t>(windows.size()) != expected_windows) {
    failure = "window count " + std::to_string(windows.size()) + " != " +
              std::to_string(expected_windows);
  }

  DatasetStats stats = dataset_stats(report.kept, windows, 0.5, 300);
  for (const auto& w : windows) {
    if (w.slice.rtgs.front() < 0.5f) failure = "initial rtg below epsilon";
  }
  if (stats.below_epsilon_fraction != 0.0) failure = "post-filter long tail";

  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = failure.empty() && elapsed < 30.0;
  out.detail =
      (failure.empty()
           ? "kept 60/100, " + std::to_string(windows.size()) + " windows, no mass below epsilon"
           : failure) +
      ", " + fmt_float(elapsed) + "s";
  return out;
}

// ---------------------------------------------------------------------------
// criterion 4: learning sanity

Outcome criterion_learning() {
  const auto start = Clock::now();
  std::ostringstream detail;

  // (a) memorization: d_model 64, 4 layers overfits 32 windows
  auto overfit_windows = g_work.make_dataset(0.5, LossMode::None, 32, 77);
  DecisionModel overfit_model(g_work.main_model_config(), 13);
  TrainOptions oopts;
  oopts.cfg.batch_size = 16;
  oopts.cfg.lr = 1e-3f;
  oopts.cfg.max_steps = 2000;
  oopts.cfg.eval_every = 0;
  oopts.cfg.warmup_steps = 50;
  oopts.cfg.seed = 13;
  oopts.cfg.loss_mode = LossMode::None;
  oopts.window = g_work.window;
  oopts.prompt_ids = g_work.prompt;
  oopts.maze = g_work.maze;
  oopts.r_expert = 1.0;

  // chunked so the run can stop as soon as the bar is cleared
  double overfit_loss = 1e9;
  int64_t overfit_steps = 0;
  DecisionModel* om = &overfit_model;
  for (int chunk = 0; chunk < 10 && overfit_loss >= 1e-3; ++chunk) {
    TrainOptions copts = oopts;
    copts.cfg.max_steps = 200;
    copts.cfg.warmup_steps = chunk == 0 ? 50 : 0;
    TrainResult tr = train_model(*om, overfit_windows, copts);
    overfit_loss = tr.final_loss;
    overfit_steps += tr.total_steps;
  }
  const bool overfit_ok = overfit_loss < 1e-3;
  detail << "overfit loss " << fmt_float(overfit_loss) << " after " << overfit_steps
         << " steps";

  // (b) the full curated run beats both the random baseline and an
  // identically trained no-curation run
  g_work.ensure_trained();
  const auto& curated = g_work.curated_outcome_;
  const auto& uncurated = g_work.uncurated_outcome_;
  const double bar =
      g_work.random_base_.mean + 10.0 * g_work.random_base_.stddev;
  const bool beats_random = curated.best_return > bar;
  const bool beats_uncurated = curated.best_return > uncurated.best_return;
  detail << "; curated best " << fmt_float(curated.best_return) << " (score "
         << fmt_float(curated.best_score) << ") vs uncurated "
         << fmt_float(uncurated.best_return) << ", random bar " << fmt_float(bar);

  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = overfit_ok && beats_random && beats_uncurated && elapsed < 7200.0;
  out.detail = detail.str() + ", " + fmt_float(elapsed) + "s";
  return out;
}

// ---------------------------------------------------------------------------
// criterion 5: rtg conditioning

Outcome criterion_rtg() {
  const auto start = Clock::now();
  DecisionModel model = g_work.load_best();
  EvalOptions opts;
  opts.rollout.prompt_ids = g_work.prompt;
  opts.rollout.window = g_work.window;
  opts.rollout.max_steps = g_work.maze.max_episode_length;
  opts.episodes = 10;
  opts.base_seed = 5001;
  opts.r_random = g_work.random_base_.mean;
  opts.r_expert = g_work.expert_base_.mean;
  opts.threads = 2;

  RtgSweepResult sweep =
      rtg_sweep(model, g_work.maze, {50, 100, 150, 200, 250}, opts);
  write_sweep_csv(sweep, g_work.dir + "/rtg_sweep.csv", "acceptance");

  std::ostringstream detail;
  detail << "spearman " << fmt_float(sweep.spearman) << " [";
  for (size_t i = 0; i < sweep.rows.size(); ++i) {
    if (i) detail << ", ";
    detail << fmt_float(sweep.rows[i].commanded) << "->"
           << fmt_float(sweep.rows[i].achieved_mean);
  }
  detail << "]";

  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = sweep.spearman > 0.0 && elapsed < 600.0;
  out.detail = detail.str() + ", " + fmt_float(elapsed) + "s";
  return out;
}

// ---------------------------------------------------------------------------
// criterion 6: modality gap

Outcome criterion_modality() {
  const auto start = Clock::now();
  DecisionModel model = g_work.load_best();

  // 100 windows sampled from the raw offline pool, mixed quality and all:
  // that is the distribution the representation analysis talks about
  const auto& pool = g_work.pool();
  Rng rng(606);
  std::vector<TrajectoryWindow> windows;
  CurationConfig cfg;
  cfg.window = g_work.window;
  for (int i = 0; i < 100; ++i) {
    const auto& ep = pool[static_cast<size_t>(rng.uniform_int(
        0, static_cast<int>(pool.size()) - 1))];
    auto all = sample_windows({ep}, cfg);
    windows.push_back(all[static_cast<size_t>(
        rng.uniform_int(0, static_cast<int>(all.size()) - 1))]);
  }

  auto traj_samples =
      embed_windows(model, windows, ReprMode::TrajModal, g_work.prompt, g_work.window);
  auto text_samples =
      embed_windows(model, windows, ReprMode::PromptText, g_work.prompt, g_work.window);

  auto layer0 = [](const std::vector<EmbeddingSample>& samples) {
    std::vector<EmbeddingSample> out;
    for (const auto& s : samples)
      if (s.layer == 0) out.push_back(s);
    return out;
  };
  const double traj_input = mean_offdiagonal(cosine_similarity_matrix(layer0(traj_samples)));
  const double text_input = mean_offdiagonal(cosine_similarity_matrix(layer0(text_samples)));
  const auto traj_layers = layerwise_mean_similarity(traj_samples);
  const double traj_final = traj_layers.back();

  {
    CsvWriter csv(g_work.dir + "/modality_layerwise.csv", "acceptance",
                  {"layer", "trajmodal", "prompttext"});
    const auto text_layers = layerwise_mean_similarity(text_samples);
    for (size_t l = 0; l < traj_layers.size(); ++l) {
      csv.row({std::to_string(l), fmt_float(traj_layers[l]), fmt_float(text_layers[l])});
    }
  }

  const double margin = text_input - traj_input;
  std::ostringstream detail;
  detail << "input-layer mean cosine: traj-modal " << fmt_float(traj_input)
         << " vs prompt-text " << fmt_float(text_input) << " (margin "
         << fmt_float(margin) << "); traj-modal final layer " << fmt_float(traj_final);

  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = traj_input < text_input && traj_final > traj_input && elapsed < 300.0;
  out.detail = detail.str() + ", " + fmt_float(elapsed) + "s";
  return out;
}

// ---------------------------------------------------------------------------
// criterion 7: ablation harness

Outcome criterion_ablation() {
  const auto start = Clock::now();
  g_work.ensure_baselines();

  SweepContext ctx;
  ctx.maze = g_work.maze;
  ctx.pool = g_work.pool();
  ctx.r_random = g_work.random_base_.mean;
  ctx.r_expert = g_work.expert_base_.mean;
  ctx.prompt_ids = g_work.prompt;

  TrainConfig base;
  base.batch_size = 16;
  base.lr = 3e-4f;
  base.max_steps = 240;
  base.eval_every = 120;
  base.eval_episodes = 6;
  base.eval_rtg = 250.0;
  base.warmup_steps = 50;
  CurationConfig curation;
  curation.window = g_work.window;

  std::vector<ModelConfig> sizes(3);
  sizes[0].d_model = 32; sizes[0].n_layers = 2; sizes[0].n_heads = 2;
  sizes[1].d_model = 64; sizes[1].n_layers = 2; sizes[1].n_heads = 4;
  sizes[2].d_model = 128; sizes[2].n_layers = 4; sizes[2].n_heads = 4;
  for (auto& s : sizes) s.max_positions = 512;
  const std::vector<int> data_sizes{2000, 6000, 18000};

  std::vector<AblationSpec> specs;
  for (const auto& size : sizes) {
    for (int data : data_sizes) {
      AblationSpec spec;
      spec.label = "scale_d" + std::to_string(size.d_model) + "_w" + std::to_string(data);
      spec.model = size;
      spec.data_windows = data;
      spec.seed = 17;
      specs.push_back(spec);
    }
  }

  // pretrain on/off pair on the middle model
  Backbone pre_backbone(sizes[1], 909);
  PretrainConfig pcfg;
  pcfg.steps = 600;
  pcfg.seq_len = 32;
  pcfg.corpus_sequences = 160;
  pcfg.holdout_sequences = 32;
  pcfg.batch_size = 8;
  auto corpus = synthetic_corpus(pcfg.corpus_sequences, pcfg.seq_len, 909);
  PretrainResult pre = synthetic_pretrain(pre_backbone, corpus, pcfg);
  const std::string pre_path = g_work.dir + "/ablation_pretrained.ckpt";
  {
    ParamList bp = pre_backbone.params();
    make_checkpoint(pre_backbone.config(), bp, pcfg.steps, 0, 909).save(pre_path);
  }
  for (bool on : {false, true}) {
    AblationSpec spec;
    spec.label = on ? "pretrain_on" : "pretrain_off";
    spec.model = sizes[1];
    spec.data_windows = 18000;
    spec.pretrain_init = on;
    spec.pretrain_checkpoint = pre_path;
    spec.seed = 17;
    specs.push_back(spec);
  }

  // two worker threads; each cell is single-threaded end to end
  std::vector<AblationResult> rows(specs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < specs.size(); i = next.fetch_add(1)) {
      TrainConfig cell_train = base;
      rows[i] = run_ablation_cell(ctx, specs[i], cell_train, curation);
    }
  };
  std::thread t1(worker);
  worker();
  t1.join();

  write_ablation_csv(rows, g_work.dir + "/scale_sweep.csv", "acceptance");
  const std::string report = monotonicity_report(rows);

  bool complete = rows.size() == 11;
  for (const auto& r : rows) complete = complete && r.steps_to_best >= 0;
  double pre_on = 0.0, pre_off = 0.0;
  for (const auto& r : rows) {
    if (r.spec.label == "pretrain_on") pre_on = r.best_return;
    if (r.spec.label == "pretrain_off") pre_off = r.best_return;
  }

  std::ostringstream detail;
  detail << rows.size() << " rows; " << report << "; pretrain on/off "
         << fmt_float(pre_on) << "/" << fmt_float(pre_off) << " (reported); holdout "
         << fmt_float(pre.init_holdout_loss) << "->" << fmt_float(pre.final_holdout_loss);

  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = complete;
  out.detail = detail.str() + ", " + fmt_float(elapsed) + "s";
  return out;
}

// ---------------------------------------------------------------------------
// criterion 8: reproducibility

Outcome criterion_reproducibility() {
  const auto start = Clock::now();
  std::string failure;
  const std::string dir = g_work.dir;

  MazeConfig maze = MazeConfig::u_maze();
  auto stage = [&](const std::string& tag) {
    auto episodes = collect(maze, {PolicyKind::Noisy, 0.3f, 20, 404});
    const std::string tpath = dir + "/repro_" + tag + ".jsonl";
    write_trajectory_file(tpath, episodes, 1, 2, 404);
    CurationConfig cfg;
    cfg.window = 20;
    cfg.max_windows = 400;
    cfg.seed = 404;
    auto kept = filter_trajectories(std::move(episodes), 0.5).kept;
    auto windows = sample_windows(kept, cfg);
    for (auto& w : windows) assign_step_weights(w, cfg);
    const std::string wpath = dir + "/repro_" + tag + ".tjwn";
    write_window_file(wpath, windows, 2, 404);

    ModelConfig mc;
    mc.d_model = 16;
    mc.n_layers = 1;
    mc.n_heads = 2;
    mc.max_positions = 256;
    DecisionModel model(mc, 404);
    TrainOptions opts;
    opts.cfg.batch_size = 4;
    opts.cfg.max_steps = 25;
    opts.cfg.eval_every = 10;
    opts.cfg.eval_episodes = 2;
    opts.cfg.seed = 404;
    opts.cfg.warmup_steps = 5;
    opts.window = 20;
    opts.prompt_ids = g_work.prompt;
    opts.maze = maze;
    opts.r_random = 0.0;
    opts.r_expert = 200.0;
    opts.eval_threads = 2;
    opts.metrics_path = dir + "/repro_" + tag + "_metrics.csv";
    train_model(model, windows, opts);
    return std::make_tuple(file_checksum(tpath), file_checksum(wpath),
                           file_checksum(opts.metrics_path));
  };

  const auto a = stage("a");
  const auto b = stage("b");
  if (std::get<0>(a) != std::get<0>(b)) failure = "trajectory files differ";
  if (std::get<1>(a) != std::get<1>(b)) failure = "window files differ";
  if (std::get<2>(a) != std::get<2>(b)) failure = "metrics CSVs differ";

  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = failure.empty();
  out.detail = (failure.empty() ? "dataset, window and metrics reruns byte-identical"
                                : failure) +
               ", " + fmt_float(elapsed) + "s";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
    if (arg == "--work-dir" && i + 1 < argc) g_work.dir = argv[++i];
  }
  fs::create_directories(g_work.dir);

  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Entry> criteria{
      {1, "gradient suite", criterion_gradients},
      {2, "structural suite", criterion_structure},
      {3, "curation oracle", criterion_curation},
      {4, "learning sanity", criterion_learning},
      {5, "rtg conditioning", criterion_rtg},
      {6, "modality gap", criterion_modality},
      {7, "ablation harness", criterion_ablation},
      {8, "reproducibility", criterion_reproducibility},
  };

  int failures = 0;
  for (const auto& entry : criteria) {
    if (only != 0 && entry.id != only) continue;
    std::cout << "criterion " << entry.id << " (" << entry.name << ") running...\n"
              << std::flush;
    Outcome outcome;
    try {
      outcome = entry.fn();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    std::cout << (outcome.pass ? "[PASS]" : "[FAIL]") << " criterion " << entry.id
              << " (" << entry.name << "): " << outcome.detail << "\n"
              << std::flush;
    if (!outcome.pass) ++failures;
  }
  return failures;
}
