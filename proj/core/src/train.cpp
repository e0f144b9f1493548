#include "trajllm/train.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "trajllm/io.hpp"

namespace trajllm {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("training.batch_size must be >= 1");
  if (!(lr > 0.0f)) throw std::invalid_argument("training.lr must be positive");
  if (epochs < 0) throw std::invalid_argument("training.epochs must be >= 0");
  if (max_steps < 0) throw std::invalid_argument("training.max_steps must be >= 0");
  if (eval_every < 0) throw std::invalid_argument("training.eval_every must be >= 0");
  if (eval_episodes < 1) throw std::invalid_argument("training.eval_episodes must be >= 1");
  if (warmup_steps < 0) throw std::invalid_argument("training.warmup_steps must be >= 0");
}

double lr_at(const TrainConfig& cfg, int64_t step, int64_t total_steps) {
  const double peak = cfg.lr;
  const int64_t warmup = std::min<int64_t>(cfg.warmup_steps, total_steps);
  if (step < warmup) {
    return peak * static_cast<double>(step + 1) / static_cast<double>(warmup);
  }
  if (total_steps <= warmup) return peak;
  const double progress = static_cast<double>(step - warmup) /
                          static_cast<double>(total_steps - warmup);
  return peak * 0.5 * (1.0 + std::cos(3.14159265358979323846 * std::min(1.0, progress)));
}

std::vector<FusedSequence> make_batch(const DecisionModel& model,
                                      const std::vector<const TrajectoryWindow*>& windows,
                                      const std::vector<int>& prompt_ids,
                                      int window) {
  if (windows.empty()) throw std::invalid_argument("make_batch: empty batch");
  std::vector<FusedSequence> batch;
  batch.reserve(windows.size());
  for (const TrajectoryWindow* w : windows) {
    const int t = w->slice.length();
    if (t > window) {
      throw std::invalid_argument("make_batch: window of " + std::to_string(t) +
                                  " steps exceeds W=" + std::to_string(window));
    }
    if (static_cast<int>(w->step_weights.size()) != t) {
      throw std::invalid_argument("make_batch: window carries " +
                                  std::to_string(w->step_weights.size()) +
                                  " step weights for " + std::to_string(t) + " steps");
    }
    RtgTrajectory padded = w->slice;
    std::vector<float> weights = w->step_weights;
    std::vector<uint8_t> valid(static_cast<size_t>(window), 1);
    if (t < window) {
      const int pad = window - t;
      padded.states.resize(static_cast<size_t>(window) * 4, 0.0f);
      padded.actions.resize(static_cast<size_t>(window) * 2, 0.0f);
      padded.rewards.resize(static_cast<size_t>(window), 0.0f);
      padded.rtgs.resize(static_cast<size_t>(window), 0.0f);
      weights.resize(static_cast<size_t>(window), 0.0f);
      std::fill(valid.begin() + t, valid.end(), 0);
      (void)pad;
    }
    Tensor traj_emb = model.encoder().encode(padded, w->start, window);
    FusedSequence fused = model.fuse(prompt_ids, traj_emb, w->start);
    fused.action_targets = padded.actions;
    fused.step_weights = std::move(weights);
    fused.target_valid = std::move(valid);
    batch.push_back(std::move(fused));
  }
  return batch;
}

Tensor sequence_loss(const DecisionModel& model, FusedSequence& fused,
                     LossMode mode) {
  ForwardResult fwd = model.backbone().forward(fused.embeddings, true);
  Tensor preds = model.predict_actions(fwd.final, fused);
  Tensor targets = Tensor::from_data(
      {fused.steps, model.config().action_dim}, fused.action_targets);
  return weighted_mse(preds, targets, fused.step_weights, mode, &fused.target_valid);
}

TrainResult train_model(DecisionModel& model,
                        const std::vector<TrajectoryWindow>& windows,
                        const TrainOptions& opts) {
  opts.cfg.validate();
  if (windows.empty()) throw std::invalid_argument("train: dataset is empty");

  ParamList params = model.params();
  if (!opts.cfg.init_checkpoint.empty()) {
    Checkpoint init = Checkpoint::load(opts.cfg.init_checkpoint);
    check_config_match(model.config(), init.config);
    const size_t copied = apply_checkpoint_partial(init, params);
    if (copied == 0) {
      throw std::invalid_argument("init checkpoint shares no tensors with the model: " +
                                  opts.cfg.init_checkpoint);
    }
  }

  AdamWConfig opt_cfg;
  opt_cfg.lr = opts.cfg.lr;
  opt_cfg.weight_decay = opts.cfg.weight_decay;
  AdamW opt(params, opt_cfg);

  const int64_t steps_per_epoch =
      (static_cast<int64_t>(windows.size()) + opts.cfg.batch_size - 1) / opts.cfg.batch_size;
  const int64_t total_steps = opts.cfg.max_steps > 0
                                  ? opts.cfg.max_steps
                                  : steps_per_epoch * opts.cfg.epochs;
  if (total_steps <= 0) throw std::invalid_argument("train: zero total steps");

  std::unique_ptr<CsvWriter> metrics;
  if (!opts.metrics_path.empty()) {
    metrics = std::make_unique<CsvWriter>(
        opts.metrics_path,
        "config_hash=" + hex64(opts.config_hash) + " seed=" + std::to_string(opts.cfg.seed),
        std::vector<std::string>{"step", "loss", "lr", "eval_return_mean",
                                 "eval_return_std", "eval_score"});
  }

  Rng shuffle_rng(Rng::mix(opts.cfg.seed, 0x74726e73ULL));
  std::vector<size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = order.size();  // forces a shuffle on first use

  TrainResult result;
  result.total_steps = total_steps;

  auto run_eval = [&](int64_t step) {
    EvalOptions eopts;
    eopts.rollout.prompt_ids = opts.prompt_ids;
    eopts.rollout.window = opts.window;
    eopts.rollout.max_steps = opts.maze.max_episode_length;
    eopts.episodes = opts.cfg.eval_episodes;
    eopts.base_seed = Rng::mix(opts.cfg.seed, 0x6576616cULL);
    eopts.r_random = opts.r_random;
    eopts.r_expert = opts.r_expert;
    eopts.threads = opts.eval_threads;
    EvalReport report = evaluate(model, opts.maze, opts.cfg.eval_rtg, eopts);
    if (result.best_step < 0 || report.return_mean > result.best_eval_return) {
      result.best_eval_return = report.return_mean;
      result.best_eval_score = report.score_mean;
      result.best_step = step;
      result.best = make_checkpoint(model.config(), params, step, opts.config_hash,
                                    opts.cfg.seed);
      if (!opts.best_ckpt_path.empty()) result.best->save(opts.best_ckpt_path);
    }
    return report;
  };

  for (int64_t step = 0; step < total_steps; ++step) {
    std::vector<const TrajectoryWindow*> batch;
    batch.reserve(static_cast<size_t>(opts.cfg.batch_size));
    for (int b = 0; b < opts.cfg.batch_size; ++b) {
      if (cursor >= order.size()) {
        shuffle_rng.shuffle(order);
        cursor = 0;
      }
      batch.push_back(&windows[order[cursor++]]);
    }

    zero_grads(params);
    auto fused_batch = make_batch(model, batch, opts.prompt_ids, opts.window);
    const float inv_b = 1.0f / static_cast<float>(fused_batch.size());
    double loss_sum = 0.0;
    for (auto& fused : fused_batch) {
      Tensor loss = sequence_loss(model, fused, opts.cfg.loss_mode);
      loss_sum += loss.item();
      backward(loss, inv_b);
    }
    const double loss_mean = loss_sum * inv_b;
    if (!std::isfinite(loss_mean)) {
      throw std::runtime_error("train: loss diverged to NaN/Inf at step " +
                               std::to_string(step));
    }
    if (opts.cfg.clip_norm > 0.0f) clip_global_norm(params, opts.cfg.clip_norm);
    const double lr = lr_at(opts.cfg, step, total_steps);
    opt.step(params, static_cast<float>(lr));
    result.final_loss = loss_mean;

    std::optional<EvalReport> eval;
    if (opts.cfg.eval_every > 0 &&
        ((step + 1) % opts.cfg.eval_every == 0 || step + 1 == total_steps)) {
      eval = run_eval(step + 1);
    }
    if (metrics) {
      metrics->row({std::to_string(step + 1), fmt_float(loss_mean), fmt_float(lr),
                    eval ? fmt_float(eval->return_mean) : "",
                    eval ? fmt_float(eval->return_std) : "",
                    eval ? fmt_float(eval->score_mean) : ""});
    }
  }
  if (metrics) metrics->flush();
  return result;
}

}  // namespace trajllm
