#include "trajllm/ablation.hpp"

#include <algorithm>
#include <map>

#include "trajllm/io.hpp"

namespace trajllm {

AblationResult run_ablation_cell(const SweepContext& ctx, const AblationSpec& spec,
                                 const TrainConfig& base_train,
                                 const CurationConfig& base_curation) {
  CurationConfig curation = base_curation;
  curation.mode = spec.mode;
  curation.epsilon = spec.epsilon;
  curation.max_windows = spec.data_windows;
  curation.seed = spec.seed;

  auto filtered = filter_trajectories(ctx.pool, curation.epsilon);
  auto windows = sample_windows(filtered.kept, curation);
  for (auto& w : windows) assign_step_weights(w, curation);

  DecisionModel model(spec.model, spec.seed);

  TrainOptions opts;
  opts.cfg = base_train;
  opts.cfg.seed = spec.seed;
  opts.cfg.loss_mode = spec.mode;
  if (spec.pretrain_init) opts.cfg.init_checkpoint = spec.pretrain_checkpoint;
  opts.window = curation.window;
  opts.prompt_ids = ctx.prompt_ids;
  opts.maze = ctx.maze;
  opts.r_random = ctx.r_random;
  opts.r_expert = ctx.r_expert;
  opts.config_hash = ctx.config_hash;

  TrainResult tr = train_model(model, windows, opts);

  AblationResult result;
  result.spec = spec;
  result.param_count = DecisionModel::parameter_count(spec.model);
  result.windows_used = static_cast<int>(windows.size());
  result.best_return = tr.best_eval_return;
  result.best_score = tr.best_eval_score;
  result.steps_to_best = tr.best_step;
  result.final_loss = tr.final_loss;
  return result;
}

void write_ablation_csv(const std::vector<AblationResult>& rows,
                        const std::string& path, const std::string& provenance) {
  CsvWriter csv(path, provenance,
                {"label", "d_model", "n_layers", "n_heads", "param_count",
                 "data_windows", "windows_used", "mode", "epsilon", "pretrain_init",
                 "seed", "best_return", "best_score", "steps_to_best", "final_loss"});
  for (const auto& r : rows) {
    csv.row({r.spec.label, std::to_string(r.spec.model.d_model),
             std::to_string(r.spec.model.n_layers), std::to_string(r.spec.model.n_heads),
             std::to_string(r.param_count), std::to_string(r.spec.data_windows),
             std::to_string(r.windows_used), loss_mode_name(r.spec.mode),
             fmt_float(r.spec.epsilon), r.spec.pretrain_init ? "1" : "0",
             std::to_string(r.spec.seed), fmt_float(r.best_return),
             fmt_float(r.best_score), std::to_string(r.steps_to_best),
             fmt_float(r.final_loss)});
  }
}

std::string monotonicity_report(const std::vector<AblationResult>& rows) {
  // group by parameter count, inspect the largest model's data axis
  std::map<int64_t, std::vector<const AblationResult*>> by_params;
  for (const auto& r : rows) by_params[r.param_count].push_back(&r);
  if (by_params.empty()) return "monotonicity: no rows";
  auto& largest = by_params.rbegin()->second;
  std::sort(largest.begin(), largest.end(),
            [](const AblationResult* a, const AblationResult* b) {
              return a->spec.data_windows < b->spec.data_windows;
            });
  bool nondecreasing = true;
  std::string detail;
  for (size_t i = 0; i < largest.size(); ++i) {
    if (i) {
      detail += " -> ";
      if (largest[i]->best_return + 1e-9 < largest[i - 1]->best_return) nondecreasing = false;
    }
    detail += fmt_float(largest[i]->best_return) + " @" +
              std::to_string(largest[i]->spec.data_windows) + "w";
  }
  return "monotonicity(largest model, " +
         std::to_string(by_params.rbegin()->first) + " params): " +
         (nondecreasing ? "nondecreasing" : "not monotone") + " [" + detail + "]";
}

}  // namespace trajllm
