#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "trajllm/ablation.hpp"
#include "trajllm/analysis.hpp"
#include "trajllm/checkpoint.hpp"
#include "trajllm/config.hpp"
#include "trajllm/io.hpp"
#include "trajllm/pretrain.hpp"
#include "trajllm/prompts.hpp"
#include "trajllm/rollout.hpp"
#include "trajllm/train.hpp"

namespace fs = std::filesystem;
using namespace trajllm;

namespace {

struct Common {
  std::string config_path;
  std::optional<uint64_t> seed;
  bool print_config = false;
};

void add_common(CLI::App* sub, Common& common) {
  sub->add_option("--config", common.config_path, "run config file");
  sub->add_option("--seed", common.seed, "override every stage seed");
  sub->add_flag("--print-config", common.print_config, "print the effective config");
}

RunConfig load_config(const Common& common) {
  RunConfig cfg;
  if (!common.config_path.empty()) cfg = load_run_config(common.config_path);
  const char* env = std::getenv("TRAJLLM_SEED");
  apply_seed_override(cfg, env ? env : "", common.seed.has_value(),
                      common.seed.value_or(0));
  cfg.validate();
  if (common.print_config) std::cout << cfg.normalized();
  std::cout << "config_hash=" << hex64(cfg.hash()) << "\n";
  return cfg;
}

uint64_t maze_hash(const MazeConfig& maze) {
  std::string repr;
  for (const auto& w : maze.walls) {
    repr += fmt_float(w.x0) + "," + fmt_float(w.y0) + "," + fmt_float(w.x1) + "," +
            fmt_float(w.y1) + ";";
  }
  repr += fmt_float(maze.goal[0]) + "," + fmt_float(maze.goal[1]) + "," +
          fmt_float(maze.goal_radius) + "," + fmt_float(maze.dt) + "," +
          fmt_float(maze.velocity_decay) + "," + std::to_string(maze.max_episode_length);
  return fnv1a(repr);
}

struct Baselines {
  double r_random;
  double r_random_std;
  double r_expert;
};

Baselines resolve_baselines(const RunConfig& cfg) {
  if (!std::isnan(cfg.evaluation.r_random)) {
    return {cfg.evaluation.r_random, 0.0, cfg.evaluation.r_expert};
  }
  const auto rnd = measure_baseline(cfg.maze, PolicyKind::Random,
                                    cfg.evaluation.baseline_episodes,
                                    Rng::mix(cfg.evaluation.seed, 0x626c7231ULL));
  const auto exp = measure_baseline(cfg.maze, PolicyKind::Expert,
                                    cfg.evaluation.baseline_episodes,
                                    Rng::mix(cfg.evaluation.seed, 0x626c7232ULL));
  std::cout << "baselines: r_random=" << fmt_float(rnd.mean) << " (std "
            << fmt_float(rnd.stddev) << "), r_expert=" << fmt_float(exp.mean) << "\n";
  return {rnd.mean, rnd.stddev, exp.mean};
}

std::string provenance(const RunConfig& cfg, uint64_t seed) {
  return "config_hash=" + hex64(cfg.hash()) + " seed=" + std::to_string(seed);
}

DecisionModel load_model_from(const std::string& checkpoint_path) {
  Checkpoint ckpt = Checkpoint::load(checkpoint_path);
  DecisionModel model(ckpt.config, /*seed=*/0);
  ParamList params = model.params();
  apply_checkpoint(ckpt, params);
  return model;
}

int cmd_collect(const Common& common, const std::string& out) {
  RunConfig cfg = load_config(common);
  auto episodes = collect(cfg.maze, cfg.collection);
  write_trajectory_file(out, episodes, maze_hash(cfg.maze), cfg.hash(),
                        cfg.collection.seed);
  double mean_return = 0.0;
  for (const auto& e : episodes) mean_return += e.episode_return();
  mean_return /= static_cast<double>(episodes.size());
  std::cout << "collected " << episodes.size() << " episodes ("
            << policy_name(cfg.collection.policy) << ", mean return "
            << fmt_float(mean_return) << ") -> " << out << "\n";
  return 0;
}

int cmd_curate(const Common& common, const std::vector<std::string>& inputs,
               const std::string& out) {
  RunConfig cfg = load_config(common);
  std::vector<Trajectory> pool;
  for (const auto& path : inputs) {
    auto part = read_trajectory_file(path);
    pool.insert(pool.end(), part.begin(), part.end());
  }
  if (pool.empty()) throw std::invalid_argument("curate: no episodes in input files");

  auto filtered = filter_trajectories(pool, cfg.curation.epsilon);
  std::cout << "filter: kept " << filtered.kept.size() << ", dropped "
            << filtered.dropped << " (epsilon " << fmt_float(cfg.curation.epsilon)
            << ")\n";
  auto windows = sample_windows(filtered.kept, cfg.curation);
  for (auto& w : windows) assign_step_weights(w, cfg.curation);
  write_window_file(out, windows, cfg.hash(), cfg.curation.seed);

  const auto stats = dataset_stats(filtered.kept, windows, cfg.curation.epsilon,
                                   cfg.maze.max_episode_length);
  write_stats_csv(stats, out + ".returns_hist.csv", out + ".initial_rtg_hist.csv",
                  provenance(cfg, cfg.curation.seed));
  std::cout << "curated " << windows.size() << " windows -> " << out << "\n";
  return 0;
}

int cmd_pretrain(const Common& common, const std::string& out) {
  RunConfig cfg = load_config(common);
  Backbone backbone(cfg.model, cfg.pretrain.seed);
  auto corpus = synthetic_corpus(cfg.pretrain.corpus_sequences, cfg.pretrain.seq_len,
                                 cfg.pretrain.seed);
  PretrainResult result = synthetic_pretrain(backbone, corpus, cfg.pretrain);
  ParamList params = backbone.params();
  Checkpoint ckpt = make_checkpoint(backbone.config(), params, cfg.pretrain.steps,
                                    cfg.hash(), cfg.pretrain.seed);
  ckpt.save(out);
  std::cout << "pretrain: holdout loss " << fmt_float(result.init_holdout_loss)
            << " -> " << fmt_float(result.final_holdout_loss) << ", checkpoint -> "
            << out << "\n";
  return 0;
}

int cmd_train(const Common& common, const std::string& data,
              const std::string& out_dir, const std::string& init) {
  RunConfig cfg = load_config(common);
  fs::create_directories(out_dir);
  auto windows = read_window_file(data);
  if (windows.empty()) throw std::invalid_argument("train: empty window file");

  DecisionModel model(cfg.model, cfg.training.seed);
  std::cout << "model parameters: " << model.parameter_count() << "\n";

  const Baselines base = resolve_baselines(cfg);
  TrainOptions opts;
  opts.cfg = cfg.training;
  if (!init.empty()) opts.cfg.init_checkpoint = init;
  opts.window = cfg.curation.window;
  opts.prompt_ids = cfg.prompt_ids();
  opts.maze = cfg.maze;
  opts.r_random = base.r_random;
  opts.r_expert = base.r_expert;
  opts.metrics_path = out_dir + "/metrics.csv";
  opts.best_ckpt_path = out_dir + "/best.ckpt";
  opts.config_hash = cfg.hash();

  TrainResult result = train_model(model, windows, opts);
  ParamList params = model.params();
  make_checkpoint(model.config(), params, result.total_steps, cfg.hash(),
                  cfg.training.seed)
      .save(out_dir + "/final.ckpt");
  std::cout << "trained " << result.total_steps << " steps, final loss "
            << fmt_float(result.final_loss);
  if (result.best_step >= 0) {
    std::cout << ", best eval return " << fmt_float(result.best_eval_return)
              << " (score " << fmt_float(result.best_eval_score) << ") at step "
              << result.best_step;
  }
  std::cout << "\n";
  return 0;
}

EvalOptions eval_options(const RunConfig& cfg, const Baselines& base,
                         int episodes_override) {
  EvalOptions eopts;
  eopts.rollout.prompt_ids = cfg.prompt_ids();
  eopts.rollout.window = cfg.curation.window;
  eopts.rollout.max_steps = cfg.maze.max_episode_length;
  eopts.episodes = episodes_override > 0 ? episodes_override : cfg.evaluation.episodes;
  eopts.base_seed = cfg.evaluation.seed;
  eopts.r_random = base.r_random;
  eopts.r_expert = base.r_expert;
  eopts.threads = 2;
  return eopts;
}

int cmd_eval(const Common& common, const std::string& checkpoint, double rtg_flag,
             int episodes_flag, const std::string& out, const std::string& dump) {
  RunConfig cfg = load_config(common);
  DecisionModel model = load_model_from(checkpoint);
  const Baselines base = resolve_baselines(cfg);
  const EvalOptions eopts = eval_options(cfg, base, episodes_flag);

  const double rtg = rtg_flag > 0 ? rtg_flag : cfg.evaluation.rtgs.back();
  EvalReport report = evaluate(model, cfg.maze, rtg, eopts);
  if (!dump.empty()) {
    std::vector<Trajectory> rollouts;
    for (const auto& r : report.results) rollouts.push_back(r.trajectory);
    write_trajectory_file(dump, rollouts, maze_hash(cfg.maze), cfg.hash(),
                          cfg.evaluation.seed);
  }
  std::cout << "eval: rtg " << fmt_float(rtg) << ", return "
            << fmt_float(report.return_mean) << " +/- " << fmt_float(report.return_std)
            << ", score " << fmt_float(report.score_mean) << " +/- "
            << fmt_float(report.score_std) << " over " << report.episodes
            << " episodes\n";
  if (!out.empty()) {
    CsvWriter csv(out, provenance(cfg, cfg.evaluation.seed),
                  {"episode", "commanded_rtg", "achieved_return", "score", "success"});
    for (size_t i = 0; i < report.results.size(); ++i) {
      const auto& r = report.results[i];
      csv.row({std::to_string(i), fmt_float(r.commanded_rtg),
               fmt_float(r.achieved_return),
               fmt_float(normalized_score(r.achieved_return, base.r_random,
                                          base.r_expert)),
               r.success ? "1" : "0"});
    }
  }
  return 0;
}

int cmd_sweep_rtg(const Common& common, const std::string& checkpoint, double from,
                  double to, double step, int episodes_flag, const std::string& out) {
  RunConfig cfg = load_config(common);
  DecisionModel model = load_model_from(checkpoint);
  const Baselines base = resolve_baselines(cfg);

  std::vector<double> rtgs;
  if (step > 0) {
    for (double r = from; r <= to + 1e-9; r += step) rtgs.push_back(r);
  } else {
    rtgs = cfg.evaluation.rtgs;
  }

  RtgSweepResult sweep =
      rtg_sweep(model, cfg.maze, rtgs, eval_options(cfg, base, episodes_flag));
  write_sweep_csv(sweep, out, provenance(cfg, cfg.evaluation.seed));
  std::cout << "rtg sweep: " << sweep.rows.size() << " rows, spearman "
            << fmt_float(sweep.spearman) << " -> " << out << "\n";
  return 0;
}

int cmd_sweep_scale(const Common& common, const std::string& out_dir,
                    bool with_pretrain) {
  RunConfig cfg = load_config(common);
  fs::create_directories(out_dir);

  SweepContext ctx;
  ctx.maze = cfg.maze;
  ctx.pool = collect(cfg.maze, cfg.collection);
  const Baselines base = resolve_baselines(cfg);
  ctx.r_random = base.r_random;
  ctx.r_expert = base.r_expert;
  ctx.prompt_ids = cfg.prompt_ids();
  ctx.config_hash = cfg.hash();

  std::vector<ModelConfig> sizes(3, cfg.model);
  sizes[0].d_model = 32; sizes[0].n_layers = 2; sizes[0].n_heads = 2;
  sizes[1].d_model = 64; sizes[1].n_layers = 2; sizes[1].n_heads = 4;
  sizes[2].d_model = 128; sizes[2].n_layers = 4; sizes[2].n_heads = 4;
  const int max_cell = cfg.curation.max_windows > 0 ? cfg.curation.max_windows : 8000;
  const std::vector<int> data_sizes{max_cell / 4, max_cell / 2, max_cell};

  std::vector<AblationResult> rows;
  for (const auto& size : sizes) {
    for (int data : data_sizes) {
      AblationSpec spec;
      spec.label = "scale_d" + std::to_string(size.d_model) + "_w" + std::to_string(data);
      spec.model = size;
      spec.data_windows = data;
      spec.mode = cfg.curation.mode;
      spec.epsilon = cfg.curation.epsilon;
      spec.seed = cfg.training.seed;
      rows.push_back(run_ablation_cell(ctx, spec, cfg.training, cfg.curation));
      std::cout << rows.back().spec.label << ": best return "
                << fmt_float(rows.back().best_return) << "\n";
    }
  }

  if (with_pretrain) {
    Backbone backbone(sizes[1], cfg.pretrain.seed);
    auto corpus = synthetic_corpus(cfg.pretrain.corpus_sequences, cfg.pretrain.seq_len,
                                   cfg.pretrain.seed);
    synthetic_pretrain(backbone, corpus, cfg.pretrain);
    ParamList bp = backbone.params();
    const std::string pre_path = out_dir + "/pretrained.ckpt";
    make_checkpoint(backbone.config(), bp, cfg.pretrain.steps, cfg.hash(),
                    cfg.pretrain.seed)
        .save(pre_path);
    for (bool pre : {false, true}) {
      AblationSpec spec;
      spec.label = pre ? "pretrain_on" : "pretrain_off";
      spec.model = sizes[1];
      spec.data_windows = max_cell;
      spec.mode = cfg.curation.mode;
      spec.epsilon = cfg.curation.epsilon;
      spec.pretrain_init = pre;
      spec.pretrain_checkpoint = pre_path;
      spec.seed = cfg.training.seed;
      rows.push_back(run_ablation_cell(ctx, spec, cfg.training, cfg.curation));
      std::cout << rows.back().spec.label << ": best return "
                << fmt_float(rows.back().best_return) << "\n";
    }
  }

  write_ablation_csv(rows, out_dir + "/scale_sweep.csv",
                     provenance(cfg, cfg.training.seed));
  std::cout << monotonicity_report(rows) << "\n";
  return 0;
}

int cmd_analyze(const Common& common, const std::string& checkpoint,
                const std::string& data, const std::string& out_dir) {
  RunConfig cfg = load_config(common);
  fs::create_directories(out_dir);
  DecisionModel model = load_model_from(checkpoint);
  const uint64_t ckpt_hash = file_checksum(checkpoint);

  auto episodes = read_trajectory_file(data);
  if (episodes.empty()) {
    throw std::invalid_argument("analyze-embeddings: no episodes in " + data);
  }

  // one randomly placed window per sampled episode
  Rng rng(Rng::mix(cfg.analysis.seed, 0x616e6c7aULL));
  std::vector<TrajectoryWindow> windows;
  CurationConfig single = cfg.curation;
  single.stride = 1;
  single.max_windows = 0;
  for (int i = 0; i < cfg.analysis.trajectories; ++i) {
    const auto& ep = episodes[static_cast<size_t>(
        rng.uniform_int(0, static_cast<int>(episodes.size()) - 1))];
    auto all = sample_windows({ep}, single);
    TrajectoryWindow w =
        all[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(all.size()) - 1))];
    w.episode_id = static_cast<uint32_t>(i);
    windows.push_back(std::move(w));
  }

  const auto prompt = cfg.prompt_ids();
  auto base_prov = [&](ReprMode mode, int layer) {
    return "checkpoint_fnv64=" + hex64(ckpt_hash) + " mode=" + repr_mode_name(mode) +
           " layer=" + std::to_string(layer) + " pool=mean " +
           provenance(cfg, cfg.analysis.seed);
  };

  for (ReprMode mode : {ReprMode::TrajModal, ReprMode::PromptText}) {
    auto samples = embed_windows(model, windows, mode, prompt, cfg.curation.window);
    const std::string tag = mode == ReprMode::TrajModal ? "trajmodal" : "prompttext";

    std::vector<EmbeddingSample> input_layer;
    for (const auto& s : samples)
      if (s.layer == 0) input_layer.push_back(s);
    auto matrix = cosine_similarity_matrix(input_layer);
    write_matrix_csv(matrix, out_dir + "/cosine_" + tag + "_layer0.csv",
                     base_prov(mode, 0));

    auto layerwise = layerwise_mean_similarity(samples);
    CsvWriter csv(out_dir + "/layerwise_" + tag + ".csv", base_prov(mode, -1),
                  {"layer", "mean_offdiag_cosine"});
    for (size_t l = 0; l < layerwise.size(); ++l) {
      csv.row({std::to_string(l), fmt_float(layerwise[l])});
    }

    std::vector<std::vector<float>> pooled;
    for (const auto& s : input_layer) pooled.push_back(s.pooled);
    PcaProjection proj = pca_project(pooled);
    CsvWriter pca_csv(out_dir + "/pca_" + tag + "_layer0.csv",
                      base_prov(mode, 0) + " explained=" +
                          fmt_float(proj.explained_ratio[0]) + "," +
                          fmt_float(proj.explained_ratio[1]),
                      {"trajectory", "pc1", "pc2"});
    for (size_t i = 0; i < proj.coords.size(); ++i) {
      pca_csv.row({std::to_string(i), fmt_float(proj.coords[i][0]),
                   fmt_float(proj.coords[i][1])});
    }

    std::cout << tag << ": input-layer mean off-diagonal cosine "
              << fmt_float(mean_offdiagonal(matrix)) << ", final layer "
              << fmt_float(layerwise.back()) << "\n";
  }
  return 0;
}

int cmd_attention_probe(const Common& common, const std::string& checkpoint,
                        bool random_init, const std::string& text,
                        const std::string& out) {
  RunConfig cfg = load_config(common);
  const std::string probe = !text.empty() ? text
                            : !cfg.analysis.probe_text.empty() ? cfg.analysis.probe_text
                                                               : kNullProbeString;
  std::string source;
  std::vector<std::vector<double>> matrix;
  if (random_init || checkpoint.empty()) {
    Backbone backbone(cfg.model, cfg.training.seed);
    matrix = attention_probe(backbone, probe);
    source = "random-init";
  } else {
    Checkpoint ckpt = Checkpoint::load(checkpoint);
    Backbone backbone(ckpt.config, 0);
    ParamList params = backbone.params();
    const size_t copied = apply_checkpoint_partial(ckpt, params);
    if (copied == 0) throw std::invalid_argument("checkpoint has no backbone tensors");
    matrix = attention_probe(backbone, probe);
    source = "checkpoint_fnv64=" + hex64(file_checksum(checkpoint));
  }
  write_matrix_csv(matrix, out, "source=" + source + " layer=0 head_avg=1 " +
                                    provenance(cfg, cfg.training.seed));
  // recency statistic: average attention each row puts on its newest token
  double diag_mass = 0.0;
  for (size_t i = 0; i < matrix.size(); ++i) diag_mass += matrix[i][i];
  diag_mass /= static_cast<double>(matrix.size());
  std::cout << "attention probe (" << source << "): " << matrix.size()
            << " tokens, mean diagonal mass " << fmt_float(diag_mass) << " -> " << out
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory-modality decision transformer laboratory"};
  app.require_subcommand(1);

  Common common;

  auto* collect_cmd = app.add_subcommand("collect", "run a policy and record episodes");
  std::string collect_out = "trajectories.jsonl";
  add_common(collect_cmd, common);
  collect_cmd->add_option("--out", collect_out, "trajectory file to write");

  auto* curate_cmd =
      app.add_subcommand("curate", "filter episodes and emit training windows");
  std::vector<std::string> curate_inputs;
  std::string curate_out = "windows.tjwn";
  add_common(curate_cmd, common);
  curate_cmd->add_option("--input", curate_inputs, "trajectory file(s)")->required();
  curate_cmd->add_option("--out", curate_out, "window file to write");

  auto* pretrain_cmd = app.add_subcommand("pretrain", "synthetic next-token pretraining");
  std::string pretrain_out = "pretrained.ckpt";
  add_common(pretrain_cmd, common);
  pretrain_cmd->add_option("--out", pretrain_out, "checkpoint to write");

  auto* train_cmd = app.add_subcommand("train", "supervised fine-tuning on windows");
  std::string train_data, train_out_dir = "run", train_init;
  add_common(train_cmd, common);
  train_cmd->add_option("--data", train_data, "window file")->required();
  train_cmd->add_option("--out-dir", train_out_dir, "output directory");
  train_cmd->add_option("--init", train_init, "warm-start checkpoint");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint in the maze");
  std::string eval_ckpt, eval_out, eval_dump;
  double eval_rtg = 0.0;
  int eval_episodes = 0;
  add_common(eval_cmd, common);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
  eval_cmd->add_option("--rtg", eval_rtg, "commanded initial RTG");
  eval_cmd->add_option("--episodes", eval_episodes, "episode count override");
  eval_cmd->add_option("--out", eval_out, "per-episode CSV");
  eval_cmd->add_option("--dump-trajectories", eval_dump,
                       "write evaluation rollouts as a trajectory file");

  auto* sweep_cmd = app.add_subcommand("sweep-rtg", "commanded-vs-achieved RTG sweep");
  std::string sweep_ckpt, sweep_out = "rtg_sweep.csv";
  double sweep_from = 0.0, sweep_to = 0.0, sweep_step = 0.0;
  int sweep_episodes = 0;
  add_common(sweep_cmd, common);
  sweep_cmd->add_option("--checkpoint", sweep_ckpt, "model checkpoint")->required();
  sweep_cmd->add_option("--from", sweep_from, "first commanded RTG");
  sweep_cmd->add_option("--to", sweep_to, "last commanded RTG");
  sweep_cmd->add_option("--step", sweep_step, "RTG increment");
  sweep_cmd->add_option("--episodes", sweep_episodes, "episode count override");
  sweep_cmd->add_option("--out", sweep_out, "sweep CSV");

  auto* scale_cmd =
      app.add_subcommand("sweep-scale", "model-size x data-size ablation grid");
  std::string scale_out_dir = "sweep";
  bool scale_pretrain = false;
  add_common(scale_cmd, common);
  scale_cmd->add_option("--out-dir", scale_out_dir, "output directory");
  scale_cmd->add_flag("--with-pretrain", scale_pretrain, "add pretrain on/off rows");

  auto* analyze_cmd =
      app.add_subcommand("analyze-embeddings", "representation similarity analyses");
  std::string analyze_ckpt, analyze_data, analyze_out_dir = "analysis";
  add_common(analyze_cmd, common);
  analyze_cmd->add_option("--checkpoint", analyze_ckpt, "model checkpoint")->required();
  analyze_cmd->add_option("--data", analyze_data, "trajectory file")->required();
  analyze_cmd->add_option("--out-dir", analyze_out_dir, "output directory");

  auto* probe_cmd =
      app.add_subcommand("attention-probe", "first-layer attention on a null string");
  std::string probe_ckpt, probe_text, probe_out = "attention.csv";
  bool probe_random = false;
  add_common(probe_cmd, common);
  probe_cmd->add_option("--checkpoint", probe_ckpt, "model checkpoint");
  probe_cmd->add_flag("--random-init", probe_random, "probe a fresh random model");
  probe_cmd->add_option("--text", probe_text, "probe string override");
  probe_cmd->add_option("--out", probe_out, "attention CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (collect_cmd->parsed()) return cmd_collect(common, collect_out);
    if (curate_cmd->parsed()) return cmd_curate(common, curate_inputs, curate_out);
    if (pretrain_cmd->parsed()) return cmd_pretrain(common, pretrain_out);
    if (train_cmd->parsed())
      return cmd_train(common, train_data, train_out_dir, train_init);
    if (eval_cmd->parsed())
      return cmd_eval(common, eval_ckpt, eval_rtg, eval_episodes, eval_out, eval_dump);
    if (sweep_cmd->parsed())
      return cmd_sweep_rtg(common, sweep_ckpt, sweep_from, sweep_to, sweep_step,
                           sweep_episodes, sweep_out);
    if (scale_cmd->parsed()) return cmd_sweep_scale(common, scale_out_dir, scale_pretrain);
    if (analyze_cmd->parsed())
      return cmd_analyze(common, analyze_ckpt, analyze_data, analyze_out_dir);
    if (probe_cmd->parsed())
      return cmd_attention_probe(common, probe_ckpt, probe_random, probe_text,
                                 probe_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
