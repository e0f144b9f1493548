#include "trajllm/config.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "trajllm/io.hpp"
#include "trajllm/prompts.hpp"

namespace trajllm {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& path, const std::string& value,
                            const std::string& expected) {
  throw std::invalid_argument("config " + path + ": cannot parse '" + value +
                              "' as " + expected);
}

int parse_int(const std::string& path, const std::string& v) {
  try {
    size_t used = 0;
    const int r = std::stoi(v, &used);
    if (used != v.size()) bad_value(path, v, "integer");
    return r;
  } catch (const std::invalid_argument&) {
    bad_value(path, v, "integer");
  } catch (const std::out_of_range&) {
    bad_value(path, v, "integer");
  }
}

uint64_t parse_u64(const std::string& path, const std::string& v) {
  try {
    size_t used = 0;
    const uint64_t r = std::stoull(v, &used);
    if (used != v.size()) bad_value(path, v, "unsigned integer");
    return r;
  } catch (const std::invalid_argument&) {
    bad_value(path, v, "unsigned integer");
  } catch (const std::out_of_range&) {
    bad_value(path, v, "unsigned integer");
  }
}

double parse_double(const std::string& path, const std::string& v) {
  if (v == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    size_t used = 0;
    const double r = std::stod(v, &used);
    if (used != v.size()) bad_value(path, v, "number");
    return r;
  } catch (const std::invalid_argument&) {
    bad_value(path, v, "number");
  } catch (const std::out_of_range&) {
    bad_value(path, v, "number");
  }
}

std::vector<double> parse_double_list(const std::string& path, const std::string& v) {
  std::vector<double> out;
  std::istringstream is(v);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(path, item));
  }
  if (out.empty()) bad_value(path, v, "comma-separated numbers");
  return out;
}

std::vector<WallRect> parse_walls(const std::string& path, const std::string& v) {
  std::vector<WallRect> out;
  if (trim(v) == "none") return out;
  std::istringstream is(v);
  std::string rect;
  while (std::getline(is, rect, ';')) {
    rect = trim(rect);
    if (rect.empty()) continue;
    std::vector<double> nums = parse_double_list(path, rect);
    if (nums.size() != 4) bad_value(path, rect, "x0,y0,x1,y1 rectangle");
    out.push_back({static_cast<float>(nums[0]), static_cast<float>(nums[1]),
                   static_cast<float>(nums[2]), static_cast<float>(nums[3])});
  }
  return out;
}

std::string walls_to_string(const std::vector<WallRect>& walls) {
  if (walls.empty()) return "none";
  std::string out;
  for (size_t i = 0; i < walls.size(); ++i) {
    if (i) out += ";";
    out += fmt_float(walls[i].x0) + "," + fmt_float(walls[i].y0) + "," +
           fmt_float(walls[i].x1) + "," + fmt_float(walls[i].y1);
  }
  return out;
}

std::string rtgs_to_string(const std::vector<double>& rtgs) {
  std::string out;
  for (size_t i = 0; i < rtgs.size(); ++i) {
    if (i) out += ",";
    out += fmt_float(rtgs[i]);
  }
  return out;
}

}  // namespace

std::vector<int> RunConfig::prompt_ids() const {
  const char* text = training_prompt == "full" ? kMazeTaskPrompt : kCompactMazePrompt;
  return Vocabulary::standard().tokenize(text);
}

void RunConfig::validate() const {
  maze.validate();
  curation.validate();
  ModelConfig m = model;
  m.resolve_defaults();
  m.validate();
  training.validate();
  pretrain.validate();
  if (collection.episodes < 1) {
    throw std::invalid_argument("collection.episodes must be >= 1");
  }
  if (!(collection.sigma >= 0.0f)) {
    throw std::invalid_argument("collection.sigma must be >= 0");
  }
  if (training_prompt != "compact" && training_prompt != "full") {
    throw std::invalid_argument("training.prompt must be compact|full, got " +
                                training_prompt);
  }
  if (curation.window > maze.max_episode_length) {
    throw std::invalid_argument("curation.window (" + std::to_string(curation.window) +
                                ") exceeds maze.max_episode_length (" +
                                std::to_string(maze.max_episode_length) + ")");
  }
  if (m.max_timesteps < maze.max_episode_length) {
    throw std::invalid_argument("model.max_timesteps (" + std::to_string(m.max_timesteps) +
                                ") smaller than maze.max_episode_length (" +
                                std::to_string(maze.max_episode_length) + ")");
  }
  const int prompt_len = static_cast<int>(prompt_ids().size());
  const int needed = prompt_len + 3 * curation.window + 2;
  if (m.max_positions < needed) {
    throw std::invalid_argument("model.max_positions (" + std::to_string(m.max_positions) +
                                ") too small: prompt of " + std::to_string(prompt_len) +
                                " tokens plus 3*W trajectory tokens needs " +
                                std::to_string(needed));
  }
  if (evaluation.episodes < 1) {
    throw std::invalid_argument("evaluation.episodes must be >= 1");
  }
  if (evaluation.rtgs.empty()) {
    throw std::invalid_argument("evaluation.rtgs must not be empty");
  }
  if (evaluation.baseline_episodes < 1) {
    throw std::invalid_argument("evaluation.baseline_episodes must be >= 1");
  }
  const bool has_rr = !std::isnan(evaluation.r_random);
  const bool has_re = !std::isnan(evaluation.r_expert);
  if (has_rr != has_re) {
    throw std::invalid_argument("evaluation.r_random and evaluation.r_expert must be "
                                "set together (or both left to Monte Carlo)");
  }
  if (has_rr && !(evaluation.r_expert > evaluation.r_random)) {
    throw std::invalid_argument("evaluation.r_expert must exceed evaluation.r_random");
  }
  if (analysis.trajectories < 2) {
    throw std::invalid_argument("analysis.trajectories must be >= 2");
  }
}

std::string RunConfig::normalized() const {
  ModelConfig m = model;
  m.resolve_defaults();
  std::ostringstream os;
  os << "[maze]\n";
  os << "walls = " << walls_to_string(maze.walls) << "\n";
  os << "goal_x = " << fmt_float(maze.goal[0]) << "\n";
  os << "goal_y = " << fmt_float(maze.goal[1]) << "\n";
  os << "goal_radius = " << fmt_float(maze.goal_radius) << "\n";
  os << "dt = " << fmt_float(maze.dt) << "\n";
  os << "velocity_decay = " << fmt_float(maze.velocity_decay) << "\n";
  os << "max_episode_length = " << maze.max_episode_length << "\n";
  os << "start_x = " << fmt_float(maze.start[0]) << "\n";
  os << "start_y = " << fmt_float(maze.start[1]) << "\n";
  os << "start_jitter = " << fmt_float(maze.start_jitter) << "\n";
  os << "[collection]\n";
  os << "policy = " << policy_name(collection.policy) << "\n";
  os << "sigma = " << fmt_float(collection.sigma) << "\n";
  os << "episodes = " << collection.episodes << "\n";
  os << "seed = " << collection.seed << "\n";
  os << "[curation]\n";
  os << "epsilon = " << fmt_float(curation.epsilon) << "\n";
  os << "beta = " << fmt_float(curation.beta) << "\n";
  os << "step_threshold = " << fmt_float(curation.step_threshold) << "\n";
  os << "step_threshold_target = " << threshold_target_name(curation.step_threshold_target) << "\n";
  os << "mode = " << loss_mode_name(curation.mode) << "\n";
  os << "window = " << curation.window << "\n";
  os << "stride = " << curation.stride << "\n";
  os << "max_windows = " << curation.max_windows << "\n";
  os << "seed = " << curation.seed << "\n";
  os << "[model]\n";
  os << "d_model = " << m.d_model << "\n";
  os << "n_layers = " << m.n_layers << "\n";
  os << "n_heads = " << m.n_heads << "\n";
  os << "vocab_size = " << m.vocab_size << "\n";
  os << "max_positions = " << m.max_positions << "\n";
  os << "state_dim = " << m.state_dim << "\n";
  os << "action_dim = " << m.action_dim << "\n";
  os << "max_timesteps = " << m.max_timesteps << "\n";
  os << "[training]\n";
  os << "batch_size = " << training.batch_size << "\n";
  os << "lr = " << fmt_float(training.lr) << "\n";
  os << "epochs = " << training.epochs << "\n";
  os << "max_steps = " << training.max_steps << "\n";
  os << "eval_every = " << training.eval_every << "\n";
  os << "eval_episodes = " << training.eval_episodes << "\n";
  os << "eval_rtg = " << fmt_float(training.eval_rtg) << "\n";
  os << "seed = " << training.seed << "\n";
  os << "warmup_steps = " << training.warmup_steps << "\n";
  os << "weight_decay = " << fmt_float(training.weight_decay) << "\n";
  os << "clip_norm = " << fmt_float(training.clip_norm) << "\n";
  os << "loss_mode = " << loss_mode_name(training.loss_mode) << "\n";
  os << "init = " << (training.init_checkpoint.empty() ? "random" : training.init_checkpoint) << "\n";
  os << "prompt = " << training_prompt << "\n";
  os << "[evaluation]\n";
  os << "episodes = " << evaluation.episodes << "\n";
  os << "rtgs = " << rtgs_to_string(evaluation.rtgs) << "\n";
  os << "seed = " << evaluation.seed << "\n";
  os << "r_random = " << (std::isnan(evaluation.r_random) ? "nan" : fmt_float(evaluation.r_random)) << "\n";
  os << "r_expert = " << (std::isnan(evaluation.r_expert) ? "nan" : fmt_float(evaluation.r_expert)) << "\n";
  os << "baseline_episodes = " << evaluation.baseline_episodes << "\n";
  os << "[pretrain]\n";
  os << "steps = " << pretrain.steps << "\n";
  os << "seq_len = " << pretrain.seq_len << "\n";
  os << "corpus_sequences = " << pretrain.corpus_sequences << "\n";
  os << "holdout_sequences = " << pretrain.holdout_sequences << "\n";
  os << "batch_size = " << pretrain.batch_size << "\n";
  os << "lr = " << fmt_float(pretrain.lr) << "\n";
  os << "seed = " << pretrain.seed << "\n";
  os << "[analysis]\n";
  os << "trajectories = " << analysis.trajectories << "\n";
  os << "seed = " << analysis.seed << "\n";
  return os.str();
}

uint64_t RunConfig::hash() const { return fnv1a(normalized()); }

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": malformed section header");
      }
      section = line.substr(1, line.size() - 2);
      if (section != "maze" && section != "collection" && section != "curation" &&
          section != "model" && section != "training" && section != "evaluation" &&
          section != "pretrain" && section != "analysis") {
        throw std::invalid_argument("config: unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string path = section.empty() ? key : section + "." + key;
    if (section.empty()) {
      throw std::invalid_argument("config " + path + ": key outside any section");
    }

    bool known = true;
    if (section == "maze") {
      if (key == "walls") cfg.maze.walls = parse_walls(path, value);
      else if (key == "goal_x") cfg.maze.goal[0] = static_cast<float>(parse_double(path, value));
      else if (key == "goal_y") cfg.maze.goal[1] = static_cast<float>(parse_double(path, value));
      else if (key == "goal_radius") cfg.maze.goal_radius = static_cast<float>(parse_double(path, value));
      else if (key == "dt") cfg.maze.dt = static_cast<float>(parse_double(path, value));
      else if (key == "velocity_decay") cfg.maze.velocity_decay = static_cast<float>(parse_double(path, value));
      else if (key == "max_episode_length") cfg.maze.max_episode_length = parse_int(path, value);
      else if (key == "start_x") cfg.maze.start[0] = static_cast<float>(parse_double(path, value));
      else if (key == "start_y") cfg.maze.start[1] = static_cast<float>(parse_double(path, value));
      else if (key == "start_jitter") cfg.maze.start_jitter = static_cast<float>(parse_double(path, value));
      else known = false;
    } else if (section == "collection") {
      if (key == "policy") cfg.collection.policy = policy_from_name(value);
      else if (key == "sigma") cfg.collection.sigma = static_cast<float>(parse_double(path, value));
      else if (key == "episodes") cfg.collection.episodes = parse_int(path, value);
      else if (key == "seed") { cfg.collection.seed = parse_u64(path, value); cfg.collection_seed_set = true; }
      else known = false;
    } else if (section == "curation") {
      if (key == "epsilon") cfg.curation.epsilon = parse_double(path, value);
      else if (key == "beta") cfg.curation.beta = parse_double(path, value);
      else if (key == "step_threshold") cfg.curation.step_threshold = parse_double(path, value);
      else if (key == "step_threshold_target") cfg.curation.step_threshold_target = threshold_target_from_name(value);
      else if (key == "mode") cfg.curation.mode = loss_mode_from_name(value);
      else if (key == "window") cfg.curation.window = parse_int(path, value);
      else if (key == "stride") cfg.curation.stride = parse_int(path, value);
      else if (key == "max_windows") cfg.curation.max_windows = parse_int(path, value);
      else if (key == "seed") { cfg.curation.seed = parse_u64(path, value); cfg.curation_seed_set = true; }
      else known = false;
    } else if (section == "model") {
      if (key == "d_model") cfg.model.d_model = parse_int(path, value);
      else if (key == "n_layers") cfg.model.n_layers = parse_int(path, value);
      else if (key == "n_heads") cfg.model.n_heads = parse_int(path, value);
      else if (key == "vocab_size") cfg.model.vocab_size = parse_int(path, value);
      else if (key == "max_positions") cfg.model.max_positions = parse_int(path, value);
      else if (key == "state_dim") cfg.model.state_dim = parse_int(path, value);
      else if (key == "action_dim") cfg.model.action_dim = parse_int(path, value);
      else if (key == "max_timesteps") cfg.model.max_timesteps = parse_int(path, value);
      else known = false;
    } else if (section == "training") {
      if (key == "batch_size") cfg.training.batch_size = parse_int(path, value);
      else if (key == "lr") cfg.training.lr = static_cast<float>(parse_double(path, value));
      else if (key == "epochs") cfg.training.epochs = parse_int(path, value);
      else if (key == "max_steps") cfg.training.max_steps = parse_int(path, value);
      else if (key == "eval_every") cfg.training.eval_every = parse_int(path, value);
      else if (key == "eval_episodes") cfg.training.eval_episodes = parse_int(path, value);
      else if (key == "eval_rtg") cfg.training.eval_rtg = parse_double(path, value);
      else if (key == "seed") { cfg.training.seed = parse_u64(path, value); cfg.training_seed_set = true; }
      else if (key == "warmup_steps") cfg.training.warmup_steps = parse_int(path, value);
      else if (key == "weight_decay") cfg.training.weight_decay = static_cast<float>(parse_double(path, value));
      else if (key == "clip_norm") cfg.training.clip_norm = static_cast<float>(parse_double(path, value));
      else if (key == "loss_mode") cfg.training.loss_mode = loss_mode_from_name(value);
      else if (key == "init") cfg.training.init_checkpoint = value == "random" ? "" : value;
      else if (key == "prompt") cfg.training_prompt = value;
      else known = false;
    } else if (section == "evaluation") {
      if (key == "episodes") cfg.evaluation.episodes = parse_int(path, value);
      else if (key == "rtgs") cfg.evaluation.rtgs = parse_double_list(path, value);
      else if (key == "seed") { cfg.evaluation.seed = parse_u64(path, value); cfg.evaluation_seed_set = true; }
      else if (key == "r_random") cfg.evaluation.r_random = parse_double(path, value);
      else if (key == "r_expert") cfg.evaluation.r_expert = parse_double(path, value);
      else if (key == "baseline_episodes") cfg.evaluation.baseline_episodes = parse_int(path, value);
      else known = false;
    } else if (section == "pretrain") {
      if (key == "steps") cfg.pretrain.steps = parse_int(path, value);
      else if (key == "seq_len") cfg.pretrain.seq_len = parse_int(path, value);
      else if (key == "corpus_sequences") cfg.pretrain.corpus_sequences = parse_int(path, value);
      else if (key == "holdout_sequences") cfg.pretrain.holdout_sequences = parse_int(path, value);
      else if (key == "batch_size") cfg.pretrain.batch_size = parse_int(path, value);
      else if (key == "lr") cfg.pretrain.lr = static_cast<float>(parse_double(path, value));
      else if (key == "seed") { cfg.pretrain.seed = parse_u64(path, value); cfg.pretrain_seed_set = true; }
      else known = false;
    } else if (section == "analysis") {
      if (key == "trajectories") cfg.analysis.trajectories = parse_int(path, value);
      else if (key == "seed") { cfg.analysis.seed = parse_u64(path, value); cfg.analysis_seed_set = true; }
      else if (key == "probe_text") cfg.analysis.probe_text = value;
      else known = false;
    }
    if (!known) {
      throw std::invalid_argument("config " + path + ": unknown key");
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_file(path));
}

void apply_seed_override(RunConfig& cfg, const std::string& env_seed,
                         bool has_flag, uint64_t flag_seed) {
  if (has_flag) {
    cfg.collection.seed = flag_seed;
    cfg.curation.seed = flag_seed;
    cfg.training.seed = flag_seed;
    cfg.evaluation.seed = flag_seed;
    cfg.pretrain.seed = flag_seed;
    cfg.analysis.seed = flag_seed;
    return;
  }
  if (env_seed.empty()) return;
  const uint64_t s = parse_u64("TRAJLLM_SEED", env_seed);
  if (!cfg.collection_seed_set) cfg.collection.seed = s;
  if (!cfg.curation_seed_set) cfg.curation.seed = s;
  if (!cfg.training_seed_set) cfg.training.seed = s;
  if (!cfg.evaluation_seed_set) cfg.evaluation.seed = s;
  if (!cfg.pretrain_seed_set) cfg.pretrain.seed = s;
  if (!cfg.analysis_seed_set) cfg.analysis.seed = s;
}

}  // namespace trajllm
