#include "trajllm/checkpoint.hpp"

#include <sstream>
#include <stdexcept>

#include "trajllm/io.hpp"

namespace trajllm {

namespace {

constexpr uint32_t kVersion = 1;

int64_t parse_i64(const std::string& s) { return std::stoll(s); }

}  // namespace

void Checkpoint::save(const std::string& path) const {
  BinWriter w(path);
  w.str("TRJL");
  w.u32(kVersion);
  std::ostringstream cfg;
  cfg << config.serialize();
  cfg << "global_step=" << global_step << "\n";
  cfg << "config_hash=" << hex64(config_hash) << "\n";
  cfg << "seed=" << seed << "\n";
  if (opt_timestep >= 0) cfg << "opt_timestep=" << opt_timestep << "\n";
  const std::string block = cfg.str();
  w.u32(static_cast<uint32_t>(block.size()));
  w.str(block);
  w.u32(static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    w.u16(static_cast<uint16_t>(name.size()));
    w.str(name);
    w.u8(static_cast<uint8_t>(tensor.ndim()));
    for (int i = 0; i < tensor.ndim(); ++i) w.u32(static_cast<uint32_t>(tensor.dim(i)));
    w.bytes(tensor.data().data(), tensor.data().size() * sizeof(float));
  }
}

Checkpoint Checkpoint::load(const std::string& path) {
  BinReader r(path);
  if (r.str(4) != "TRJL") {
    throw std::runtime_error("corrupt checkpoint (bad magic): " + path);
  }
  const uint32_t version = r.u32();
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version) + ": " + path);
  }
  Checkpoint ckpt;
  const uint32_t block_len = r.u32();
  const std::string block = r.str(block_len);
  ckpt.config = ModelConfig::deserialize(block);
  std::istringstream is(block);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "global_step") ckpt.global_step = parse_i64(val);
    else if (key == "config_hash") ckpt.config_hash = std::stoull(val, nullptr, 16);
    else if (key == "seed") ckpt.seed = std::stoull(val);
    else if (key == "opt_timestep") ckpt.opt_timestep = parse_i64(val);
  }
  const uint32_t count = r.u32();
  ckpt.tensors.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t name_len = r.u16();
    std::string name = r.str(name_len);
    const uint8_t ndim = r.u8();
    Shape shape(ndim);
    for (auto& d : shape) d = static_cast<int>(r.u32());
    std::vector<float> data(static_cast<size_t>(shape_numel(shape)));
    r.bytes(data.data(), data.size() * sizeof(float));
    ckpt.tensors.push_back({std::move(name), Tensor::from_data(std::move(shape), std::move(data))});
  }
  return ckpt;
}

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t.tensor;
  return nullptr;
}

Checkpoint make_checkpoint(const ModelConfig& config, const ParamList& params,
                           int64_t global_step, uint64_t config_hash,
                           uint64_t seed, const AdamW* opt) {
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.global_step = global_step;
  ckpt.config_hash = config_hash;
  ckpt.seed = seed;
  for (const auto& p : params) {
    // snapshot, detached from the live graph
    ckpt.tensors.push_back(
        {p.name, Tensor::from_data(p.tensor.shape(),
                                   {p.tensor.data().begin(), p.tensor.data().end()})});
  }
  if (opt) {
    ckpt.opt_timestep = opt->timestep();
    auto& m = const_cast<AdamW*>(opt)->first_moments();
    auto& v = const_cast<AdamW*>(opt)->second_moments();
    for (size_t i = 0; i < params.size(); ++i) {
      ckpt.tensors.push_back(
          {"opt.m." + params[i].name,
           Tensor::from_data(params[i].tensor.shape(), std::vector<float>(m[i]))});
      ckpt.tensors.push_back(
          {"opt.v." + params[i].name,
           Tensor::from_data(params[i].tensor.shape(), std::vector<float>(v[i]))});
    }
  }
  return ckpt;
}

void check_config_match(const ModelConfig& expected, const ModelConfig& actual) {
  auto diff = [](const char* field, int a, int b) {
    if (a != b) {
      throw std::invalid_argument(std::string("checkpoint config mismatch: model.") +
                                  field + " is " + std::to_string(a) +
                                  " but checkpoint has " + std::to_string(b));
    }
  };
  diff("d_model", expected.d_model, actual.d_model);
  diff("n_layers", expected.n_layers, actual.n_layers);
  diff("n_heads", expected.n_heads, actual.n_heads);
  diff("vocab_size", expected.vocab_size, actual.vocab_size);
  diff("max_positions", expected.max_positions, actual.max_positions);
  diff("state_dim", expected.state_dim, actual.state_dim);
  diff("action_dim", expected.action_dim, actual.action_dim);
  diff("max_timesteps", expected.max_timesteps, actual.max_timesteps);
}

void apply_checkpoint(const Checkpoint& ckpt, ParamList& params) {
  for (auto& p : params) {
    const Tensor* src = ckpt.find(p.name);
    if (!src) {
      throw std::invalid_argument("checkpoint is missing tensor: " + p.name);
    }
    if (src->shape() != p.tensor.shape()) {
      throw std::invalid_argument("checkpoint tensor " + p.name + " has shape " +
                                  shape_str(src->shape()) + ", model expects " +
                                  shape_str(p.tensor.shape()));
    }
    std::copy(src->data().begin(), src->data().end(), p.tensor.mutable_data().begin());
  }
}

size_t apply_checkpoint_partial(const Checkpoint& ckpt, ParamList& params) {
  size_t copied = 0;
  for (auto& p : params) {
    const Tensor* src = ckpt.find(p.name);
    if (!src || src->shape() != p.tensor.shape()) continue;
    std::copy(src->data().begin(), src->data().end(), p.tensor.mutable_data().begin());
    ++copied;
  }
  return copied;
}

void apply_optimizer_state(const Checkpoint& ckpt, const ParamList& params,
                           AdamW& opt) {
  if (ckpt.opt_timestep < 0) {
    throw std::invalid_argument("checkpoint has no optimizer state");
  }
  auto& m = opt.first_moments();
  auto& v = opt.second_moments();
  for (size_t i = 0; i < params.size(); ++i) {
    const Tensor* sm = ckpt.find("opt.m." + params[i].name);
    const Tensor* sv = ckpt.find("opt.v." + params[i].name);
    if (!sm || !sv) {
      throw std::invalid_argument("checkpoint is missing optimizer state for " +
                                  params[i].name);
    }
    m[i].assign(sm->data().begin(), sm->data().end());
    v[i].assign(sv->data().begin(), sv->data().end());
  }
  opt.set_timestep(ckpt.opt_timestep);
}

}  // namespace trajllm
