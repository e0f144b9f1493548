#include "trajllm/model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace trajllm {

void ModelConfig::resolve_defaults() {
  if (vocab_size == 0) vocab_size = Vocabulary::standard().size();
}

void ModelConfig::validate() const {
  auto positive = [](const char* field, int v) {
    if (v <= 0) {
      throw std::invalid_argument(std::string("model.") + field +
                                  " must be positive, got " + std::to_string(v));
    }
  };
  positive("d_model", d_model);
  positive("n_heads", n_heads);
  positive("vocab_size", vocab_size);
  positive("max_positions", max_positions);
  positive("state_dim", state_dim);
  positive("action_dim", action_dim);
  positive("max_timesteps", max_timesteps);
  if (n_layers < 0) {
    throw std::invalid_argument("model.n_layers must be >= 0, got " +
                                std::to_string(n_layers));
  }
  if (d_model % n_heads != 0) {
    throw std::invalid_argument("model.d_model (" + std::to_string(d_model) +
                                ") must be divisible by model.n_heads (" +
                                std::to_string(n_heads) + ")");
  }
  if (vocab_size < Vocabulary::standard().size()) {
    throw std::invalid_argument("model.vocab_size (" + std::to_string(vocab_size) +
                                ") smaller than the standard vocabulary (" +
                                std::to_string(Vocabulary::standard().size()) + ")");
  }
}

std::string ModelConfig::serialize() const {
  std::ostringstream os;
  os << "d_model=" << d_model << "\n"
     << "n_layers=" << n_layers << "\n"
     << "n_heads=" << n_heads << "\n"
     << "vocab_size=" << vocab_size << "\n"
     << "max_positions=" << max_positions << "\n"
     << "state_dim=" << state_dim << "\n"
     << "action_dim=" << action_dim << "\n"
     << "max_timesteps=" << max_timesteps << "\n";
  return os.str();
}

ModelConfig ModelConfig::deserialize(const std::string& text) {
  ModelConfig cfg;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    auto as_int = [&]() { return std::stoi(val); };
    if (key == "d_model") cfg.d_model = as_int();
    else if (key == "n_layers") cfg.n_layers = as_int();
    else if (key == "n_heads") cfg.n_heads = as_int();
    else if (key == "vocab_size") cfg.vocab_size = as_int();
    else if (key == "max_positions") cfg.max_positions = as_int();
    else if (key == "state_dim") cfg.state_dim = as_int();
    else if (key == "action_dim") cfg.action_dim = as_int();
    else if (key == "max_timesteps") cfg.max_timesteps = as_int();
    // other keys (provenance, step counters) are read elsewhere
  }
  return cfg;
}

Backbone::Backbone(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  ModelConfig c = cfg_;
  c.resolve_defaults();
  cfg_ = c;
  cfg_.validate();
  Rng rng(Rng::mix(seed, 0x6261636bULL));
  const int d = cfg_.d_model;
  const float s = 0.02f;
  wte_ = Tensor::randn({cfg_.vocab_size, d}, rng, s, true);
  wpe_ = Tensor::randn({cfg_.max_positions, d}, rng, s, true);
  blocks_.resize(static_cast<size_t>(cfg_.n_layers));
  for (auto& b : blocks_) {
    b.ln1_gain = Tensor::full({d}, 1.0f, true);
    b.ln1_bias = Tensor::zeros({d}, true);
    b.wq = Tensor::randn({d, d}, rng, s, true);
    b.bq = Tensor::zeros({d}, true);
    b.wk = Tensor::randn({d, d}, rng, s, true);
    b.bk = Tensor::zeros({d}, true);
    b.wv = Tensor::randn({d, d}, rng, s, true);
    b.bv = Tensor::zeros({d}, true);
    b.wo = Tensor::randn({d, d}, rng, s, true);
    b.bo = Tensor::zeros({d}, true);
    b.ln2_gain = Tensor::full({d}, 1.0f, true);
    b.ln2_bias = Tensor::zeros({d}, true);
    b.w_up = Tensor::randn({d, 4 * d}, rng, s, true);
    b.b_up = Tensor::zeros({4 * d}, true);
    b.w_down = Tensor::randn({4 * d, d}, rng, s, true);
    b.b_down = Tensor::zeros({d}, true);
  }
  final_gain_ = Tensor::full({d}, 1.0f, true);
  final_bias_ = Tensor::zeros({d}, true);
}

ForwardResult Backbone::forward(const Tensor& embeddings, bool causal,
                                AttentionCapture* capture) const {
  if (embeddings.ndim() != 2 || embeddings.dim(1) != cfg_.d_model) {
    throw std::invalid_argument("forward: embeddings " + shape_str(embeddings.shape()) +
                                " do not match d_model " + std::to_string(cfg_.d_model));
  }
  const int L = embeddings.dim(0);
  if (L > cfg_.max_positions) {
    throw std::invalid_argument("forward: sequence length " + std::to_string(L) +
                                " exceeds max_positions " +
                                std::to_string(cfg_.max_positions));
  }
  const int d = cfg_.d_model;
  const int hd = d / cfg_.n_heads;
  const float inv_sqrt_hd = 1.0f / std::sqrt(static_cast<float>(hd));

  std::vector<int> pos(static_cast<size_t>(L));
  std::iota(pos.begin(), pos.end(), 0);
  Tensor x = add(embeddings, gather_rows(wpe_, pos));

  ForwardResult out;
  out.hidden.push_back(x);
  if (capture) capture->probs.assign(blocks_.size(), {});

  for (size_t li = 0; li < blocks_.size(); ++li) {
    const BlockParams& b = blocks_[li];
    Tensor h = layer_norm(x, b.ln1_gain, b.ln1_bias);
    Tensor q = add_rows(matmul(h, b.wq), b.bq);
    Tensor k = add_rows(matmul(h, b.wk), b.bk);
    Tensor v = add_rows(matmul(h, b.wv), b.bv);
    std::vector<Tensor> head_outs;
    head_outs.reserve(static_cast<size_t>(cfg_.n_heads));
    for (int hi = 0; hi < cfg_.n_heads; ++hi) {
      Tensor qh = slice_cols(q, hi * hd, (hi + 1) * hd);
      Tensor kh = slice_cols(k, hi * hd, (hi + 1) * hd);
      Tensor vh = slice_cols(v, hi * hd, (hi + 1) * hd);
      Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt_hd);
      Tensor probs = causal ? causal_softmax(scores) : softmax_lastdim(scores);
      if (capture) capture->probs[li].push_back(probs);
      head_outs.push_back(matmul(probs, vh));
    }
    Tensor attn = add_rows(matmul(concat_cols(head_outs), b.wo), b.bo);
    x = add(x, attn);
    Tensor h2 = layer_norm(x, b.ln2_gain, b.ln2_bias);
    Tensor m = gelu(add_rows(matmul(h2, b.w_up), b.b_up));
    Tensor mlp = add_rows(matmul(m, b.w_down), b.b_down);
    x = add(x, mlp);
    out.hidden.push_back(x);
  }
  out.final = layer_norm(x, final_gain_, final_bias_);
  return out;
}

Tensor Backbone::attention_map(const Tensor& embeddings, int layer) const {
  if (layer < 0 || layer >= cfg_.n_layers) {
    throw std::invalid_argument("attention_map: layer " + std::to_string(layer) +
                                " out of range for " + std::to_string(cfg_.n_layers) +
                                " layers");
  }
  NoGradGuard ng;
  AttentionCapture capture;
  forward(embeddings, true, &capture);
  const int L = embeddings.dim(0);
  std::vector<float> stacked;
  stacked.reserve(static_cast<size_t>(cfg_.n_heads) * L * L);
  for (const Tensor& p : capture.probs[static_cast<size_t>(layer)]) {
    stacked.insert(stacked.end(), p.data().begin(), p.data().end());
  }
  return Tensor::from_data({cfg_.n_heads, L, L}, std::move(stacked));
}

Tensor Backbone::embed_tokens(const std::vector<int>& ids) const {
  for (int id : ids) {
    if (id < 0 || id >= cfg_.vocab_size) {
      throw std::invalid_argument("embed_tokens: id " + std::to_string(id) +
                                  " outside vocab of size " +
                                  std::to_string(cfg_.vocab_size));
    }
  }
  return gather_rows(wte_, ids);
}

Tensor Backbone::lm_logits(const Tensor& hidden_final) const {
  return matmul(hidden_final, transpose(wte_));
}

ParamList Backbone::params() {
  ParamList out;
  out.push_back({"wte", wte_});
  out.push_back({"wpe", wpe_});
  for (size_t li = 0; li < blocks_.size(); ++li) {
    auto& b = blocks_[li];
    const std::string p = "block" + std::to_string(li) + ".";
    out.push_back({p + "ln1.gain", b.ln1_gain});
    out.push_back({p + "ln1.bias", b.ln1_bias});
    out.push_back({p + "attn.wq", b.wq});
    out.push_back({p + "attn.bq", b.bq});
    out.push_back({p + "attn.wk", b.wk});
    out.push_back({p + "attn.bk", b.bk});
    out.push_back({p + "attn.wv", b.wv});
    out.push_back({p + "attn.bv", b.bv});
    out.push_back({p + "attn.wo", b.wo});
    out.push_back({p + "attn.bo", b.bo});
    out.push_back({p + "ln2.gain", b.ln2_gain});
    out.push_back({p + "ln2.bias", b.ln2_bias});
    out.push_back({p + "mlp.w_up", b.w_up});
    out.push_back({p + "mlp.b_up", b.b_up});
    out.push_back({p + "mlp.w_down", b.w_down});
    out.push_back({p + "mlp.b_down", b.b_down});
  }
  out.push_back({"final_ln.gain", final_gain_});
  out.push_back({"final_ln.bias", final_bias_});
  return out;
}

int64_t Backbone::parameter_count(const ModelConfig& cfg) {
  ModelConfig c = cfg;
  c.resolve_defaults();
  const int64_t d = c.d_model;
  int64_t n = 0;
  n += static_cast<int64_t>(c.vocab_size) * d;   // wte
  n += static_cast<int64_t>(c.max_positions) * d;  // wpe
  const int64_t per_block = 2 * d                 // ln1
                            + 4 * (d * d + d)     // q,k,v,o
                            + 2 * d               // ln2
                            + d * 4 * d + 4 * d   // up
                            + 4 * d * d + d;      // down
  n += per_block * c.n_layers;
  n += 2 * d;  // final ln
  return n;
}

}  // namespace trajllm
