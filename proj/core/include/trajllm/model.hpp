#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trajllm/optim.hpp"
#include "trajllm/tensor.hpp"
#include "trajllm/vocab.hpp"

namespace trajllm {

struct ModelConfig {
  int d_model = 64;
  int n_layers = 4;
  int n_heads = 4;
  int vocab_size = 0;  // 0 resolves to the standard vocabulary size
  int max_positions = 2048;
  int state_dim = 4;
  int action_dim = 2;
  int max_timesteps = 300;  // rows of the timestep-embedding table

  void resolve_defaults();
  void validate() const;  // throws naming the offending field
  std::string serialize() const;
  static ModelConfig deserialize(const std::string& text);
  bool operator==(const ModelConfig&) const = default;
};

struct BlockParams {
  Tensor ln1_gain, ln1_bias;
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln2_gain, ln2_bias;
  Tensor w_up, b_up, w_down, b_down;
};

struct ForwardResult {
  // hidden[0] is the input after position embeddings; hidden[l] is the output
  // of block l. The analysis module consumes all of them.
  std::vector<Tensor> hidden;
  Tensor final;  // final layer norm of hidden.back(), feeds the heads
};

struct AttentionCapture {
  // probs[layer][head] is an L x L rowwise distribution
  std::vector<std::vector<Tensor>> probs;
};

// Decoder-only pre-norm transformer with learned absolute positions and a
// 4x GELU MLP per block.
class Backbone {
 public:
  Backbone(const ModelConfig& cfg, uint64_t seed);

  ForwardResult forward(const Tensor& embeddings, bool causal = true,
                        AttentionCapture* capture = nullptr) const;

  // Head-stacked attention probabilities [n_heads, L, L] for one layer,
  // computed without touching the tape.
  Tensor attention_map(const Tensor& embeddings, int layer) const;

  Tensor embed_tokens(const std::vector<int>& ids) const;
  // logits over the vocabulary, tied to the token-embedding table
  Tensor lm_logits(const Tensor& hidden_final) const;

  const ModelConfig& config() const { return cfg_; }
  ParamList params();
  static int64_t parameter_count(const ModelConfig& cfg);
  int64_t parameter_count() const { return parameter_count(cfg_); }

 private:
  ModelConfig cfg_;
  Tensor wte_, wpe_;
  std::vector<BlockParams> blocks_;
  Tensor final_gain_, final_bias_;
};

}  // namespace trajllm
