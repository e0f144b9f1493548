#include "trajllm/pretrain.hpp"

#include <cmath>
#include <stdexcept>

#include "trajllm/optim.hpp"

namespace trajllm {

void PretrainConfig::validate() const {
  if (steps < 0) throw std::invalid_argument("pretrain.steps must be >= 0");
  if (seq_len < 2) throw std::invalid_argument("pretrain.seq_len must be >= 2");
  if (corpus_sequences < 1) throw std::invalid_argument("pretrain.corpus_sequences must be >= 1");
  if (holdout_sequences < 1) throw std::invalid_argument("pretrain.holdout_sequences must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("pretrain.batch_size must be >= 1");
  if (!(lr > 0.0f)) throw std::invalid_argument("pretrain.lr must be positive");
}

std::vector<std::vector<int>> synthetic_corpus(int sequences, int seq_len,
                                               uint64_t seed) {
  const auto& vocab = Vocabulary::standard();
  Rng rng(Rng::mix(seed, 0x636f7270ULL));
  auto printable = [&]() {
    return vocab.byte_id(static_cast<unsigned char>(rng.uniform_int(33, 126)));
  };
  std::vector<std::vector<int>> corpus;
  corpus.reserve(static_cast<size_t>(sequences));
  for (int s = 0; s < sequences; ++s) {
    std::vector<int> seq;
    seq.reserve(static_cast<size_t>(seq_len));
    if (s % 2 == 0) {
      // repeated motif
      const int motif_len = rng.uniform_int(3, 6);
      std::vector<int> motif(static_cast<size_t>(motif_len));
      for (auto& id : motif) id = printable();
      while (static_cast<int>(seq.size()) < seq_len) {
        seq.push_back(motif[seq.size() % motif.size()]);
      }
    } else {
      // copy pattern: segment, separator byte, segment repeated
      const int seg_len = rng.uniform_int(4, seq_len / 2 - 1);
      std::vector<int> seg(static_cast<size_t>(seg_len));
      for (auto& id : seg) id = printable();
      const int sep = vocab.byte_id('|');
      size_t k = 0;
      while (static_cast<int>(seq.size()) < seq_len) {
        if (k < seg.size()) {
          seq.push_back(seg[k++]);
        } else {
          seq.push_back(sep);
          k = 0;
        }
      }
    }
    corpus.push_back(std::move(seq));
  }
  return corpus;
}

namespace {

Tensor next_token_loss(Backbone& backbone, const std::vector<int>& seq) {
  const std::vector<int> input(seq.begin(), seq.end() - 1);
  const std::vector<int> targets(seq.begin() + 1, seq.end());
  Tensor emb = backbone.embed_tokens(input);
  ForwardResult fwd = backbone.forward(emb, true);
  Tensor logits = backbone.lm_logits(fwd.final);
  return cross_entropy_rows(logits, targets);
}

double holdout_loss(Backbone& backbone, const std::vector<std::vector<int>>& holdout) {
  NoGradGuard ng;
  double sum = 0.0;
  for (const auto& seq : holdout) sum += next_token_loss(backbone, seq).item();
  return sum / static_cast<double>(holdout.size());
}

}  // namespace

PretrainResult synthetic_pretrain(Backbone& backbone,
                                  const std::vector<std::vector<int>>& corpus,
                                  const PretrainConfig& cfg) {
  cfg.validate();
  if (corpus.empty()) throw std::invalid_argument("pretrain: corpus is empty");
  if (static_cast<int>(corpus.size()) <= cfg.holdout_sequences) {
    throw std::invalid_argument("pretrain: corpus smaller than the holdout split");
  }
  const std::vector<std::vector<int>> holdout(corpus.end() - cfg.holdout_sequences,
                                              corpus.end());
  const std::vector<std::vector<int>> train(corpus.begin(),
                                            corpus.end() - cfg.holdout_sequences);

  PretrainResult result;
  result.init_holdout_loss = holdout_loss(backbone, holdout);
  result.final_holdout_loss = result.init_holdout_loss;
  if (cfg.steps == 0) return result;

  ParamList params = backbone.params();
  AdamWConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  AdamW opt(params, opt_cfg);
  Rng rng(Rng::mix(cfg.seed, 0x70726530ULL));

  for (int step = 0; step < cfg.steps; ++step) {
    zero_grads(params);
    const float inv_b = 1.0f / static_cast<float>(cfg.batch_size);
    double loss_sum = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const auto& seq = train[static_cast<size_t>(rng.uniform_int(
          0, static_cast<int>(train.size()) - 1))];
      Tensor loss = next_token_loss(backbone, seq);
      loss_sum += loss.item();
      backward(loss, inv_b);
    }
    if (!std::isfinite(loss_sum)) {
      throw std::runtime_error("pretrain: loss diverged at step " + std::to_string(step));
    }
    clip_global_norm(params, 1.0f);
    opt.step(params);
  }
  result.final_holdout_loss = holdout_loss(backbone, holdout);
  return result;
}

}  // namespace trajllm
