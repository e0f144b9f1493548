#pragma once

#include <cstdint>
#include <vector>

#include "trajllm/model.hpp"

namespace trajllm {

struct PretrainConfig {
  int steps = 2000;
  int seq_len = 32;
  int corpus_sequences = 1024;
  int holdout_sequences = 64;
  int batch_size = 8;
  float lr = 1e-3f;
  uint64_t seed = 3;

  void validate() const;
};

// Procedurally generated token streams: repeated motifs and copy patterns
// over the printable-byte vocabulary. A toy stand-in for text pretraining.
std::vector<std::vector<int>> synthetic_corpus(int sequences, int seq_len,
                                               uint64_t seed);

struct PretrainResult {
  double init_holdout_loss = 0.0;
  double final_holdout_loss = 0.0;
};

// Next-token training of the backbone with a tied LM head. Trains in place;
// the caller snapshots params into a checkpoint.
PretrainResult synthetic_pretrain(Backbone& backbone,
                                  const std::vector<std::vector<int>>& corpus,
                                  const PretrainConfig& cfg);

}  // namespace trajllm
