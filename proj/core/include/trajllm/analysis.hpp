#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "trajllm/data.hpp"
#include "trajllm/trajmod.hpp"

namespace trajllm {

enum class ReprMode { PromptText, TrajModal };

std::string repr_mode_name(ReprMode mode);

struct EmbeddingSample {
  int trajectory_id = 0;
  ReprMode mode = ReprMode::TrajModal;
  int layer = 0;
  std::vector<float> pooled;  // mean over trajectory-token positions
};

// Renders every number with a fixed 3-decimal format into byte tokens;
// numbers are comma-separated, steps end with ';'. Deterministic, and
// parse_serialized recovers values to the 3-decimal grid.
std::vector<int> serialize_as_text(const RtgTrajectory& window);
RtgTrajectory parse_serialized(const std::vector<int>& ids);

// Token ids of the prompt with the serialized window spliced between the
// placeholder markers (digits-as-text representation).
std::vector<int> text_mode_ids(const std::vector<int>& prompt_ids,
                               const RtgTrajectory& window);

// n x n pairwise cosine similarities; samples must share mode and layer.
std::vector<std::vector<double>> cosine_similarity_matrix(
    const std::vector<EmbeddingSample>& samples);

double mean_offdiagonal(const std::vector<std::vector<double>>& matrix);

// Embedding samples for every layer (0 = input embeddings) of each window,
// pooled over trajectory-content positions only.
std::vector<EmbeddingSample> embed_windows(const DecisionModel& model,
                                           const std::vector<TrajectoryWindow>& windows,
                                           ReprMode mode,
                                           const std::vector<int>& prompt_ids,
                                           int window_cap);

// mean off-diagonal cosine similarity for every distinct layer present in
// the samples, in ascending layer order
std::vector<double> layerwise_mean_similarity(const std::vector<EmbeddingSample>& samples);

struct PcaProjection {
  std::vector<std::array<double, 2>> coords;
  std::array<double, 2> explained_ratio{0.0, 0.0};
};

// Top-2 principal components via power iteration with deflation.
PcaProjection pca_project(const std::vector<std::vector<float>>& vectors);

// First-layer, head-averaged attention over the tokenized probe string.
// Returns an L x L matrix.
std::vector<std::vector<double>> attention_probe(const Backbone& backbone,
                                                 const std::string& text);

void write_matrix_csv(const std::vector<std::vector<double>>& matrix,
                      const std::string& path, const std::string& provenance);

}  // namespace trajllm
