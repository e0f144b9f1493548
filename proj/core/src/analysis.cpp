#include "trajllm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "trajllm/io.hpp"

namespace trajllm {

std::string repr_mode_name(ReprMode mode) {
  return mode == ReprMode::PromptText ? "prompt-text" : "traj-modal";
}

namespace {

void append_number(std::string& out, float v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.3f", static_cast<double>(v));
  out += buf;
}

}  // namespace

std::vector<int> serialize_as_text(const RtgTrajectory& window) {
  const int t = window.length();
  std::string text;
  text.reserve(static_cast<size_t>(t) * 52);
  for (int i = 0; i < t; ++i) {
    append_number(text, window.rtgs[static_cast<size_t>(i)]);
    for (int k = 0; k < window.state_dim; ++k) {
      text += ',';
      append_number(text, window.states[static_cast<size_t>(i * window.state_dim + k)]);
    }
    for (int k = 0; k < window.action_dim; ++k) {
      text += ',';
      append_number(text, window.actions[static_cast<size_t>(i * window.action_dim + k)]);
    }
    text += ';';
  }
  return Vocabulary::standard().tokenize(text);
}

RtgTrajectory parse_serialized(const std::vector<int>& ids) {
  const std::string text = Vocabulary::standard().detokenize(ids);
  RtgTrajectory out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t semi = text.find(';', pos);
    if (semi == std::string::npos) break;
    std::string step = text.substr(pos, semi - pos);
    pos = semi + 1;
    std::vector<float> nums;
    size_t p = 0;
    while (p <= step.size()) {
      size_t comma = step.find(',', p);
      if (comma == std::string::npos) comma = step.size();
      nums.push_back(std::strtof(step.substr(p, comma - p).c_str(), nullptr));
      p = comma + 1;
    }
    if (static_cast<int>(nums.size()) != 1 + out.state_dim + out.action_dim) {
      throw std::runtime_error("parse_serialized: malformed step record");
    }
    out.rtgs.push_back(nums[0]);
    for (int k = 0; k < out.state_dim; ++k) out.states.push_back(nums[static_cast<size_t>(1 + k)]);
    for (int k = 0; k < out.action_dim; ++k)
      out.actions.push_back(nums[static_cast<size_t>(1 + out.state_dim + k)]);
    out.rewards.push_back(0.0f);
  }
  return out;
}

std::vector<int> text_mode_ids(const std::vector<int>& prompt_ids,
                               const RtgTrajectory& window) {
  const auto& vocab = Vocabulary::standard();
  std::vector<int> out;
  const std::vector<int> serialized = serialize_as_text(window);
  for (int id : prompt_ids) {
    out.push_back(id);
    if (id == vocab.traj_begin_id()) {
      out.insert(out.end(), serialized.begin(), serialized.end());
    }
  }
  return out;
}

std::vector<std::vector<double>> cosine_similarity_matrix(
    const std::vector<EmbeddingSample>& samples) {
  const size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("cosine_similarity_matrix: need >= 2 samples");
  for (const auto& s : samples) {
    if (s.mode != samples.front().mode || s.layer != samples.front().layer) {
      throw std::invalid_argument("cosine_similarity_matrix: mixed mode/layer samples");
    }
    if (s.pooled.size() != samples.front().pooled.size()) {
      throw std::invalid_argument("cosine_similarity_matrix: dimension mismatch");
    }
  }
  std::vector<double> norms(n);
  for (size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (float v : samples[i].pooled) sq += static_cast<double>(v) * v;
    norms[i] = std::sqrt(sq);
    if (norms[i] == 0.0) {
      throw std::invalid_argument("cosine_similarity_matrix: zero vector at sample " +
                                  std::to_string(i));
    }
  }
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) {
    m[i][i] = 1.0;
    for (size_t j = i + 1; j < n; ++j) {
      double dot = 0.0;
      for (size_t k = 0; k < samples[i].pooled.size(); ++k) {
        dot += static_cast<double>(samples[i].pooled[k]) * samples[j].pooled[k];
      }
      const double c = dot / (norms[i] * norms[j]);
      m[i][j] = c;
      m[j][i] = c;
    }
  }
  return m;
}

double mean_offdiagonal(const std::vector<std::vector<double>>& matrix) {
  const size_t n = matrix.size();
  if (n < 2) return 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      if (i != j) sum += matrix[i][j];
  return sum / static_cast<double>(n * (n - 1));
}

std::vector<EmbeddingSample> embed_windows(const DecisionModel& model,
                                           const std::vector<TrajectoryWindow>& windows,
                                           ReprMode mode,
                                           const std::vector<int>& prompt_ids,
                                           int window_cap) {
  NoGradGuard ng;
  const auto& vocab = Vocabulary::standard();
  std::vector<EmbeddingSample> out;
  int traj_id = 0;
  for (const auto& w : windows) {
    std::vector<int> content_positions;
    Tensor input_emb;  // modality embeddings before the positional table
    ForwardResult fwd;
    if (mode == ReprMode::TrajModal) {
      Tensor traj_emb = model.encoder().encode(w.slice, w.start, window_cap);
      FusedSequence fused = model.fuse(prompt_ids, traj_emb, w.start);
      for (int i = 0; i < fused.length(); ++i) {
        if (fused.kinds[static_cast<size_t>(i)] != TokenKind::Text)
          content_positions.push_back(i);
      }
      input_emb = fused.embeddings;
      fwd = model.backbone().forward(fused.embeddings, true);
    } else {
      const std::vector<int> ids = text_mode_ids(prompt_ids, w.slice);
      int begin_at = -1, end_at = -1;
      for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] == vocab.traj_begin_id()) begin_at = static_cast<int>(i);
        if (ids[i] == vocab.traj_end_id()) end_at = static_cast<int>(i);
      }
      for (int i = begin_at + 1; i < end_at; ++i) content_positions.push_back(i);
      input_emb = model.backbone().embed_tokens(ids);
      fwd = model.backbone().forward(input_emb, true);
    }
    const int d = model.config().d_model;
    auto pooled_of = [&](const Tensor& hidden, int layer) {
      EmbeddingSample s;
      s.trajectory_id = traj_id;
      s.mode = mode;
      s.layer = layer;
      s.pooled.assign(static_cast<size_t>(d), 0.0f);
      for (int pos : content_positions) {
        for (int k = 0; k < d; ++k) {
          s.pooled[static_cast<size_t>(k)] += hidden.at(pos, k);
        }
      }
      const float inv = 1.0f / static_cast<float>(content_positions.size());
      for (auto& v : s.pooled) v *= inv;
      return s;
    };
    // layer 0 pools the modality embeddings themselves; the shared positional
    // rows would otherwise add the same offset to every sample
    out.push_back(pooled_of(input_emb, 0));
    for (size_t layer = 1; layer < fwd.hidden.size(); ++layer) {
      out.push_back(pooled_of(fwd.hidden[layer], static_cast<int>(layer)));
    }
    ++traj_id;
  }
  return out;
}

std::vector<double> layerwise_mean_similarity(const std::vector<EmbeddingSample>& samples) {
  std::vector<int> layers;
  for (const auto& s : samples) {
    if (std::find(layers.begin(), layers.end(), s.layer) == layers.end()) {
      layers.push_back(s.layer);
    }
  }
  std::sort(layers.begin(), layers.end());
  std::vector<double> out;
  for (int layer : layers) {
    std::vector<EmbeddingSample> of_layer;
    for (const auto& s : samples)
      if (s.layer == layer) of_layer.push_back(s);
    if (of_layer.size() < 2) {
      throw std::invalid_argument("layerwise_mean_similarity: need >= 2 samples per layer");
    }
    out.push_back(mean_offdiagonal(cosine_similarity_matrix(of_layer)));
  }
  return out;
}

PcaProjection pca_project(const std::vector<std::vector<float>>& vectors) {
  const size_t n = vectors.size();
  if (n < 3) throw std::invalid_argument("pca_project: need >= 3 samples");
  const size_t d = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != d) throw std::invalid_argument("pca_project: ragged input");
  }

  std::vector<double> mean(d, 0.0);
  for (const auto& v : vectors)
    for (size_t k = 0; k < d; ++k) mean[k] += v[k];
  for (auto& m : mean) m /= static_cast<double>(n);

  std::vector<std::vector<double>> centered(n, std::vector<double>(d));
  for (size_t i = 0; i < n; ++i)
    for (size_t k = 0; k < d; ++k) centered[i][k] = vectors[i][k] - mean[k];

  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (size_t i = 0; i < n; ++i) {
    for (size_t a = 0; a < d; ++a) {
      const double va = centered[i][a];
      if (va == 0.0) continue;
      for (size_t b = a; b < d; ++b) cov[a][b] += va * centered[i][b];
    }
  }
  for (size_t a = 0; a < d; ++a)
    for (size_t b = 0; b < a; ++b) cov[a][b] = cov[b][a];
  double trace = 0.0;
  for (size_t a = 0; a < d; ++a) {
    for (size_t b = 0; b < d; ++b) cov[a][b] /= static_cast<double>(n - 1);
    trace += cov[a][a];
  }
  if (trace <= 0.0) {
    throw std::invalid_argument("pca_project: degenerate (zero-variance) input");
  }

  auto power_iterate = [&](const std::vector<std::vector<double>>& m) {
    std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d)));
    // fixed deterministic perturbation breaks symmetric starting points
    for (size_t k = 0; k < d; ++k) v[k] += 1e-3 * static_cast<double>(k % 7);
    double eig = 0.0;
    for (int it = 0; it < 500; ++it) {
      std::vector<double> w(d, 0.0);
      for (size_t a = 0; a < d; ++a) {
        const double va = v[a];
        if (va == 0.0) continue;
        for (size_t b = 0; b < d; ++b) w[b] += m[a][b] * va;
      }
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      if (norm == 0.0) break;
      for (size_t k = 0; k < d; ++k) w[k] /= norm;
      double delta = 0.0;
      for (size_t k = 0; k < d; ++k) delta = std::max(delta, std::abs(w[k] - v[k]));
      v = std::move(w);
      eig = norm;
      if (delta < 1e-12) break;
    }
    // sign convention: largest-magnitude component positive
    size_t arg = 0;
    for (size_t k = 1; k < d; ++k)
      if (std::abs(v[k]) > std::abs(v[arg])) arg = k;
    if (v[arg] < 0.0) {
      for (auto& x : v) x = -x;
    }
    return std::make_pair(v, eig);
  };

  auto [pc1, eig1] = power_iterate(cov);
  // deflate and repeat
  std::vector<std::vector<double>> deflated = cov;
  for (size_t a = 0; a < d; ++a)
    for (size_t b = 0; b < d; ++b) deflated[a][b] -= eig1 * pc1[a] * pc1[b];
  auto [pc2, eig2] = power_iterate(deflated);

  PcaProjection proj;
  proj.coords.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double c1 = 0.0, c2 = 0.0;
    for (size_t k = 0; k < d; ++k) {
      c1 += centered[i][k] * pc1[k];
      c2 += centered[i][k] * pc2[k];
    }
    proj.coords[i] = {c1, c2};
  }
  proj.explained_ratio = {eig1 / trace, std::max(0.0, eig2) / trace};
  return proj;
}

std::vector<std::vector<double>> attention_probe(const Backbone& backbone,
                                                 const std::string& text) {
  const std::vector<int> ids = Vocabulary::standard().tokenize(text);
  if (ids.empty()) throw std::invalid_argument("attention_probe: empty probe string");
  Tensor map = backbone.attention_map(backbone.embed_tokens(ids), 0);
  const int heads = map.dim(0);
  const int l = map.dim(1);
  std::vector<std::vector<double>> avg(static_cast<size_t>(l),
                                       std::vector<double>(static_cast<size_t>(l), 0.0));
  const auto data = map.data();
  for (int h = 0; h < heads; ++h) {
    for (int i = 0; i < l; ++i) {
      for (int j = 0; j < l; ++j) {
        avg[static_cast<size_t>(i)][static_cast<size_t>(j)] +=
            data[static_cast<size_t>((h * l + i) * l + j)];
      }
    }
  }
  for (auto& row : avg)
    for (auto& v : row) v /= heads;
  return avg;
}

void write_matrix_csv(const std::vector<std::vector<double>>& matrix,
                      const std::string& path, const std::string& provenance) {
  std::vector<std::string> cols;
  cols.reserve(matrix.empty() ? 1 : matrix.front().size());
  for (size_t j = 0; j < (matrix.empty() ? 0 : matrix.front().size()); ++j) {
    cols.push_back("c" + std::to_string(j));
  }
  CsvWriter csv(path, provenance, cols);
  for (const auto& row : matrix) {
    std::vector<std::string> cells;
    cells.reserve(row.size());
    for (double v : row) cells.push_back(fmt_float(v));
    csv.row(cells);
  }
}

}  // namespace trajllm
