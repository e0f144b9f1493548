#include <benchmark/benchmark.h>

#include "trajllm/env.hpp"
#include "trajllm/rng.hpp"
#include "trajllm/tensor.hpp"
#include "trajllm/train.hpp"
#include "trajllm/trajmod.hpp"

using namespace trajllm;

namespace {

Tensor random_tensor(Shape shape, uint64_t seed) {
  Rng rng(seed);
  std::vector<float> data(static_cast<size_t>(shape_numel(shape)));
  for (auto& v : data) v = rng.uniform(-1.0f, 1.0f);
  return Tensor::from_data(std::move(shape), std::move(data));
}

ModelConfig bench_model_config(int d_model, int n_layers) {
  ModelConfig cfg;
  cfg.d_model = d_model;
  cfg.n_layers = n_layers;
  cfg.n_heads = 4;
  cfg.max_positions = 512;
  return cfg;
}

std::vector<int> bench_prompt() {
  const auto& vocab = Vocabulary::standard();
  return {vocab.byte_id('m'), vocab.traj_begin_id(), vocab.traj_end_id()};
}

TrajectoryWindow bench_window(int steps) {
  Rng rng(4);
  TrajectoryWindow w;
  for (int i = 0; i < steps; ++i) {
    for (int k = 0; k < 4; ++k) w.slice.states.push_back(rng.uniform(-1.0f, 1.0f));
    for (int k = 0; k < 2; ++k) w.slice.actions.push_back(rng.uniform(-1.0f, 1.0f));
    w.slice.rewards.push_back(0.0f);
    w.slice.rtgs.push_back(rng.uniform(0.0f, 300.0f));
  }
  w.step_weights.assign(static_cast<size_t>(steps), 1.0f);
  return w;
}

}  // namespace

static void BM_Matmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Tensor a = random_tensor({n, n}, 1);
  Tensor b = random_tensor({n, n}, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(matmul(a, b).data().data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

static void BM_EnvStep(benchmark::State& state) {
  MazeConfig maze = MazeConfig::u_maze();
  State s{-0.8f, -0.8f, 0.0f, 0.0f};
  Rng rng(3);
  for (auto _ : state) {
    EnvAction a{rng.uniform(-1.0f, 1.0f), rng.uniform(-1.0f, 1.0f)};
    auto [next, reward] = env_step(s, a, maze);
    benchmark::DoNotOptimize(reward);
    s = next;
  }
}
BENCHMARK(BM_EnvStep);

static void BM_EncodeAndFuse(benchmark::State& state) {
  DecisionModel model(bench_model_config(64, 4), 1);
  TrajectoryWindow w = bench_window(20);
  const auto prompt = bench_prompt();
  NoGradGuard ng;
  for (auto _ : state) {
    Tensor emb = model.encoder().encode(w.slice, 0, 20);
    benchmark::DoNotOptimize(model.fuse(prompt, emb, 0).embeddings.data().data());
  }
}
BENCHMARK(BM_EncodeAndFuse);

static void BM_ForwardInference(benchmark::State& state) {
  DecisionModel model(bench_model_config(static_cast<int>(state.range(0)),
                                         static_cast<int>(state.range(1))),
                      1);
  TrajectoryWindow w = bench_window(20);
  const auto prompt = bench_prompt();
  NoGradGuard ng;
  for (auto _ : state) {
    Tensor emb = model.encoder().encode(w.slice, 0, 20);
    FusedSequence fused = model.fuse(prompt, emb, 0);
    ForwardResult fwd = model.backbone().forward(fused.embeddings, true);
    benchmark::DoNotOptimize(model.predict_actions(fwd.final, fused).data().data());
  }
}
BENCHMARK(BM_ForwardInference)->Args({32, 2})->Args({64, 4})->Args({128, 4});

static void BM_TrainStep(benchmark::State& state) {
  DecisionModel model(bench_model_config(64, 4), 1);
  TrajectoryWindow w = bench_window(20);
  const auto prompt = bench_prompt();
  ParamList params = model.params();
  AdamW opt(params, {});
  std::vector<const TrajectoryWindow*> batch(16, &w);
  for (auto _ : state) {
    zero_grads(params);
    auto fused = make_batch(model, batch, prompt, 20);
    for (auto& f : fused) {
      Tensor loss = sequence_loss(model, f, LossMode::V3);
      backward(loss, 1.0f / 16.0f);
    }
    opt.step(params);
  }
}
BENCHMARK(BM_TrainStep);

BENCHMARK_MAIN();
