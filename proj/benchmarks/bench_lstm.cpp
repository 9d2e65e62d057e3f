#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "lark/features.hpp"
#include "lark/lstm.hpp"
#include "lark/rng.hpp"

namespace {

lark::ModelConfig config(int hidden) {
  lark::ModelConfig c;
  c.num_layers = 4;
  c.hidden_size = hidden;
  c.context_frames = 5;
  c.delay_frames = 1;
  return c;
}

lark::SequenceBatch random_inputs(const lark::ModelConfig& c, int steps, int batch) {
  lark::Rng rng(3);
  lark::SequenceBatch x(static_cast<std::size_t>(steps));
  for (auto& m : x) {
    m.resize(c.input_dim(), batch);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(-1.0, 1.0);
  }
  return x;
}

void BM_Forward(benchmark::State& state) {
  const auto c = config(static_cast<int>(state.range(0)));
  const auto params = lark::init_params(c, 1);
  const auto x = random_inputs(c, 75, static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(lark::forward_sequence(x, params, c));
}
BENCHMARK(BM_Forward)->Args({64, 8})->Args({256, 1})->Args({256, 16})->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  const auto c = config(static_cast<int>(state.range(0)));
  const auto params = lark::init_params(c, 1);
  const int batch = static_cast<int>(state.range(1));
  const auto x = random_inputs(c, 75, batch);
  const lark::SequenceBatch grads(75, Eigen::MatrixXd::Constant(lark::kLandmarkDim, batch, 1e-3));
  for (auto _ : state) {
    const auto fwd = lark::forward_sequence(x, params, c);
    benchmark::DoNotOptimize(lark::backward(fwd.cache, grads, params, c));
  }
}
BENCHMARK(BM_ForwardBackward)->Args({64, 8})->Args({256, 16})->Unit(benchmark::kMillisecond);

// Feature extraction plus inference for a 3 s clip with the full-size model.
void BM_Generate(benchmark::State& state) {
  std::vector<double> s(3 * 44100);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = 0.3 * std::sin(0.06 * static_cast<double>(i));
  const lark::AudioClip clip(s, 44100.0);
  const auto c = config(256);
  const lark::LstmModel model{c, lark::init_params(c, 1)};
  for (auto _ : state) benchmark::DoNotOptimize(lark::predict(lark::extract_features(clip), model));
}
BENCHMARK(BM_Generate)->Unit(benchmark::kMillisecond);

}  // namespace
