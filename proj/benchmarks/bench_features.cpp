#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "lark/features.hpp"

namespace {

lark::AudioClip tone_clip(double seconds) {
  std::vector<double> s(static_cast<std::size_t>(seconds * 44100.0));
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = 0.3 * std::sin(0.06 * static_cast<double>(i));
  return lark::AudioClip(s, 44100.0);
}

void BM_ExtractFeatures(benchmark::State& state) {
  const auto clip = tone_clip(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lark::extract_features(clip));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 25);
}
BENCHMARK(BM_ExtractFeatures)->Arg(3)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_StackContext(benchmark::State& state) {
  const auto feats = lark::extract_features(tone_clip(30.0));
  for (auto _ : state) benchmark::DoNotOptimize(lark::stack_context(feats.frames, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_StackContext)->Arg(3)->Arg(5);

}  // namespace
