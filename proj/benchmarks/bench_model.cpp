// Forward, training-step and decoding costs of the two model presets. The
// vocabulary and context sizes match the shipped corpus.

#include <benchmark/benchmark.h>

#include "uavd/generate.hpp"
#include "uavd/rng.hpp"
#include "uavd/train.hpp"
#include "uavd/transformer.hpp"

namespace {

using namespace uavd;

constexpr int kVocab = 607;
constexpr int kContext = 520;

ModelConfig preset(bool teacher) {
  return teacher ? ModelConfig::teacher_preset(kVocab, kContext) : ModelConfig::student_preset(kVocab, kContext);
}

std::vector<TokenId> random_tokens(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TokenId> ids(static_cast<std::size_t>(n));
  for (auto& t : ids) t = static_cast<TokenId>(kNumSpecial + rng.below(kVocab - kNumSpecial));
  return ids;
}

void BM_Forward(benchmark::State& state) {
  ModelState m(preset(state.range(0) != 0));
  m.init(1);
  const auto ids = random_tokens(static_cast<int>(state.range(1)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(forward<float>(m, ids));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Forward)->ArgNames({"teacher", "len"})->Args({0, 128})->Args({1, 128})->Args({0, 384})->Args({1, 384});

void BM_TrainStep(benchmark::State& state) {
  ModelState m(preset(state.range(0) != 0));
  m.init(1);
  std::vector<EncodedSample> data;
  for (int i = 0; i < 8; ++i) data.push_back({random_tokens(256, 10 + i), 96});
  DistillConfig cfg;
  cfg.steps = 1;
  cfg.batch_size = 8;
  cfg.probe_size = 0;
  for (auto _ : state) benchmark::DoNotOptimize(train(m, data, cfg));
}
BENCHMARK(BM_TrainStep)->ArgNames({"teacher"})->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Generate(benchmark::State& state) {
  ModelState m(preset(state.range(0) != 0));
  m.init(1);
  const auto prompt = random_tokens(160, 3);
  DecodeOptions opts;
  opts.stop_token = -1;  // fixed-length decode
  for (auto _ : state) benchmark::DoNotOptimize(generate(m, prompt, 64, opts));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_Generate)->ArgNames({"teacher"})->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
