#include <benchmark/benchmark.h>

#include "uavd/dataset.hpp"
#include "uavd/validator.hpp"

namespace {

using namespace uavd;

const std::vector<SdkSchema>& schemas() {
  static const auto s = load_schema_dir(UAVD_FIXTURES_DIR);
  return s;
}

void BM_ParseAndCheck(benchmark::State& state) {
  GenConfig cfg;
  cfg.per_sdk = 20;
  const Corpus corpus = build_corpus(schemas(), cfg);
  std::size_t i = 0;
  for (auto _ : state) {
    const Triplet& t = corpus.samples[i++ % corpus.samples.size()];
    auto parsed = parse_program(t.code);
    if (parsed.ok()) benchmark::DoNotOptimize(check_calls(parsed.value(), *find_schema(schemas(), t.sdk_id)));
  }
}
BENCHMARK(BM_ParseAndCheck);

void BM_BuildCorpus(benchmark::State& state) {
  GenConfig cfg;
  cfg.per_sdk = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_corpus(schemas(), cfg));
}
BENCHMARK(BM_BuildCorpus)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace
