#include <benchmark/benchmark.h>

#include "vqasynth/gsc.hpp"
#include "vqasynth/model_gateway.hpp"
#include "vqasynth/util.hpp"

using namespace vqasynth;

namespace {

void BM_GscSelectEmbeddings(benchmark::State& state) {
  SeededRng rng(7);
  std::vector<gateway::EmbeddingVector> vs(static_cast<std::size_t>(state.range(0)));
  for (auto& v : vs) {
    v.values.resize(256);
    for (auto& x : v.values) x = rng.uniform_real() - 0.5;
  }
  for (auto _ : state) benchmark::DoNotOptimize(pipelines::gsc_select(vs));
}
BENCHMARK(BM_GscSelectEmbeddings)->Arg(3)->Arg(8)->Arg(32);

void BM_GscSelectMockEmbedder(benchmark::State& state) {
  gateway::MockEmbedder embedder;
  pipelines::CandidateSet set{{"The dog rests beside the bench.", "A dog is lying next to a wooden bench.",
                               "The bench is empty and the dog is gone."},
                              {"base", "cot", "react"}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(pipelines::gsc_select(set, pipelines::SimilarityMode::kEmbedding,
                                                   [&](std::string_view t) { return embedder.embed(t); }));
  }
}
BENCHMARK(BM_GscSelectMockEmbedder);

void BM_UnigramSimilarity(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(pipelines::unigram_similarity("the red car is parked near the old fence",
                                                           "a red car parked by the fence"));
  }
}
BENCHMARK(BM_UnigramSimilarity);

}  // namespace
