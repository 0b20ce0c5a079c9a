#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "vqasynth/agreement.hpp"
#include "vqasynth/quality_metrics.hpp"
#include "vqasynth/util.hpp"

using namespace vqasynth;

namespace {

std::vector<double> random_histogram(SeededRng& rng, std::size_t bins) {
  std::vector<double> h(bins);
  double sum = 0;
  for (auto& v : h) sum += (v = rng.uniform_real());
  for (auto& v : h) v /= sum;
  return h;
}

std::string random_sentence(SeededRng& rng, std::size_t words) {
  static const char* kWords[] = {"the", "cat", "sat", "on", "a", "red", "mat", "near", "window", "dog"};
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) s += ' ';
    s += kWords[rng.uniform_index(10)];
  }
  return s;
}

void BM_Jsd(benchmark::State& state) {
  SeededRng rng(1);
  const auto p = random_histogram(rng, static_cast<std::size_t>(state.range(0)));
  const auto q = random_histogram(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(quality::jsd(p, q));
}
BENCHMARK(BM_Jsd)->Arg(16)->Arg(128)->Arg(1024);

void BM_Pearson(benchmark::State& state) {
  SeededRng rng(2);
  const auto p = random_histogram(rng, static_cast<std::size_t>(state.range(0)));
  const auto q = random_histogram(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(quality::pearson(p, q));
}
BENCHMARK(BM_Pearson)->Arg(16)->Arg(1024);

void BM_RougeL(benchmark::State& state) {
  SeededRng rng(3);
  const auto a = random_sentence(rng, static_cast<std::size_t>(state.range(0)));
  const auto b = random_sentence(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(quality::rouge_l(a, b));
}
BENCHMARK(BM_RougeL)->Arg(12)->Arg(64);

void BM_Dedup(benchmark::State& state) {
  SeededRng rng(4);
  std::vector<Triplet> ts(static_cast<std::size_t>(state.range(0)));
  for (auto& t : ts) {
    t.question = random_sentence(rng, 3) + "?";
    t.answer = random_sentence(rng, 2) + ".";
    t.explanation = random_sentence(rng, 4) + ".";
  }
  for (auto _ : state) benchmark::DoNotOptimize(quality::dedup_triplets(ts));
}
BENCHMARK(BM_Dedup)->Arg(1000)->Arg(20000);

void BM_GwetAc2(benchmark::State& state) {
  SeededRng rng(5);
  quality::RatingTable t;
  for (int i = 0; i < state.range(0); ++i) {
    t.items.push_back({static_cast<int>(1 + rng.uniform_index(3)), static_cast<int>(1 + rng.uniform_index(3)),
                       static_cast<int>(1 + rng.uniform_index(3))});
  }
  for (auto _ : state) benchmark::DoNotOptimize(quality::gwet_ac2(t));
}
BENCHMARK(BM_GwetAc2)->Arg(100)->Arg(10000);

}  // namespace
