#include <benchmark/benchmark.h>

#include "vqasynth/image.hpp"
#include "vqasynth/vision_annotator.hpp"

using namespace vqasynth;

namespace {

void BM_AnnotateRaster(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  vision::Image img(side, side, {200, 200, 200});
  const corpus::SceneGraphObject box{"obj", side / 4, side / 4, side / 2, side / 2};
  for (auto _ : state) {
    vision::annotate_bbox(img, box, {});
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_AnnotateRaster)->Arg(256)->Arg(1024);

void BM_AnnotateBytes(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto png = vision::encode_png(vision::Image(side, side, {10, 120, 30}));
  const corpus::SceneGraphObject box{"obj", 8, 8, side / 2, side / 3};
  for (auto _ : state) benchmark::DoNotOptimize(vision::annotate_bbox(png, box, {}));
}
BENCHMARK(BM_AnnotateBytes)->Arg(256)->Arg(640);

void BM_EncodeForTransport(benchmark::State& state) {
  const auto png = vision::encode_png(vision::Image(640, 480, {90, 90, 90}));
  for (auto _ : state) benchmark::DoNotOptimize(vision::encode_for_transport(png));
}
BENCHMARK(BM_EncodeForTransport);

}  // namespace
