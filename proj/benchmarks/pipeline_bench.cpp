#include <benchmark/benchmark.h>

#include "framelog/capture.hpp"
#include "framelog/image.hpp"
#include "framelog/registry.hpp"
#include "framelog/timeline.hpp"

using namespace framelog;

static void BM_PixelDigest(benchmark::State& state) {
  auto w = static_cast<int>(state.range(0));
  auto h = w * 3 / 4;
  auto img = synthetic_image(w, h, 1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(pixel_digest(img));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * img.pixels.size()));
}
BENCHMARK(BM_PixelDigest)->Arg(480)->Arg(1440)->Unit(benchmark::kMillisecond);

static void BM_EncodeJpeg(benchmark::State& state) {
  auto img = synthetic_image(1440, 1080, 1, 1);
  double q = static_cast<double>(state.range(0)) / 100.0;
  std::size_t bytes = 0;
  for (auto _ : state) bytes = encode_jpeg(img, q).size();
  state.counters["bytes_per_px"] = static_cast<double>(bytes) / (1440.0 * 1080.0);
}
BENCHMARK(BM_EncodeJpeg)->Arg(50)->Arg(80)->Unit(benchmark::kMillisecond);

static void BM_ScaleNearest(benchmark::State& state) {
  auto img = synthetic_image(1440, 1080, 1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(scale_nearest(img, 0.5));
}
BENCHMARK(BM_ScaleNearest)->Unit(benchmark::kMillisecond);

static void BM_Classify(benchmark::State& state) {
  const auto& map = default_category_map();
  const char* ids[] = {"com.google.Chrome", "com.microsoft.Word", "com.jetbrains.clion",
                       "org.example.Unknown"};
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(classify(map, ids[i++ & 3]));
}
BENCHMARK(BM_Classify);

static void BM_Scrub(benchmark::State& state) {
  double f = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scrub(100000, f));
    f = f > 1 ? 0 : f + 0.001;
  }
}
BENCHMARK(BM_Scrub);
