#include <benchmark/benchmark.h>

#include "framelog/store.hpp"
#include "test_support.hpp"

using namespace framelog;
using namespace framelog::testing;

namespace {
const Date kDay(2026, 10, 17);
}

// Static screen: every append after the first is a journal line only.
static void BM_AppendDuplicate(benchmark::State& state) {
  TempDir dir;
  FrameStore store(dir.path(), fixed_clock(kDay), StoreOptions{state.range(0) != 0});
  auto frame = make_frame(Timestamp::from_local(kDay, 0, 0, 0), 1);
  FrameMeta meta = web_meta();
  CaptureConfig cfg;
  for (auto _ : state) {
    frame.captured_at.utc += std::chrono::milliseconds(1);
    store.append(frame, meta, cfg);
  }
}
BENCHMARK(BM_AppendDuplicate)->Arg(0)->Arg(1)->ArgName("durable");

static void BM_AppendFresh(benchmark::State& state) {
  TempDir dir;
  FrameStore store(dir.path(), fixed_clock(kDay), StoreOptions{false});
  FrameMeta meta = plain_meta();
  CaptureConfig cfg;
  auto ts = Timestamp::from_local(kDay, 0, 0, 0);
  std::uint32_t key = 0;
  for (auto _ : state) {
    state.PauseTiming();
    ts.utc += std::chrono::milliseconds(1);
    auto frame = make_frame(ts, key++);
    state.ResumeTiming();
    store.append(frame, meta, cfg);
  }
}
BENCHMARK(BM_AppendFresh)->Unit(benchmark::kMillisecond);

static void BM_ReadDay(benchmark::State& state) {
  TempDir dir;
  FrameStore store(dir.path(), fixed_clock(kDay), StoreOptions{false});
  auto n = static_cast<int>(state.range(0));
  fill_day(store, kDay, n, {1, 2, 3, 4});
  for (auto _ : state) benchmark::DoNotOptimize(store.read_day(kDay));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ReadDay)->Arg(1000)->Arg(8640)->Unit(benchmark::kMillisecond);

static void BM_Stats(benchmark::State& state) {
  TempDir dir;
  FrameStore store(dir.path(), fixed_clock(kDay), StoreOptions{false});
  fill_day(store, kDay, 2000, {1, 2, 3, 4, 5, 6, 7, 8});
  for (auto _ : state) benchmark::DoNotOptimize(store.stats());
}
BENCHMARK(BM_Stats)->Unit(benchmark::kMillisecond);
