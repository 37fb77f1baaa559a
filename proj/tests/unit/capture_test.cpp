#include <chrono>
#include <set>
#include <thread>

#include <gtest/gtest.h>

#include "framelog/capture.hpp"
#include "framelog/error.hpp"
#include "framelog/store.hpp"
#include "test_support.hpp"

using namespace framelog;
using namespace std::chrono_literals;
using framelog::testing::kTestH;
using framelog::testing::kTestW;

namespace {

// Keeps records in memory; optionally fails on chosen calls.
class MemorySink final : public FrameSink {
 public:
  FrameRecord write(const RawFrame& frame, const FrameMeta& meta,
                    const CaptureConfig&) override {
    ++calls;
    if (calls == fail_encode_on) throw Error(ErrorCode::kEncodeFailure, "injected");
    if (calls == fail_fatal_on) throw Error(ErrorCode::kStorageFull, "disk full");
    FrameRecord r;
    r.ts = frame.captured_at;
    r.blob = pixel_digest(frame.image);
    r.w = frame.image.width;
    r.h = frame.image.height;
    r.app_id = meta.app_id;
    r.app_name = meta.app_name;
    r.category = meta.category;
    r.label = meta.label;
    r.locator = meta.locator;
    r.trigger = meta.trigger;
    records.push_back(r);
    return r;
  }
  std::optional<Timestamp> last_timestamp() const override { return std::nullopt; }

  std::vector<FrameRecord> records;
  int calls = 0;
  int fail_encode_on = -1;
  int fail_fatal_on = -1;
};

Timestamp start_ts() { return Timestamp::from_local(Date(2026, 10, 17), 9, 0, 0); }

CaptureConfig cfg_every(int s) {
  CaptureConfig c;
  c.interval_s = s;
  c.quality = 0.5;
  return c;
}

std::shared_ptr<SyntheticFrameSource> static_source() {
  return std::make_shared<SyntheticFrameSource>(kTestW, kTestH, SyntheticFrameSource::Script{1u});
}

AppSnapshot chrome() {
  AppSnapshot s;
  s.available = true;
  s.app_id = "com.google.Chrome";
  s.app_name = "Chrome";
  s.window_title = "News";
  s.url = "https://news.example/";
  return s;
}

}  // namespace

TEST(SchedulerTest, DebounceWindow) {
  CaptureScheduler s(500ms);
  SteadyTime t0{};
  EXPECT_TRUE(s.accept_tick(t0));
  EXPECT_TRUE(s.accept_app_switch(t0 + 1000ms));
  EXPECT_FALSE(s.accept_app_switch(t0 + 1499ms));
  EXPECT_FALSE(s.accept_tick(t0 + 1499ms));
  EXPECT_TRUE(s.accept_tick(t0 + 1500ms));
  EXPECT_TRUE(s.accept_app_switch(t0 + 1500ms));
}

TEST(StamperTest, RegressionBecomesLastPlusOne) {
  MonotonicStamper st;
  auto a = st.stamp(start_ts());
  auto b = st.stamp(start_ts());
  EXPECT_EQ(b.utc, a.utc + 1ms);
  auto back = start_ts();
  back.utc -= 1h;
  auto c = st.stamp(back);
  EXPECT_EQ(c.utc, a.utc + 2ms);
  auto fwd = start_ts();
  fwd.utc += 10s;
  EXPECT_EQ(st.stamp(fwd).utc, fwd.utc);
}

TEST(CaptureLoopTest, OneSecondCadenceForSixSeconds) {
  MemorySink sink;
  CategoryRegistry reg;
  VirtualTimebase tb(start_ts(), 6s);
  CaptureLoop loop(cfg_every(1), static_source(), std::make_shared<NullMetadataProvider>(), sink,
                   tb, reg);
  auto rep = loop.run();
  EXPECT_EQ(rep.interval_records, 6u);
  ASSERT_EQ(sink.records.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(sink.records[i].ts.utc, start_ts().utc + std::chrono::seconds(i));
  }
  EXPECT_FALSE(rep.fatal_code);
}

TEST(CaptureLoopTest, StaticScreenSharesOneDigest) {
  MemorySink sink;
  CategoryRegistry reg;
  VirtualTimebase tb(start_ts(), 100s);
  CaptureLoop loop(cfg_every(10), static_source(), std::make_shared<NullMetadataProvider>(), sink,
                   tb, reg);
  loop.run();
  ASSERT_EQ(sink.records.size(), 10u);
  std::set<std::string> blobs;
  for (const auto& r : sink.records) blobs.insert(r.blob);
  EXPECT_EQ(blobs.size(), 1u);
}

TEST(CaptureLoopTest, AppSwitchAddsCapture) {
  MemorySink sink;
  CategoryRegistry reg;
  VirtualTimebase tb(start_ts(), 20s, {5s});
  CaptureLoop loop(cfg_every(10), static_source(), ScriptedMetadataProvider::always(chrome()),
                   sink, tb, reg);
  auto rep = loop.run();
  ASSERT_EQ(sink.records.size(), 3u);
  EXPECT_EQ(sink.records[0].trigger, CaptureTrigger::kInterval);
  EXPECT_EQ(sink.records[1].trigger, CaptureTrigger::kAppSwitch);
  EXPECT_EQ(sink.records[2].trigger, CaptureTrigger::kInterval);
  EXPECT_EQ(sink.records[1].ts.utc, start_ts().utc + 5s);
  EXPECT_EQ(sink.records[2].ts.utc, start_ts().utc + 10s);
  EXPECT_EQ(rep.app_switch_records, 1u);
  EXPECT_EQ(sink.records[1].category, AppCategory::kWebBrowser);
  EXPECT_EQ(sink.records[1].locator, Locator(WebLocator{"https://news.example/", "News"}));
}

TEST(CaptureLoopTest, SwitchBurstIsDebounced) {
  MemorySink sink;
  CategoryRegistry reg;
  VirtualTimebase tb(start_ts(), 20s, {5000ms, 5100ms, 5499ms, 5500ms, 9800ms});
  CaptureLoop loop(cfg_every(10), static_source(), std::make_shared<NullMetadataProvider>(), sink,
                   tb, reg);
  auto rep = loop.run();
  // 0 s tick, switch at 5.0, switches at 5.1 and 5.499 dropped, 5.5 accepted,
  // 9.8 accepted, tick at 10.0 skipped (within 500 ms of 9.8).
  EXPECT_EQ(rep.app_switch_records, 3u);
  EXPECT_EQ(rep.debounced_switches, 2u);
  EXPECT_EQ(rep.debounced_ticks, 1u);
  EXPECT_EQ(rep.interval_records, 1u);
}

TEST(CaptureLoopTest, SwitchesIgnoredWhenDisabled) {
  MemorySink sink;
  CategoryRegistry reg;
  auto cfg = cfg_every(10);
  cfg.capture_on_app_switch = false;
  VirtualTimebase tb(start_ts(), 20s, {5s});
  CaptureLoop loop(cfg, static_source(), std::make_shared<NullMetadataProvider>(), sink, tb, reg);
  auto rep = loop.run();
  EXPECT_EQ(rep.records(), 2u);
  EXPECT_EQ(rep.ignored_switches, 1u);
}

TEST(CaptureLoopTest, StampsStayIncreasingWhenClockStepsBack) {
  MemorySink sink;
  CategoryRegistry reg;
  VirtualTimebase tb(start_ts(), 10s);
  tb.skew_wall_at(3s, -1h);
  CaptureLoop loop(cfg_every(1), static_source(), std::make_shared<NullMetadataProvider>(), sink,
                   tb, reg);
  loop.run();
  ASSERT_EQ(sink.records.size(), 10u);
  for (std::size_t i = 1; i < sink.records.size(); ++i) {
    EXPECT_LT(sink.records[i - 1].ts, sink.records[i].ts) << i;
  }
  EXPECT_EQ(sink.records[3].ts.utc, sink.records[2].ts.utc + 1ms);
}

TEST(CaptureLoopTest, UnavailableSourceSkipsTicks) {
  MemorySink sink;
  CategoryRegistry reg;
  auto src = std::make_shared<SyntheticFrameSource>(
      kTestW, kTestH, SyntheticFrameSource::Script{1u, std::nullopt, std::nullopt, 2u});
  VirtualTimebase tb(start_ts(), 5s);
  CaptureLoop loop(cfg_every(1), src, std::make_shared<NullMetadataProvider>(), sink, tb, reg);
  auto rep = loop.run();
  EXPECT_EQ(rep.source_unavailable, 2u);
  EXPECT_EQ(rep.records(), 3u);
}

TEST(CaptureLoopTest, EncodeFailureDropsFrameOnly) {
  MemorySink sink;
  sink.fail_encode_on = 2;
  CategoryRegistry reg;
  VirtualTimebase tb(start_ts(), 4s);
  CaptureLoop loop(cfg_every(1), static_source(), std::make_shared<NullMetadataProvider>(), sink,
                   tb, reg);
  auto rep = loop.run();
  EXPECT_EQ(rep.encode_failures, 1u);
  EXPECT_EQ(rep.records(), 3u);
  EXPECT_FALSE(rep.fatal_code);
}

TEST(CaptureLoopTest, StorageErrorHalts) {
  MemorySink sink;
  sink.fail_fatal_on = 2;
  CategoryRegistry reg;
  VirtualTimebase tb(start_ts(), 10s);
  CaptureLoop loop(cfg_every(1), static_source(), std::make_shared<NullMetadataProvider>(), sink,
                   tb, reg);
  auto rep = loop.run();
  EXPECT_EQ(rep.fatal_code, ErrorCode::kStorageFull);
  EXPECT_EQ(rep.records(), 1u);
}

TEST(CaptureLoopTest, MetadataFailureStillCaptures) {
  MemorySink sink;
  CategoryRegistry reg;
  VirtualTimebase tb(start_ts(), 5s);
  CaptureLoop loop(cfg_every(1), static_source(), ScriptedMetadataProvider::failing(), sink, tb,
                   reg);
  auto rep = loop.run();
  EXPECT_EQ(rep.records(), 5u);
  EXPECT_EQ(rep.metadata_missing, 5u);
  for (const auto& r : sink.records) {
    EXPECT_EQ(r.category, AppCategory::kNoMetadata);
    EXPECT_EQ(r.label, "Application");
    EXPECT_TRUE(locator_empty(r.locator));
  }
}

TEST(CaptureLoopTest, InvalidConfigRejectedAtConstruction) {
  MemorySink sink;
  CategoryRegistry reg;
  VirtualTimebase tb(start_ts(), 5s);
  EXPECT_THROW(CaptureLoop(cfg_every(61), static_source(),
                           std::make_shared<NullMetadataProvider>(), sink, tb, reg),
               Error);
}

TEST(MetadataPollerTest, HungProviderTimesOut) {
  auto provider = std::make_shared<ScriptedMetadataProvider>(std::vector<ScriptedMetadataProvider::Step>{
      {chrome(), 400ms, false}, {chrome(), 0ms, false}});
  MetadataPoller poller(provider, 50ms);
  auto t0 = std::chrono::steady_clock::now();
  auto first = poller.poll();
  EXPECT_FALSE(first.available);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, 300ms);
  EXPECT_EQ(poller.timeouts(), 1u);
  // While the hung call is outstanding no second call is made.
  auto second = poller.poll();
  EXPECT_FALSE(second.available);
  EXPECT_EQ(provider->calls(), 1u);
  std::this_thread::sleep_for(500ms);
  auto third = poller.poll();
  EXPECT_TRUE(third.available);
  EXPECT_EQ(provider->calls(), 2u);
}

TEST(MetadataPollerTest, ThrowingProviderCounted) {
  MetadataPoller poller(ScriptedMetadataProvider::failing(), 100ms);
  EXPECT_FALSE(poller.poll().available);
  EXPECT_EQ(poller.failures(), 1u);
}

TEST(SyntheticSourceTest, ScriptRepeatsLastEntry) {
  SyntheticFrameSource src(kTestW, kTestH, {3u, 4u});
  auto a = src.next_frame(1.0);
  auto b = src.next_frame(1.0);
  auto c = src.next_frame(1.0);
  ASSERT_TRUE(a && b && c);
  EXPECT_NE(pixel_digest(a->image), pixel_digest(b->image));
  EXPECT_EQ(pixel_digest(b->image), pixel_digest(c->image));
  EXPECT_EQ(src.frames_served(), 3u);
  auto half = src.next_frame(0.5);
  EXPECT_EQ(half->image.width, kTestW / 2);
}

TEST(RecorderTest, StartStopWritesToStore) {
  framelog::testing::TempDir dir;
  FrameStore store(dir.path(), default_clock(), StoreOptions{false});
  CategoryRegistry reg;
  Recorder rec(static_source(), std::make_shared<NullMetadataProvider>(), store, reg);
  auto cfg = cfg_every(1);
  EXPECT_THROW(rec.start(cfg_every(0)), Error);
  EXPECT_TRUE(rec.start(cfg));
  EXPECT_FALSE(rec.start(cfg));
  EXPECT_TRUE(rec.status().running);
  std::this_thread::sleep_for(200ms);
  EXPECT_TRUE(rec.stop());
  EXPECT_FALSE(rec.stop());
  auto st = rec.status();
  EXPECT_FALSE(st.running);
  ASSERT_TRUE(st.last_report);
  EXPECT_GE(st.last_report->records(), 1u);
  EXPECT_EQ(store.stats().journal_lines, st.last_report->records());
}
