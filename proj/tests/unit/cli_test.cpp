#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "framelog/store.hpp"
#include "test_support.hpp"

using namespace framelog;
using namespace framelog::testing;

namespace {

struct Run {
  int exit_code = -1;
  std::string out;
};

Run run_cli(const std::string& args) {
  std::string cmd = std::string(FRAMELOG_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (p == nullptr) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  int status = ::pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string root_arg(const TempDir& d) { return "--root '" + d.path().string() + "'"; }

}  // namespace

TEST(CliTest, EstimateJsonMatchesLibrary) {
  TempDir dir;
  auto r = run_cli(root_arg(dir) + " estimate --hours 80 --json");
  ASSERT_EQ(r.exit_code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["bytes"].get<double>(), estimate_disk(CaptureConfig{}, 1440, 1080, 80).bytes);
  EXPECT_EQ(j["frames"].get<double>(), 28800.0);
}

TEST(CliTest, EstimateHumanReadable) {
  TempDir dir;
  auto r = run_cli(root_arg(dir) + " estimate --hours 80");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("20065812480 bytes (20.07 GB)"), std::string::npos) << r.out;
}

TEST(CliTest, EstimateRejectsBadConfig) {
  TempDir dir;
  EXPECT_EQ(run_cli(root_arg(dir) + " estimate --hours 1 --interval 61").exit_code, 1);
  EXPECT_EQ(run_cli(root_arg(dir) + " estimate --hours 1 --scale 0.2 --width 1920 "
                                    "--height 1080").exit_code, 1);
}

TEST(CliTest, UsageErrors) {
  TempDir dir;
  EXPECT_EQ(run_cli(root_arg(dir)).exit_code, 2);
  EXPECT_EQ(run_cli(root_arg(dir) + " estimate").exit_code, 2);
  EXPECT_EQ(run_cli(root_arg(dir) + " frobnicate").exit_code, 2);
  EXPECT_EQ(run_cli(root_arg(dir) + " gc --today 2026-13-01").exit_code, 2);
  EXPECT_EQ(run_cli("--help").exit_code, 0);
}

TEST(CliTest, GcAndStatsOnEmptyStore) {
  TempDir dir;
  auto gc = run_cli(root_arg(dir) + " gc --today 2026-10-17");
  ASSERT_EQ(gc.exit_code, 0);
  auto report = nlohmann::json::parse(gc.out);
  EXPECT_EQ(report["segments_deleted"], 0);
  EXPECT_EQ(report["blobs_deleted"], 0);
  auto stats = run_cli(root_arg(dir) + " stats");
  ASSERT_EQ(stats.exit_code, 0);
  EXPECT_EQ(nlohmann::json::parse(stats.out)["blob_count"], 0);
}

TEST(CliTest, GcAppliesRetention) {
  TempDir dir;
  const Date today(2026, 10, 17);
  {
    FrameStore store(dir.path(), fixed_clock(today), StoreOptions{false});
    for (int k = 0; k < 4; ++k) fill_day(store, today - k, 1, {static_cast<std::uint32_t>(k)});
  }
  auto gc = run_cli(root_arg(dir) + " gc --today 2026-10-17 --retention 2");
  ASSERT_EQ(gc.exit_code, 0);
  EXPECT_EQ(nlohmann::json::parse(gc.out)["segments_deleted"], 2);
  EXPECT_EQ(nlohmann::json::parse(gc.out)["blobs_deleted"], 2);
}

TEST(CliTest, ExportIsByteIdentical) {
  TempDir dir;
  TempDir out;
  const Date today(2026, 10, 17);
  std::vector<FrameRecord> recs;
  {
    FrameStore store(dir.path(), fixed_clock(today), StoreOptions{false});
    recs = fill_day(store, today, 4, {1, 2, 2});
  }
  auto r = run_cli(root_arg(dir) + " export --date 2026-10-17 --out '" + out.path().string() +
                   "'");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out)["blobs"], 2);
  FrameStore src(dir.path(), fixed_clock(today), StoreOptions{false});
  FrameStore dst(out.path(), fixed_clock(today), StoreOptions{false});
  EXPECT_EQ(slurp(dst.journal_path(today)), slurp(src.journal_path(today)));
  for (const auto& rec : recs) EXPECT_EQ(dst.read_blob(rec.blob), src.read_blob(rec.blob));
  EXPECT_EQ(run_cli(root_arg(dir) + " export --date 2026-10-01 --out '" +
                    out.path().string() + "'").exit_code, 1);
}

TEST(CliTest, RecordWithoutServiceFails) {
  EXPECT_EQ(run_cli("record status --port 1").exit_code, 1);
}
