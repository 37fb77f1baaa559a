#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "framelog/capture.hpp"
#include "framelog/record.hpp"
#include "framelog/time.hpp"

namespace framelog {

struct BlobRef {
  std::string hash;
  std::uint64_t byte_size = 0;
};

struct DaySegment {
  Date date;
  std::vector<FrameRecord> records;
  bool sealed = false;             // the local day is over
  std::size_t skipped_count = 0;   // malformed, out-of-order or torn lines
};

struct RetentionPolicy {
  int retention_days = 10;
};

struct GcReport {
  std::size_t segments_deleted = 0;
  std::size_t blobs_deleted = 0;
  std::uint64_t bytes_freed = 0;
  std::vector<std::string> failures;  // paths that could not be removed

  bool partial() const { return !failures.empty(); }
  friend bool operator==(const GcReport&, const GcReport&) = default;
};

struct StoreStats {
  std::size_t blob_count = 0;
  std::size_t journal_days = 0;
  std::uint64_t total_bytes = 0;  // blob bytes
  std::uint64_t journal_bytes = 0;
  std::size_t journal_lines = 0;
  double dedup_ratio = 1.0;  // journal_lines / blob_count, 1.0 when empty

  friend bool operator==(const StoreStats&, const StoreStats&) = default;
};

struct ExportReport {
  std::size_t records = 0;
  std::size_t blobs = 0;
  std::uint64_t bytes = 0;
};

struct StoreOptions {
  // fsync blobs and journal lines before acknowledging an append.
  bool durable = true;
};

nlohmann::ordered_json to_json(const GcReport& report);
nlohmann::ordered_json to_json(const StoreStats& stats);

// On-disk layout under the root:
//   journal/YYYY-MM-DD.jsonl     one FrameRecord per LF-terminated line
//   blobs/<hh>/<hash>.jpg        hh = first two hex chars of the hash
//
// One writer (append, run_gc) at a time; readers need no coordination and
// only ever see complete lines.
class FrameStore final : public FrameSink {
 public:
  explicit FrameStore(std::filesystem::path root,
                      std::shared_ptr<const Clock> clock = default_clock(),
                      StoreOptions options = {});
  ~FrameStore() override;

  FrameStore(const FrameStore&) = delete;
  FrameStore& operator=(const FrameStore&) = delete;

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path journal_path(Date date) const;
  std::filesystem::path blob_path(std::string_view hash) const;

  // Stores the frame's pixels once per distinct digest, then appends the
  // journal line. The blob is durable before the line that references it.
  FrameRecord append(const RawFrame& frame, const FrameMeta& meta, const CaptureConfig& cfg);

  FrameRecord write(const RawFrame& frame, const FrameMeta& meta,
                    const CaptureConfig& cfg) override {
    return append(frame, meta, cfg);
  }
  std::optional<Timestamp> last_timestamp() const override;

  // Throws Error(kCorruptJournal) only if a non-empty journal yields no
  // record at all.
  DaySegment read_day(Date date) const;

  // Days with a journal file, most recent first.
  std::vector<Date> list_dates() const;

  std::optional<BlobRef> find_blob(std::string_view hash) const;
  std::vector<std::uint8_t> read_blob(std::string_view hash) const;

  GcReport run_gc(const RetentionPolicy& policy, Date today);

  StoreStats stats() const;

  // Copies the day's journal and the blobs it references into another
  // store root.
  ExportReport export_day(Date date, const std::filesystem::path& dest) const;

 private:
  struct OpenJournal {
    Date date;
    int fd = -1;
  };

  void write_blob(const std::string& hash, const Image& image, double quality);
  void append_line(Date date, const std::string& line);
  std::optional<Timestamp> last_in_segment(Date date) const;
  void close_journal();

  std::filesystem::path root_;
  std::shared_ptr<const Clock> clock_;
  StoreOptions options_;

  mutable std::mutex writer_mu_;
  std::optional<OpenJournal> journal_;
  mutable std::map<Date, Timestamp> last_ts_;  // per-segment high-water mark
  std::optional<Timestamp> last_overall_;
  std::uint64_t tmp_counter_ = 0;
};

// Disk model: 0.56 bytes per pixel at quality 1.0, linear in quality.
inline constexpr double kBytesPerPixelPerQuality = 0.56;

struct DiskEstimate {
  double frames = 0;
  double bytes_per_frame = 0;
  double bytes = 0;
};

// Conservative: every tick is assumed to store a fresh image.
DiskEstimate estimate_disk(const CaptureConfig& cfg, int native_w, int native_h, double hours);

}  // namespace framelog
