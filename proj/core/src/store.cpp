#include "framelog/store.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_set>

#include <fcntl.h>
#include <unistd.h>

#include <fmt/format.h>

#include "framelog/error.hpp"

namespace fs = std::filesystem;

namespace framelog {

namespace {

constexpr std::string_view kJournalDir = "journal";
constexpr std::string_view kBlobDir = "blobs";
constexpr std::string_view kJournalExt = ".jsonl";
constexpr std::string_view kBlobExt = ".jpg";

[[noreturn]] void throw_errno(std::string_view what, const fs::path& path, int err) {
  auto code = (err == ENOSPC || err == EDQUOT) ? ErrorCode::kStorageFull : ErrorCode::kIo;
  throw Error(code, fmt::format("{} {}: {}", what, path.string(), std::strerror(err)));
}

// RAII file descriptor.
class Fd {
 public:
  explicit Fd(int fd = -1) : fd_(fd) {}
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }
  int release() { return std::exchange(fd_, -1); }

 private:
  int fd_;
};

void write_all(int fd, const void* data, std::size_t size, const fs::path& path) {
  auto* p = static_cast<const char*>(data);
  while (size > 0) {
    auto n = ::write(fd, p, size);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("write", path, errno);
    }
    p += n;
    size -= static_cast<std::size_t>(n);
  }
}

void sync_dir(const fs::path& dir) {
  Fd fd(::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC));
  if (fd.get() >= 0) ::fsync(fd.get());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::optional<Date> journal_date(const fs::path& path) {
  if (path.extension() != kJournalExt) return std::nullopt;
  return Date::parse(path.stem().string());
}

struct ParsedJournal {
  std::vector<FrameRecord> records;
  std::size_t skipped = 0;
  bool has_content = false;
};

// Lines must be LF-terminated, parse, belong to `date` and advance the
// timestamp; everything else is skipped and counted.
ParsedJournal parse_journal(std::string_view text, Date date) {
  ParsedJournal out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    bool terminated = nl != std::string_view::npos;
    auto line = text.substr(pos, terminated ? nl - pos : std::string_view::npos);
    pos = terminated ? nl + 1 : text.size();

    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    out.has_content = true;
    if (!terminated) {
      ++out.skipped;
      continue;
    }
    auto record = parse_record(line);
    if (!record || record->ts.local_date() != date ||
        (!out.records.empty() && !(out.records.back().ts.utc < record->ts.utc))) {
      ++out.skipped;
      continue;
    }
    out.records.push_back(std::move(*record));
  }
  return out;
}

std::uint64_t file_size_or_zero(const fs::path& path) {
  std::error_code ec;
  auto size = fs::file_size(path, ec);
  return ec ? 0 : size;
}

}  // namespace

nlohmann::ordered_json to_json(const GcReport& report) {
  nlohmann::ordered_json j;
  j["segments_deleted"] = report.segments_deleted;
  j["blobs_deleted"] = report.blobs_deleted;
  j["bytes_freed"] = report.bytes_freed;
  j["failures"] = report.failures;
  return j;
}

nlohmann::ordered_json to_json(const StoreStats& stats) {
  nlohmann::ordered_json j;
  j["blob_count"] = stats.blob_count;
  j["journal_days"] = stats.journal_days;
  j["total_bytes"] = stats.total_bytes;
  j["journal_bytes"] = stats.journal_bytes;
  j["journal_lines"] = stats.journal_lines;
  j["dedup_ratio"] = stats.dedup_ratio;
  return j;
}

FrameStore::FrameStore(fs::path root, std::shared_ptr<const Clock> clock, StoreOptions options)
    : root_(std::move(root)), clock_(std::move(clock)), options_(options) {
  std::error_code ec;
  fs::create_directories(root_ / kJournalDir, ec);
  if (!ec) fs::create_directories(root_ / kBlobDir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo,
                fmt::format("cannot initialise store at {}: {}", root_.string(), ec.message()));
  }
}

FrameStore::~FrameStore() { close_journal(); }

fs::path FrameStore::journal_path(Date date) const {
  return root_ / kJournalDir / (date.to_string() + std::string(kJournalExt));
}

fs::path FrameStore::blob_path(std::string_view hash) const {
  return root_ / kBlobDir / std::string(hash.substr(0, 2)) /
         (std::string(hash) + std::string(kBlobExt));
}

void FrameStore::close_journal() {
  if (journal_) {
    ::close(journal_->fd);
    journal_.reset();
  }
}

void FrameStore::write_blob(const std::string& hash, const Image& image, double quality) {
  auto final_path = blob_path(hash);
  if (fs::exists(final_path)) return;

  auto bytes = encode_jpeg(image, quality);
  auto dir = final_path.parent_path();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, fmt::format("mkdir {}: {}", dir.string(), ec.message()));

  auto tmp = dir / fmt::format("{}.tmp.{}.{}", hash, ::getpid(), tmp_counter_++);
  {
    Fd fd(::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600));
    if (fd.get() < 0) throw_errno("open", tmp, errno);
    try {
      write_all(fd.get(), bytes.data(), bytes.size(), tmp);
      if (options_.durable && ::fsync(fd.get()) != 0) throw_errno("fsync", tmp, errno);
    } catch (...) {
      ::unlink(tmp.c_str());
      throw;
    }
  }
  if (::rename(tmp.c_str(), final_path.c_str()) != 0) {
    int err = errno;
    ::unlink(tmp.c_str());
    throw_errno("rename", final_path, err);
  }
  if (options_.durable) sync_dir(dir);
}

void FrameStore::append_line(Date date, const std::string& line) {
  if (!journal_ || journal_->date != date) {
    close_journal();
    auto path = journal_path(date);
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0600);
    if (fd < 0) throw_errno("open", path, errno);
    journal_ = OpenJournal{date, fd};
    if (options_.durable) sync_dir(path.parent_path());
  }
  auto path = journal_path(date);
  write_all(journal_->fd, line.data(), line.size(), path);
  if (options_.durable && ::fdatasync(journal_->fd) != 0) throw_errno("fdatasync", path, errno);
}

std::optional<Timestamp> FrameStore::last_in_segment(Date date) const {
  if (auto it = last_ts_.find(date); it != last_ts_.end()) return it->second;
  auto parsed = parse_journal(read_file(journal_path(date)), date);
  if (parsed.records.empty()) return std::nullopt;
  last_ts_[date] = parsed.records.back().ts;
  return parsed.records.back().ts;
}

FrameRecord FrameStore::append(const RawFrame& frame, const FrameMeta& meta,
                               const CaptureConfig& cfg) {
  if (!frame.image.valid()) {
    throw Error(ErrorCode::kEncodeFailure, "frame has an invalid pixel buffer");
  }
  FrameRecord record;
  record.ts = frame.captured_at;
  record.blob = pixel_digest(frame.image);
  record.w = frame.image.width;
  record.h = frame.image.height;
  record.app_id = meta.app_id;
  record.app_name = meta.app_name;
  record.category = meta.category;
  record.label = meta.label;
  record.locator = meta.locator;
  record.trigger = meta.trigger;

  const Date date = record.ts.local_date();
  std::lock_guard lock(writer_mu_);
  if (auto last = last_in_segment(date); last && !(last->utc < record.ts.utc)) {
    throw Error(ErrorCode::kNonMonotonicTimestamp,
                fmt::format("timestamp {} does not follow {} in segment {}",
                            record.ts.to_rfc3339(), last->to_rfc3339(), date.to_string()));
  }

  write_blob(record.blob, frame.image, cfg.quality);
  append_line(date, serialize_record(record) + '\n');

  last_ts_[date] = record.ts;
  if (!last_overall_ || last_overall_->utc < record.ts.utc) last_overall_ = record.ts;
  return record;
}

std::optional<Timestamp> FrameStore::last_timestamp() const {
  std::lock_guard lock(writer_mu_);
  if (last_overall_) return last_overall_;
  auto dates = list_dates();
  if (dates.empty()) return std::nullopt;
  return last_in_segment(dates.front());
}

DaySegment FrameStore::read_day(Date date) const {
  DaySegment segment;
  segment.date = date;
  segment.sealed = date < clock_->today();
  auto path = journal_path(date);
  if (!fs::exists(path)) return segment;

  auto parsed = parse_journal(read_file(path), date);
  if (parsed.has_content && parsed.records.empty()) {
    throw Error(ErrorCode::kCorruptJournal,
                fmt::format("journal {} has no readable record", path.string()));
  }
  segment.records = std::move(parsed.records);
  segment.skipped_count = parsed.skipped;
  return segment;
}

std::vector<Date> FrameStore::list_dates() const {
  std::vector<Date> dates;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root_ / kJournalDir, ec)) {
    if (!entry.is_regular_file()) continue;
    if (auto d = journal_date(entry.path())) dates.push_back(*d);
  }
  std::sort(dates.begin(), dates.end(), std::greater<>());
  return dates;
}

std::optional<BlobRef> FrameStore::find_blob(std::string_view hash) const {
  if (!is_blob_hash(hash)) return std::nullopt;
  std::error_code ec;
  auto size = fs::file_size(blob_path(hash), ec);
  if (ec) return std::nullopt;
  return BlobRef{std::string(hash), size};
}

std::vector<std::uint8_t> FrameStore::read_blob(std::string_view hash) const {
  if (!is_blob_hash(hash)) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("'{}' is not a blob hash", hash));
  }
  auto path = blob_path(hash);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, fmt::format("blob {} not found", hash));
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

GcReport FrameStore::run_gc(const RetentionPolicy& policy, Date today) {
  if (policy.retention_days < 1) {
    throw Error(ErrorCode::kBadRange, "retention_days must be at least 1");
  }
  GcReport report;
  const Date oldest_kept = today - (policy.retention_days - 1);

  std::lock_guard lock(writer_mu_);
  std::unordered_set<std::string> referenced;
  for (const auto& date : list_dates()) {
    auto path = journal_path(date);
    if (date < oldest_kept) {
      if (journal_ && journal_->date == date) close_journal();
      auto size = file_size_or_zero(path);
      std::error_code ec;
      if (fs::remove(path, ec)) {
        ++report.segments_deleted;
        report.bytes_freed += size;
        last_ts_.erase(date);
        continue;
      }
      report.failures.push_back(path.string());
    }
    // Survivors (including ones we failed to delete) pin their blobs.
    auto parsed = parse_journal(read_file(path), date);
    for (const auto& r : parsed.records) referenced.insert(r.blob);
  }

  std::error_code ec;
  for (const auto& shard : fs::directory_iterator(root_ / kBlobDir, ec)) {
    if (!shard.is_directory()) continue;
    std::error_code inner;
    for (const auto& entry : fs::directory_iterator(shard.path(), inner)) {
      const auto& path = entry.path();
      if (path.extension() != kBlobExt) continue;
      auto hash = path.stem().string();
      if (!is_blob_hash(hash) || referenced.contains(hash)) continue;
      auto size = file_size_or_zero(path);
      std::error_code rm;
      if (fs::remove(path, rm)) {
        ++report.blobs_deleted;
        report.bytes_freed += size;
      } else {
        report.failures.push_back(path.string());
      }
    }
  }
  return report;
}

StoreStats FrameStore::stats() const {
  StoreStats s;
  std::error_code ec;
  for (const auto& entry : fs::recursive_directory_iterator(root_ / kBlobDir, ec)) {
    if (!entry.is_regular_file() || entry.path().extension() != kBlobExt) continue;
    ++s.blob_count;
    s.total_bytes += file_size_or_zero(entry.path());
  }
  for (const auto& date : list_dates()) {
    auto path = journal_path(date);
    auto text = read_file(path);
    ++s.journal_days;
    s.journal_bytes += text.size();
    std::size_t start = 0;
    for (auto nl = text.find('\n'); nl != std::string::npos; nl = text.find('\n', start)) {
      if (nl > start) ++s.journal_lines;
      start = nl + 1;
    }
  }
  if (s.blob_count > 0) {
    s.dedup_ratio = static_cast<double>(s.journal_lines) / static_cast<double>(s.blob_count);
  }
  return s;
}

ExportReport FrameStore::export_day(Date date, const fs::path& dest) const {
  auto src = journal_path(date);
  if (!fs::exists(src)) {
    throw Error(ErrorCode::kNotFound, fmt::format("no journal for {}", date.to_string()));
  }
  auto segment = read_day(date);
  FrameStore target(dest, clock_, options_);
  ExportReport report;

  std::error_code ec;
  std::unordered_set<std::string> copied;
  for (const auto& r : segment.records) {
    ++report.records;
    if (!copied.insert(r.blob).second) continue;
    auto to = target.blob_path(r.blob);
    fs::create_directories(to.parent_path(), ec);
    fs::copy_file(blob_path(r.blob), to, fs::copy_options::overwrite_existing, ec);
    if (ec) {
      throw Error(ErrorCode::kIo, fmt::format("export blob {}: {}", r.blob, ec.message()));
    }
    ++report.blobs;
    report.bytes += file_size_or_zero(to);
  }
  auto to = target.journal_path(date);
  fs::copy_file(src, to, fs::copy_options::overwrite_existing, ec);
  if (ec) throw Error(ErrorCode::kIo, fmt::format("export journal: {}", ec.message()));
  report.bytes += file_size_or_zero(to);
  return report;
}

DiskEstimate estimate_disk(const CaptureConfig& cfg, int native_w, int native_h, double hours) {
  DiskEstimate e;
  e.frames = hours * 3600.0 / static_cast<double>(cfg.interval_s);
  e.bytes_per_frame = kBytesPerPixelPerQuality * cfg.quality * (native_w * cfg.scale) *
                      (native_h * cfg.scale);
  e.bytes = e.frames * e.bytes_per_frame;
  return e;
}

}  // namespace framelog
