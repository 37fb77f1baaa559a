#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "framelog/error.hpp"
#include "framelog/image.hpp"
#include "framelog/record.hpp"
#include "framelog/registry.hpp"
#include "framelog/time.hpp"

namespace framelog {

inline constexpr int kMaxIntervalSeconds = 60;
inline constexpr int kMinFrameDimension = 320;

struct CaptureConfig {
  int interval_s = 10;
  double scale = 1.0;
  double quality = 0.8;
  int retention_days = 10;
  bool capture_on_app_switch = true;
  std::filesystem::path storage_root;

  friend bool operator==(const CaptureConfig&, const CaptureConfig&) = default;
};

struct ConfigError {
  ErrorCode code;
  std::string message;
};

// nullopt when every bound holds for a source of the given native size.
std::optional<ConfigError> validate_config(const CaptureConfig& cfg, int native_w, int native_h);
// Throwing form of validate_config.
void require_valid_config(const CaptureConfig& cfg, int native_w, int native_h);

nlohmann::ordered_json config_to_json(const CaptureConfig& cfg);
// Members absent from j keep the value they have in base. Throws
// Error(kInvalidArgument) on ill-typed members.
CaptureConfig config_from_json(const nlohmann::ordered_json& j, CaptureConfig base = {});

struct RawFrame {
  Timestamp captured_at;
  Image image;  // already scaled
  int native_w = 0;
  int native_h = 0;
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::pair<int, int> native_size() const = 0;
  // nullopt means the source cannot deliver this tick.
  virtual std::optional<RawFrame> next_frame(double scale) = 0;
};

// Procedural test pattern for key `key` under `seed`; equal inputs give
// bit-identical images and distinct keys give distinct images.
Image synthetic_image(int width, int height, std::uint64_t seed, std::uint32_t key);

// Deterministic frame source: each tick draws the next entry of a script of
// frame keys. A nullopt entry simulates an unavailable tick. After the script
// runs out the last entry repeats (a static screen).
class SyntheticFrameSource final : public FrameSource {
 public:
  using Script = std::vector<std::optional<std::uint32_t>>;

  SyntheticFrameSource(int native_w, int native_h, Script script, std::uint64_t seed = 1);

  std::pair<int, int> native_size() const override { return {native_w_, native_h_}; }
  std::optional<RawFrame> next_frame(double scale) override;

  std::size_t frames_served() const;

 private:
  int native_w_;
  int native_h_;
  Script script_;
  std::uint64_t seed_;
  mutable std::mutex mu_;
  std::size_t position_ = 0;
  std::size_t served_ = 0;
  std::optional<std::pair<std::uint32_t, double>> cached_key_;
  Image cached_;
};

class MetadataProvider {
 public:
  virtual ~MetadataProvider() = default;
  // May block or throw; callers bound it with a deadline.
  virtual AppSnapshot snapshot() = 0;
};

class NullMetadataProvider final : public MetadataProvider {
 public:
  AppSnapshot snapshot() override { return AppSnapshot::none(); }
};

// Replays scripted snapshots in order, repeating the last one. A step can
// delay its answer (to model a hung provider) or fail.
class ScriptedMetadataProvider final : public MetadataProvider {
 public:
  struct Step {
    AppSnapshot snapshot;
    Millis delay{0};
    bool fail = false;
  };

  explicit ScriptedMetadataProvider(std::vector<Step> steps);
  static std::shared_ptr<ScriptedMetadataProvider> always(AppSnapshot snapshot);
  static std::shared_ptr<ScriptedMetadataProvider> failing();

  AppSnapshot snapshot() override;
  std::size_t calls() const;

 private:
  mutable std::mutex mu_;
  std::vector<Step> steps_;
  std::size_t next_ = 0;
  std::size_t calls_ = 0;
};

// Calls a provider under a deadline. A call that overruns is abandoned and
// reported as "no metadata"; while it is still outstanding further polls
// return "no metadata" immediately instead of piling up threads.
class MetadataPoller {
 public:
  MetadataPoller(std::shared_ptr<MetadataProvider> provider, Millis deadline);

  AppSnapshot poll();

  std::size_t timeouts() const { return timeouts_; }
  std::size_t failures() const { return failures_; }

 private:
  struct Call;

  std::shared_ptr<MetadataProvider> provider_;
  Millis deadline_;
  std::shared_ptr<Call> in_flight_;
  std::size_t timeouts_ = 0;
  std::size_t failures_ = 0;
};

AppSnapshot poll_frontmost(std::shared_ptr<MetadataProvider> provider, Millis deadline);

class FrameSink {
 public:
  virtual ~FrameSink() = default;
  // Throws Error(kEncodeFailure) for a dropped frame, anything else is fatal.
  virtual FrameRecord write(const RawFrame& frame, const FrameMeta& meta,
                            const CaptureConfig& cfg) = 0;
  // Latest timestamp already persisted, used to keep stamps increasing
  // across loop restarts.
  virtual std::optional<Timestamp> last_timestamp() const = 0;
};

using SteadyTime = std::chrono::steady_clock::time_point;

enum class Wake { kDeadline, kAppSwitch, kStop };

// Time and event source for the capture loop. wall_now stamps records;
// mono_now and wait_until drive the schedule.
class Timebase {
 public:
  virtual ~Timebase() = default;
  virtual Timestamp wall_now() = 0;
  virtual SteadyTime mono_now() = 0;
  // Returns at the deadline, on an app-switch notification, or on stop.
  virtual Wake wait_until(SteadyTime deadline, std::stop_token stop) = 0;
  virtual void notify_app_switch() = 0;
};

class RealTimebase final : public Timebase {
 public:
  explicit RealTimebase(std::shared_ptr<const Clock> clock = default_clock());

  Timestamp wall_now() override { return clock_->now(); }
  SteadyTime mono_now() override { return std::chrono::steady_clock::now(); }
  Wake wait_until(SteadyTime deadline, std::stop_token stop) override;
  void notify_app_switch() override;

 private:
  std::shared_ptr<const Clock> clock_;
  std::mutex mu_;
  std::condition_variable_any cv_;
  std::size_t pending_switches_ = 0;
};

// Simulated time: waits return instantly after advancing the clock. App
// switches fire at scripted offsets from the start; the run stops once
// `run_for` has elapsed. Wall-clock jumps can be injected to exercise the
// monotonic stamping rule.
class VirtualTimebase final : public Timebase {
 public:
  VirtualTimebase(Timestamp wall_start, Millis run_for, std::vector<Millis> app_switches = {});

  // From elapsed offset `at` onwards the wall clock is shifted by `delta`.
  void skew_wall_at(Millis at, Millis delta);

  Timestamp wall_now() override;
  SteadyTime mono_now() override;
  Wake wait_until(SteadyTime deadline, std::stop_token stop) override;
  void notify_app_switch() override;

  Millis elapsed() const { return elapsed_; }

 private:
  Timestamp wall_start_;
  Millis run_for_;
  std::vector<Millis> switches_;  // sorted, consumed from the front
  std::size_t next_switch_ = 0;
  std::size_t pending_switches_ = 0;
  std::vector<std::pair<Millis, Millis>> skews_;
  Millis elapsed_{0};
};

// Debounce policy: at most one app-switch capture per window, and an
// interval tick landing within the window after an app-switch capture is
// skipped.
class CaptureScheduler {
 public:
  explicit CaptureScheduler(Millis debounce = Millis{500}) : debounce_(debounce) {}

  bool accept_tick(SteadyTime t);
  bool accept_app_switch(SteadyTime t);

 private:
  Millis debounce_;
  std::optional<SteadyTime> last_switch_;
};

// Keeps emitted stamps strictly increasing even when the wall clock steps
// backwards: a regressed reading becomes last + 1 ms.
class MonotonicStamper {
 public:
  explicit MonotonicStamper(std::optional<Timestamp> last = std::nullopt) : last_(last) {}
  Timestamp stamp(Timestamp now);

 private:
  std::optional<Timestamp> last_;
};

struct LoopOptions {
  Millis metadata_deadline{250};
  Millis debounce{500};
};

struct LoopReport {
  std::size_t interval_records = 0;
  std::size_t app_switch_records = 0;
  std::size_t debounced_ticks = 0;
  std::size_t debounced_switches = 0;
  std::size_t ignored_switches = 0;  // app-switch capture disabled
  std::size_t missed_ticks = 0;      // schedule overran
  std::size_t source_unavailable = 0;
  std::size_t encode_failures = 0;
  std::size_t metadata_missing = 0;
  std::optional<ErrorCode> fatal_code;
  std::string fatal_message;

  std::size_t records() const { return interval_records + app_switch_records; }
};

class CaptureLoop {
 public:
  // Throws Error when the config is invalid for the source's resolution.
  CaptureLoop(CaptureConfig cfg, std::shared_ptr<FrameSource> source,
              std::shared_ptr<MetadataProvider> metadata, FrameSink& sink, Timebase& timebase,
              const CategoryRegistry& registry, LoopOptions options = {});

  // Runs until stop is requested, the timebase reports stop, or the sink
  // fails fatally (reported in fatal_code).
  LoopReport run(std::stop_token stop = {});

 private:
  bool capture(CaptureTrigger trigger, LoopReport& report);

  CaptureConfig cfg_;
  std::shared_ptr<FrameSource> source_;
  FrameSink& sink_;
  Timebase& timebase_;
  const CategoryRegistry& registry_;
  LoopOptions options_;
  MetadataPoller poller_;
  CaptureScheduler scheduler_;
  MonotonicStamper stamper_;
};

// Owns a capture loop on a background thread for the service and CLI.
class Recorder {
 public:
  struct Status {
    bool running = false;
    std::optional<LoopReport> last_report;  // from the most recent finished run
  };

  Recorder(std::shared_ptr<FrameSource> source, std::shared_ptr<MetadataProvider> metadata,
           FrameSink& sink, const CategoryRegistry& registry,
           std::shared_ptr<const Clock> clock = default_clock(), LoopOptions options = {});
  ~Recorder();

  Recorder(const Recorder&) = delete;
  Recorder& operator=(const Recorder&) = delete;

  // Throws Error on invalid config. Returns false if already running.
  bool start(const CaptureConfig& cfg);
  // Returns false if not running.
  bool stop();
  Status status() const;
  void notify_app_switch();

  std::pair<int, int> native_size() const { return source_->native_size(); }

 private:
  std::shared_ptr<FrameSource> source_;
  std::shared_ptr<MetadataProvider> metadata_;
  FrameSink& sink_;
  const CategoryRegistry& registry_;
  LoopOptions options_;
  RealTimebase timebase_;

  mutable std::mutex mu_;
  std::jthread thread_;
  bool running_ = false;
  std::optional<LoopReport> last_report_;
};

}  // namespace framelog
