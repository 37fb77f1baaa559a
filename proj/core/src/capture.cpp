#include "framelog/capture.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace framelog {

// ---------------------------------------------------------------------------
// Configuration

std::optional<ConfigError> validate_config(const CaptureConfig& cfg, int native_w,
                                           int native_h) {
  if (cfg.interval_s < 1) {
    return ConfigError{ErrorCode::kBadRange,
                       fmt::format("interval_s {} must be at least 1", cfg.interval_s)};
  }
  if (cfg.interval_s > kMaxIntervalSeconds) {
    return ConfigError{ErrorCode::kIntervalTooLong,
                       fmt::format("interval_s {} exceeds the {} s maximum", cfg.interval_s,
                                   kMaxIntervalSeconds)};
  }
  if (!(cfg.scale > 0.0) || cfg.scale > 1.0) {
    return ConfigError{ErrorCode::kBadRange, fmt::format("scale {} outside (0, 1]", cfg.scale)};
  }
  if (!(cfg.quality > 0.0) || cfg.quality > 1.0) {
    return ConfigError{ErrorCode::kBadRange,
                       fmt::format("quality {} outside (0, 1]", cfg.quality)};
  }
  if (cfg.retention_days < 1) {
    return ConfigError{ErrorCode::kBadRange,
                       fmt::format("retention_days {} must be at least 1", cfg.retention_days)};
  }
  if (native_w <= 0 || native_h <= 0) {
    return ConfigError{ErrorCode::kBadRange,
                       fmt::format("native resolution {}x{} is not positive", native_w, native_h)};
  }
  auto min_dim = std::lround(std::min(native_w, native_h) * cfg.scale);
  if (min_dim < kMinFrameDimension) {
    return ConfigError{ErrorCode::kFrameTooSmall,
                       fmt::format("scaled minimum dimension {} px is below {} px", min_dim,
                                   kMinFrameDimension)};
  }
  return std::nullopt;
}

void require_valid_config(const CaptureConfig& cfg, int native_w, int native_h) {
  if (auto err = validate_config(cfg, native_w, native_h)) {
    throw Error(err->code, err->message);
  }
}

nlohmann::ordered_json config_to_json(const CaptureConfig& cfg) {
  nlohmann::ordered_json j;
  j["interval_s"] = cfg.interval_s;
  j["scale"] = cfg.scale;
  j["quality"] = cfg.quality;
  j["retention_days"] = cfg.retention_days;
  j["capture_on_app_switch"] = cfg.capture_on_app_switch;
  j["storage_root"] = cfg.storage_root.string();
  return j;
}

CaptureConfig config_from_json(const nlohmann::ordered_json& j, CaptureConfig base) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "config must be a JSON object");
  auto bad = [](const char* key) {
    return Error(ErrorCode::kInvalidArgument, fmt::format("config field '{}' has wrong type", key));
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "interval_s") {
      if (!value.is_number_integer()) throw bad("interval_s");
      base.interval_s = value.get<int>();
    } else if (key == "scale") {
      if (!value.is_number()) throw bad("scale");
      base.scale = value.get<double>();
    } else if (key == "quality") {
      if (!value.is_number()) throw bad("quality");
      base.quality = value.get<double>();
    } else if (key == "retention_days") {
      if (!value.is_number_integer()) throw bad("retention_days");
      base.retention_days = value.get<int>();
    } else if (key == "capture_on_app_switch") {
      if (!value.is_boolean()) throw bad("capture_on_app_switch");
      base.capture_on_app_switch = value.get<bool>();
    } else if (key == "storage_root") {
      if (!value.is_string()) throw bad("storage_root");
      base.storage_root = value.get<std::string>();
    } else if (key != "schema") {
      throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown config field '{}'", key));
    }
  }
  return base;
}

// ---------------------------------------------------------------------------
// Synthetic frames

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Image synthetic_image(int width, int height, std::uint64_t seed, std::uint32_t key) {
  Image img;
  img.width = width;
  img.height = height;
  img.channels = 3;
  img.pixels.resize(img.expected_size());

  // 16x16 tiles of flat colour over a gradient, so the picture compresses
  // like a screen rather than like noise.
  const std::uint64_t base = splitmix64(seed ^ (static_cast<std::uint64_t>(key) << 32));
  const int tiles_x = (width + 15) / 16;
  std::vector<std::uint64_t> row_tiles(static_cast<std::size_t>(tiles_x));
  std::size_t i = 0;
  for (int y = 0; y < height; ++y) {
    if (y % 16 == 0) {
      for (int tx = 0; tx < tiles_x; ++tx) {
        row_tiles[static_cast<std::size_t>(tx)] =
            splitmix64(base + static_cast<std::uint64_t>(y / 16) * 0x10000ULL +
                       static_cast<std::uint64_t>(tx));
      }
    }
    for (int x = 0; x < width; ++x) {
      std::uint64_t t = row_tiles[static_cast<std::size_t>(x / 16)];
      auto grad = static_cast<std::uint8_t>((x + y) & 0x3f);
      img.pixels[i++] = static_cast<std::uint8_t>((t & 0xc0) | grad);
      img.pixels[i++] = static_cast<std::uint8_t>(((t >> 8) & 0xc0) | grad);
      img.pixels[i++] = static_cast<std::uint8_t>(((t >> 16) & 0xc0) | grad);
    }
  }
  return img;
}

SyntheticFrameSource::SyntheticFrameSource(int native_w, int native_h, Script script,
                                           std::uint64_t seed)
    : native_w_(native_w), native_h_(native_h), script_(std::move(script)), seed_(seed) {
  if (native_w <= 0 || native_h <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic source needs a positive resolution");
  }
  if (script_.empty()) script_.push_back(0u);
}

std::optional<RawFrame> SyntheticFrameSource::next_frame(double scale) {
  std::lock_guard lock(mu_);
  const auto& entry = script_[std::min(position_, script_.size() - 1)];
  if (position_ < script_.size()) ++position_;
  if (!entry) return std::nullopt;

  if (!cached_key_ || cached_key_->first != *entry || cached_key_->second != scale) {
    auto native = synthetic_image(native_w_, native_h_, seed_, *entry);
    cached_ = scale_nearest(native, scale);
    cached_key_ = std::pair{*entry, scale};
  }
  ++served_;
  RawFrame frame;
  frame.image = cached_;
  frame.native_w = native_w_;
  frame.native_h = native_h_;
  return frame;
}

std::size_t SyntheticFrameSource::frames_served() const {
  std::lock_guard lock(mu_);
  return served_;
}

// ---------------------------------------------------------------------------
// Metadata

ScriptedMetadataProvider::ScriptedMetadataProvider(std::vector<Step> steps)
    : steps_(std::move(steps)) {
  if (steps_.empty()) steps_.push_back(Step{});
}

std::shared_ptr<ScriptedMetadataProvider> ScriptedMetadataProvider::always(AppSnapshot snapshot) {
  return std::make_shared<ScriptedMetadataProvider>(std::vector<Step>{Step{std::move(snapshot)}});
}

std::shared_ptr<ScriptedMetadataProvider> ScriptedMetadataProvider::failing() {
  return std::make_shared<ScriptedMetadataProvider>(
      std::vector<Step>{Step{AppSnapshot::none(), Millis{0}, true}});
}

AppSnapshot ScriptedMetadataProvider::snapshot() {
  Step step;
  {
    std::lock_guard lock(mu_);
    step = steps_[std::min(next_, steps_.size() - 1)];
    if (next_ < steps_.size()) ++next_;
    ++calls_;
  }
  if (step.delay.count() > 0) std::this_thread::sleep_for(step.delay);
  if (step.fail) throw std::runtime_error("scripted metadata failure");
  return step.snapshot;
}

std::size_t ScriptedMetadataProvider::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

struct MetadataPoller::Call {
  std::mutex mu;
  std::condition_variable cv;
  bool done = false;
  bool failed = false;
  AppSnapshot result;
};

MetadataPoller::MetadataPoller(std::shared_ptr<MetadataProvider> provider, Millis deadline)
    : provider_(provider ? std::move(provider) : std::make_shared<NullMetadataProvider>()),
      deadline_(deadline) {}

AppSnapshot MetadataPoller::poll() {
  if (in_flight_) {
    std::lock_guard lock(in_flight_->mu);
    if (!in_flight_->done) {
      ++timeouts_;
      return AppSnapshot::none();
    }
  }
  auto call = std::make_shared<Call>();
  in_flight_ = call;
  std::thread([provider = provider_, call] {
    AppSnapshot result;
    bool failed = false;
    try {
      result = provider->snapshot();
    } catch (...) {
      failed = true;
    }
    std::lock_guard lock(call->mu);
    call->result = std::move(result);
    call->failed = failed;
    call->done = true;
    call->cv.notify_all();
  }).detach();

  std::unique_lock lock(call->mu);
  if (!call->cv.wait_for(lock, deadline_, [&] { return call->done; })) {
    ++timeouts_;
    return AppSnapshot::none();
  }
  if (call->failed) {
    ++failures_;
    return AppSnapshot::none();
  }
  return call->result;
}

AppSnapshot poll_frontmost(std::shared_ptr<MetadataProvider> provider, Millis deadline) {
  MetadataPoller poller(std::move(provider), deadline);
  return poller.poll();
}

// ---------------------------------------------------------------------------
// Timebases

RealTimebase::RealTimebase(std::shared_ptr<const Clock> clock) : clock_(std::move(clock)) {}

Wake RealTimebase::wait_until(SteadyTime deadline, std::stop_token stop) {
  std::unique_lock lock(mu_);
  bool woke = cv_.wait_until(lock, stop, deadline, [&] { return pending_switches_ > 0; });
  if (stop.stop_requested()) return Wake::kStop;
  if (woke) {
    --pending_switches_;
    return Wake::kAppSwitch;
  }
  return Wake::kDeadline;
}

void RealTimebase::notify_app_switch() {
  {
    std::lock_guard lock(mu_);
    ++pending_switches_;
  }
  cv_.notify_all();
}

VirtualTimebase::VirtualTimebase(Timestamp wall_start, Millis run_for,
                                 std::vector<Millis> app_switches)
    : wall_start_(wall_start), run_for_(run_for), switches_(std::move(app_switches)) {
  std::sort(switches_.begin(), switches_.end());
}

void VirtualTimebase::skew_wall_at(Millis at, Millis delta) {
  skews_.emplace_back(at, delta);
}

Timestamp VirtualTimebase::wall_now() {
  Timestamp t = wall_start_;
  t.utc += elapsed_;
  for (const auto& [at, delta] : skews_) {
    if (elapsed_ >= at) t.utc += delta;
  }
  return t;
}

SteadyTime VirtualTimebase::mono_now() { return SteadyTime{} + elapsed_; }

Wake VirtualTimebase::wait_until(SteadyTime deadline, std::stop_token stop) {
  if (stop.stop_requested()) return Wake::kStop;
  if (pending_switches_ > 0) {
    --pending_switches_;
    return Wake::kAppSwitch;
  }
  auto target = std::max(elapsed_, std::chrono::duration_cast<Millis>(deadline - SteadyTime{}));
  if (next_switch_ < switches_.size() && switches_[next_switch_] <= target &&
      switches_[next_switch_] < run_for_) {
    elapsed_ = std::max(elapsed_, switches_[next_switch_++]);
    return Wake::kAppSwitch;
  }
  if (target >= run_for_) {
    elapsed_ = run_for_;
    return Wake::kStop;
  }
  elapsed_ = target;
  return Wake::kDeadline;
}

void VirtualTimebase::notify_app_switch() { ++pending_switches_; }

// ---------------------------------------------------------------------------
// Scheduling

bool CaptureScheduler::accept_tick(SteadyTime t) {
  if (last_switch_ && t >= *last_switch_ && t - *last_switch_ < debounce_) return false;
  return true;
}

bool CaptureScheduler::accept_app_switch(SteadyTime t) {
  if (last_switch_ && t >= *last_switch_ && t - *last_switch_ < debounce_) return false;
  last_switch_ = t;
  return true;
}

Timestamp MonotonicStamper::stamp(Timestamp now) {
  if (last_ && now.utc <= last_->utc) now.utc = last_->utc + Millis{1};
  last_ = now;
  return now;
}

// ---------------------------------------------------------------------------
// Loop

CaptureLoop::CaptureLoop(CaptureConfig cfg, std::shared_ptr<FrameSource> source,
                         std::shared_ptr<MetadataProvider> metadata, FrameSink& sink,
                         Timebase& timebase, const CategoryRegistry& registry,
                         LoopOptions options)
    : cfg_(std::move(cfg)),
      source_(std::move(source)),
      sink_(sink),
      timebase_(timebase),
      registry_(registry),
      options_(options),
      poller_(std::move(metadata), options.metadata_deadline),
      scheduler_(options.debounce),
      stamper_(sink.last_timestamp()) {
  if (!source_) throw Error(ErrorCode::kInvalidArgument, "capture loop needs a frame source");
  auto [w, h] = source_->native_size();
  require_valid_config(cfg_, w, h);
}

bool CaptureLoop::capture(CaptureTrigger trigger, LoopReport& report) {
  auto frame = source_->next_frame(cfg_.scale);
  if (!frame) {
    ++report.source_unavailable;
    spdlog::warn("frame source unavailable; retrying next tick");
    return true;
  }
  frame->captured_at = stamper_.stamp(timebase_.wall_now());

  FrameMeta meta;
  meta.trigger = trigger;
  auto snap = poller_.poll();
  if (snap.available) {
    auto cls = registry_.classify(snap.app_id);
    meta.app_id = snap.app_id;
    meta.app_name = snap.app_name;
    meta.category = cls.category;
    meta.label = cls.label;
    meta.locator = extract_locator(cls.category, snap);
  } else {
    ++report.metadata_missing;
  }

  try {
    sink_.write(*frame, meta, cfg_);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kEncodeFailure) {
      ++report.encode_failures;
      spdlog::error("frame dropped: {}", e.what());
      return true;
    }
    report.fatal_code = e.code();
    report.fatal_message = e.what();
    spdlog::error("capture halted: {}", e.what());
    return false;
  } catch (const std::exception& e) {
    report.fatal_code = ErrorCode::kIo;
    report.fatal_message = e.what();
    spdlog::error("capture halted: {}", e.what());
    return false;
  }
  if (trigger == CaptureTrigger::kAppSwitch) {
    ++report.app_switch_records;
  } else {
    ++report.interval_records;
  }
  return true;
}

LoopReport CaptureLoop::run(std::stop_token stop) {
  LoopReport report;
  const auto interval = std::chrono::seconds{cfg_.interval_s};
  auto next_tick = timebase_.mono_now();
  for (;;) {
    auto wake = timebase_.wait_until(next_tick, stop);
    if (wake == Wake::kStop || stop.stop_requested()) break;

    if (wake == Wake::kAppSwitch) {
      if (!cfg_.capture_on_app_switch) {
        ++report.ignored_switches;
        continue;
      }
      if (!scheduler_.accept_app_switch(timebase_.mono_now())) {
        ++report.debounced_switches;
        continue;
      }
      if (!capture(CaptureTrigger::kAppSwitch, report)) break;
      continue;
    }

    if (scheduler_.accept_tick(timebase_.mono_now())) {
      if (!capture(CaptureTrigger::kInterval, report)) break;
    } else {
      ++report.debounced_ticks;
    }
    next_tick += interval;
    for (auto now = timebase_.mono_now(); next_tick <= now; next_tick += interval) {
      ++report.missed_ticks;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Recorder

Recorder::Recorder(std::shared_ptr<FrameSource> source, std::shared_ptr<MetadataProvider> metadata,
                   FrameSink& sink, const CategoryRegistry& registry,
                   std::shared_ptr<const Clock> clock, LoopOptions options)
    : source_(std::move(source)),
      metadata_(std::move(metadata)),
      sink_(sink),
      registry_(registry),
      options_(options),
      timebase_(std::move(clock)) {}

Recorder::~Recorder() { stop(); }

bool Recorder::start(const CaptureConfig& cfg) {
  std::lock_guard lock(mu_);
  if (running_) return false;
  if (thread_.joinable()) thread_.join();
  // Constructed here so config errors reach the caller synchronously.
  auto loop = std::make_shared<CaptureLoop>(cfg, source_, metadata_, sink_, timebase_, registry_,
                                            options_);
  running_ = true;
  thread_ = std::jthread([this, loop](std::stop_token stop) {
    auto report = loop->run(stop);
    std::lock_guard inner(mu_);
    last_report_ = std::move(report);
    running_ = false;
  });
  return true;
}

bool Recorder::stop() {
  std::jthread worker;
  bool was_running = false;
  {
    std::lock_guard lock(mu_);
    was_running = running_;
    worker = std::move(thread_);
  }
  if (worker.joinable()) {
    worker.request_stop();
    worker.join();
  }
  return was_running;
}

Recorder::Status Recorder::status() const {
  std::lock_guard lock(mu_);
  return Status{running_, last_report_};
}

void Recorder::notify_app_switch() { timebase_.notify_app_switch(); }

}  // namespace framelog
