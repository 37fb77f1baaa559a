#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "framelog/record.hpp"
#include "framelog/time.hpp"

namespace framelog {

class FrameStore;

inline constexpr std::array<int, 5> kPlaybackSpeeds{1, 2, 5, 10, 20};
inline constexpr int kDefaultPlaybackSpeed = 10;

bool is_allowed_speed(int fps) noexcept;

// Immutable snapshot of one day's records.
struct Timeline {
  Date date;
  std::vector<FrameRecord> frames;

  std::size_t length() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
};

struct TimelineCursor {
  std::size_t index = 0;
  bool playing = false;
  int speed = kDefaultPlaybackSpeed;  // frames per second
  std::size_t length = 0;             // of the timeline it belongs to

  friend bool operator==(const TimelineCursor&, const TimelineCursor&) = default;
};

enum class StepDirection { kPrev, kNext };

// Text the player shows beside the frame.
struct FrameView {
  std::string blob;
  std::string app_name;
  std::string label;
  std::string locator;
  std::string timestamp;  // RFC 3339
  AppCategory category = AppCategory::kNoMetadata;
};

// Cursor starts on the most recent frame, paused, at the default speed. An
// empty day has no cursor.
std::pair<Timeline, std::optional<TimelineCursor>> open_timeline(Timeline timeline);
std::pair<Timeline, std::optional<TimelineCursor>> open_timeline(const FrameStore& store,
                                                                 Date date);

// round(fraction * (length - 1)), half away from zero. fraction is clamped
// to [0, 1]. Throws Error(kEmptyTimeline) or Error(kInvalidArgument) on NaN.
std::size_t scrub(std::size_t length, double fraction);
std::size_t scrub(const Timeline& timeline, double fraction);

TimelineCursor step(TimelineCursor cursor, StepDirection direction);

// Advances floor(elapsed * speed) frames; reaching the last frame stops
// playback. A paused cursor is returned unchanged.
TimelineCursor tick_playback(TimelineCursor cursor, double elapsed_s);

// Throws Error(kInvalidArgument) for a speed outside kPlaybackSpeeds.
TimelineCursor set_speed(TimelineCursor cursor, int fps);

FrameView view_of(const FrameRecord& record);
// Throws Error(kIndexOutOfRange).
FrameView frame_at(const Timeline& timeline, std::size_t index);

nlohmann::ordered_json to_json(const TimelineCursor& cursor);
nlohmann::ordered_json to_json(const FrameView& view);

}  // namespace framelog
