#include "framelog/timeline.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "framelog/error.hpp"
#include "framelog/store.hpp"

namespace framelog {

bool is_allowed_speed(int fps) noexcept {
  return std::find(kPlaybackSpeeds.begin(), kPlaybackSpeeds.end(), fps) != kPlaybackSpeeds.end();
}

std::pair<Timeline, std::optional<TimelineCursor>> open_timeline(Timeline timeline) {
  if (timeline.empty()) return {std::move(timeline), std::nullopt};
  TimelineCursor cursor;
  cursor.length = timeline.length();
  cursor.index = cursor.length - 1;
  return {std::move(timeline), cursor};
}

std::pair<Timeline, std::optional<TimelineCursor>> open_timeline(const FrameStore& store,
                                                                 Date date) {
  auto segment = store.read_day(date);
  return open_timeline(Timeline{date, std::move(segment.records)});
}

std::size_t scrub(std::size_t length, double fraction) {
  if (length == 0) throw Error(ErrorCode::kEmptyTimeline, "cannot scrub an empty timeline");
  if (std::isnan(fraction)) throw Error(ErrorCode::kInvalidArgument, "scrub fraction is NaN");
  fraction = std::clamp(fraction, 0.0, 1.0);
  auto index = std::llround(fraction * static_cast<double>(length - 1));
  return std::min(static_cast<std::size_t>(index), length - 1);
}

std::size_t scrub(const Timeline& timeline, double fraction) {
  return scrub(timeline.length(), fraction);
}

TimelineCursor step(TimelineCursor cursor, StepDirection direction) {
  if (cursor.length == 0) return cursor;
  if (direction == StepDirection::kPrev) {
    if (cursor.index > 0) --cursor.index;
  } else if (cursor.index + 1 < cursor.length) {
    ++cursor.index;
  }
  return cursor;
}

TimelineCursor tick_playback(TimelineCursor cursor, double elapsed_s) {
  if (!cursor.playing || cursor.length == 0) return cursor;
  const std::size_t last = cursor.length - 1;
  if (elapsed_s > 0) {
    double advance = std::floor(elapsed_s * cursor.speed);
    double room = static_cast<double>(last - cursor.index);
    cursor.index += static_cast<std::size_t>(std::min(advance, room));
  }
  if (cursor.index >= last) {
    cursor.index = last;
    cursor.playing = false;
  }
  return cursor;
}

TimelineCursor set_speed(TimelineCursor cursor, int fps) {
  if (!is_allowed_speed(fps)) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("unsupported playback speed {}", fps));
  }
  cursor.speed = fps;
  return cursor;
}

FrameView view_of(const FrameRecord& record) {
  FrameView v;
  v.blob = record.blob;
  v.app_name = record.app_name;
  v.label = record.label;
  v.locator = locator_target(record.locator);
  v.timestamp = record.ts.to_rfc3339();
  v.category = record.category;
  return v;
}

FrameView frame_at(const Timeline& timeline, std::size_t index) {
  if (index >= timeline.length()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                fmt::format("frame {} outside timeline of length {}", index, timeline.length()));
  }
  return view_of(timeline.frames[index]);
}

nlohmann::ordered_json to_json(const TimelineCursor& cursor) {
  return nlohmann::ordered_json{{"index", cursor.index},
                                {"playing", cursor.playing},
                                {"speed", cursor.speed}};
}

nlohmann::ordered_json to_json(const FrameView& view) {
  return nlohmann::ordered_json{{"blob", view.blob},
                                {"app_name", view.app_name},
                                {"category", to_string(view.category)},
                                {"label", view.label},
                                {"locator", view.locator},
                                {"ts", view.timestamp}};
}

}  // namespace framelog
