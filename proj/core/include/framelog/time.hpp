#pragma once

#include <chrono>
#include <compare>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace framelog {

using Millis = std::chrono::milliseconds;
using UtcTime = std::chrono::sys_time<Millis>;

// A local calendar date. Ordered, and cheap to step by whole days.
class Date {
 public:
  Date() = default;
  explicit Date(std::chrono::sys_days days) : days_(days) {}
  Date(int year, unsigned month, unsigned day);

  // Parses YYYY-MM-DD; nullopt on anything else (including invalid dates).
  static std::optional<Date> parse(std::string_view text);

  std::string to_string() const;
  std::chrono::sys_days days() const { return days_; }

  Date operator+(int n) const { return Date{days_ + std::chrono::days{n}}; }
  Date operator-(int n) const { return Date{days_ - std::chrono::days{n}}; }
  int operator-(const Date& other) const {
    return static_cast<int>((days_ - other.days_).count());
  }

  auto operator<=>(const Date&) const = default;

 private:
  std::chrono::sys_days days_{};
};

// A wall-clock instant with the UTC offset that was in effect where it was
// taken. Ordering is by the instant only.
struct Timestamp {
  UtcTime utc{};
  std::chrono::minutes offset{0};

  // Civil date at the recorded offset.
  Date local_date() const;

  // RFC 3339 with millisecond precision and a numeric offset,
  // e.g. 2026-10-17T23:59:59.000+02:00.
  std::string to_rfc3339() const;
  static std::optional<Timestamp> parse_rfc3339(std::string_view text);

  // Builds a timestamp from local civil fields at the given offset.
  static Timestamp from_local(Date date, int hour, int minute, int second,
                              int millis = 0,
                              std::chrono::minutes offset = std::chrono::minutes{0});

  friend bool operator==(const Timestamp& a, const Timestamp& b) {
    return a.utc == b.utc && a.offset == b.offset;
  }
  friend auto operator<=>(const Timestamp& a, const Timestamp& b) {
    return a.utc <=> b.utc;
  }
};

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
  Date today() const { return now().local_date(); }
};

// System wall clock, stamped with the host's current UTC offset.
class SystemClock final : public Clock {
 public:
  Timestamp now() const override;
};

// Returns whatever it was last set to. Used by tests and tools that need a
// pinned "today".
class FixedClock final : public Clock {
 public:
  explicit FixedClock(Timestamp t) : now_(t) {}
  Timestamp now() const override { return now_; }
  void set(Timestamp t) { now_ = t; }

 private:
  Timestamp now_;
};

std::shared_ptr<const Clock> default_clock();

}  // namespace framelog
