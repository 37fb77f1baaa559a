#include "framelog/time.hpp"

#include <charconv>
#include <ctime>

#include <fmt/format.h>

namespace framelog {

namespace {

using namespace std::chrono;

bool parse_fixed(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
  }
  auto res = std::from_chars(text.data() + pos, text.data() + pos + len, out);
  return res.ec == std::errc{};
}

std::optional<year_month_day> parse_ymd(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!parse_fixed(text, 0, 4, y) || !parse_fixed(text, 5, 2, m) ||
      !parse_fixed(text, 8, 2, d)) {
    return std::nullopt;
  }
  year_month_day ymd{year{y}, month{static_cast<unsigned>(m)},
                     day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

}  // namespace

Date::Date(int y, unsigned m, unsigned d)
    : days_(sys_days{year{y} / month{m} / day{d}}) {}

std::optional<Date> Date::parse(std::string_view text) {
  if (text.size() != 10) return std::nullopt;
  auto ymd = parse_ymd(text);
  if (!ymd) return std::nullopt;
  return Date{sys_days{*ymd}};
}

std::string Date::to_string() const {
  year_month_day ymd{days_};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()));
}

Date Timestamp::local_date() const {
  return Date{floor<days>(utc + offset)};
}

std::string Timestamp::to_rfc3339() const {
  auto local = utc + offset;
  auto day_start = floor<days>(local);
  year_month_day ymd{day_start};
  hh_mm_ss<Millis> tod{local - day_start};
  auto off = offset.count();
  char sign = off < 0 ? '-' : '+';
  if (off < 0) off = -off;
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}.{:03d}{}{:02d}:{:02d}",
                     static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()), tod.hours().count(),
                     tod.minutes().count(), tod.seconds().count(),
                     tod.subseconds().count(), sign, off / 60, off % 60);
}

std::optional<Timestamp> Timestamp::parse_rfc3339(std::string_view text) {
  auto ymd = parse_ymd(text);
  if (!ymd || text.size() < 20) return std::nullopt;
  if (text[10] != 'T' && text[10] != 't') return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!parse_fixed(text, 11, 2, hh) || text[13] != ':' ||
      !parse_fixed(text, 14, 2, mm) || text[16] != ':' ||
      !parse_fixed(text, 17, 2, ss)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;

  std::size_t pos = 19;
  int millis = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    while (pos + digits < text.size() && text[pos + digits] >= '0' &&
           text[pos + digits] <= '9') {
      ++digits;
    }
    if (digits == 0) return std::nullopt;
    // Sub-millisecond digits are truncated.
    int scale = 100;
    for (std::size_t i = 0; i < digits && i < 3; ++i) {
      millis += (text[pos + i] - '0') * scale;
      scale /= 10;
    }
    pos += digits;
  }

  minutes offset{0};
  if (pos >= text.size()) return std::nullopt;
  if (text[pos] == 'Z' || text[pos] == 'z') {
    ++pos;
  } else if (text[pos] == '+' || text[pos] == '-') {
    int oh = 0, om = 0;
    if (!parse_fixed(text, pos + 1, 2, oh) || pos + 3 >= text.size() ||
        text[pos + 3] != ':' || !parse_fixed(text, pos + 4, 2, om)) {
      return std::nullopt;
    }
    if (oh > 23 || om > 59) return std::nullopt;
    offset = minutes{oh * 60 + om};
    if (text[pos] == '-') offset = -offset;
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != text.size()) return std::nullopt;

  auto local = sys_days{*ymd} + hours{hh} + minutes{mm} + seconds{ss} + Millis{millis};
  return Timestamp{UtcTime{local - offset}, offset};
}

Timestamp Timestamp::from_local(Date date, int hour, int minute, int second, int millis,
                                std::chrono::minutes offset) {
  auto local = date.days() + hours{hour} + minutes{minute} + seconds{second} +
               Millis{millis};
  return Timestamp{UtcTime{local - offset}, offset};
}

Timestamp SystemClock::now() const {
  auto now = floor<Millis>(std::chrono::system_clock::now());
  std::time_t secs = std::chrono::system_clock::to_time_t(
      time_point_cast<std::chrono::system_clock::duration>(now));
  std::tm tm{};
  localtime_r(&secs, &tm);
  return Timestamp{now, minutes{tm.tm_gmtoff / 60}};
}

std::shared_ptr<const Clock> default_clock() {
  static const auto clock = std::make_shared<const SystemClock>();
  return clock;
}

}  // namespace framelog
