#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "cohortnet/error.hpp"

namespace cohortnet {

using Timestamp = std::int64_t;  // UTC epoch seconds

inline constexpr Timestamp kSecondsPerDay = 86400;

// Calendar month, ordered by calendar order.
struct MonthKey {
  int year = 1970;
  int month = 1;  // 1..12

  friend constexpr auto operator<=>(const MonthKey&, const MonthKey&) = default;

  // Months since year 0; consecutive months differ by one.
  [[nodiscard]] constexpr std::int64_t index() const {
    return static_cast<std::int64_t>(year) * 12 + (month - 1);
  }

  [[nodiscard]] static constexpr MonthKey from_index(std::int64_t idx) {
    std::int64_t y = idx / 12;
    std::int64_t m = idx % 12;
    if (m < 0) {
      m += 12;
      --y;
    }
    return MonthKey{static_cast<int>(y), static_cast<int>(m) + 1};
  }

  [[nodiscard]] constexpr MonthKey plus(std::int64_t months) const {
    return from_index(index() + months);
  }

  [[nodiscard]] std::string str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
  }
};

// Signed whole-month difference b - a.
[[nodiscard]] constexpr std::int64_t months_between(const MonthKey& a, const MonthKey& b) {
  return b.index() - a.index();
}

// Day number (days since 1970-01-01), floor semantics for negative instants.
[[nodiscard]] constexpr std::int64_t day_of(Timestamp t) {
  std::int64_t d = t / kSecondsPerDay;
  if (t % kSecondsPerDay < 0) --d;
  return d;
}

[[nodiscard]] inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  using namespace std::chrono;
  const sys_days sd = year_month_day{year{y}, month{m}, day{d}};
  return sd.time_since_epoch().count();
}

[[nodiscard]] inline MonthKey month_of_day(std::int64_t day) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day}}};
  return MonthKey{static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month()))};
}

// UTC calendar month containing the instant.
[[nodiscard]] inline MonthKey month_of(Timestamp t) { return month_of_day(day_of(t)); }

[[nodiscard]] inline std::int64_t first_day(const MonthKey& m) {
  return days_from_civil(m.year, static_cast<unsigned>(m.month), 1);
}

[[nodiscard]] inline int days_in(const MonthKey& m) {
  return static_cast<int>(first_day(m.plus(1)) - first_day(m));
}

[[nodiscard]] inline Timestamp month_start(const MonthKey& m) { return first_day(m) * kSecondsPerDay; }

namespace detail {

inline bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return ec == std::errc{} && p == s.data() + pos + len;
}

inline bool valid_date(int y, int m, int d) {
  using namespace std::chrono;
  return m >= 1 && m <= 12 && d >= 1 &&
         year_month_day{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}}.ok();
}

}  // namespace detail

// Parses "YYYY-MM-DD" into a day number.
[[nodiscard]] inline std::optional<std::int64_t> parse_date(std::string_view s) {
  int y = 0, m = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!detail::read_int(s, 0, 4, y) || !detail::read_int(s, 5, 2, m) || !detail::read_int(s, 8, 2, d))
    return std::nullopt;
  if (!detail::valid_date(y, m, d)) return std::nullopt;
  return days_from_civil(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

// Parses "YYYY-MM".
[[nodiscard]] inline std::optional<MonthKey> parse_month(std::string_view s) {
  int y = 0, m = 0;
  if (s.size() != 7 || s[4] != '-') return std::nullopt;
  if (!detail::read_int(s, 0, 4, y) || !detail::read_int(s, 5, 2, m) || m < 1 || m > 12) return std::nullopt;
  return MonthKey{y, m};
}

// ISO-8601 instant: date, optional "THH:MM[:SS[.fff]]", optional "Z" or "+HH:MM"/"-HH:MM".
// Fractional seconds are truncated.
[[nodiscard]] inline std::optional<Timestamp> parse_iso8601(std::string_view s) {
  if (s.size() < 10) return std::nullopt;
  auto day = parse_date(s.substr(0, 10));
  if (!day) return std::nullopt;
  Timestamp t = *day * kSecondsPerDay;
  std::size_t pos = 10;
  if (pos == s.size()) return t;
  if (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' ') return std::nullopt;
  ++pos;
  int hh = 0, mm = 0, ss = 0;
  if (!detail::read_int(s, pos, 2, hh) || pos + 2 >= s.size() || s[pos + 2] != ':' ||
      !detail::read_int(s, pos + 3, 2, mm))
    return std::nullopt;
  pos += 5;
  if (pos < s.size() && s[pos] == ':') {
    if (!detail::read_int(s, pos + 1, 2, ss)) return std::nullopt;
    pos += 3;
    if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
      ++pos;
      const std::size_t start = pos;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
      if (pos == start) return std::nullopt;
    }
  }
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  t += hh * 3600 + mm * 60 + ss;
  if (pos == s.size()) return t;
  if ((s[pos] == 'Z' || s[pos] == 'z') && pos + 1 == s.size()) return t;
  if (s[pos] == '+' || s[pos] == '-') {
    const int sign = s[pos] == '+' ? 1 : -1;
    int oh = 0, om = 0;
    if (!detail::read_int(s, pos + 1, 2, oh)) return std::nullopt;
    std::size_t next = pos + 3;
    if (next < s.size() && s[next] == ':') ++next;
    if (!detail::read_int(s, next, 2, om) || next + 2 != s.size() || oh > 23 || om > 59)
      return std::nullopt;
    return t - sign * (oh * 3600 + om * 60);
  }
  return std::nullopt;
}

[[nodiscard]] inline std::string format_date(std::int64_t day) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace cohortnet
