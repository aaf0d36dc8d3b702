#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <ranges>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cohortnet/error.hpp"
#include "cohortnet/events.hpp"
#include "cohortnet/month.hpp"

namespace cohortnet {

struct BanEvent {
  std::string label;
  std::int64_t day = 0;  // days since epoch (UTC)

  [[nodiscard]] Timestamp start() const { return day * kSecondsPerDay; }
  [[nodiscard]] MonthKey month() const { return month_of_day(day); }
};

// Ordered ban events; consecutive entries bound the cohort periods.
class BanCalendar {
 public:
  BanCalendar() = default;

  explicit BanCalendar(std::vector<BanEvent> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 1; i < entries_.size(); ++i) {
      if (entries_[i].day <= entries_[i - 1].day)
        throw DataError("ban calendar dates must be strictly increasing ('" + entries_[i].label + "')");
    }
  }

  [[nodiscard]] const std::vector<BanEvent>& entries() const { return entries_; }
  [[nodiscard]] bool empty() const { return entries_.empty(); }

  // Index of the ban whose period contains `m` (the ban month opens its period), or nullopt
  // when `m` precedes the first ban.
  [[nodiscard]] std::optional<std::size_t> period_of(const MonthKey& m) const {
    std::optional<std::size_t> found;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].month() <= m) found = i;
    }
    return found;
  }

 private:
  std::vector<BanEvent> entries_;
};

// The four Reddit ban waves used as the default calendar.
[[nodiscard]] inline BanCalendar default_ban_calendar() {
  return BanCalendar({{"FPH", days_from_civil(2015, 6, 10)},
                      {"PG", days_from_civil(2016, 11, 23)},
                      {"GA", days_from_civil(2018, 9, 12)},
                      {"TD", days_from_civil(2020, 6, 29)}});
}

enum class CohortLabel { newcomer, existing };

[[nodiscard]] inline std::string_view to_string(CohortLabel l) {
  return l == CohortLabel::newcomer ? "newcomer" : "existing";
}

struct UserCommunity {
  std::string user_id;
  std::string community_id;

  friend bool operator==(const UserCommunity&, const UserCommunity&) = default;
};

struct UserCommunityHash {
  std::size_t operator()(const UserCommunity& k) const noexcept {
    const std::size_t a = std::hash<std::string>{}(k.user_id);
    const std::size_t b = std::hash<std::string>{}(k.community_id);
    return a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  }
};

// First activity time of every (user, community) pair.
class FirstSeenIndex {
 public:
  void observe(const std::string& user, const std::string& community, Timestamp t) {
    auto [it, inserted] = first_.try_emplace(UserCommunity{user, community}, t);
    if (!inserted) it->second = std::min(it->second, t);
  }

  [[nodiscard]] std::optional<Timestamp> find(const std::string& user, const std::string& community) const {
    auto it = first_.find(UserCommunity{user, community});
    if (it == first_.end()) return std::nullopt;
    return it->second;
  }

  [[nodiscard]] Timestamp at(const std::string& user, const std::string& community) const {
    auto t = find(user, community);
    if (!t) throw DataError("unknown user '" + user + "' in community '" + community + "'");
    return *t;
  }

  [[nodiscard]] std::size_t size() const { return first_.size(); }
  [[nodiscard]] bool empty() const { return first_.empty(); }

 private:
  std::unordered_map<UserCommunity, Timestamp, UserCommunityHash> first_;
};

template <std::ranges::input_range R>
[[nodiscard]] FirstSeenIndex build_first_seen(const R& events) {
  FirstSeenIndex index;
  for (const auto& item : events) {
    const InteractionEvent& ev = as_event(item);
    index.observe(ev.user_id, ev.community_id, ev.timestamp);
  }
  return index;
}

// Retrospective cohort label from a pre-looked-up first-activity time.
// Newcomer iff first activity falls on or after the most recent ban at or before `month`.
[[nodiscard]] inline std::optional<CohortLabel> retrospective_label(Timestamp first_seen, const MonthKey& month,
                                                                    const BanCalendar& calendar) {
  if (first_seen >= month_start(month.plus(1)))
    throw std::invalid_argument("first activity after the labeled month");
  const auto period = calendar.period_of(month);
  if (!period) return std::nullopt;
  return first_seen >= calendar.entries()[*period].start() ? CohortLabel::newcomer : CohortLabel::existing;
}

// Null when `month` precedes the first calendar entry.
[[nodiscard]] inline std::optional<CohortLabel> label_retrospective(const std::string& user,
                                                                    const std::string& community,
                                                                    const MonthKey& month,
                                                                    const BanCalendar& calendar,
                                                                    const FirstSeenIndex& index) {
  return retrospective_label(index.at(user, community), month, calendar);
}

[[nodiscard]] inline CohortLabel rolling_label(Timestamp first_seen, const MonthKey& month, int window_months) {
  const std::int64_t tenure = months_between(month_of(first_seen), month);
  if (tenure < 0) throw std::invalid_argument("first activity after the labeled month");
  return tenure < window_months ? CohortLabel::newcomer : CohortLabel::existing;
}

// Newcomer while fewer than `window_months` whole calendar months have passed since first activity.
[[nodiscard]] inline CohortLabel label_rolling(const std::string& user, const std::string& community,
                                               const MonthKey& month, const FirstSeenIndex& index,
                                               int window_months = 6) {
  return rolling_label(index.at(user, community), month, window_months);
}

enum class CohortScheme { retrospective, rolling };

struct CohortPolicy {
  CohortScheme scheme = CohortScheme::retrospective;
  BanCalendar calendar = default_ban_calendar();
  int window_months = 6;

  [[nodiscard]] std::optional<CohortLabel> label(Timestamp first_seen, const MonthKey& month) const {
    if (scheme == CohortScheme::rolling) return rolling_label(first_seen, month, window_months);
    return retrospective_label(first_seen, month, calendar);
  }
};

}  // namespace cohortnet
