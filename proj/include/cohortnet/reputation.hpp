#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cohortnet/error.hpp"
#include "cohortnet/month.hpp"

namespace cohortnet {

// Dynamic interaction-based reputation (DIBRM) parameters.
struct ReputationParams {
  double base_increment = 1.0;         // I_b
  double streak_gain = 2.0;            // alpha
  double forgetting = 0.96;            // beta, applied once per elapsed decay unit
  Timestamp gap_threshold = kSecondsPerDay;  // a longer gap resets the streak
  Timestamp decay_unit = kSecondsPerDay;

  void validate() const {
    if (!(base_increment > 0.0)) throw std::invalid_argument("base_increment must be > 0");
    if (!(streak_gain >= 0.0)) throw std::invalid_argument("streak_gain must be >= 0");
    if (!(forgetting > 0.0 && forgetting < 1.0)) throw std::invalid_argument("forgetting must lie in (0, 1)");
    if (gap_threshold < 0) throw std::invalid_argument("gap_threshold must be >= 0");
    if (decay_unit <= 0) throw std::invalid_argument("decay_unit must be > 0");
  }
};

struct ReputationState {
  double value = 0.0;
  std::uint64_t streak = 0;
  std::optional<Timestamp> last_time;
};

// I(A) = I_b + I_b * alpha * (1 - 1/(A+1)); increasing in A, bounded by I_b (1 + alpha).
[[nodiscard]] inline double increment(std::uint64_t streak, const ReputationParams& p) {
  return p.base_increment + p.base_increment * p.streak_gain * (1.0 - 1.0 / (static_cast<double>(streak) + 1.0));
}

// Applies one interaction at time t. Decay uses whole elapsed decay units; a gap longer
// than gap_threshold restarts the streak.
[[nodiscard]] inline ReputationState update(const ReputationState& s, Timestamp t, const ReputationParams& p) {
  ReputationState next;
  next.last_time = t;
  if (!s.last_time) {
    next.streak = 0;
    next.value = s.value + increment(0, p);
    return next;
  }
  const Timestamp delta = t - *s.last_time;
  if (delta < 0) throw DataError("non-chronological user stream");
  const auto units = static_cast<double>(delta / p.decay_unit);
  next.streak = delta <= p.gap_threshold ? s.streak + 1 : 0;
  next.value = s.value * std::pow(p.forgetting, units) + increment(next.streak, p);
  return next;
}

// One user's reported reputation for consecutive days starting at first_day.
struct DailySeries {
  std::int64_t first_day = 0;
  std::vector<double> values;

  [[nodiscard]] double at(std::int64_t day) const {
    if (day < first_day || day >= first_day + static_cast<std::int64_t>(values.size())) return 0.0;
    return values[static_cast<std::size_t>(day - first_day)];
  }
};

// Reputation reported for each day in [first_day, last_day]: the state after that day's
// events, decayed over whole decay units since the last active day. Days before the first
// event report 0. `times` must be chronological; events after last_day are ignored.
[[nodiscard]] inline DailySeries daily_reputation(std::span<const Timestamp> times, const ReputationParams& p,
                                                  std::int64_t first_day, std::int64_t last_day) {
  DailySeries out;
  out.first_day = first_day;
  if (last_day < first_day) return out;
  out.values.assign(static_cast<std::size_t>(last_day - first_day + 1), 0.0);

  ReputationState state;
  std::optional<std::int64_t> last_active_day;
  std::size_t next = 0;
  for (std::int64_t day = first_day; day <= last_day; ++day) {
    while (next < times.size() && day_of(times[next]) <= day) {
      state = update(state, times[next], p);
      last_active_day = day_of(times[next]);
      ++next;
    }
    if (!last_active_day) continue;
    const std::int64_t gap_days = day - *last_active_day;
    const auto units = static_cast<double>(gap_days * kSecondsPerDay / p.decay_unit);
    out.values[static_cast<std::size_t>(day - first_day)] = state.value * std::pow(p.forgetting, units);
  }
  return out;
}

struct MonthlyReputation {
  std::optional<double> mean;        // mean of daily means over qualifying users
  std::size_t qualifying_users = 0;  // distinct users qualifying on at least one day
  std::size_t active_users = 0;      // users whose mean daily value over the month exceeds the active threshold
};

// Accumulates per-user daily series for one community over a fixed day range.
// Users must be added in a fixed order for bit-identical sums.
class CommunityReputation {
 public:
  CommunityReputation(std::int64_t first_day, std::int64_t last_day, double activity_floor = 1.0,
                      double active_threshold = 1.0)
      : first_day_(first_day),
        first_month_(month_of_day(first_day)),
        floor_(activity_floor),
        active_threshold_(active_threshold) {
    if (!(activity_floor > 0.0)) throw std::invalid_argument("activity floor must be > 0");
    if (!(active_threshold >= 0.0)) throw std::invalid_argument("active threshold must be >= 0");
    const auto n_days = last_day >= first_day ? static_cast<std::size_t>(last_day - first_day + 1) : 0;
    day_sum_.assign(n_days, 0.0);
    day_count_.assign(n_days, 0);
    const auto n_months = n_days == 0 ? 0 : static_cast<std::size_t>(months_between(first_month_, month_of_day(last_day)) + 1);
    qualifying_.assign(n_months, 0);
    active_.assign(n_months, 0);
  }

  // Days outside the user's series count as 0, so only the overlap is visited.
  void add_user(const DailySeries& s) {
    const std::int64_t lo = std::max(first_day_, s.first_day);
    const std::int64_t hi = std::min(first_day_ + static_cast<std::int64_t>(day_sum_.size()),
                                     s.first_day + static_cast<std::int64_t>(s.values.size()));
    if (lo >= hi) return;
    std::size_t month_slot = static_cast<std::size_t>(months_between(first_month_, month_of_day(lo)));
    std::int64_t month_end = month_end_day(month_slot);
    bool qualified = false;
    double month_sum = 0.0;
    auto close_month = [&] {
      if (qualified) ++qualifying_[month_slot];
      const double days = static_cast<double>(days_in(first_month_.plus(static_cast<std::int64_t>(month_slot))));
      if (month_sum / days > active_threshold_) ++active_[month_slot];
    };
    for (std::int64_t day = lo; day < hi; ++day) {
      if (day > month_end) {
        close_month();
        ++month_slot;
        month_end = month_end_day(month_slot);
        qualified = false;
        month_sum = 0.0;
      }
      const double v = s.values[static_cast<std::size_t>(day - s.first_day)];
      month_sum += v;
      if (v >= floor_) {
        const auto i = static_cast<std::size_t>(day - first_day_);
        day_sum_[i] += v;
        ++day_count_[i];
        qualified = true;
      }
    }
    close_month();
  }

  [[nodiscard]] std::optional<double> day_mean(std::int64_t day) const {
    const auto i = slot(day);
    if (!i || day_count_[*i] == 0) return std::nullopt;
    return day_sum_[*i] / static_cast<double>(day_count_[*i]);
  }

  [[nodiscard]] std::size_t day_count(std::int64_t day) const {
    const auto i = slot(day);
    return i ? day_count_[*i] : 0;
  }

  [[nodiscard]] MonthlyReputation month(const MonthKey& m) const {
    MonthlyReputation r;
    const std::int64_t ms = months_between(first_month_, m);
    if (ms < 0 || ms >= static_cast<std::int64_t>(qualifying_.size())) return r;
    r.qualifying_users = qualifying_[static_cast<std::size_t>(ms)];
    r.active_users = active_[static_cast<std::size_t>(ms)];
    double sum = 0.0;
    std::size_t days = 0;
    const std::int64_t start = first_day(m);
    for (std::int64_t d = start; d < start + days_in(m); ++d) {
      if (auto v = day_mean(d)) {
        sum += *v;
        ++days;
      }
    }
    if (days > 0) r.mean = sum / static_cast<double>(days);
    return r;
  }

 private:
  [[nodiscard]] std::optional<std::size_t> slot(std::int64_t day) const {
    if (day < first_day_ || day >= first_day_ + static_cast<std::int64_t>(day_sum_.size())) return std::nullopt;
    return static_cast<std::size_t>(day - first_day_);
  }

  [[nodiscard]] std::int64_t month_end_day(std::size_t month_slot) const {
    return cohortnet::first_day(first_month_.plus(static_cast<std::int64_t>(month_slot) + 1)) - 1;
  }

  std::int64_t first_day_;
  MonthKey first_month_;
  double floor_;
  double active_threshold_;
  std::vector<double> day_sum_;
  std::vector<std::size_t> day_count_;
  std::vector<std::size_t> qualifying_;
  std::vector<std::size_t> active_;
};

// Mean over the month's days of the per-day mean across users at or above activity_floor.
// Null when no day has a qualifying user.
[[nodiscard]] inline MonthlyReputation community_monthly_mean(std::span<const DailySeries> users, const MonthKey& month,
                                                             double activity_floor = 1.0,
                                                             double active_threshold = 1.0) {
  const std::int64_t start = first_day(month);
  CommunityReputation acc(start, start + days_in(month) - 1, activity_floor, active_threshold);
  for (const auto& u : users) acc.add_user(u);
  return acc.month(month);
}

}  // namespace cohortnet
