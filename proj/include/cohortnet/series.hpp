#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <ranges>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cohortnet/error.hpp"
#include "cohortnet/events.hpp"
#include "cohortnet/month.hpp"
#include "cohortnet/stats.hpp"

namespace cohortnet {

struct SeriesPoint {
  MonthKey month;
  std::optional<double> value;
  std::size_t n = 0;  // observations behind the value (users, communities, ...)

  friend bool operator==(const SeriesPoint&, const SeriesPoint&) = default;
};

// One metric over months for a community or the global scope. Months strictly increase.
struct MetricSeries {
  std::string metric;
  std::string scope;
  std::vector<SeriesPoint> points;

  [[nodiscard]] std::size_t size() const { return points.size(); }

  [[nodiscard]] std::size_t count_valid() const {
    std::size_t n = 0;
    for (const auto& p : points) n += p.value.has_value();
    return n;
  }

  void check_ordered() const {
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (!(points[i - 1].month < points[i].month))
        throw DataError("series '" + metric + "/" + scope + "' months must strictly increase");
    }
  }
};

// Mean toxicity of each user's scored events in (community, month); unscored users are absent.
template <std::ranges::input_range R>
[[nodiscard]] std::map<std::string, double> user_month_toxicity(const R& events, const std::string& community,
                                                                const MonthKey& month) {
  // Exact sums keep the means independent of event order and of duplicated events.
  std::map<std::string, std::pair<ExactSum, std::size_t>> acc;
  for (const auto& item : events) {
    const InteractionEvent& ev = as_event(item);
    if (!ev.toxicity || ev.community_id != community || month_of(ev.timestamp) != month) continue;
    auto& [sum, n] = acc[ev.user_id];
    sum.add(*ev.toxicity);
    ++n;
  }
  std::map<std::string, double> out;
  for (const auto& [user, sn] : acc) out.emplace(user, sn.first.mean(sn.second));
  return out;
}

// Unweighted mean over users: each user counts once regardless of volume.
[[nodiscard]] inline std::optional<double> community_month_toxicity(const std::map<std::string, double>& user_month) {
  if (user_month.empty()) return std::nullopt;
  ExactSum sum;
  for (const auto& [user, v] : user_month) sum.add(v);
  return sum.mean(user_month.size());
}

template <std::ranges::input_range R>
[[nodiscard]] std::size_t monthly_active_users(const R& events, const std::string& community, const MonthKey& month) {
  std::set<std::string_view> users;
  for (const auto& item : events) {
    const InteractionEvent& ev = as_event(item);
    if (ev.community_id == community && month_of(ev.timestamp) == month) users.insert(ev.user_id);
  }
  return users.size();
}

struct MonthWindow {
  MonthKey first{2014, 1};
  MonthKey last{2020, 12};

  [[nodiscard]] bool contains(const MonthKey& m) const { return first <= m && m <= last; }
};

struct PlatformSummary {
  std::string community_id;
  double mean_source = 0.0;
  double mean_receiver = 0.0;
  std::optional<double> ratio;  // receiver / source, when source > 0
  double difference = 0.0;      // receiver - source
};

namespace detail {

inline double weighted_window_mean(const MetricSeries& values, const MetricSeries& weights, const MonthWindow& window) {
  std::map<MonthKey, double> w;
  for (const auto& p : weights.points) {
    if (p.value) w[p.month] = *p.value;
  }
  double num = 0.0;
  double den = 0.0;
  bool any = false;
  for (const auto& p : values.points) {
    if (!p.value || !window.contains(p.month)) continue;
    any = true;
    auto it = w.find(p.month);
    if (it == w.end()) continue;
    num += *p.value * it->second;
    den += it->second;
  }
  if (!any) throw InsufficientData("series '" + values.scope + "' has no values inside the comparison window");
  if (den <= 0.0) throw DataError("series '" + values.scope + "' has zero active users inside the comparison window");
  return num / den;
}

}  // namespace detail

// Active-user-weighted means of monthly toxicity on each platform within `window`.
[[nodiscard]] inline PlatformSummary platform_summary(const std::string& community, const MetricSeries& source,
                                                      const MetricSeries& receiver, const MetricSeries& source_active,
                                                      const MetricSeries& receiver_active, const MonthWindow& window) {
  PlatformSummary s;
  s.community_id = community;
  s.mean_source = detail::weighted_window_mean(source, source_active, window);
  s.mean_receiver = detail::weighted_window_mean(receiver, receiver_active, window);
  if (s.mean_source > 0.0) s.ratio = s.mean_receiver / s.mean_source;
  s.difference = s.mean_receiver - s.mean_source;
  return s;
}

// Per-month weighted mean over communities with a value and positive weight.
// All inputs must share one month grid.
[[nodiscard]] inline MetricSeries global_series(const std::vector<MetricSeries>& values,
                                                const std::vector<MetricSeries>& weights, std::string metric) {
  if (values.size() != weights.size()) throw std::invalid_argument("global_series: one weight series per community");
  MetricSeries out;
  out.metric = std::move(metric);
  out.scope = "global";
  if (values.empty()) return out;
  const auto& grid = values.front().points;
  for (std::size_t c = 0; c < values.size(); ++c) {
    for (const auto* s : {&values[c], &weights[c]}) {
      if (s->points.size() != grid.size()) throw DataError("global_series: mismatched month grids");
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (s->points[i].month != grid[i].month) throw DataError("global_series: mismatched month grids");
      }
    }
  }
  out.points.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    // Weights are taken relative to the first participating weight, so uniform weights
    // reduce to exactly the plain mean.
    double ref = 0.0;
    double num = 0.0;
    double den = 0.0;
    double total_weight = 0.0;
    for (std::size_t c = 0; c < values.size(); ++c) {
      const auto& v = values[c].points[i].value;
      const auto& w = weights[c].points[i].value;
      if (!v || !w || *w <= 0.0) continue;
      if (ref == 0.0) ref = *w;
      const double rel = *w / ref;
      num += *v * rel;
      den += rel;
      total_weight += *w;
    }
    out.points.push_back({grid[i].month, den > 0.0 ? std::optional<double>(num / den) : std::nullopt,
                          static_cast<std::size_t>(std::llround(total_weight))});
  }
  return out;
}

// Centered rolling mean over months within window/2 of each point; nulls are skipped and
// boundary points use the partial window.
[[nodiscard]] inline MetricSeries smooth(const MetricSeries& series, int window = 3) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("smoothing window must be odd and >= 1");
  const std::int64_t half = window / 2;
  MetricSeries out;
  out.metric = series.metric;
  out.scope = series.scope;
  out.points.reserve(series.points.size());
  const auto& pts = series.points;
  std::size_t lo = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (months_between(pts[lo].month, pts[i].month) > half) ++lo;
    // Mean taken as an offset from the first value so constant windows reproduce it exactly.
    std::optional<double> ref;
    double offset = 0.0;
    std::size_t n = 0;
    for (std::size_t j = lo; j < pts.size() && months_between(pts[i].month, pts[j].month) <= half; ++j) {
      if (!pts[j].value) continue;
      if (!ref) ref = *pts[j].value;
      offset += *pts[j].value - *ref;
      ++n;
    }
    out.points.push_back(
        {pts[i].month, ref ? std::optional<double>(*ref + offset / static_cast<double>(n)) : std::nullopt, n});
  }
  return out;
}

}  // namespace cohortnet
