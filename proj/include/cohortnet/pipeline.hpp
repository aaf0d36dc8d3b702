#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <stdexcept>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cohortnet/breakpoints.hpp"
#include "cohortnet/cohorts.hpp"
#include "cohortnet/error.hpp"
#include "cohortnet/events.hpp"
#include "cohortnet/graphs.hpp"
#include "cohortnet/month.hpp"
#include "cohortnet/netmetrics.hpp"
#include "cohortnet/parallel.hpp"
#include "cohortnet/reputation.hpp"
#include "cohortnet/rng.hpp"
#include "cohortnet/series.hpp"

namespace cohortnet {

struct PipelineOptions {
  CohortPolicy cohorts;
  ReputationParams reputation;
  bool reputation_enabled = true;
  double reputation_floor = 1.0;             // daily values at or above this enter the daily means
  double reputation_active_threshold = 1.0;  // monthly mean above this counts a user as active
  std::vector<double> hub_tops{0.05, 0.10, 0.20};
  int smoothing_window = 3;
  MonthWindow comparison;
  std::size_t workers = 1;
};

// Corpus-level size of one community on one platform.
struct CommunitySummary {
  std::string community;
  Platform platform = Platform::receiver;
  std::size_t users = 0;
  std::size_t posts = 0;
  std::size_t comments = 0;
  MonthKey first_month;
  MonthKey last_month;
  double mean_monthly_users = 0.0;

  [[nodiscard]] std::size_t activity() const { return posts + comments; }
};

struct DailyReputationRow {
  std::string community;
  std::int64_t day = 0;
  std::optional<double> value;
  std::size_t qualifying = 0;
};

struct MonthlyReputationRow {
  std::string community;
  MonthKey month;
  MonthlyReputation value;
};

struct MetricsResult {
  std::vector<std::string> communities;  // receiver communities, sorted
  std::vector<MonthKey> months;          // contiguous receiver month grid
  std::vector<MetricSeries> series;
  std::vector<CommunitySummary> summaries;
  std::vector<PlatformSummary> platform;
  std::vector<std::string> platform_skipped;
  std::vector<DailyReputationRow> reputation_daily;
  std::vector<MonthlyReputationRow> reputation_monthly;

  [[nodiscard]] const MetricSeries* find(std::string_view metric, std::string_view scope) const {
    for (const auto& s : series) {
      if (s.metric == metric && s.scope == scope) return &s;
    }
    return nullptr;
  }
};

inline constexpr std::string_view kGlobalScope = "global";
inline constexpr std::string_view kSmoothedSuffix = "_smoothed";

[[nodiscard]] inline std::string hub_metric_name(double top) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "hub_rate_top%02d", static_cast<int>(std::lround(top * 100.0)));
  return buf;
}

namespace detail {

enum class Aggregate { sum, by_active_users, by_reputation_users };

struct MetricDef {
  std::string name;
  Aggregate aggregate;
};

inline std::vector<MetricDef> metric_defs(const PipelineOptions& opt) {
  std::vector<MetricDef> defs{{"active_users", Aggregate::sum},
                              {"active_newcomers", Aggregate::sum},
                              {"active_existing", Aggregate::sum},
                              {"edges", Aggregate::sum},
                              {"ei_index", Aggregate::by_active_users}};
  for (double top : opt.hub_tops) defs.push_back({hub_metric_name(top), Aggregate::by_active_users});
  for (const char* name : {"degree_share_ratio", "degree_assortativity", "degree_gini", "existing_gini", "toxicity_mean"})
    defs.push_back({name, Aggregate::by_active_users});
  if (opt.reputation_enabled) {
    defs.push_back({"reputation_mean", Aggregate::by_reputation_users});
    defs.push_back({"reputation_users", Aggregate::sum});
    defs.push_back({"reputation_active_users", Aggregate::sum});
  }
  return defs;
}

struct CellValues {
  std::vector<std::optional<double>> value;
  std::vector<std::size_t> n;

  void set(std::size_t slot, std::optional<double> v, std::size_t count) {
    value[slot] = v;
    n[slot] = count;
  }
};

using Bucket = std::vector<const InteractionEvent*>;

inline std::optional<CohortLabel> node_label(const CohortPolicy& policy, std::optional<Timestamp> first_seen,
                                             const MonthKey& m) {
  if (!first_seen || m < month_of(*first_seen)) return std::nullopt;
  return policy.label(*first_seen, m);
}

// Every metric of one receiver cell except reputation, in metric_defs order.
inline void compute_cell(const Bucket& events, const std::string& community, const MonthKey& m,
                         const PostAuthorIndex& posts, const FirstSeenIndex& first_seen, const PipelineOptions& opt,
                         CellValues& out) {
  const MonthlyGraph g = build_monthly_graph(events, community, m, posts);
  std::vector<std::optional<CohortLabel>> labels;
  labels.reserve(g.nodes.size());
  for (const auto& u : g.nodes) labels.push_back(node_label(opt.cohorts, first_seen.find(u, community), m));

  std::vector<std::string> active;
  active.reserve(events.size());
  for (const auto* ev : events) active.push_back(ev->user_id);
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());
  std::size_t newcomers = 0, existing = 0;
  for (const auto& u : active) {
    const auto l = labels[*g.find(u)];
    if (l == CohortLabel::newcomer) ++newcomers;
    if (l == CohortLabel::existing) ++existing;
  }
  const bool labeled = newcomers + existing > 0;

  const CohortedGraph cg{g, labels};
  const auto deg = degree_sequence(g);
  const auto ldeg = labeled_degrees(cg);
  std::size_t n_new = 0, n_ex = 0;
  for (const auto& l : labels) {
    if (l == CohortLabel::newcomer) ++n_new;
    if (l == CohortLabel::existing) ++n_ex;
  }

  std::size_t slot = 0;
  const auto count = [](std::size_t v) { return std::optional<double>(static_cast<double>(v)); };
  out.set(slot++, count(active.size()), active.size());
  out.set(slot++, labeled ? count(newcomers) : std::nullopt, newcomers);
  out.set(slot++, labeled ? count(existing) : std::nullopt, existing);
  out.set(slot++, count(g.edges.size()), g.edges.size());
  const auto ei = ei_counts(cg);
  out.set(slot++, ei_index(cg), ei.external + ei.internal);
  for (double top : opt.hub_tops) out.set(slot++, newcomer_hub_rate(ldeg, labels, 1.0 - top), n_new);
  out.set(slot++, degree_share_ratio(ldeg, labels), n_new + n_ex);
  out.set(slot++, degree_assortativity(g), g.edges.size());
  out.set(slot++, degree_gini(std::span<const std::size_t>(deg)), g.nodes.size());
  out.set(slot++, existing_gini(cg), n_ex);
  const auto tox = user_month_toxicity(events, community, m);
  out.set(slot++, community_month_toxicity(tox), tox.size());
}

// Daily reputation of one user, cut after the month in which the value first falls below
// `cutoff` following the last event. Later days would neither qualify nor raise a monthly mean.
inline DailySeries user_reputation(std::span<const Timestamp> times, const ReputationParams& p, std::int64_t last_day,
                                   double cutoff) {
  DailySeries s = daily_reputation(times, p, day_of(times.front()), last_day);
  const std::int64_t last_event = day_of(times.back());
  for (std::int64_t d = last_event; d <= last_day; ++d) {
    if (s.at(d) < cutoff) {
      const std::int64_t keep_until = first_day(month_of_day(d).plus(1)) - 1;
      if (keep_until < last_day) s.values.resize(static_cast<std::size_t>(keep_until - s.first_day + 1));
      break;
    }
  }
  return s;
}

inline std::vector<SeriesPoint> count_sum(const std::vector<const MetricSeries*>& parts,
                                          const std::vector<MonthKey>& months) {
  std::vector<SeriesPoint> out;
  for (std::size_t i = 0; i < months.size(); ++i) {
    std::optional<double> total;
    for (const auto* s : parts) {
      const auto& v = s->points[i].value;
      if (v) total = total.value_or(0.0) + *v;
    }
    out.push_back({months[i], total, total ? static_cast<std::size_t>(std::llround(*total)) : 0});
  }
  return out;
}

inline std::vector<MonthKey> month_grid(MonthKey first, MonthKey last) {
  std::vector<MonthKey> grid;
  for (MonthKey m = first; m <= last; m = m.plus(1)) grid.push_back(m);
  return grid;
}

}  // namespace detail

// Users, posts and comments per (platform, community); receiver communities first.
[[nodiscard]] inline std::vector<CommunitySummary> summarize_corpus(const std::vector<InteractionEvent>& events) {
  std::vector<CommunitySummary> out;
  std::map<std::pair<int, std::string>, CommunitySummary> sums;
  std::map<std::pair<int, std::string>, std::map<MonthKey, std::vector<std::string>>> monthly_users;
  for (const auto& ev : events) {
    const auto key = std::make_pair(ev.platform == Platform::receiver ? 0 : 1, ev.community_id);
    auto [it, fresh] = sums.try_emplace(key);
    auto& s = it->second;
    const MonthKey m = month_of(ev.timestamp);
    if (fresh) {
      s.community = ev.community_id;
      s.platform = ev.platform;
      s.first_month = s.last_month = m;
    }
    s.first_month = std::min(s.first_month, m);
    s.last_month = std::max(s.last_month, m);
    (ev.kind == EventKind::post ? s.posts : s.comments)++;
    monthly_users[key][m].push_back(ev.user_id);
  }
  for (auto& [key, s] : sums) {
    std::vector<std::string> all;
    double monthly_total = 0.0;
    for (auto& [m, users] : monthly_users[key]) {
      std::sort(users.begin(), users.end());
      users.erase(std::unique(users.begin(), users.end()), users.end());
      monthly_total += static_cast<double>(users.size());
      all.insert(all.end(), users.begin(), users.end());
    }
    std::sort(all.begin(), all.end());
    s.users = static_cast<std::size_t>(std::unique(all.begin(), all.end()) - all.begin());
    s.mean_monthly_users = monthly_total / static_cast<double>(months_between(s.first_month, s.last_month) + 1);
    out.push_back(std::move(s));
  }
  return out;
}

// Builds every per-community and global monthly series from a corpus. Results do not
// depend on opt.workers.
[[nodiscard]] inline MetricsResult compute_metrics(const std::vector<InteractionEvent>& events,
                                                   const PipelineOptions& opt) {
  if (opt.smoothing_window < 1 || opt.smoothing_window % 2 == 0)
    throw DataError("smoothing window must be odd and >= 1");
  for (double top : opt.hub_tops) {
    if (!(top > 0.0 && top < 1.0)) throw DataError("hub percentiles must lie in (0, 1)");
  }
  if (opt.reputation_enabled) {
    try {
      opt.reputation.validate();
    } catch (const std::invalid_argument& e) {
      throw DataError(std::string("reputation: ") + e.what());
    }
    if (!(opt.reputation_floor > 0.0)) throw DataError("reputation: floor must be > 0");
    if (!(opt.reputation_active_threshold >= 0.0)) throw DataError("reputation: active threshold must be >= 0");
  }

  std::vector<const InteractionEvent*> receiver, source;
  for (const auto& ev : events) (ev.platform == Platform::receiver ? receiver : source).push_back(&ev);
  if (receiver.empty()) throw InsufficientData("corpus has no receiver-platform events");

  MetricsResult res;
  MonthKey first_m = month_of(receiver.front()->timestamp), last_m = first_m;
  {
    std::map<std::string, std::size_t> ids;
    for (const auto* ev : receiver) {
      ids.emplace(ev->community_id, 0);
      const MonthKey m = month_of(ev->timestamp);
      first_m = std::min(first_m, m);
      last_m = std::max(last_m, m);
    }
    for (auto& [c, _] : ids) res.communities.push_back(c);
  }
  res.months = detail::month_grid(first_m, last_m);
  const std::size_t C = res.communities.size();
  const std::size_t M = res.months.size();
  auto community_index = [&](const std::string& c) {
    return static_cast<std::size_t>(std::lower_bound(res.communities.begin(), res.communities.end(), c) -
                                    res.communities.begin());
  };

  std::vector<detail::Bucket> cells(C * M);
  for (const auto* ev : receiver) {
    const auto mi = static_cast<std::size_t>(months_between(first_m, month_of(ev->timestamp)));
    cells[community_index(ev->community_id) * M + mi].push_back(ev);
  }
  const PostAuthorIndex posts = build_post_index(receiver);
  const FirstSeenIndex first_seen = build_first_seen(receiver);

  const auto defs = detail::metric_defs(opt);
  const std::size_t n_cell_metrics = defs.size() - (opt.reputation_enabled ? 3 : 0);
  std::vector<detail::CellValues> values(C * M);
  for (auto& v : values) {
    v.value.assign(defs.size(), std::nullopt);
    v.n.assign(defs.size(), 0);
  }
  parallel_for(C * M, opt.workers, [&](std::size_t i) {
    detail::compute_cell(cells[i], res.communities[i / M], res.months[i % M], posts, first_seen, opt, values[i]);
  });

  // Reputation: independent per community, users folded in sorted order.
  if (opt.reputation_enabled) {
    const std::int64_t day0 = first_day(first_m);
    const std::int64_t day1 = first_day(last_m.plus(1)) - 1;
    const double cutoff = std::min(opt.reputation_floor, opt.reputation_active_threshold);
    std::vector<std::vector<DailyReputationRow>> daily(C);
    std::vector<std::vector<MonthlyReputationRow>> monthly(C);
    parallel_for(C, opt.workers, [&](std::size_t c) {
      std::map<std::string, std::vector<Timestamp>> streams;
      for (std::size_t mi = 0; mi < M; ++mi) {
        for (const auto* ev : cells[c * M + mi]) streams[ev->user_id].push_back(ev->timestamp);
      }
      CommunityReputation acc(day0, day1, opt.reputation_floor, opt.reputation_active_threshold);
      for (auto& [user, times] : streams) {
        std::sort(times.begin(), times.end());
        acc.add_user(detail::user_reputation(times, opt.reputation, day1, cutoff));
      }
      for (std::int64_t d = day0; d <= day1; ++d) daily[c].push_back({res.communities[c], d, acc.day_mean(d), acc.day_count(d)});
      for (std::size_t mi = 0; mi < M; ++mi) {
        const auto r = acc.month(res.months[mi]);
        monthly[c].push_back({res.communities[c], res.months[mi], r});
        auto& cell = values[c * M + mi];
        cell.set(n_cell_metrics, r.mean, r.qualifying_users);
        cell.set(n_cell_metrics + 1, static_cast<double>(r.qualifying_users), r.qualifying_users);
        cell.set(n_cell_metrics + 2, static_cast<double>(r.active_users), r.active_users);
      }
    });
    for (std::size_t c = 0; c < C; ++c) {
      res.reputation_daily.insert(res.reputation_daily.end(), daily[c].begin(), daily[c].end());
      res.reputation_monthly.insert(res.reputation_monthly.end(), monthly[c].begin(), monthly[c].end());
    }
  }

  // Community series.
  std::vector<std::vector<MetricSeries>> by_metric(defs.size());
  for (std::size_t k = 0; k < defs.size(); ++k) {
    for (std::size_t c = 0; c < C; ++c) {
      MetricSeries s{defs[k].name, res.communities[c], {}};
      for (std::size_t mi = 0; mi < M; ++mi) {
        const auto& cell = values[c * M + mi];
        s.points.push_back({res.months[mi], cell.value[k], cell.n[k]});
      }
      by_metric[k].push_back(std::move(s));
    }
  }

  // Global series: counts are summed, everything else is weighted by community user counts.
  auto metric_slot = [&](std::string_view name) {
    for (std::size_t k = 0; k < defs.size(); ++k) {
      if (defs[k].name == name) return k;
    }
    throw std::logic_error("unknown metric");
  };
  std::vector<MetricSeries> global;
  for (std::size_t k = 0; k < defs.size(); ++k) {
    if (defs[k].aggregate == detail::Aggregate::sum) {
      std::vector<const MetricSeries*> parts;
      for (const auto& s : by_metric[k]) parts.push_back(&s);
      global.push_back({defs[k].name, std::string(kGlobalScope), detail::count_sum(parts, res.months)});
    } else {
      const auto& weights = by_metric[metric_slot(defs[k].aggregate == detail::Aggregate::by_active_users
                                                      ? "active_users"
                                                      : "reputation_users")];
      global.push_back(global_series(by_metric[k], weights, defs[k].name));
    }
  }

  std::vector<MetricSeries> raw;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t k = 0; k < defs.size(); ++k) raw.push_back(by_metric[k][c]);
  }
  for (auto& g : global) raw.push_back(std::move(g));
  res.series = raw;
  for (const auto& s : raw) {
    auto sm = smooth(s, opt.smoothing_window);
    sm.metric += kSmoothedSuffix;
    res.series.push_back(std::move(sm));
  }

  // Source platform: activity and toxicity per community on its own month grid.
  std::map<std::string, std::map<MonthKey, detail::Bucket>> source_cells;
  for (const auto* ev : source) source_cells[ev->community_id][month_of(ev->timestamp)].push_back(ev);
  for (const auto& [community, by_month] : source_cells) {
    const auto grid = detail::month_grid(by_month.begin()->first, by_month.rbegin()->first);
    const std::string scope = "source:" + community;
    MetricSeries active{"active_users", scope, {}}, tox{"toxicity_mean", scope, {}};
    static const detail::Bucket kEmpty;
    for (const auto& m : grid) {
      auto it = by_month.find(m);
      const auto& bucket = it == by_month.end() ? kEmpty : it->second;
      const auto users = monthly_active_users(bucket, community, m);
      active.points.push_back({m, static_cast<double>(users), users});
      const auto um = user_month_toxicity(bucket, community, m);
      tox.points.push_back({m, community_month_toxicity(um), um.size()});
    }
    res.series.push_back(std::move(active));
    res.series.push_back(std::move(tox));
  }

  for (const auto& community : res.communities) {
    const std::string scope = "source:" + community;
    const auto* src_tox = res.find("toxicity_mean", scope);
    if (src_tox == nullptr) continue;
    try {
      res.platform.push_back(platform_summary(community, *src_tox, *res.find("toxicity_mean", community),
                                              *res.find("active_users", scope), *res.find("active_users", community),
                                              opt.comparison));
    } catch (const DataError&) {
      res.platform_skipped.push_back(community);
    }
  }

  res.summaries = summarize_corpus(events);
  return res;
}

struct BreakpointSettings {
  std::vector<std::string> metrics{"ei_index", "existing_gini", "degree_assortativity", "toxicity_mean",
                                   "reputation_mean"};
  bool smoothed = false;
  BreakpointOptions fit;
  std::size_t iterations = 200;
  std::uint64_t seed = 0;
  std::int64_t stability_window = 3;
  std::int64_t near_window = 3;
};

struct BreakpointRow {
  std::string scope;
  std::string metric;
  std::string status;  // ok, degenerate or skipped_short
  std::size_t n_valid = 0;
  std::optional<BreakpointResult> result;
  std::vector<bool> near_event;  // one flag per calendar entry
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// One row per (scope, metric) for every community plus the global scope. Each row draws
// its bootstrap from a substream keyed by scope and metric, so rows are reproducible on
// their own and independent of the worker count.
[[nodiscard]] inline std::vector<BreakpointRow> run_breakpoints(const MetricsResult& metrics,
                                                                const BreakpointSettings& settings,
                                                                const BanCalendar& calendar, std::size_t workers) {
  std::vector<BreakpointRow> rows;
  std::vector<const MetricSeries*> inputs;
  std::vector<std::string> scopes = metrics.communities;
  scopes.emplace_back(kGlobalScope);
  for (const auto& scope : scopes) {
    for (const auto& metric : settings.metrics) {
      const std::string name = settings.smoothed ? metric + std::string(kSmoothedSuffix) : metric;
      const MetricSeries* s = metrics.find(name, scope);
      if (s == nullptr) continue;
      rows.push_back({scope, metric, "", s->count_valid(), std::nullopt, {}});
      inputs.push_back(s);
    }
  }
  parallel_for(rows.size(), workers, [&](std::size_t i) {
    auto& row = rows[i];
    const MetricSeries& s = *inputs[i];
    BreakpointResult r;
    try {
      r = find_breakpoint(s, settings.fit);
    } catch (const InsufficientData&) {
      row.status = "skipped_short";
      return;
    }
    if (settings.iterations > 0) {
      const BootstrapOptions boot{settings.iterations,
                                  substream_seed(settings.seed, detail::fnv1a(row.scope + "/" + row.metric)),
                                  settings.stability_window, 1};
      r = bootstrap(s, r, settings.fit, boot);
    }
    row.status = r.degenerate ? "degenerate" : "ok";
    for (const auto& ban : calendar.entries()) row.near_event.push_back(near_event(r.tau, ban.month(), settings.near_window));
    row.result = r;
  });
  return rows;
}

}  // namespace cohortnet
