#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cohortnet/cohorts.hpp"
#include "cohortnet/pipeline.hpp"
#include "cohortnet/synth.hpp"

namespace cohortnet {

inline constexpr int kReportSchemaVersion = 1;

namespace detail {

inline std::string num(double v, const char* fmt = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

inline std::string num(const std::optional<double>& v, const char* fmt = "%.10g") { return v ? num(*v, fmt) : ""; }

inline std::string month_or_empty(const std::optional<MonthKey>& m) { return m ? m->str() : ""; }

// 1234567 -> "1,234,567"
inline std::string grouped(std::size_t v) {
  std::string digits = std::to_string(v);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::optional<double> median(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Long format: one row per (metric, scope, month); null values are empty.
inline void write_metrics_csv(std::ostream& os, const MetricsResult& r) {
  os << "metric,scope,year,month,value,n\n";
  for (const auto& s : r.series) {
    for (const auto& p : s.points) {
      os << s.metric << ',' << detail::csv_field(s.scope) << ',' << p.month.year << ',' << p.month.month << ','
         << detail::num(p.value) << ',' << p.n << '\n';
    }
  }
}

inline void write_breakpoints_csv(std::ostream& os, const std::vector<BreakpointRow>& rows, const BanCalendar& calendar,
                                  const BreakpointSettings& settings) {
  os << "scope,metric,status,break,ci_low,ci_high,sse_ratio,stability,sse_segmented,sse_single,n_valid,n_bootstrap,"
        "fit,input";
  for (const auto& b : calendar.entries()) os << ",near_" << detail::csv_field(b.label);
  os << '\n';
  const std::string fit(to_string(settings.fit.variant));
  const char* input = settings.smoothed ? "smoothed" : "raw";
  for (const auto& row : rows) {
    os << detail::csv_field(row.scope) << ',' << row.metric << ',' << row.status << ',';
    if (row.result) {
      const auto& r = *row.result;
      os << r.tau.str() << ',' << detail::month_or_empty(r.ci_low) << ',' << detail::month_or_empty(r.ci_high) << ','
         << detail::num(r.sse_ratio) << ',' << detail::num(r.stability) << ',' << detail::num(r.sse_segmented) << ','
         << detail::num(r.sse_single) << ',';
    } else {
      os << ",,,,,,,";
    }
    os << row.n_valid << ',' << (row.result ? row.result->n_bootstrap : 0) << ',' << fit << ',' << input;
    for (std::size_t i = 0; i < calendar.entries().size(); ++i) {
      os << ',';
      if (i < row.near_event.size()) os << (row.near_event[i] ? "true" : "false");
    }
    os << '\n';
  }
}

inline void write_platform_csv(std::ostream& os, const MetricsResult& r) {
  os << "community,mean_source,mean_receiver,ratio,difference\n";
  for (const auto& p : r.platform) {
    os << detail::csv_field(p.community_id) << ',' << detail::num(p.mean_source) << ',' << detail::num(p.mean_receiver)
       << ',' << detail::num(p.ratio) << ',' << detail::num(p.difference) << '\n';
  }
}

inline void write_corpus_csv(std::ostream& os, const MetricsResult& r) {
  os << "platform,community,users,posts,comments,activity,first_month,last_month,mean_monthly_users\n";
  for (const auto& s : r.summaries) {
    os << to_string(s.platform) << ',' << detail::csv_field(s.community) << ',' << s.users << ',' << s.posts << ','
       << s.comments << ',' << s.activity() << ',' << s.first_month.str() << ',' << s.last_month.str() << ','
       << detail::num(s.mean_monthly_users) << '\n';
  }
}

inline void write_reputation_daily_csv(std::ostream& os, const MetricsResult& r) {
  os << "community,date,value,qualifying_users\n";
  for (const auto& d : r.reputation_daily) {
    os << detail::csv_field(d.community) << ',' << format_date(d.day) << ',' << detail::num(d.value) << ','
       << d.qualifying << '\n';
  }
}

inline void write_reputation_monthly_csv(std::ostream& os, const MetricsResult& r) {
  os << "community,year,month,value,qualifying_users,active_users\n";
  for (const auto& m : r.reputation_monthly) {
    os << detail::csv_field(m.community) << ',' << m.month.year << ',' << m.month.month << ','
       << detail::num(m.value.mean) << ',' << m.value.qualifying_users << ',' << m.value.active_users << '\n';
  }
}

struct ReportInputs {
  const MetricsResult& metrics;
  const std::vector<BreakpointRow>& breakpoints;
  const BanCalendar& calendar;
  const BreakpointSettings& settings;
  std::optional<GroundTruth> truth;
  std::vector<std::string> files;
};

namespace detail {

inline const BreakpointRow* recovered_row(const std::vector<BreakpointRow>& rows, const MetricsResult& m) {
  const BreakpointRow* fallback = nullptr;
  for (const auto& row : rows) {
    if (row.metric != "ei_index" || !row.result) continue;
    if (row.scope == kGlobalScope) return &row;
    if (fallback == nullptr && !m.communities.empty() && row.scope == m.communities.front()) fallback = &row;
  }
  return fallback;
}

}  // namespace detail

[[nodiscard]] inline std::string render_markdown(const ReportInputs& in) {
  const auto& m = in.metrics;
  std::ostringstream os;
  os << "# Cohort network report\n\n";
  os << "Months: " << m.months.front().str() << " to " << m.months.back().str() << " (" << m.months.size()
     << "). Receiver communities: " << m.communities.size() << ".\n\n";

  os << "## Corpus\n\n";
  os << "| Platform | Community | Users | Activity | Posts | Comments | Mean users/month |\n";
  os << "|---|---|---:|---:|---:|---:|---:|\n";
  for (const auto& s : m.summaries) {
    os << "| " << to_string(s.platform) << " | " << s.community << " | " << detail::grouped(s.users) << " | "
       << detail::grouped(s.activity()) << " | " << detail::grouped(s.posts) << " | " << detail::grouped(s.comments)
       << " | " << detail::num(s.mean_monthly_users, "%.1f") << " |\n";
  }

  os << "\n## Toxicity by platform\n\n";
  if (m.platform.empty()) {
    os << "No community has source-platform toxicity in the comparison window.\n";
  } else {
    os << "| Community | Source | Receiver | Ratio | Difference |\n|---|---:|---:|---:|---:|\n";
    for (const auto& p : m.platform) {
      os << "| " << p.community_id << " | " << detail::num(p.mean_source, "%.3f") << " | "
         << detail::num(p.mean_receiver, "%.3f") << " | " << (p.ratio ? detail::num(*p.ratio, "%.2fx") : "n/a")
         << " | " << detail::num(p.difference, "%+.3f") << " |\n";
    }
  }
  if (!m.platform_skipped.empty()) {
    os << "\nSkipped (no scored months in the window):";
    for (const auto& c : m.platform_skipped) os << ' ' << c;
    os << '\n';
  }

  os << "\n## Breakpoints\n\n";
  os << "Fit: " << to_string(in.settings.fit.variant) << ", input: " << (in.settings.smoothed ? "smoothed" : "raw")
     << ", min_seg " << in.settings.fit.min_seg << ", " << in.settings.iterations << " bootstrap iterations.\n\n";
  const bool any_fit = std::any_of(in.breakpoints.begin(), in.breakpoints.end(), [](const auto& r) { return r.result.has_value(); });
  if (!any_fit) {
    os << "No series eligible.\n";
  } else {
    os << "| Scope | Metric | Break | 90% CI | SSE ratio | Stability | Status |\n|---|---|---|---|---:|---:|---|\n";
    for (const auto& row : in.breakpoints) {
      os << "| " << row.scope << " | " << row.metric << " | ";
      if (row.result) {
        const auto& r = *row.result;
        os << r.tau.str() << " | ";
        if (r.ci_low) os << r.ci_low->str() << " to " << r.ci_high->str();
        os << " | " << detail::num(r.sse_ratio, "%.3f") << " | " << detail::num(r.stability, "%.2f");
      } else {
        os << " |  |  | ";
      }
      os << " | " << row.status << " |\n";
    }

    os << "\n## Breaks near ban events\n\n";
    os << "Window: within " << in.settings.near_window << " months of the ban month.\n\n";
    os << "| Metric | Eligible | Median SSE ratio |";
    for (const auto& b : in.calendar.entries()) os << " Near " << b.label << " |";
    os << " Break months |\n|---|---:|---:|";
    for (std::size_t i = 0; i < in.calendar.entries().size(); ++i) os << "---:|";
    os << "---|\n";
    for (const auto& metric : in.settings.metrics) {
      std::vector<double> ratios;
      std::vector<std::size_t> near(in.calendar.entries().size(), 0);
      std::vector<std::string> months;
      for (const auto& row : in.breakpoints) {
        if (row.metric != metric || !row.result) continue;
        ratios.push_back(row.result->sse_ratio);
        months.push_back(row.result->tau.str());
        for (std::size_t i = 0; i < near.size() && i < row.near_event.size(); ++i) near[i] += row.near_event[i];
      }
      if (ratios.empty()) continue;
      std::sort(months.begin(), months.end());
      months.erase(std::unique(months.begin(), months.end()), months.end());
      os << "| " << metric << " | " << ratios.size() << " | " << detail::num(detail::median(ratios), "%.3f") << " |";
      for (auto n : near) os << ' ' << n << '/' << ratios.size() << " |";
      os << ' ';
      for (std::size_t i = 0; i < months.size(); ++i) os << (i ? ", " : "") << months[i];
      os << " |\n";
    }
  }

  os << "\n## Hub threshold sensitivity\n\n";
  os << "| Threshold | Months | Median rate | Max rate |\n|---|---:|---:|---:|\n";
  bool any_hub = false;
  for (const auto& s : m.series) {
    if (s.scope != kGlobalScope || s.metric.rfind("hub_rate_top", 0) != 0 || s.metric.find(kSmoothedSuffix) != std::string::npos)
      continue;
    std::vector<double> v;
    for (const auto& p : s.points) {
      if (p.value) v.push_back(*p.value);
    }
    const auto mx = v.empty() ? std::nullopt : std::optional<double>(*std::max_element(v.begin(), v.end()));
    os << "| top " << std::stoi(s.metric.substr(12)) << "% | " << v.size() << " | " << detail::num(detail::median(v), "%.3f")
       << " | " << detail::num(mx, "%.3f") << " |\n";
    any_hub = true;
  }
  if (!any_hub) os << "| none | 0 |  |  |\n";

  if (in.truth) {
    const auto& t = *in.truth;
    os << "\n## Planted regimes\n\n";
    const auto* row = detail::recovered_row(in.breakpoints, m);
    os << "| Planted break | Recovered break | 90% CI | Stability | SSE ratio |\n|---|---|---|---:|---:|\n";
    os << "| " << detail::month_or_empty(t.planted_break) << " | ";
    if (row != nullptr) {
      const auto& r = *row->result;
      os << r.tau.str() << " | ";
      if (r.ci_low) os << r.ci_low->str() << " to " << r.ci_high->str();
      os << " | " << detail::num(r.stability, "%.2f") << " | " << detail::num(r.sse_ratio, "%.3f") << " |\n";
    } else {
      os << "none |  |  |  |\n";
    }
    const auto* ei = m.find("ei_index", kGlobalScope);
    os << "\n| Regime | Months | Expected E-I | Measured mean E-I |\n|---|---:|---:|---:|\n";
    for (std::size_t k = 0; k < t.expected_ei.size(); ++k) {
      std::vector<double> v;
      if (ei != nullptr) {
        for (const auto& p : ei->points) {
          if (p.value && t.calendar.period_of(p.month) == k) v.push_back(*p.value);
        }
      }
      double mean = 0.0;
      for (double x : v) mean += x;
      os << "| " << (k < t.calendar.entries().size() ? t.calendar.entries()[k].label : std::to_string(k)) << " | "
         << v.size() << " | " << detail::num(t.expected_ei[k], "%+.3f") << " | "
         << (v.empty() ? std::string("n/a") : detail::num(mean / static_cast<double>(v.size()), "%+.3f")) << " |\n";
    }
  }

  os << "\n## Files\n\n";
  for (const auto& f : in.files) os << "- " << f << '\n';
  return os.str();
}

[[nodiscard]] inline nlohmann::ordered_json report_json(const ReportInputs& in) {
  using J = nlohmann::ordered_json;
  const auto opt = [](const std::optional<double>& v) { return v ? J(*v) : J(); };
  const auto& m = in.metrics;
  J j;
  j["schema_version"] = kReportSchemaVersion;
  j["months"] = {{"first", m.months.front().str()}, {"last", m.months.back().str()}};
  j["communities"] = m.communities;
  j["ban_calendar"] = J::array();
  for (const auto& b : in.calendar.entries()) j["ban_calendar"].push_back({{"label", b.label}, {"date", format_date(b.day)}});
  j["corpus"] = J::array();
  for (const auto& s : m.summaries) {
    j["corpus"].push_back({{"platform", to_string(s.platform)},
                           {"community", s.community},
                           {"users", s.users},
                           {"posts", s.posts},
                           {"comments", s.comments},
                           {"activity", s.activity()},
                           {"first_month", s.first_month.str()},
                           {"last_month", s.last_month.str()},
                           {"mean_monthly_users", s.mean_monthly_users}});
  }
  j["platform"] = J::array();
  for (const auto& p : m.platform) {
    j["platform"].push_back({{"community", p.community_id},
                             {"mean_source", p.mean_source},
                             {"mean_receiver", p.mean_receiver},
                             {"ratio", opt(p.ratio)},
                             {"difference", p.difference}});
  }
  j["breakpoint_settings"] = {{"metrics", in.settings.metrics},
                              {"fit", to_string(in.settings.fit.variant)},
                              {"input", in.settings.smoothed ? "smoothed" : "raw"},
                              {"min_seg", in.settings.fit.min_seg},
                              {"iterations", in.settings.iterations},
                              {"seed", in.settings.seed},
                              {"stability_window", in.settings.stability_window},
                              {"near_window", in.settings.near_window}};
  j["breakpoints"] = J::array();
  for (const auto& row : in.breakpoints) {
    J r{{"scope", row.scope}, {"metric", row.metric}, {"status", row.status}, {"n_valid", row.n_valid}};
    if (row.result) {
      const auto& b = *row.result;
      r["break"] = b.tau.str();
      r["ci_low"] = b.ci_low ? J(b.ci_low->str()) : J();
      r["ci_high"] = b.ci_high ? J(b.ci_high->str()) : J();
      r["sse_ratio"] = b.sse_ratio;
      r["stability"] = opt(b.stability);
      r["sse_segmented"] = b.sse_segmented;
      r["sse_single"] = b.sse_single;
      r["n_bootstrap"] = b.n_bootstrap;
      J near = J::object();
      for (std::size_t i = 0; i < row.near_event.size(); ++i) near[in.calendar.entries()[i].label] = bool(row.near_event[i]);
      r["near_event"] = near;
    }
    j["breakpoints"].push_back(std::move(r));
  }
  if (in.truth) {
    j["ground_truth"] = in.truth->to_json();
    const auto* row = detail::recovered_row(in.breakpoints, m);
    j["recovered_break"] = row != nullptr ? J(row->result->tau.str()) : J();
  }
  j["files"] = in.files;
  return j;
}

}  // namespace cohortnet
