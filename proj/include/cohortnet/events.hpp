#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "cohortnet/error.hpp"
#include "cohortnet/month.hpp"

namespace cohortnet {

enum class Platform { source, receiver };
enum class EventKind { post, comment };

[[nodiscard]] inline std::string_view to_string(Platform p) {
  return p == Platform::source ? "source" : "receiver";
}
[[nodiscard]] inline std::string_view to_string(EventKind k) { return k == EventKind::post ? "post" : "comment"; }

// One post or comment. Toxicity and sentiment are precomputed classifier scores.
struct InteractionEvent {
  std::string event_id;
  std::string user_id;
  std::string community_id;
  Platform platform = Platform::receiver;
  EventKind kind = EventKind::post;
  std::optional<std::string> parent_post_id;
  Timestamp timestamp = 0;
  std::optional<double> toxicity;
  std::optional<double> sentiment;

  friend bool operator==(const InteractionEvent&, const InteractionEvent&) = default;
};

// Lets range-based algorithms accept events by value or by pointer.
[[nodiscard]] inline const InteractionEvent& as_event(const InteractionEvent& e) { return e; }
[[nodiscard]] inline const InteractionEvent& as_event(const InteractionEvent* e) { return *e; }

enum class InputFormat { jsonl, csv };

[[nodiscard]] inline std::optional<InputFormat> parse_format(std::string_view s) {
  if (s == "jsonl" || s == "json") return InputFormat::jsonl;
  if (s == "csv") return InputFormat::csv;
  return std::nullopt;
}

// Picks the encoding from a file extension; JSONL unless the name ends in ".csv".
[[nodiscard]] inline InputFormat format_from_path(std::string_view path) {
  return path.size() >= 4 && path.substr(path.size() - 4) == ".csv" ? InputFormat::csv : InputFormat::jsonl;
}

struct RowIssue {
  std::size_t line = 0;
  std::string reason;
  std::string detail;
};

struct ValidationReport {
  std::size_t rows_read = 0;
  std::size_t rows_accepted = 0;
  std::size_t rows_rejected = 0;
  std::map<std::string, std::size_t> rejection_reasons;
  std::vector<RowIssue> issues;  // first kMaxIssues rejections, in file order

  static constexpr std::size_t kMaxIssues = 50;

  void reject(std::size_t line, std::string reason, std::string detail) {
    ++rows_rejected;
    ++rejection_reasons[reason];
    if (issues.size() < kMaxIssues) issues.push_back({line, std::move(reason), std::move(detail)});
  }

  [[nodiscard]] nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["rows_read"] = rows_read;
    j["rows_accepted"] = rows_accepted;
    j["rows_rejected"] = rows_rejected;
    j["rejection_reasons"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : rejection_reasons) j["rejection_reasons"][k] = v;
    j["issues"] = nlohmann::ordered_json::array();
    for (const auto& i : issues) j["issues"].push_back({{"line", i.line}, {"reason", i.reason}, {"detail", i.detail}});
    return j;
  }
};

struct LoadResult {
  std::vector<InteractionEvent> events;
  ValidationReport report;
};

namespace detail {

// A field as it appeared in the row, before typing.
struct RawField {
  enum class Kind { absent, null, text, number } kind = Kind::absent;
  std::string text;
  double number = 0.0;

  [[nodiscard]] bool missing() const { return kind == Kind::absent || kind == Kind::null || (kind == Kind::text && text.empty()); }
};

struct RawRow {
  RawField event_id, user_id, community_id, platform, kind, parent_post_id, timestamp, toxicity, sentiment;

  RawField* field(std::string_view name) {
    if (name == "event_id") return &event_id;
    if (name == "user_id") return &user_id;
    if (name == "community_id") return &community_id;
    if (name == "platform") return &platform;
    if (name == "kind") return &kind;
    if (name == "parent_post_id") return &parent_post_id;
    if (name == "timestamp") return &timestamp;
    if (name == "toxicity") return &toxicity;
    if (name == "sentiment") return &sentiment;
    return nullptr;
  }
};

struct RowError {
  std::string reason;
  std::string detail;
};

inline std::optional<Timestamp> parse_timestamp(const RawField& f) {
  if (f.kind == RawField::Kind::number) {
    if (!std::isfinite(f.number) || f.number != std::floor(f.number) || f.number < 0 || f.number > 9.0e15)
      return std::nullopt;
    return static_cast<Timestamp>(f.number);
  }
  std::string_view s = f.text;
  bool digits = !s.empty();
  for (char c : s) digits = digits && c >= '0' && c <= '9';
  if (digits) {
    Timestamp t = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), t);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return t;
  }
  auto t = parse_iso8601(s);
  if (!t || *t < 0) return std::nullopt;
  return t;
}

// nullopt = absent; throws RowError on a non-numeric value.
inline std::optional<double> parse_score(const RawField& f, const char* name) {
  if (f.missing()) return std::nullopt;
  double v = 0.0;
  if (f.kind == RawField::Kind::number) {
    v = f.number;
  } else {
    const char* b = f.text.data();
    const char* e = b + f.text.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e) throw RowError{"invalid_number", std::string(name) + "='" + f.text + "'"};
  }
  if (!std::isfinite(v)) throw RowError{"invalid_number", std::string(name) + " is not finite"};
  return v;
}

inline std::string describe(const RawField& f) {
  if (f.kind == RawField::Kind::number) {
    std::ostringstream os;
    os << f.number;
    return os.str();
  }
  return f.text;
}

// Validates one raw row into an event; throws RowError with a reason code.
inline InteractionEvent to_event(const RawRow& row) {
  for (const auto* f : {&row.event_id, &row.user_id, &row.community_id, &row.kind, &row.timestamp}) {
    if (f->missing()) {
      const char* name = f == &row.event_id       ? "event_id"
                         : f == &row.user_id      ? "user_id"
                         : f == &row.community_id ? "community_id"
                         : f == &row.kind         ? "kind"
                                                  : "timestamp";
      throw RowError{"missing_field", name};
    }
  }
  for (const auto* f : {&row.event_id, &row.user_id, &row.community_id, &row.kind}) {
    if (f->kind != RawField::Kind::text) throw RowError{"malformed_row", "identifier fields must be strings"};
  }
  InteractionEvent ev;
  ev.event_id = row.event_id.text;
  ev.user_id = row.user_id.text;
  ev.community_id = row.community_id.text;

  if (row.kind.text == "post") {
    ev.kind = EventKind::post;
  } else if (row.kind.text == "comment") {
    ev.kind = EventKind::comment;
  } else {
    throw RowError{"invalid_kind", row.kind.text};
  }

  if (!row.platform.missing()) {
    const std::string& p = row.platform.text;
    if (row.platform.kind != RawField::Kind::text) throw RowError{"invalid_platform", describe(row.platform)};
    if (p == "receiver" || p == "voat") {
      ev.platform = Platform::receiver;
    } else if (p == "source" || p == "reddit") {
      ev.platform = Platform::source;
    } else {
      throw RowError{"invalid_platform", p};
    }
  }

  auto ts = parse_timestamp(row.timestamp);
  if (!ts) throw RowError{"invalid_timestamp", describe(row.timestamp)};
  ev.timestamp = *ts;

  if (ev.kind == EventKind::comment) {
    if (row.parent_post_id.missing()) throw RowError{"missing_parent", ev.event_id};
    if (row.parent_post_id.kind != RawField::Kind::text) throw RowError{"malformed_row", "parent_post_id must be a string"};
    ev.parent_post_id = row.parent_post_id.text;
  } else if (!row.parent_post_id.missing()) {
    throw RowError{"unexpected_parent", ev.event_id};
  }

  ev.toxicity = parse_score(row.toxicity, "toxicity");
  if (ev.toxicity && (*ev.toxicity < 0.0 || *ev.toxicity > 1.0))
    throw RowError{"toxicity_range", "toxicity=" + describe(row.toxicity)};
  ev.sentiment = parse_score(row.sentiment, "sentiment");
  if (ev.sentiment && (*ev.sentiment < -1.0 || *ev.sentiment > 1.0))
    throw RowError{"sentiment_range", "sentiment=" + describe(row.sentiment)};
  return ev;
}

inline RawRow parse_json_row(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw RowError{"malformed_row", "not a JSON object"};
  RawRow row;
  for (auto it = j.begin(); it != j.end(); ++it) {
    RawField* f = row.field(it.key());
    if (f == nullptr) continue;
    const auto& v = it.value();
    if (v.is_null()) {
      f->kind = RawField::Kind::null;
    } else if (v.is_string()) {
      f->kind = RawField::Kind::text;
      f->text = v.get<std::string>();
    } else if (v.is_number()) {
      f->kind = RawField::Kind::number;
      f->number = v.get<double>();
    } else {
      throw RowError{"malformed_row", "field '" + it.key() + "' has unsupported type"};
    }
  }
  return row;
}

// RFC 4180 field splitting for a single physical line (no embedded newlines).
inline std::optional<std::vector<std::string>> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      if (!cur.empty() || was_quoted) return std::nullopt;
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else {
      if (was_quoted) return std::nullopt;
      cur.push_back(c);
    }
  }
  if (quoted) return std::nullopt;
  out.push_back(std::move(cur));
  return out;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline bool blank(std::string_view s) { return s.find_first_not_of(" \t") == std::string_view::npos; }

}  // namespace detail

// Reads events from a stream. Rows are validated independently; in strict mode the first
// malformed row raises DataError naming its line, otherwise it is counted and skipped.
// Duplicate event ids keep the first occurrence.
[[nodiscard]] inline LoadResult parse_events(std::istream& in, InputFormat format, bool strict) {
  LoadResult result;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  bool have_header = format != InputFormat::csv;

  auto fail = [&](std::size_t ln, detail::RowError err) {
    if (strict) throw DataError("line " + std::to_string(ln) + ": " + err.reason + " (" + err.detail + ")");
    result.report.reject(ln, std::move(err.reason), std::move(err.detail));
  };

  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (detail::blank(line)) continue;

    if (!have_header) {
      auto cols = detail::split_csv(line);
      if (!cols) throw DataError("line 1: unreadable CSV header");
      header = std::move(*cols);
      for (auto& h : header) {
        while (!h.empty() && (h.back() == ' ' || h.back() == '\t')) h.pop_back();
        while (!h.empty() && (h.front() == ' ' || h.front() == '\t')) h.erase(0, 1);
      }
      have_header = true;
      continue;
    }

    ++result.report.rows_read;
    try {
      detail::RawRow row;
      if (format == InputFormat::jsonl) {
        row = detail::parse_json_row(line);
      } else {
        auto cols = detail::split_csv(line);
        if (!cols) throw detail::RowError{"malformed_row", "bad CSV quoting"};
        if (cols->size() != header.size())
          throw detail::RowError{"malformed_row", "expected " + std::to_string(header.size()) + " columns, got " +
                                                      std::to_string(cols->size())};
        for (std::size_t i = 0; i < header.size(); ++i) {
          detail::RawField* f = row.field(header[i]);
          if (f == nullptr) continue;
          f->kind = detail::RawField::Kind::text;
          f->text = std::move((*cols)[i]);
        }
      }
      InteractionEvent ev = detail::to_event(row);
      if (!seen_ids.insert(ev.event_id).second) throw detail::RowError{"duplicate_id", ev.event_id};
      result.events.push_back(std::move(ev));
      ++result.report.rows_accepted;
    } catch (detail::RowError& err) {
      fail(line_no, std::move(err));
    }
  }
  if (in.bad()) throw IoError("read failure");
  return result;
}

[[nodiscard]] inline nlohmann::ordered_json to_json(const InteractionEvent& ev) {
  nlohmann::ordered_json j;
  j["event_id"] = ev.event_id;
  j["user_id"] = ev.user_id;
  j["community_id"] = ev.community_id;
  j["platform"] = to_string(ev.platform);
  j["kind"] = to_string(ev.kind);
  if (ev.parent_post_id) j["parent_post_id"] = *ev.parent_post_id;
  j["timestamp"] = ev.timestamp;
  if (ev.toxicity) j["toxicity"] = *ev.toxicity;
  if (ev.sentiment) j["sentiment"] = *ev.sentiment;
  return j;
}

// One JSON object per line, in the schema parse_events reads.
inline void write_jsonl(std::ostream& os, const std::vector<InteractionEvent>& events) {
  for (const auto& ev : events) os << to_json(ev).dump() << '\n';
}

// Loads one event log. Throws IoError when the file cannot be opened.
[[nodiscard]] inline LoadResult load_events(const std::string& path, InputFormat format, bool strict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open event log: " + path);
  try {
    return parse_events(in, format, strict);
  } catch (const IoError&) {
    throw IoError("read failure: " + path);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// Loads several logs in order; event ids must be unique across files (later duplicates rejected).
[[nodiscard]] inline LoadResult load_all(const std::vector<std::pair<std::string, InputFormat>>& inputs, bool strict) {
  LoadResult all;
  std::unordered_set<std::string> ids;
  for (const auto& [path, fmt] : inputs) {
    LoadResult part = load_events(path, fmt, strict);
    all.report.rows_read += part.report.rows_read;
    for (const auto& [k, v] : part.report.rejection_reasons) all.report.rejection_reasons[k] += v;
    all.report.rows_rejected += part.report.rows_rejected;
    for (const auto& i : part.report.issues) {
      if (all.report.issues.size() < ValidationReport::kMaxIssues) all.report.issues.push_back(i);
    }
    for (auto& ev : part.events) {
      if (!ids.insert(ev.event_id).second) {
        if (strict) throw DataError(path + ": duplicate_id across files (" + ev.event_id + ")");
        all.report.reject(0, "duplicate_id", ev.event_id);
        continue;
      }
      ++all.report.rows_accepted;
      all.events.push_back(std::move(ev));
    }
  }
  return all;
}

}  // namespace cohortnet
