#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cohortnet/error.hpp"
#include "cohortnet/events.hpp"
#include "cohortnet/pipeline.hpp"
#include "cohortnet/synth.hpp"

namespace cohortnet {

// Sectioned key = value text. Lines starting with '#' or ';' are comments, as is anything
// after " #" on a value line. Keys are unique within a section and keep file order.
class IniFile {
 public:
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
  };
  struct Section {
    std::string name;
    std::vector<Entry> entries;

    [[nodiscard]] const Entry* find(std::string_view key) const {
      for (const auto& e : entries) {
        if (e.key == key) return &e;
      }
      return nullptr;
    }
  };

  static IniFile parse(std::istream& in, const std::string& origin = "config") {
    IniFile ini;
    ini.origin_ = origin;
    std::string raw;
    std::size_t line_no = 0;
    Section* current = nullptr;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string_view line = trim(raw);
      if (line_no == 1 && line.substr(0, 3) == "\xEF\xBB\xBF") line = trim(line.substr(3));
      if (line.empty() || line.front() == '#' || line.front() == ';') continue;
      if (line.front() == '[') {
        if (line.back() != ']') ini.fail(line_no, "unterminated section header");
        const std::string name(trim(line.substr(1, line.size() - 2)));
        if (name.empty()) ini.fail(line_no, "empty section name");
        if (ini.find(name) != nullptr) ini.fail(line_no, "duplicate section [" + name + "]");
        ini.sections_.push_back({name, {}});
        current = &ini.sections_.back();
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) ini.fail(line_no, "expected key = value");
      if (current == nullptr) ini.fail(line_no, "key outside of any section");
      std::string key(trim(line.substr(0, eq)));
      std::string_view value = line.substr(eq + 1);
      if (const auto hash = value.find(" #"); hash != std::string_view::npos) value = value.substr(0, hash);
      if (key.empty()) ini.fail(line_no, "empty key");
      if (current->find(key) != nullptr) ini.fail(line_no, "duplicate key '" + key + "'");
      current->entries.push_back({std::move(key), std::string(trim(value)), line_no});
    }
    return ini;
  }

  static IniFile load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    return parse(in, path.string());
  }

  [[nodiscard]] const Section* find(std::string_view name) const {
    for (const auto& s : sections_) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }
  [[nodiscard]] const std::vector<Section>& sections() const { return sections_; }
  [[nodiscard]] const std::string& origin() const { return origin_; }

  [[noreturn]] void fail(std::size_t line, const std::string& msg) const {
    throw DataError(origin_ + ":" + std::to_string(line) + ": " + msg);
  }

  static std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

 private:
  std::string origin_;
  std::vector<Section> sections_;
};

namespace detail {

// Typed reads from one section; every key must be consumed, so typos are reported.
class SectionReader {
 public:
  SectionReader(const IniFile& ini, const IniFile::Section& s) : ini_(ini), s_(s) {}

  [[nodiscard]] const IniFile::Entry* get(std::string_view key) {
    const auto* e = s_.find(key);
    if (e != nullptr) used_.insert(e->key);
    return e;
  }

  template <typename T>
  void read(std::string_view key, T& out) {
    if (const auto* e = get(key)) out = convert<T>(*e);
  }

  std::vector<std::string> list(const IniFile::Entry& e) {
    std::vector<std::string> out;
    std::string_view rest = e.value;
    while (true) {
      const auto comma = rest.find(',');
      const auto item = IniFile::trim(rest.substr(0, comma));
      if (item.empty()) fail(e, "empty list item");
      out.emplace_back(item);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    return out;
  }

  template <typename T>
  T convert(const IniFile::Entry& e) {
    if constexpr (std::is_same_v<T, std::string>) {
      return e.value;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
      if (e.value == "false" || e.value == "no" || e.value == "0") return false;
      fail(e, "expected true or false");
    } else if constexpr (std::is_same_v<T, MonthKey>) {
      const auto m = parse_month(e.value);
      if (!m) fail(e, "expected YYYY-MM");
      return *m;
    } else if constexpr (std::is_integral_v<T>) {
      T v{};
      const auto* end = e.value.data() + e.value.size();
      const auto [p, ec] = std::from_chars(e.value.data(), end, v);
      if (ec != std::errc() || p != end) fail(e, "expected an integer");
      return v;
    } else {
      static_assert(std::is_floating_point_v<T>);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(e.value, &used);
      } catch (const std::exception&) {
        fail(e, "expected a number");
      }
      if (used != e.value.size() || !std::isfinite(v)) fail(e, "expected a number");
      return static_cast<T>(v);
    }
  }

  void finish() const {
    for (const auto& e : s_.entries) {
      if (!used_.count(e.key)) fail(e, "unknown key '" + e.key + "' in [" + s_.name + "]");
    }
  }

  [[noreturn]] void fail(const IniFile::Entry& e, const std::string& msg) const {
    ini_.fail(e.line, e.key + ": " + msg);
  }

 private:
  const IniFile& ini_;
  const IniFile::Section& s_;
  std::set<std::string> used_;
};

inline void check_sections(const IniFile& ini, std::initializer_list<std::string_view> known) {
  for (const auto& s : ini.sections()) {
    if (std::find(known.begin(), known.end(), s.name) == known.end()) {
      const std::size_t line = s.entries.empty() ? 0 : s.entries.front().line;
      ini.fail(line, "unknown section [" + s.name + "]");
    }
  }
}

}  // namespace detail

struct InputSpec {
  std::string path;
  InputFormat format = InputFormat::jsonl;
};

struct RunConfig {
  std::vector<InputSpec> inputs;
  bool strict = false;
  PipelineOptions pipeline;
  BreakpointSettings breakpoints;
  bool seed_set = false;
  std::string output_dir = "out";
  std::size_t jobs = 1;
  std::optional<std::string> ground_truth;

  // Paths that must exist before any command runs.
  void check_paths() const {
    for (const auto& in : inputs) {
      if (!std::filesystem::exists(in.path)) throw IoError("input file not found: '" + in.path + "'");
    }
    if (ground_truth && !std::filesystem::exists(*ground_truth))
      throw IoError("ground truth file not found: '" + *ground_truth + "'");
  }

  void validate() const {
    if (inputs.empty()) throw DataError("config: no input paths");
    if (jobs == 0) throw DataError("config: jobs must be positive");
  }

  void validate_breakpoints() const {
    if (breakpoints.iterations > 0 && !seed_set) throw DataError("config: a seed is required when bootstrap iterations > 0");
    if (breakpoints.fit.min_seg < 2) throw DataError("config: min_seg must be at least 2");
    if (breakpoints.metrics.empty()) throw DataError("config: no breakpoint metrics");
  }
};

namespace detail {

inline std::string resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path.string() : (base / path).lexically_normal().string();
}

inline InputFormat read_format(SectionReader& r, const IniFile::Entry& e, const std::string& path) {
  if (e.value == "auto") return format_from_path(path);
  const auto f = parse_format(e.value);
  if (!f) r.fail(e, "expected jsonl, csv or auto");
  return *f;
}

}  // namespace detail

// Relative paths are resolved against `base_dir`, normally the config file's directory.
[[nodiscard]] inline RunConfig parse_run_config(const IniFile& ini, const std::filesystem::path& base_dir = {}) {
  detail::check_sections(ini, {"input", "bans", "cohorts", "reputation", "metrics", "breakpoints", "comparison",
                               "output", "run", "report"});
  RunConfig cfg;
  if (const auto* s = ini.find("input")) {
    detail::SectionReader r(ini, *s);
    std::vector<std::string> paths;
    if (const auto* e = r.get("paths")) paths = r.list(*e);
    const auto* fmt = r.get("format");
    for (const auto& p : paths) {
      const std::string path = detail::resolve(base_dir, p);
      cfg.inputs.push_back({path, fmt ? detail::read_format(r, *fmt, path) : format_from_path(path)});
    }
    r.read("strict", cfg.strict);
    r.finish();
  }
  if (const auto* s = ini.find("bans")) {
    std::vector<BanEvent> bans;
    for (const auto& e : s->entries) {
      const auto day = parse_date(e.value);
      if (!day) ini.fail(e.line, e.key + ": expected YYYY-MM-DD");
      bans.push_back({e.key, *day});
    }
    cfg.pipeline.cohorts.calendar = BanCalendar(std::move(bans));
  }
  if (const auto* s = ini.find("cohorts")) {
    detail::SectionReader r(ini, *s);
    if (const auto* e = r.get("scheme")) {
      if (e->value == "retrospective") cfg.pipeline.cohorts.scheme = CohortScheme::retrospective;
      else if (e->value == "rolling") cfg.pipeline.cohorts.scheme = CohortScheme::rolling;
      else r.fail(*e, "expected retrospective or rolling");
    }
    r.read("window_months", cfg.pipeline.cohorts.window_months);
    if (cfg.pipeline.cohorts.window_months < 1) throw DataError("config: cohorts.window_months must be positive");
    r.finish();
  }
  if (const auto* s = ini.find("reputation")) {
    detail::SectionReader r(ini, *s);
    auto& p = cfg.pipeline.reputation;
    r.read("enabled", cfg.pipeline.reputation_enabled);
    r.read("base_increment", p.base_increment);
    r.read("streak_gain", p.streak_gain);
    r.read("forgetting", p.forgetting);
    r.read("gap_threshold_seconds", p.gap_threshold);
    r.read("decay_unit_seconds", p.decay_unit);
    r.read("floor", cfg.pipeline.reputation_floor);
    r.read("active_threshold", cfg.pipeline.reputation_active_threshold);
    r.finish();
  }
  if (const auto* s = ini.find("metrics")) {
    detail::SectionReader r(ini, *s);
    if (const auto* e = r.get("hub_tops")) {
      cfg.pipeline.hub_tops.clear();
      for (const auto& item : r.list(*e)) cfg.pipeline.hub_tops.push_back(r.convert<double>({e->key, item, e->line}));
    }
    r.read("smoothing_window", cfg.pipeline.smoothing_window);
    r.finish();
  }
  if (const auto* s = ini.find("breakpoints")) {
    detail::SectionReader r(ini, *s);
    auto& b = cfg.breakpoints;
    if (const auto* e = r.get("metrics")) b.metrics = r.list(*e);
    r.read("min_seg", b.fit.min_seg);
    r.read("iterations", b.iterations);
    if (const auto* e = r.get("seed")) {
      b.seed = r.convert<std::uint64_t>(*e);
      cfg.seed_set = true;
    }
    if (const auto* e = r.get("fit")) {
      if (e->value == "independent") b.fit.variant = FitVariant::independent;
      else if (e->value == "continuous") b.fit.variant = FitVariant::continuous;
      else r.fail(*e, "expected independent or continuous");
    }
    if (const auto* e = r.get("input")) {
      if (e->value == "raw") b.smoothed = false;
      else if (e->value == "smoothed") b.smoothed = true;
      else r.fail(*e, "expected raw or smoothed");
    }
    r.read("stability_window", b.stability_window);
    r.read("near_window", b.near_window);
    r.finish();
  }
  if (const auto* s = ini.find("comparison")) {
    detail::SectionReader r(ini, *s);
    r.read("window_start", cfg.pipeline.comparison.first);
    r.read("window_end", cfg.pipeline.comparison.last);
    if (cfg.pipeline.comparison.last < cfg.pipeline.comparison.first)
      throw DataError("config: comparison window ends before it starts");
    r.finish();
  }
  if (const auto* s = ini.find("output")) {
    detail::SectionReader r(ini, *s);
    if (const auto* e = r.get("dir")) cfg.output_dir = detail::resolve(base_dir, e->value);
    r.finish();
  } else {
    cfg.output_dir = detail::resolve(base_dir, cfg.output_dir);
  }
  if (const auto* s = ini.find("run")) {
    detail::SectionReader r(ini, *s);
    r.read("jobs", cfg.jobs);
    r.finish();
  }
  if (const auto* s = ini.find("report")) {
    detail::SectionReader r(ini, *s);
    if (const auto* e = r.get("ground_truth")) cfg.ground_truth = detail::resolve(base_dir, e->value);
    r.finish();
  }
  return cfg;
}

[[nodiscard]] inline RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(IniFile::load(path), path.parent_path());
}

// [scenario] scalars, [bans] months = YYYY-MM list, [regimes] per-regime lists.
// Toxicity entries are "mean:spread".
[[nodiscard]] inline ScenarioConfig parse_scenario(const IniFile& ini) {
  detail::check_sections(ini, {"scenario", "bans", "regimes"});
  ScenarioConfig cfg;
  if (const auto* s = ini.find("scenario")) {
    detail::SectionReader r(ini, *s);
    r.read("community", cfg.community);
    r.read("start", cfg.start);
    r.read("months", cfg.months);
    r.read("existing_pool", cfg.existing_pool);
    r.read("newcomer_wave_size", cfg.newcomer_wave_size);
    r.read("posts_per_month", cfg.posts_per_month);
    r.read("comments_per_post", cfg.comments_per_post);
    r.read("seed", cfg.seed);
    r.finish();
  }
  if (const auto* s = ini.find("bans")) {
    detail::SectionReader r(ini, *s);
    if (const auto* e = r.get("months")) {
      for (const auto& item : r.list(*e)) cfg.ban_months.push_back(r.convert<MonthKey>({e->key, item, e->line}));
    }
    r.finish();
  }
  if (const auto* s = ini.find("regimes")) {
    detail::SectionReader r(ini, *s);
    if (const auto* e = r.get("p_cross")) {
      for (const auto& item : r.list(*e)) cfg.p_cross.push_back(r.convert<double>({e->key, item, e->line}));
    }
    for (auto [key, out] : {std::pair{"toxicity_existing", &cfg.toxicity_existing},
                            std::pair{"toxicity_newcomer", &cfg.toxicity_newcomer}}) {
      const auto* e = r.get(key);
      if (e == nullptr) continue;
      for (const auto& item : r.list(*e)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) r.fail(*e, "expected mean:spread");
        out->push_back({r.convert<double>({e->key, item.substr(0, colon), e->line}),
                        r.convert<double>({e->key, item.substr(colon + 1), e->line})});
      }
    }
    r.finish();
  }
  cfg.validate();
  return cfg;
}

[[nodiscard]] inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
  return parse_scenario(IniFile::load(path));
}

}  // namespace cohortnet
