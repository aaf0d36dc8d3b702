#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cohortnet/config.hpp"
#include "cohortnet/error.hpp"
#include "cohortnet/events.hpp"
#include "cohortnet/pipeline.hpp"
#include "cohortnet/report.hpp"
#include "cohortnet/synth.hpp"

namespace cohortnet {

enum ExitCode : int { kExitOk = 0, kExitDomain = 1, kExitIo = 2 };

// Command-line overrides applied on top of the config file.
struct CommandOptions {
  std::optional<std::string> config;
  std::vector<std::string> inputs;
  std::optional<std::string> format;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  bool smoothed = false;
  std::optional<std::string> fit;
  std::optional<std::size_t> jobs;
  std::optional<std::string> scenario;
};

[[nodiscard]] inline RunConfig resolve_config(const CommandOptions& o) {
  RunConfig cfg = o.config ? load_run_config(*o.config) : RunConfig{};
  std::optional<InputFormat> fmt;
  if (o.format && *o.format != "auto") {
    fmt = parse_format(*o.format);
    if (!fmt) throw DataError("unknown format '" + *o.format + "' (expected jsonl, csv or auto)");
  }
  if (!o.inputs.empty()) {
    cfg.inputs.clear();
    for (const auto& p : o.inputs) cfg.inputs.push_back({p, fmt.value_or(format_from_path(p))});
  } else if (fmt) {
    for (auto& in : cfg.inputs) in.format = *fmt;
  }
  if (o.out) cfg.output_dir = *o.out;
  if (o.seed) {
    cfg.breakpoints.seed = *o.seed;
    cfg.seed_set = true;
  }
  if (o.strict) cfg.strict = true;
  if (o.smoothed) cfg.breakpoints.smoothed = true;
  if (o.fit) {
    if (*o.fit == "independent") cfg.breakpoints.fit.variant = FitVariant::independent;
    else if (*o.fit == "continuous") cfg.breakpoints.fit.variant = FitVariant::continuous;
    else throw DataError("unknown fit '" + *o.fit + "' (expected independent or continuous)");
  }
  if (o.jobs) cfg.jobs = *o.jobs;
  cfg.pipeline.workers = cfg.jobs;
  cfg.validate();
  cfg.check_paths();
  return cfg;
}

namespace detail {

inline LoadResult load_inputs(const RunConfig& cfg) {
  std::vector<std::pair<std::string, InputFormat>> inputs;
  for (const auto& in : cfg.inputs) inputs.emplace_back(in.path, in.format);
  return load_all(inputs, cfg.strict);
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory '" + dir + "'");
}

template <typename Fn>
void write_file(const std::string& dir, const std::string& name, Fn&& fn) {
  const auto path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  fn(out);
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline void note_rejections(const ValidationReport& report, std::ostream& err) {
  if (report.rows_rejected > 0)
    err << "warning: " << report.rows_rejected << " of " << report.rows_read << " rows rejected\n";
}

inline const std::vector<std::string>& metric_files() {
  static const std::vector<std::string> files{"metrics.csv", "corpus.csv", "platform.csv", "reputation_daily.csv",
                                              "reputation_monthly.csv"};
  return files;
}

inline void write_metric_files(const std::string& dir, const MetricsResult& m) {
  write_file(dir, "metrics.csv", [&](std::ostream& os) { write_metrics_csv(os, m); });
  write_file(dir, "corpus.csv", [&](std::ostream& os) { write_corpus_csv(os, m); });
  write_file(dir, "platform.csv", [&](std::ostream& os) { write_platform_csv(os, m); });
  write_file(dir, "reputation_daily.csv", [&](std::ostream& os) { write_reputation_daily_csv(os, m); });
  write_file(dir, "reputation_monthly.csv", [&](std::ostream& os) { write_reputation_monthly_csv(os, m); });
}

inline GroundTruth read_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ground truth '" + path + "'");
  try {
    return GroundTruth::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("ground truth '" + path + "': " + e.what());
  }
}

}  // namespace detail

// Check-only ingestion; success iff no row is rejected.
inline int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto loaded = detail::load_inputs(cfg);
  out << loaded.report.to_json().dump(2) << '\n';
  return loaded.report.rows_rejected == 0 ? kExitOk : kExitDomain;
}

inline int cmd_metrics(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto loaded = detail::load_inputs(cfg);
  detail::note_rejections(loaded.report, err);
  const auto metrics = compute_metrics(loaded.events, cfg.pipeline);
  detail::ensure_dir(cfg.output_dir);
  detail::write_metric_files(cfg.output_dir, metrics);
  out << "wrote " << metrics.series.size() << " series to " << cfg.output_dir << '\n';
  return kExitOk;
}

inline int cmd_breakpoints(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cfg.validate_breakpoints();
  const auto loaded = detail::load_inputs(cfg);
  detail::note_rejections(loaded.report, err);
  const auto metrics = compute_metrics(loaded.events, cfg.pipeline);
  const auto rows = run_breakpoints(metrics, cfg.breakpoints, cfg.pipeline.cohorts.calendar, cfg.jobs);
  detail::ensure_dir(cfg.output_dir);
  detail::write_file(cfg.output_dir, "breakpoints.csv", [&](std::ostream& os) {
    write_breakpoints_csv(os, rows, cfg.pipeline.cohorts.calendar, cfg.breakpoints);
  });
  out << "wrote " << rows.size() << " breakpoint rows to " << cfg.output_dir << '\n';
  return kExitOk;
}

inline int cmd_report(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cfg.validate_breakpoints();
  std::optional<GroundTruth> truth;
  if (cfg.ground_truth) truth = detail::read_ground_truth(*cfg.ground_truth);
  const auto loaded = detail::load_inputs(cfg);
  detail::note_rejections(loaded.report, err);
  const auto metrics = compute_metrics(loaded.events, cfg.pipeline);
  const auto& calendar = cfg.pipeline.cohorts.calendar;
  const auto rows = run_breakpoints(metrics, cfg.breakpoints, calendar, cfg.jobs);

  detail::ensure_dir(cfg.output_dir);
  detail::write_metric_files(cfg.output_dir, metrics);
  detail::write_file(cfg.output_dir, "breakpoints.csv",
                     [&](std::ostream& os) { write_breakpoints_csv(os, rows, calendar, cfg.breakpoints); });
  auto files = detail::metric_files();
  files.insert(files.end(), {"breakpoints.csv", "report.md", "report.json"});
  const ReportInputs in{metrics, rows, calendar, cfg.breakpoints, truth, files};
  detail::write_file(cfg.output_dir, "report.md", [&](std::ostream& os) { os << render_markdown(in); });
  detail::write_file(cfg.output_dir, "report.json", [&](std::ostream& os) { os << report_json(in).dump(2) << '\n'; });
  out << "wrote report to " << cfg.output_dir << '\n';
  return kExitOk;
}

// Writes corpus.jsonl, ground_truth.json and a run.conf that analyses them.
inline int cmd_synth(const CommandOptions& o, std::ostream& out, std::ostream&) {
  if (!o.scenario) throw DataError("synth needs --scenario");
  ScenarioConfig scenario = load_scenario(*o.scenario);
  if (o.seed) scenario.seed = *o.seed;
  const std::string dir = o.out.value_or("synth_out");
  const auto corpus = generate(scenario, o.jobs.value_or(1));
  detail::ensure_dir(dir);
  detail::write_file(dir, "corpus.jsonl", [&](std::ostream& os) { write_jsonl(os, corpus.events); });
  detail::write_file(dir, "ground_truth.json",
                     [&](std::ostream& os) { os << corpus.truth.to_json().dump(2) << '\n'; });
  detail::write_file(dir, "run.conf", [&](std::ostream& os) {
    os << "# Analysis of a generated scenario; paths are relative to this file.\n\n";
    os << "[input]\npaths = corpus.jsonl\nformat = jsonl\n\n[bans]\n";
    for (const auto& b : corpus.truth.calendar.entries()) os << b.label << " = " << format_date(b.day) << '\n';
    os << "\n[breakpoints]\nmetrics = ei_index, existing_gini, degree_assortativity, toxicity_mean, reputation_mean\n";
    os << "iterations = 200\nseed = " << scenario.seed << "\n\n";
    os << "[output]\ndir = results\n\n[report]\nground_truth = ground_truth.json\n";
  });
  out << "wrote " << corpus.events.size() << " events to " << dir << '\n';
  return kExitOk;
}

// Runs one subcommand and maps failures to exit codes: 1 for domain errors, 2 for I/O.
inline int run_command(const std::string& name, const CommandOptions& o, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  try {
    if (name == "synth") return cmd_synth(o, out, err);
    const RunConfig cfg = resolve_config(o);
    if (name == "validate") return cmd_validate(cfg, out, err);
    if (name == "metrics") return cmd_metrics(cfg, out, err);
    if (name == "breakpoints") return cmd_breakpoints(cfg, out, err);
    if (name == "report") return cmd_report(cfg, out, err);
    err << "error: unknown command '" << name << "'\n";
    return kExitDomain;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
}

}  // namespace cohortnet
