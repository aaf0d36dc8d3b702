#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cohortnet/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Cohort interaction networks, reputation and breakpoint analysis"};
  app.require_subcommand(1);

  cohortnet::CommandOptions o;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "Run configuration file");
    cmd->add_option("--input", o.inputs, "Event log path(s); overrides [input] paths");
    cmd->add_option("--format", o.format, "Input format: jsonl, csv or auto");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--seed", o.seed, "Bootstrap seed; overrides the config");
    cmd->add_flag("--strict", o.strict, "Abort on the first invalid row");
    cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };
  const auto add_breakpoint_flags = [&](CLI::App* cmd) {
    cmd->add_flag("--smoothed", o.smoothed, "Fit breakpoints on smoothed series");
    cmd->add_option("--fit", o.fit, "Segmented fit variant")->check(CLI::IsMember({"independent", "continuous"}));
  };

  auto* validate = app.add_subcommand("validate", "Check event logs; exit 0 iff no row is rejected");
  add_common(validate);
  auto* metrics = app.add_subcommand("metrics", "Write monthly metric series as CSV");
  add_common(metrics);
  auto* breakpoints = app.add_subcommand("breakpoints", "Write per-series breakpoint estimates as CSV");
  add_common(breakpoints);
  add_breakpoint_flags(breakpoints);
  auto* report = app.add_subcommand("report", "Write all CSVs plus a Markdown report and JSON bundle");
  add_common(report);
  add_breakpoint_flags(report);
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus from a scenario file");
  synth->add_option("--scenario", o.scenario, "Scenario file")->required();
  synth->add_option("--config", o.config, "Unused; accepted for symmetry");
  synth->add_option("--out", o.out, "Output directory");
  synth->add_option("--seed", o.seed, "Override the scenario seed");
  synth->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cohortnet::kExitDomain;
  }
  return cohortnet::run_command(app.get_subcommands().front()->get_name(), o);
}
