// evade: run, batch-run, validate and self-check emergency evasion scenarios.
//
// Exit codes: 0 clean run, 1 parse/config error, 2 collision detected.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include "evade/scenario_io.hpp"
#include "evade/simulator.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kCollision = 2;

evade::EmitFlags parse_emit(const std::vector<std::string>& names) {
  if (names.empty()) return {};
  evade::EmitFlags f{false, false, false, false};
  for (const auto& n : names) {
    if (n == "timeseries") f.timeseries = true;
    else if (n == "envelope") f.envelope = true;
    else if (n == "qp_dump") f.qp_dump = true;
    else if (n == "summary") f.summary = true;
    else if (n == "all") f = {true, true, true, true};
    else throw evade::ScenarioError("--emit: unknown output '" + n + "'");
  }
  return f;
}

void print_summary(const evade::SimLog& log) {
  const auto& s = log.summary;
  std::printf("%s: collision=%s min_gap=%s final_gap=%s max_abs_ay=%s final_v=%s\n",
              log.scenario.c_str(), s.collision ? "true" : "false",
              evade::format_number(s.min_gap).c_str(), evade::format_number(s.final_gap).c_str(),
              evade::format_number(s.max_abs_ay).c_str(), evade::format_number(s.final_v).c_str());
  for (const auto& [t, mode] : s.timeline) {
    std::printf("  t=%s %s\n", evade::format_number(t).c_str(), mode.c_str());
  }
  for (const auto& f : log.planner_failures) std::printf("  planner: %s\n", f.c_str());
}

struct BatchResult {
  std::string name;
  std::string row;
  std::string error;
  bool collision = false;
};

BatchResult run_one(const fs::path& file, const fs::path& out_root, const evade::EmitFlags& emit) {
  BatchResult r;
  r.name = file.stem().string();
  try {
    const auto spec = evade::load_scenario(file);
    evade::RunConfig cfg;
    cfg.scenario = file;
    cfg.out_dir = out_root / r.name;
    cfg.emit = emit;
    cfg.validate(spec);
    const auto log = evade::run(spec, cfg.options());
    evade::emit(log, cfg);
    r.row = evade::batch_row(r.name, log);
    r.collision = log.summary.collision;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emergency braking and evasive steering scenario simulator"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out_dir;
  std::optional<double> dt, ts;
  std::vector<std::string> emit_names;
  bool baseline = false;
  bool quiet = false;
  auto* run_cmd = app.add_subcommand("run", "Simulate one scenario and write its logs");
  run_cmd->add_option("scenario", scenario, "Scenario JSON file")->required();
  run_cmd->add_option("--out", out_dir, "Output directory (default out/<scenario>)");
  run_cmd->add_option("--dt", dt, "Simulation step [s]");
  run_cmd->add_option("--ts", ts, "Planner step [s]");
  run_cmd->add_option("--emit", emit_names, "Outputs: timeseries envelope qp_dump summary all")
      ->delimiter(',');
  run_cmd->add_flag("--baseline", baseline, "Disable the assistance system (no-action run)");
  run_cmd->add_flag("-q,--quiet", quiet, "Do not print the summary");

  std::string batch_dir;
  std::string batch_out = "out";
  auto* batch_cmd = app.add_subcommand("batch", "Run every scenario in a directory");
  batch_cmd->add_option("dir", batch_dir, "Directory of scenario files")->required();
  batch_cmd->add_option("--out", batch_out, "Output root");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Parse and validate a scenario file");
  validate_cmd->add_option("scenario", validate_path, "Scenario JSON file")->required();

  std::uint64_t seed = 20240611;
  int instances = 200;
  auto* selftest_cmd = app.add_subcommand("selftest", "Run the builtin invariant and oracle checks");
  selftest_cmd->add_option("--seed", seed, "Random seed for generated instances");
  selftest_cmd->add_option("--instances", instances, "Number of random QP instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*run_cmd) {
    try {
      const auto spec = evade::load_scenario(scenario);
      evade::RunConfig cfg;
      cfg.scenario = scenario;
      cfg.out_dir = out_dir.empty() ? fs::path("out") / spec.name : fs::path(out_dir);
      cfg.dt = dt;
      cfg.ts = ts;
      cfg.emit = parse_emit(emit_names);
      cfg.validate(spec);
      auto options = cfg.options();
      if (baseline) options.system_enabled = false;
      const auto log = evade::run(spec, options);
      evade::emit(log, cfg);
      if (!quiet) print_summary(log);
      return log.summary.collision ? kCollision : kOk;
    } catch (const std::invalid_argument& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kConfigError;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kConfigError;
    }
  }

  if (*batch_cmd) {
    std::vector<fs::path> files;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(batch_dir, ec)) {
      const auto& p = entry.path();
      if (p.extension() != ".json" || p.stem().string().rfind("defaults", 0) == 0) continue;
      files.push_back(p);
    }
    if (ec) {
      std::fprintf(stderr, "error: %s: %s\n", batch_dir.c_str(), ec.message().c_str());
      return kConfigError;
    }
    std::sort(files.begin(), files.end());
    std::vector<std::future<BatchResult>> jobs;
    for (const auto& f : files) {
      jobs.push_back(std::async(std::launch::async, run_one, f, fs::path(batch_out), evade::EmitFlags{}));
    }
    std::string table = evade::batch_header();
    int code = kOk;
    for (auto& j : jobs) {
      const BatchResult r = j.get();
      if (!r.error.empty()) {
        std::fprintf(stderr, "error: %s: %s\n", r.name.c_str(), r.error.c_str());
        code = kConfigError;
        continue;
      }
      table += r.row;
      std::fputs(r.row.c_str(), stdout);
      if (r.collision && code == kOk) code = kCollision;
    }
    fs::create_directories(batch_out, ec);
    std::ofstream out(fs::path(batch_out) / "batch.csv", std::ios::binary);
    if (!out) {
      std::fprintf(stderr, "error: %s: cannot write batch.csv\n", batch_out.c_str());
      return kConfigError;
    }
    out << table;
    return code;
  }

  if (*validate_cmd) {
    try {
      const auto spec = evade::load_scenario(validate_path);
      std::printf("ok: %s (%zu obstacle%s)\n", spec.name.c_str(), spec.obstacles.size(),
                  spec.obstacles.size() == 1 ? "" : "s");
      return kOk;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kConfigError;
    }
  }

  if (*selftest_cmd) {
    bool all = true;
    for (const auto& line : evade::oracle::run_selftest(seed, instances)) {
      std::printf("%s %s: %s\n", line.pass ? "PASS" : "FAIL", line.name.c_str(), line.detail.c_str());
      all = all && line.pass;
    }
    return all ? kOk : kConfigError;
  }
  return kOk;
}
