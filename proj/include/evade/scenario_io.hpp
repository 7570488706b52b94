#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "evade/simulator.hpp"

namespace evade {

/// Parse or validation failure.  The message starts with the offending path,
/// e.g. "obstacles[0].footprint.width: must be > 0".
class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EmitFlags {
  bool timeseries = true;
  bool envelope = true;
  bool qp_dump = false;
  bool summary = true;
};

struct RunConfig {
  std::filesystem::path scenario;
  std::filesystem::path out_dir = "out";
  std::optional<double> dt;
  std::optional<double> ts;
  bool deterministic = true;  // reserved: runs have no random inputs
  EmitFlags emit;

  /// Throws ScenarioError unless dt divides ts to within 1e-9.
  void validate(const ScenarioSpec& spec) const;
  SimOptions options() const { return {dt, ts, std::nullopt}; }
};

/// JSON scenario text to a validated spec.  An "include" key names a file, resolved
/// against base_dir, whose content is deep-merged underneath this document.
ScenarioSpec parse_scenario(const std::string& text, const std::filesystem::path& base_dir = {});

/// Reads and parses a file.  The scenario name defaults to the file stem.
ScenarioSpec load_scenario(const std::filesystem::path& path);

/// Fully expanded JSON (no include) that parses back to the same spec.
std::string serialize_scenario(const ScenarioSpec& spec);

/// "%.6g" with negative zero folded to "0".
std::string format_number(double value);

std::string timeseries_csv(const SimLog& log);
std::string envelope_csv(const SimLog& log);
std::string summary_json(const SimLog& log);
std::string qp_dump_json(const SimLog& log);

/// Writes the selected files under config.out_dir.  Throws std::runtime_error naming
/// the path on I/O failure.
void emit(const SimLog& log, const RunConfig& config);

/// One line of the batch table, and its header.
std::string batch_header();
std::string batch_row(const std::string& scenario, const SimLog& log);

}  // namespace evade
