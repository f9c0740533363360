#pragma once
// Post-session analysis: the cohort summary report and the per-tick
// raw/compensated/rendered force table with contact intervals.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wristhap/trial.hpp"

namespace wristhap::gateway {

nlohmann::json summary_to_json(const trial::StudySummary& s);

/// Writes summary.json and summary.csv into `dir`.
void write_summary(const std::filesystem::path& dir, const trial::StudySummary& s);

struct Fig6Row {
  std::uint64_t tick = 0;
  double t = 0.0;
  double raw_N = 0.0;          // |raw sensor force|
  double compensated_N = 0.0;  // |compensated force|, before the filter
  double filtered_N = 0.0;     // |compensated force| after the filter
  double rendered_N = 0.0;     // |scaled haptic command|
  bool contact = false;        // ground truth
};

struct ContactInterval {
  double t_start = 0.0;
  double t_end = 0.0;  // time of the last in-contact row
};

struct Fig6Export {
  std::vector<Fig6Row> rows;
  std::vector<ContactInterval> intervals;
  bool truncated = false;
  std::string warning;
};

/// Reads a telemetry log. A malformed or cut-off row ends the export early
/// with `truncated` set and a warning naming the line.
Fig6Export export_fig6(const std::filesystem::path& telemetry_log);

/// Writes `<stem>.csv` (per-tick table) and `<stem>_intervals.csv`.
void write_fig6(const std::filesystem::path& stem, const Fig6Export& e);

}  // namespace wristhap::gateway
