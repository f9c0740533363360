#pragma once
// Session artifacts on disk. Column-level schemas are in docs/formats.md.
//
//   commands.csv   operator input events, one row per change, for replay
//   trials.csv     session header, then per-trial blocks of samples and results
//   telemetry.csv  one row per control tick (optionally every Nth)

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "wristhap/jaw.hpp"
#include "wristhap/render.hpp"
#include "wristhap/sim.hpp"
#include "wristhap/trial.hpp"
#include "wristhap/world.hpp"

namespace wristhap::gateway {

// ---- command log -----------------------------------------------------------

enum class CommandType { kMove, kJaw, kFullOpen, kFullClose, kStart };

const char* to_string(CommandType t);

struct CommandEvent {
  std::uint64_t tick = 0;  // applied before the world step of this tick
  double t = 0.0;
  CommandType type = CommandType::kMove;
  sim::OperatorCommand move;                        // kMove
  sim::JawButton button = sim::JawButton::kReleased;  // kJaw
};

sim::JawButton parse_jaw_button(const std::string& s);

class CommandLogWriter {
 public:
  explicit CommandLogWriter(const std::filesystem::path& path);
  void write(const CommandEvent& e);
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

/// Throws ConfigError naming the line on malformed input.
std::vector<CommandEvent> read_command_log(const std::filesystem::path& path);

// ---- trial log -------------------------------------------------------------

struct TrialLogHeader {
  std::string participant;
  std::uint64_t seed = 0;
  double tick_rate_hz = 0.0;
  std::size_t trials = 0;
};

class TrialLogWriter {
 public:
  /// `wall_clock` goes on the single "meta" line, the only line allowed to
  /// differ between runs of the same session.
  TrialLogWriter(const std::filesystem::path& path, const TrialLogHeader& header, const std::string& wall_clock);
  void begin_trial(std::size_t index, std::uint64_t start_tick, const trial::TrialConfig& c);
  void sample(std::size_t index, const trial::ForceSample& s);
  void result(std::size_t index, const trial::TrialRecord& r);
  void end(std::size_t completed);

 private:
  std::ofstream out_;
};

struct TrialLog {
  TrialLogHeader header;
  std::vector<trial::TrialRecord> trials;
  bool complete = false;  // the end line was present
};

/// Recomputes every trial's metrics from its samples and throws
/// MalformedTrialError if they differ from the stored values.
TrialLog read_trial_log(const std::filesystem::path& path);

/// Lines of a trial log without the wall-clock "meta" line.
std::vector<std::string> deterministic_lines(const std::filesystem::path& trial_log);

// ---- telemetry log ---------------------------------------------------------

enum class SessionPhase { kAwaitingOperator, kTrial, kPause, kDone };
const char* to_string(SessionPhase p);

struct TelemetryRow {
  PipelineSample sample;
  SessionPhase phase = SessionPhase::kPause;
  int trial = -1;  // schedule index, -1 outside trials
  trial::HapticMode mode = trial::HapticMode::kOff;
  sim::WorldTruth truth;
  double jaw_mm = 0.0;
};

std::string telemetry_log_header();

class TelemetryLogWriter {
 public:
  explicit TelemetryLogWriter(const std::filesystem::path& path);
  void write(const TelemetryRow& row);

 private:
  std::ofstream out_;
};

}  // namespace wristhap::gateway
