#pragma once
// One participant's session: the simulated world, the haptic pipeline and
// the control loop, driven by a scripted operator, a recorded command log
// or live client commands, with the trial protocol on top.
//
// Output directory layout:
//   session.json   resolved configuration (scene embedded) and run stats
//   commands.csv   operator input events
//   trials.csv     trial log
//   telemetry.csv  per-tick pipeline log, unless disabled
//   summary.json / summary.csv

#include <atomic>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wristhap/gateway/config.hpp"
#include "wristhap/gateway/inbox.hpp"
#include "wristhap/gateway/logs.hpp"
#include "wristhap/gateway/telemetry.hpp"
#include "wristhap/loop.hpp"
#include "wristhap/trial.hpp"

namespace wristhap::gateway {

enum class InputSource { kScripted, kReplay, kInteractive };
const char* to_string(InputSource s);

struct SessionOptions {
  InputSource source = InputSource::kScripted;
  std::vector<CommandEvent> replay_commands;  // kReplay
  OperatorInbox* inbox = nullptr;             // kInteractive
  TelemetryHub* hub = nullptr;                // optional
  std::atomic<bool>* stop = nullptr;          // optional external stop request
  /// Interactive only: give up after this many ticks without a start.
  std::optional<std::uint64_t> max_idle_ticks;
  /// Stop after this many ticks whatever the phase.
  std::optional<std::uint64_t> max_ticks;
  /// Ask for SCHED_FIFO on the loop thread in real-time mode.
  bool try_realtime_priority = true;
};

struct SessionResult {
  trial::ParticipantRecords records;
  LoopStats loop;
  std::size_t scheduled = 0;
  bool completed = false;  // every scheduled trial finished
  bool realtime_priority = false;
  std::uint64_t telemetry_queue_drops = 0;
  std::filesystem::path dir;
};

/// Runs to the end of the schedule (or a stop request) and writes the
/// session directory `config.output_dir`.
SessionResult run_session(const SessionConfig& config, const SessionOptions& options = {});

/// Replays `session_dir` into `output_dir` from its session.json and
/// commands.csv.
SessionResult replay_session(const std::filesystem::path& session_dir, const std::filesystem::path& output_dir);

/// The configuration stored in a session directory.
SessionConfig read_session_config(const std::filesystem::path& session_dir);

/// Scripted sessions for `participants` participants in
/// `<output_dir>/P01`, `P02`, ... with trial and operator seeds offset by the
/// participant index; the cohort summary goes to `output_dir`.
struct CohortResult {
  std::vector<SessionResult> sessions;
  std::optional<trial::StudySummary> summary;
  std::string summary_error;
};
CohortResult run_cohort(const SessionConfig& base, std::size_t participants, TelemetryHub* hub = nullptr);

/// Seed for the scripted operator of a session.
std::uint64_t operator_seed(std::uint64_t trial_seed);

}  // namespace wristhap::gateway
