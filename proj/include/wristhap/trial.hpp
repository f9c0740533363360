#pragma once
// Force-regulation experiment: balanced randomized schedule, online hold
// detection, per-trial error metrics and the cohort summary.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wristhap/wilcoxon.hpp"

namespace wristhap::trial {

inline constexpr double kGentleN = 0.6;
inline constexpr double kFirmN = 1.2;
inline constexpr std::size_t kTrialsPerCondition = 5;

enum class HapticMode { kOff, kOn };

const char* to_string(HapticMode m);
HapticMode parse_mode(const std::string& s);
/// "GENTLE" / "FIRM" for the two protocol targets, the number otherwise.
std::string target_label(double target_force);

struct TrialConfig {
  double target_force = kGentleN;  // N
  HapticMode mode = HapticMode::kOff;
  double tolerance_fraction = 0.10;
  double hold_duration = 1.0;       // s
  double max_duration = 12.0;       // s
  double inter_trial_pause = 2.0;   // s

  void validate() const;
  // Band edges count as inside.
  double band_low() const { return target_force * (1.0 - tolerance_fraction); }
  double band_high() const { return target_force * (1.0 + tolerance_fraction); }
  bool in_band(double force) const { return force >= band_low() && force <= band_high(); }
};

struct TrialSchedule {
  std::vector<TrialConfig> entries;
  std::uint64_t seed = 0;
};

/// Seeded permutation of 5 trials for each (target, mode) pair. Timing and
/// tolerance fields are copied from `base`.
TrialSchedule build_schedule(std::uint64_t seed, const TrialConfig& base = {});

struct ForceSample {
  double t = 0.0;      // s since trial start
  double force = 0.0;  // contact force magnitude (N)
};

enum class Outcome { kSuccess, kTimeout };
const char* to_string(Outcome o);

struct TrialRecord {
  TrialConfig config;
  std::vector<ForceSample> samples;
  Outcome outcome = Outcome::kTimeout;
  std::optional<double> tct;  // present iff success
  double rmse = 0.0;
  double max_ae = 0.0;
};

/// RMSE and max absolute error of the samples against the target.
struct ErrorMetrics {
  double rmse = 0.0;
  double max_ae = 0.0;
};
ErrorMetrics error_metrics(std::span<const ForceSample> samples, double target);

/// Consumes force samples as they arrive. Success is declared at the first
/// sample that closes an unbroken in-band run lasting hold_duration; the
/// trial times out at max_duration. Samples after the end are ignored.
class TrialEvaluator {
 public:
  enum class Status { kRunning, kSuccess, kTimeout };

  explicit TrialEvaluator(TrialConfig config);

  Status push(double t, double force);
  Status status() const { return status_; }
  bool finished() const { return status_ != Status::kRunning; }

  /// Metrics over everything accepted so far. A trial still running is
  /// closed as a timeout. Throws MalformedTrialError with no samples.
  TrialRecord finish() const;

 private:
  TrialConfig config_;
  std::vector<ForceSample> samples_;
  std::optional<double> run_start_;
  std::optional<double> success_time_;
  Status status_ = Status::kRunning;
};

TrialRecord evaluate_trial(std::span<const ForceSample> stream, const TrialConfig& config);

struct ParticipantRecords {
  std::string participant;
  std::vector<TrialRecord> trials;
};

struct ConditionStats {
  std::size_t trials = 0;
  std::size_t successes = 0;
  double success_rate() const { return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0; }
};

struct ModeStats {
  ConditionStats overall;
  std::optional<double> mean_tct;  // over successful trials
  double mean_rmse = 0.0;
  double mean_max_ae = 0.0;
};

struct StudySummary {
  std::size_t participants = 0;
  std::map<std::pair<double, HapticMode>, ConditionStats> by_condition;
  std::map<HapticMode, ModeStats> by_mode;
  // Keys: success_rate, tct, rmse, max_ae. Differences are Off - On of the
  // per-participant means; for tct, participants without a success in
  // either mode are left out.
  std::map<std::string, stats::WilcoxonResult> tests;
};

/// Throws PairingError when a participant lacks trials in one of the modes.
StudySummary summarize(std::span<const ParticipantRecords> records);

}  // namespace wristhap::trial
