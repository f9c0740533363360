#include "wristhap/trial.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "wristhap/errors.hpp"
#include "wristhap/kernels.hpp"

namespace wristhap::trial {

namespace {

// Tolerance on time comparisons; sample times come from tick counts.
constexpr double kTimeEps = 1e-9;

}  // namespace

const char* to_string(HapticMode m) { return m == HapticMode::kOn ? "HapticOn" : "HapticOff"; }

HapticMode parse_mode(const std::string& s) {
  if (s == "HapticOn" || s == "on") return HapticMode::kOn;
  if (s == "HapticOff" || s == "off") return HapticMode::kOff;
  throw std::invalid_argument("unknown haptic mode '" + s + "'");
}

std::string target_label(double target_force) {
  if (target_force == kGentleN) return "GENTLE";
  if (target_force == kFirmN) return "FIRM";
  std::ostringstream os;
  os << target_force << " N";
  return os.str();
}

const char* to_string(Outcome o) { return o == Outcome::kSuccess ? "success" : "timeout"; }

void TrialConfig::validate() const {
  if (!(target_force > 0.0)) throw std::invalid_argument("TrialConfig: target force must be > 0");
  if (!(tolerance_fraction > 0.0 && tolerance_fraction < 1.0)) {
    throw std::invalid_argument("TrialConfig: tolerance_fraction must be in (0, 1)");
  }
  if (!(hold_duration > 0.0) || !(max_duration > 0.0) || !(inter_trial_pause > 0.0)) {
    throw std::invalid_argument("TrialConfig: durations must be > 0");
  }
}

TrialSchedule build_schedule(std::uint64_t seed, const TrialConfig& base) {
  base.validate();
  TrialSchedule s;
  s.seed = seed;
  for (double target : {kGentleN, kFirmN}) {
    for (HapticMode mode : {HapticMode::kOff, HapticMode::kOn}) {
      for (std::size_t k = 0; k < kTrialsPerCondition; ++k) {
        TrialConfig c = base;
        c.target_force = target;
        c.mode = mode;
        s.entries.push_back(c);
      }
    }
  }
  std::mt19937_64 rng(seed);
  std::shuffle(s.entries.begin(), s.entries.end(), rng);
  return s;
}

ErrorMetrics error_metrics(std::span<const ForceSample> samples, double target) {
  std::vector<double> f(samples.size());
  std::transform(samples.begin(), samples.end(), f.begin(), [](const ForceSample& s) { return s.force; });
  const auto st = kernels::deviation_stats(f, target);
  const double n = static_cast<double>(samples.size());
  return {n > 0.0 ? std::sqrt(st.sum_sq / n) : 0.0, st.max_abs};
}

TrialEvaluator::TrialEvaluator(TrialConfig config) : config_(config) { config_.validate(); }

TrialEvaluator::Status TrialEvaluator::push(double t, double force) {
  if (finished()) return status_;
  if (!std::isfinite(t) || !std::isfinite(force)) throw MalformedTrialError("TrialEvaluator: non-finite sample");
  if (!samples_.empty() && t <= samples_.back().t) throw MalformedTrialError("TrialEvaluator: timestamps not increasing");
  if (t > config_.max_duration + kTimeEps) {
    status_ = Status::kTimeout;
    return status_;
  }
  samples_.push_back({t, force});

  if (config_.in_band(force)) {
    if (!run_start_) run_start_ = t;
    if (t - *run_start_ >= config_.hold_duration - kTimeEps) {
      success_time_ = t;
      status_ = Status::kSuccess;
      return status_;
    }
  } else {
    run_start_.reset();
  }
  if (t >= config_.max_duration - kTimeEps) status_ = Status::kTimeout;
  return status_;
}

TrialRecord TrialEvaluator::finish() const {
  if (samples_.empty()) throw MalformedTrialError("TrialEvaluator: trial has no samples");
  TrialRecord r;
  r.config = config_;
  r.samples = samples_;
  if (status_ == Status::kSuccess) {
    r.outcome = Outcome::kSuccess;
    r.tct = *success_time_;
  }
  const ErrorMetrics m = error_metrics(r.samples, config_.target_force);
  r.rmse = m.rmse;
  r.max_ae = m.max_ae;
  return r;
}

TrialRecord evaluate_trial(std::span<const ForceSample> stream, const TrialConfig& config) {
  if (stream.empty()) throw MalformedTrialError("evaluate_trial: empty stream");
  TrialEvaluator ev(config);
  for (const ForceSample& s : stream) {
    if (ev.push(s.t, s.force) != TrialEvaluator::Status::kRunning) break;
  }
  return ev.finish();
}

namespace {

struct ParticipantModeMeans {
  bool present = false;
  double rmse = 0.0;
  double max_ae = 0.0;
  double success_rate = 0.0;
  std::optional<double> tct;
};

ParticipantModeMeans participant_means(const ParticipantRecords& p, HapticMode mode) {
  ParticipantModeMeans m;
  std::size_t n = 0, successes = 0;
  double tct_sum = 0.0;
  for (const TrialRecord& r : p.trials) {
    if (r.config.mode != mode) continue;
    ++n;
    m.rmse += r.rmse;
    m.max_ae += r.max_ae;
    if (r.outcome == Outcome::kSuccess) {
      ++successes;
      tct_sum += *r.tct;
    }
  }
  if (n == 0) return m;
  m.present = true;
  m.rmse /= static_cast<double>(n);
  m.max_ae /= static_cast<double>(n);
  m.success_rate = static_cast<double>(successes) / static_cast<double>(n);
  if (successes > 0) m.tct = tct_sum / static_cast<double>(successes);
  return m;
}

}  // namespace

StudySummary summarize(std::span<const ParticipantRecords> records) {
  StudySummary s;
  s.participants = records.size();

  struct Accum {
    double rmse = 0.0, max_ae = 0.0, tct = 0.0;
    std::size_t n = 0, tct_n = 0;
  };
  std::map<HapticMode, Accum> acc;
  std::vector<double> d_success, d_tct, d_rmse, d_max_ae;

  for (const ParticipantRecords& p : records) {
    for (const TrialRecord& r : p.trials) {
      auto& c = s.by_condition[{r.config.target_force, r.config.mode}];
      auto& o = s.by_mode[r.config.mode].overall;
      ++c.trials;
      ++o.trials;
      auto& a = acc[r.config.mode];
      ++a.n;
      a.rmse += r.rmse;
      a.max_ae += r.max_ae;
      if (r.outcome == Outcome::kSuccess) {
        ++c.successes;
        ++o.successes;
        a.tct += *r.tct;
        ++a.tct_n;
      }
    }
    const auto off = participant_means(p, HapticMode::kOff);
    const auto on = participant_means(p, HapticMode::kOn);
    if (!off.present || !on.present) {
      throw PairingError("summarize: participant '" + p.participant + "' lacks trials in both modes");
    }
    d_success.push_back(off.success_rate - on.success_rate);
    d_rmse.push_back(off.rmse - on.rmse);
    d_max_ae.push_back(off.max_ae - on.max_ae);
    if (off.tct && on.tct) d_tct.push_back(*off.tct - *on.tct);
  }

  for (auto& [mode, a] : acc) {
    ModeStats& m = s.by_mode[mode];
    m.mean_rmse = a.rmse / static_cast<double>(a.n);
    m.mean_max_ae = a.max_ae / static_cast<double>(a.n);
    if (a.tct_n > 0) m.mean_tct = a.tct / static_cast<double>(a.tct_n);
  }

  auto test = [&](const char* key, const std::vector<double>& d) {
    if (!d.empty()) s.tests[key] = stats::wilcoxon_signed_rank(d);
  };
  test("success_rate", d_success);
  test("tct", d_tct);
  test("rmse", d_rmse);
  test("max_ae", d_max_ae);
  return s;
}

}  // namespace wristhap::trial
