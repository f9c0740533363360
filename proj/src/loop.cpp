#include "wristhap/loop.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace wristhap {

const char* to_string(LoopEventKind k) {
  switch (k) {
    case LoopEventKind::kDegradedEnter: return "degraded_enter";
    case LoopEventKind::kDegradedExit: return "degraded_exit";
    case LoopEventKind::kSensorMissing: return "sensor_missing";
    case LoopEventKind::kKinematicsStale: return "kinematics_stale";
  }
  return "unknown";
}

ControlLoop::ControlLoop(LoopConfig config, HapticPipeline& pipeline, const LatestValueCell<RawSensorSample>& sensor,
                         const LatestValueCell<KinematicsState>& kinematics, Hooks hooks)
    : config_(config), pipeline_(pipeline), sensor_(sensor), kinematics_(kinematics), hooks_(std::move(hooks)) {
  const auto window =
      static_cast<std::size_t>(std::llround(config_.degraded_window_s * pipeline_.config().tick_rate_hz));
  miss_window_.assign(std::max<std::size_t>(window, 1), 0);
}

void ControlLoop::emit(LoopEventKind kind, std::uint64_t tick, double t, std::string detail) {
  if (hooks_.on_event) hooks_.on_event(LoopEvent{kind, tick, t, std::move(detail)});
}

void ControlLoop::account_deadline(bool met, std::uint64_t tick, double t) {
  const std::uint8_t miss = met ? 0 : 1;
  if (miss_filled_ == miss_window_.size()) {
    miss_count_ -= miss_window_[miss_head_];
  } else {
    ++miss_filled_;
  }
  miss_window_[miss_head_] = miss;
  miss_count_ += miss;
  miss_head_ = (miss_head_ + 1) % miss_window_.size();

  const double limit = config_.degraded_miss_fraction * static_cast<double>(miss_window_.size());
  const bool over = static_cast<double>(miss_count_) > limit;
  if (over && !degraded_) {
    degraded_ = true;
    ++stats_.degraded_events;
    emit(LoopEventKind::kDegradedEnter, tick, t,
         std::to_string(miss_count_) + " deadline misses in trailing window");
  } else if (!over && degraded_) {
    degraded_ = false;
    emit(LoopEventKind::kDegradedExit, tick, t, "");
  }
}

LoopStats ControlLoop::run(std::uint64_t max_ticks) {
  using clock = std::chrono::steady_clock;
  stop_.store(false, std::memory_order_relaxed);
  const double period_s = pipeline_.period();
  const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(period_s));
  const auto start = clock::now();

  for (std::uint64_t k = 0; k < max_ticks && !stop_.load(std::memory_order_relaxed); ++k) {
    const std::uint64_t tick = next_tick_++;
    const double t = static_cast<double>(tick) * period_s;
    const auto scheduled = start + period * static_cast<clock::rep>(k);

    if (config_.realtime) {
      const auto wake = scheduled - config_.spin;
      if (clock::now() < wake) std::this_thread::sleep_until(wake);
      while (clock::now() < scheduled) {
      }
    }

    if (hooks_.before_tick) hooks_.before_tick(tick, t);

    std::optional<RawSensorSample> sensor;
    if (auto snap = sensor_.read(); snap && snap->version != last_sensor_version_) {
      last_sensor_version_ = snap->version;
      sensor = std::move(snap->value);
    }
    std::optional<KinematicsState> kin;
    if (auto snap = kinematics_.read()) kin = std::move(snap->value);

    const auto before = pipeline_.counters();
    PipelineSample sample = pipeline_.step(tick, t, sensor, kin);
    const auto& after = pipeline_.counters();

    const bool sensor_missing = after.missing_sensor != before.missing_sensor;
    if (sensor_missing && !sensor_fault_) emit(LoopEventKind::kSensorMissing, tick, t, "no fresh sensor sample");
    sensor_fault_ = sensor_missing;
    const bool kin_stale = after.stale_kinematics != before.stale_kinematics;
    if (kin_stale && !kinematics_fault_) emit(LoopEventKind::kKinematicsStale, tick, t, "kinematics older than one tick");
    kinematics_fault_ = kin_stale;

    if (haptic_) haptic_->send(sample.f_H_scaled, sample);

    if (config_.realtime) {
      const double late = std::chrono::duration<double>(clock::now() - scheduled).count();
      sample.deadline_met = late <= period_s;
      stats_.max_lateness_s = std::max(stats_.max_lateness_s, late);
    }
    for (TelemetrySink* sink : telemetry_) {
      if (!sink->offer(sample)) ++stats_.telemetry_drops;
    }
    if (hooks_.after_tick) hooks_.after_tick(sample);

    ++stats_.ticks;
    if (!sample.deadline_met) ++stats_.deadline_misses;
    account_deadline(sample.deadline_met, tick, t);
  }
  return stats_;
}

}  // namespace wristhap
