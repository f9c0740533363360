#pragma once
// Fixed-rate driver for HapticPipeline.
//
// Each tick: run the before-tick hook (the simulated world advances here in
// lock-step mode), read the latest sensor and kinematics cells, step the
// pipeline, send the command to the haptic sink, offer the sample to every
// telemetry sink, run the after-tick hook.
//
// In real-time mode ticks are scheduled at start + k * period on the steady
// clock and a tick meets its deadline when its work finishes before the next
// tick is due. In virtual mode ticks run back to back and are always on time.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wristhap/handoff.hpp"
#include "wristhap/render.hpp"

namespace wristhap {

class HapticSink {
 public:
  virtual ~HapticSink() = default;
  virtual void send(const Vec3& f_scaled, const PipelineSample& sample) = 0;
};

/// Must not block. Returns false when the sample was dropped.
class TelemetrySink {
 public:
  virtual ~TelemetrySink() = default;
  virtual bool offer(const PipelineSample& sample) = 0;
};

enum class LoopEventKind {
  kDegradedEnter,
  kDegradedExit,
  kSensorMissing,
  kKinematicsStale,
};

const char* to_string(LoopEventKind k);

struct LoopEvent {
  LoopEventKind kind;
  std::uint64_t tick = 0;
  double t = 0.0;
  std::string detail;
};

struct LoopConfig {
  bool realtime = true;
  // Degraded mode: more than miss_fraction of the ticks in the trailing
  // window missed their deadline.
  double degraded_window_s = 10.0;
  double degraded_miss_fraction = 0.01;
  // Busy-wait this long before each deadline instead of sleeping through it.
  std::chrono::microseconds spin{50};
};

struct LoopStats {
  std::uint64_t ticks = 0;
  std::uint64_t deadline_misses = 0;
  std::uint64_t telemetry_drops = 0;
  std::uint64_t degraded_events = 0;
  double max_lateness_s = 0.0;

  double deadline_met_rate() const {
    return ticks == 0 ? 1.0 : 1.0 - static_cast<double>(deadline_misses) / static_cast<double>(ticks);
  }
};

class ControlLoop {
 public:
  struct Hooks {
    std::function<void(std::uint64_t tick, double t)> before_tick;
    std::function<void(const PipelineSample&)> after_tick;
    std::function<void(const LoopEvent&)> on_event;
  };

  ControlLoop(LoopConfig config, HapticPipeline& pipeline, const LatestValueCell<RawSensorSample>& sensor,
              const LatestValueCell<KinematicsState>& kinematics, Hooks hooks = {});

  void set_haptic_sink(HapticSink* sink) { haptic_ = sink; }
  void add_telemetry_sink(TelemetrySink* sink) { telemetry_.push_back(sink); }

  /// Runs up to max_ticks more ticks, or until request_stop(). Tick indices
  /// and simulated time continue across calls.
  LoopStats run(std::uint64_t max_ticks);

  /// Safe from any thread, including the hooks.
  void request_stop() { stop_.store(true, std::memory_order_relaxed); }

  const LoopStats& stats() const { return stats_; }
  std::uint64_t next_tick() const { return next_tick_; }
  bool degraded() const { return degraded_; }

 private:
  void account_deadline(bool met, std::uint64_t tick, double t);
  void emit(LoopEventKind kind, std::uint64_t tick, double t, std::string detail);

  LoopConfig config_;
  HapticPipeline& pipeline_;
  const LatestValueCell<RawSensorSample>& sensor_;
  const LatestValueCell<KinematicsState>& kinematics_;
  Hooks hooks_;
  HapticSink* haptic_ = nullptr;
  std::vector<TelemetrySink*> telemetry_;

  std::atomic<bool> stop_{false};
  LoopStats stats_;
  std::uint64_t next_tick_ = 0;
  std::uint64_t last_sensor_version_ = 0;
  bool sensor_fault_ = false;
  bool kinematics_fault_ = false;

  std::vector<std::uint8_t> miss_window_;
  std::size_t miss_head_ = 0;
  std::size_t miss_filled_ = 0;
  std::size_t miss_count_ = 0;
  bool degraded_ = false;
};

}  // namespace wristhap
