#pragma once
// Force path from the compensated sensor reading to the haptic device
// command: filter, rotate S -> T -> B -> H, saturate with tanh.

#include <cstdint>
#include <optional>

#include "wristhap/compensation.hpp"
#include "wristhap/filter.hpp"
#include "wristhap/geometry.hpp"

namespace wristhap {

/// Peak force of the reference haptic device (N).
inline constexpr double kDeviceForceCeiling = 3.3;

struct ScalingParams {
  double f_scale = 7.0;  // N, where tanh saturation sets in
  double f_max = 3.0;    // N, asymptotic output magnitude

  /// Throws std::invalid_argument unless f_scale > 0 and 0 < f_max <= ceiling.
  void validate(double device_ceiling = kDeviceForceCeiling) const;
};

/// f_H / |f_H| * tanh(|f_H| / f_scale) * f_max, and zero for a zero input.
/// The magnitude is additionally kept strictly below f_max; tanh rounds to
/// exactly 1.0 for very large arguments.
Vec3 scale_feedback(const Vec3& f_haptic, const ScalingParams& p);

struct ForceChain {
  Vec3 tip;
  Vec3 base;
  Vec3 haptic;
};

/// Rotation-only chain; the transforms must be S->T, T->B and B->H.
ForceChain chain_to_haptic(const Vec3& f_ext_sensor, const RigidTransform& sensor_to_tip,
                           const RigidTransform& tip_to_base, const RigidTransform& base_to_haptic);

/// Forward-kinematics output for one tick.
struct KinematicsState {
  RigidTransform sensor_to_tip{FrameId::sensor(), FrameId::tip()};
  RigidTransform tip_to_base{FrameId::tip(), FrameId::base()};
  double timestamp = 0.0;
};

enum class OutputState : std::uint8_t {
  kNominal,
  kHolding,  // input fault, last command held
  kRamping,  // input fault outlasted the hold, command ramps to zero
};

const char* to_string(OutputState s);

struct PipelineSample {
  std::uint64_t tick = 0;
  double t = 0.0;
  Wrench raw = Wrench::zero(FrameId::sensor());
  Vec3 f_ext_S = Vec3::Zero();   // compensated, unfiltered
  Vec3 f_filt_S = Vec3::Zero();  // after the moving average
  Vec3 f_T = Vec3::Zero();
  Vec3 f_B = Vec3::Zero();
  Vec3 f_H = Vec3::Zero();
  Vec3 f_H_scaled = Vec3::Zero();
  bool deadline_met = true;
  OutputState state = OutputState::kNominal;
};

struct PipelineConfig {
  double tick_rate_hz = 1000.0;
  ScalingParams scaling;
  std::size_t filter_window = MovingAverageFilter::kDefaultWindow;
  RigidTransform base_to_haptic{FrameId::base(), FrameId::haptic()};
  std::size_t hold_ticks = 5;
  double ramp_duration_s = 0.05;

  void validate() const;
};

struct PipelineCounters {
  std::uint64_t ticks = 0;
  std::uint64_t missing_sensor = 0;
  std::uint64_t stale_kinematics = 0;
};

/// One iteration of the feedback loop per call. Owns the filter state; a
/// single thread drives it.
class HapticPipeline {
 public:
  HapticPipeline(PipelineConfig config, CompensationModel model);

  /// `sensor` is empty when no new reading arrived this tick. Kinematics
  /// older than one tick period count as stale. On either fault the last
  /// command is held for hold_ticks, then ramped to zero over
  /// ramp_duration_s.
  PipelineSample step(std::uint64_t tick, double t, const std::optional<RawSensorSample>& sensor,
                      const std::optional<KinematicsState>& kinematics);

  const PipelineConfig& config() const { return config_; }
  const CompensationModel& model() const { return model_; }
  const PipelineCounters& counters() const { return counters_; }
  double period() const { return 1.0 / config_.tick_rate_hz; }

 private:
  PipelineConfig config_;
  CompensationModel model_;
  MovingAverageFilter filter_;
  PipelineCounters counters_;
  std::optional<double> last_sensor_time_;
  PipelineSample last_good_;
  std::size_t fault_ticks_ = 0;
  std::size_t ramp_ticks_;
};

}  // namespace wristhap
