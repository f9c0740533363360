#include "wristhap/render.hpp"

#include <cmath>

namespace wristhap {

void ScalingParams::validate(double device_ceiling) const {
  if (!std::isfinite(f_scale) || f_scale <= 0.0) throw std::invalid_argument("ScalingParams: f_scale must be > 0");
  if (!std::isfinite(f_max) || f_max <= 0.0) throw std::invalid_argument("ScalingParams: f_max must be > 0");
  if (f_max > device_ceiling) throw std::invalid_argument("ScalingParams: f_max exceeds the device force ceiling");
}

Vec3 scale_feedback(const Vec3& f_haptic, const ScalingParams& p) {
  if (!f_haptic.allFinite()) throw std::invalid_argument("scale_feedback: non-finite force");
  const double n = f_haptic.norm();
  if (!(n > 0.0)) return Vec3::Zero();
  double magnitude = std::tanh(n / p.f_scale) * p.f_max;
  const double ceiling = std::nextafter(p.f_max, 0.0);
  if (magnitude > ceiling) magnitude = ceiling;
  return (f_haptic / n) * magnitude;
}

ForceChain chain_to_haptic(const Vec3& f_ext_sensor, const RigidTransform& sensor_to_tip,
                           const RigidTransform& tip_to_base, const RigidTransform& base_to_haptic) {
  if (sensor_to_tip.from() != FrameId::sensor() || sensor_to_tip.to() != FrameId::tip()) {
    throw FrameMismatchError("chain_to_haptic: expected an S->T transform");
  }
  if (tip_to_base.from() != FrameId::tip() || tip_to_base.to() != FrameId::base()) {
    throw FrameMismatchError("chain_to_haptic: expected a T->B transform");
  }
  if (base_to_haptic.from() != FrameId::base() || base_to_haptic.to() != FrameId::haptic()) {
    throw FrameMismatchError("chain_to_haptic: expected a B->H transform");
  }
  ForceChain c;
  c.tip = sensor_to_tip.rotation() * f_ext_sensor;
  c.base = tip_to_base.rotation() * c.tip;
  c.haptic = base_to_haptic.rotation() * c.base;
  return c;
}

const char* to_string(OutputState s) {
  switch (s) {
    case OutputState::kNominal: return "nominal";
    case OutputState::kHolding: return "holding";
    case OutputState::kRamping: return "ramping";
  }
  return "unknown";
}

void PipelineConfig::validate() const {
  if (!std::isfinite(tick_rate_hz) || tick_rate_hz < 100.0 || tick_rate_hz > 10000.0) {
    throw std::invalid_argument("PipelineConfig: tick_rate_hz must be within [100, 10000]");
  }
  scaling.validate();
  if (filter_window == 0) throw std::invalid_argument("PipelineConfig: filter_window must be positive");
  if (base_to_haptic.from() != FrameId::base() || base_to_haptic.to() != FrameId::haptic()) {
    throw FrameMismatchError("PipelineConfig: base_to_haptic must map B->H");
  }
  if (!(ramp_duration_s > 0.0)) throw std::invalid_argument("PipelineConfig: ramp_duration_s must be > 0");
}

HapticPipeline::HapticPipeline(PipelineConfig config, CompensationModel model)
    : config_(std::move(config)), model_(std::move(model)), filter_(config_.filter_window) {
  config_.validate();
  if (!model_.calibrated()) throw NotCalibratedError("HapticPipeline: compensation model is not calibrated");
  ramp_ticks_ = static_cast<std::size_t>(std::llround(config_.ramp_duration_s * config_.tick_rate_hz));
  if (ramp_ticks_ == 0) ramp_ticks_ = 1;
}

PipelineSample HapticPipeline::step(std::uint64_t tick, double t, const std::optional<RawSensorSample>& sensor,
                                    const std::optional<KinematicsState>& kinematics) {
  ++counters_.ticks;
  const bool sensor_fresh = sensor && (!last_sensor_time_ || sensor->timestamp > *last_sensor_time_);
  // Half a period of slack absorbs floating-point noise in tick timestamps.
  const bool kin_fresh = kinematics && kinematics->timestamp >= t - 1.5 * period();
  if (!sensor_fresh) ++counters_.missing_sensor;
  if (!kin_fresh) ++counters_.stale_kinematics;

  if (sensor_fresh && kin_fresh) {
    fault_ticks_ = 0;
    last_sensor_time_ = sensor->timestamp;
    PipelineSample s;
    s.tick = tick;
    s.t = t;
    s.raw = sensor->wrench;
    const CompensatedForce comp = compensate(*sensor, model_);
    s.f_ext_S = comp.force;
    s.f_filt_S = filter_.step(comp).force;
    const ForceChain chain =
        chain_to_haptic(s.f_filt_S, kinematics->sensor_to_tip, kinematics->tip_to_base, config_.base_to_haptic);
    s.f_T = chain.tip;
    s.f_B = chain.base;
    s.f_H = chain.haptic;
    s.f_H_scaled = scale_feedback(s.f_H, config_.scaling);
    last_good_ = s;
    return s;
  }

  if (sensor_fresh) last_sensor_time_ = sensor->timestamp;
  ++fault_ticks_;
  PipelineSample s = last_good_;
  s.tick = tick;
  s.t = t;
  if (sensor_fresh) s.raw = sensor->wrench;
  if (fault_ticks_ <= config_.hold_ticks) {
    s.state = OutputState::kHolding;
  } else {
    const std::size_t into_ramp = fault_ticks_ - config_.hold_ticks;
    const double factor =
        into_ramp >= ramp_ticks_ ? 0.0 : 1.0 - static_cast<double>(into_ramp) / static_cast<double>(ramp_ticks_);
    s.f_H_scaled = last_good_.f_H_scaled * factor;
    s.state = OutputState::kRamping;
  }
  return s;
}

}  // namespace wristhap
