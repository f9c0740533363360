#pragma once
// Raw wrist-sensor readings to estimated external contact force.
//
// Non-contact model: a constant sensor bias plus the static gravity load of
// the distal assembly (mass m, centre of mass c in {S}):
//   f_raw   = f_ext + b_f + m * g_S
//   tau_raw = tau_ext + b_tau + c x (m * g_S)
// with g_S = R_SW^T * g_W the world gravity vector expressed in {S}.

#include <span>
#include <vector>

#include "wristhap/geometry.hpp"

namespace wristhap {

inline const Vec3 kStandardGravity{0.0, 0.0, -9.81};

struct RawSensorSample {
  Wrench wrench = Wrench::zero(FrameId::sensor());
  double timestamp = 0.0;
  Rotation sensor_to_world;  // maps {S} coordinates into {W}
};

class CompensationModel {
 public:
  /// Uncalibrated; compensate() refuses to use it.
  CompensationModel() = default;

  static CompensationModel identified(double tool_mass, const Vec3& com_offset, const Wrench& bias,
                                      const Vec3& gravity_world = kStandardGravity);

  bool calibrated() const { return calibrated_; }
  double tool_mass() const { return tool_mass_; }
  const Vec3& com_offset() const { return com_offset_; }
  const Wrench& bias() const { return bias_; }
  const Vec3& gravity_world() const { return gravity_world_; }

  /// Gravity-induced wrench at the sensor origin, expressed in {S}.
  Wrench gravity_load(const Rotation& sensor_to_world) const;

 private:
  bool calibrated_ = false;
  double tool_mass_ = 0.0;
  Vec3 com_offset_ = Vec3::Zero();
  Wrench bias_ = Wrench::zero(FrameId::sensor());
  Vec3 gravity_world_ = kStandardGravity;
};

/// External contact force in {S}. Only compensate() produces one in the
/// pipeline, so the filter cannot be fed raw readings by accident.
struct CompensatedForce {
  Vec3 force = Vec3::Zero();
  double timestamp = 0.0;
};

CompensatedForce compensate(const RawSensorSample& sample, const CompensationModel& model);

/// Full 6-axis residual, used for torque diagnostics.
Wrench compensate_wrench(const RawSensorSample& sample, const CompensationModel& model);

struct CalibrationResult {
  CompensationModel model;
  double rms_residual = 0.0;  // over all stacked force and torque rows
  double mass_stddev = 0.0;   // 1-sigma from the least-squares covariance
  std::size_t poses = 0;
};

inline constexpr std::size_t kMinCalibrationPoses = 6;

/// Least-squares fit of mass, centre of mass and bias from contact-free
/// poses. Throws InsufficientExcitationError below kMinCalibrationPoses or
/// when the orientations do not determine every parameter.
CalibrationResult calibrate(std::span<const RawSensorSample> poses,
                            const Vec3& gravity_world = kStandardGravity);

}  // namespace wristhap
