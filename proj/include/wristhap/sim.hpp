#pragma once
// Deterministic stand-ins for the robot, the wrist sensor and the tissue.

#include <cstdint>
#include <random>

#include "wristhap/compensation.hpp"
#include "wristhap/geometry.hpp"
#include "wristhap/render.hpp"

namespace wristhap::sim {

/// Compliant half-space or ball. Force only while the tip penetrates.
struct TissueModel {
  enum class Shape { kPlane, kSphere };

  Shape shape = Shape::kPlane;
  Vec3 origin = Vec3::Zero();       // point on the plane, or sphere centre (m)
  Vec3 normal = Vec3::UnitZ();      // plane outward normal
  double radius = 0.05;             // sphere radius (m)
  double stiffness = 300.0;         // N/m
  double damping = 0.0;             // N*s/m

  void validate() const;

  struct Probe {
    double depth;  // > 0 when penetrating (m)
    Vec3 normal;   // outward unit normal at the closest surface point
  };
  Probe probe(const Vec3& p) const;
};

/// Ground-truth contact force on the tip in {W}:
///   (k * d + c * max(0, -v.n)) * n   for d > 0, zero otherwise.
Vec3 contact_force(const Vec3& tip_position, const Vec3& tip_velocity, const TissueModel& tissue);

struct SensorNoise {
  double sigma_force = 0.02;  // N
  double sigma_torque = 0.0;  // N*m
  std::uint64_t seed = 1;
};

/// Gaussian sensor noise; identical seeds give identical streams.
class NoiseSource {
 public:
  explicit NoiseSource(const SensorNoise& cfg);
  Vec3 force();
  Vec3 torque();
  const SensorNoise& config() const { return cfg_; }

 private:
  Vec3 draw(double sigma);
  SensorNoise cfg_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> unit_{0.0, 1.0};
};

struct ToolPose {
  RigidTransform tip_to_base{FrameId::tip(), FrameId::base()};       // tip pose in the base frame
  RigidTransform sensor_mount{FrameId::sensor(), FrameId::tip()};    // static for a session
  double t = 0.0;

  RigidTransform sensor_to_base() const { return compose(sensor_mount, tip_to_base); }
};

/// Raw reading of the wrist sensor: contact force moved into {S} (acting at
/// the tip origin), plus bias, plus the gravity load at the current
/// orientation, plus noise when `noise` is given. With noise off this is
/// the exact inverse of compensate().
RawSensorSample synth_sensor(const Vec3& contact_force_world, const ToolPose& pose,
                             const RigidTransform& base_to_world, const CompensationModel& model,
                             NoiseSource* noise);

struct MotionLimits {
  double max_linear = 0.05;   // m/s
  double max_angular = 1.0;   // rad/s
};

/// Operator command: tip twist in the base frame.
struct OperatorCommand {
  Vec3 linear = Vec3::Zero();
  Vec3 angular = Vec3::Zero();
};

/// Direct tip-pose integrator standing in for the arm's kinematics.
class PoseIntegrator {
 public:
  PoseIntegrator(ToolPose initial, MotionLimits limits);

  /// Integrates one step. Returns true when the command exceeded the limits
  /// and was scaled back onto them.
  bool apply(const OperatorCommand& cmd, double dt);
  void reset(const ToolPose& pose);
  void set_time(double t) { pose_.t = t; }

  const ToolPose& pose() const { return pose_; }
  const Vec3& tip_velocity() const { return velocity_; }
  const MotionLimits& limits() const { return limits_; }
  std::uint64_t clamp_events() const { return clamp_events_; }

  KinematicsState kinematics() const;

 private:
  ToolPose pose_;
  MotionLimits limits_;
  Vec3 velocity_ = Vec3::Zero();
  std::uint64_t clamp_events_ = 0;
};

}  // namespace wristhap::sim
