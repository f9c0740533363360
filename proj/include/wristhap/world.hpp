#pragma once
// Lock-step virtual hardware: one call to World::step per control tick
// advances the tool, the jaw and the tissue contact and publishes a new
// sensor reading and kinematics state into the handoff cells.

#include <cstdint>

#include "wristhap/handoff.hpp"
#include "wristhap/jaw.hpp"
#include "wristhap/sim.hpp"

namespace wristhap::sim {

struct Scene {
  TissueModel tissue;
  CompensationModel tool;  // ground-truth non-contact load of the instrument
  RigidTransform sensor_mount{FrameId::sensor(), FrameId::tip()};
  RigidTransform base_to_world{FrameId::base(), FrameId::world()};
  RigidTransform base_to_haptic{FrameId::base(), FrameId::haptic()};
  RigidTransform home_tip_pose{FrameId::tip(), FrameId::base()};
  SensorNoise noise;
  bool noise_enabled = true;
  JawParams jaw;
  MotionLimits limits;

  void validate() const;
};

/// Tilted instrument hovering 2 mm above a 300 N/m tissue plane.
Scene default_scene();

struct WorldTruth {
  double t = 0.0;
  Vec3 force_world = Vec3::Zero();
  Vec3 force_sensor = Vec3::Zero();  // same force expressed in {S}
  Vec3 tip_world = Vec3::Zero();
  double depth = 0.0;                // penetration (m), negative above the surface
  bool contact = false;
};

class World {
 public:
  explicit World(Scene scene);

  /// Applies the operator command over dt, ending at time t.
  const WorldTruth& step(double t, double dt, const OperatorCommand& cmd, JawButton jaw_button);

  void rehome();
  void command_full_open() { jaw_ = full_open(jaw_, scene_.jaw); }
  void command_full_close() { jaw_ = full_close(jaw_, scene_.jaw); }

  const Scene& scene() const { return scene_; }
  const WorldTruth& truth() const { return truth_; }
  const JawState& jaw() const { return jaw_; }
  const PoseIntegrator& pose() const { return pose_; }

  /// Sensor and kinematics as the control loop sees them.
  const LatestValueCell<RawSensorSample>& sensor_cell() const { return sensor_cell_; }
  const LatestValueCell<KinematicsState>& kinematics_cell() const { return kinematics_cell_; }

 private:
  void publish();

  Scene scene_;
  PoseIntegrator pose_;
  JawState jaw_;
  std::optional<NoiseSource> noise_;
  WorldTruth truth_;
  LatestValueCell<RawSensorSample> sensor_cell_;
  LatestValueCell<KinematicsState> kinematics_cell_;
};

}  // namespace wristhap::sim
