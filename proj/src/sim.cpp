#include "wristhap/sim.hpp"

#include <cmath>

namespace wristhap::sim {

void TissueModel::validate() const {
  if (!(stiffness > 0.0) || !std::isfinite(stiffness)) throw std::invalid_argument("TissueModel: stiffness must be > 0");
  if (!(damping >= 0.0) || !std::isfinite(damping)) throw std::invalid_argument("TissueModel: damping must be >= 0");
  if (!origin.allFinite()) throw std::invalid_argument("TissueModel: non-finite origin");
  if (shape == Shape::kPlane && !(normal.allFinite() && normal.norm() > 0.0)) {
    throw std::invalid_argument("TissueModel: plane normal must be non-zero");
  }
  if (shape == Shape::kSphere && !(radius > 0.0)) throw std::invalid_argument("TissueModel: radius must be > 0");
}

TissueModel::Probe TissueModel::probe(const Vec3& p) const {
  if (shape == Shape::kPlane) {
    const Vec3 n = normal.normalized();
    return {-(p - origin).dot(n), n};
  }
  const Vec3 r = p - origin;
  const double dist = r.norm();
  const Vec3 n = dist > 0.0 ? Vec3(r / dist) : Vec3::UnitZ();
  return {radius - dist, n};
}

Vec3 contact_force(const Vec3& tip_position, const Vec3& tip_velocity, const TissueModel& tissue) {
  const auto [depth, n] = tissue.probe(tip_position);
  if (!(depth > 0.0)) return Vec3::Zero();
  const double approach = std::max(0.0, -tip_velocity.dot(n));
  return (tissue.stiffness * depth + tissue.damping * approach) * n;
}

NoiseSource::NoiseSource(const SensorNoise& cfg) : cfg_(cfg), rng_(cfg.seed) {
  if (cfg.sigma_force < 0.0 || cfg.sigma_torque < 0.0) throw std::invalid_argument("SensorNoise: negative sigma");
}

Vec3 NoiseSource::draw(double sigma) {
  const double x = unit_(rng_);
  const double y = unit_(rng_);
  const double z = unit_(rng_);
  return Vec3(x, y, z) * sigma;
}

Vec3 NoiseSource::force() { return draw(cfg_.sigma_force); }
Vec3 NoiseSource::torque() { return draw(cfg_.sigma_torque); }

RawSensorSample synth_sensor(const Vec3& contact_force_world, const ToolPose& pose,
                             const RigidTransform& base_to_world, const CompensationModel& model,
                             NoiseSource* noise) {
  if (!model.calibrated()) throw NotCalibratedError("synth_sensor: ground-truth tool model missing");
  const RigidTransform sensor_to_world = compose(pose.sensor_to_base(), base_to_world);
  const Rotation& r_ws = sensor_to_world.rotation();

  const Vec3 f_contact = r_ws.inverse() * contact_force_world;
  const Vec3 tip_in_sensor = pose.sensor_mount.inverse().translation();
  const Vec3 tau_contact = tip_in_sensor.cross(f_contact);
  const Wrench g = model.gravity_load(r_ws);

  Vec3 f = f_contact + model.bias().force() + g.force();
  Vec3 tau = tau_contact + model.bias().torque() + g.torque();
  if (noise) {
    f += noise->force();
    tau += noise->torque();
  }
  return {Wrench(f, tau, FrameId::sensor()), pose.t, r_ws};
}

PoseIntegrator::PoseIntegrator(ToolPose initial, MotionLimits limits) : pose_(std::move(initial)), limits_(limits) {
  if (!(limits.max_linear > 0.0) || !(limits.max_angular > 0.0)) {
    throw std::invalid_argument("MotionLimits: limits must be positive");
  }
}

void PoseIntegrator::reset(const ToolPose& pose) {
  pose_ = pose;
  velocity_ = Vec3::Zero();
}

bool PoseIntegrator::apply(const OperatorCommand& cmd, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("PoseIntegrator: dt must be > 0");
  if (!cmd.linear.allFinite() || !cmd.angular.allFinite()) {
    throw std::invalid_argument("PoseIntegrator: non-finite command");
  }
  bool clamped = false;
  Vec3 v = cmd.linear;
  Vec3 w = cmd.angular;
  if (v.norm() > limits_.max_linear) {
    v *= limits_.max_linear / v.norm();
    clamped = true;
  }
  if (w.norm() > limits_.max_angular) {
    w *= limits_.max_angular / w.norm();
    clamped = true;
  }
  if (clamped) ++clamp_events_;

  Rotation r = pose_.tip_to_base.rotation();
  const double angle = w.norm() * dt;
  if (angle > 0.0) {
    const Mat3 step = Eigen::AngleAxisd(angle, w.normalized()).toRotationMatrix();
    r = Rotation::orthonormalized(step * r.matrix());
  }
  pose_.tip_to_base = RigidTransform(FrameId::tip(), FrameId::base(), r, pose_.tip_to_base.translation() + v * dt);
  pose_.t += dt;
  velocity_ = v;
  return clamped;
}

KinematicsState PoseIntegrator::kinematics() const { return {pose_.sensor_mount, pose_.tip_to_base, pose_.t}; }

}  // namespace wristhap::sim
