#include "wristhap/world.hpp"

#include <numbers>

namespace wristhap::sim {

void Scene::validate() const {
  tissue.validate();
  jaw.validate();
  if (!tool.calibrated()) throw std::invalid_argument("Scene: tool model missing");
  auto expect = [](const RigidTransform& x, const FrameId& from, const FrameId& to, const char* name) {
    if (x.from() != from || x.to() != to) {
      throw FrameMismatchError(std::string("Scene: ") + name + " must map " + from.name() + "->" + to.name());
    }
  };
  expect(sensor_mount, FrameId::sensor(), FrameId::tip(), "sensor_mount");
  expect(base_to_world, FrameId::base(), FrameId::world(), "base_to_world");
  expect(base_to_haptic, FrameId::base(), FrameId::haptic(), "base_to_haptic");
  expect(home_tip_pose, FrameId::tip(), FrameId::base(), "home_tip_pose");
}

Scene default_scene() {
  using std::numbers::pi;
  Scene s;
  s.tissue.shape = TissueModel::Shape::kPlane;
  s.tissue.origin = Vec3::Zero();
  s.tissue.normal = Vec3::UnitZ();
  s.tissue.stiffness = 300.0;
  s.tissue.damping = 1.0;

  s.tool = CompensationModel::identified(
      0.35, Vec3(0.004, -0.002, 0.12),
      Wrench(Vec3(0.8, -0.5, 1.2), Vec3(0.02, -0.01, 0.005), FrameId::sensor()));

  // Shaft along +z of the sensor, tip 0.30 m out, tip frame rolled 30 deg.
  const Rotation r_ts = Rotation::about_axis(Vec3::UnitZ(), pi / 6.0);
  s.sensor_mount = RigidTransform(FrameId::sensor(), FrameId::tip(), r_ts, -(r_ts * Vec3(0.0, 0.0, 0.30)));

  s.base_to_world = RigidTransform(FrameId::base(), FrameId::world());

  Mat3 r_hb;
  r_hb << 0.0, -1.0, 0.0,
          0.0, 0.0, 1.0,
          -1.0, 0.0, 0.0;
  s.base_to_haptic = RigidTransform(FrameId::base(), FrameId::haptic(), Rotation(r_hb));

  // Shaft pointing down at 20 deg from vertical, tip 2 mm above the tissue.
  const Rotation r_bt = Rotation::about_axis(Vec3::UnitX(), pi * 160.0 / 180.0) * r_ts.inverse();
  s.home_tip_pose = RigidTransform(FrameId::tip(), FrameId::base(), r_bt, Vec3(0.30, 0.0, 0.002));

  s.noise = SensorNoise{0.02, 0.0, 1};
  s.noise_enabled = true;
  return s;
}

namespace {

ToolPose home_pose(const Scene& s) { return ToolPose{s.home_tip_pose, s.sensor_mount, 0.0}; }

}  // namespace

World::World(Scene scene) : scene_(std::move(scene)), pose_(home_pose(scene_), scene_.limits) {
  scene_.validate();
  if (scene_.noise_enabled) noise_.emplace(scene_.noise);
  publish();
}

void World::rehome() {
  ToolPose p = home_pose(scene_);
  p.t = pose_.pose().t;
  pose_.reset(p);
}

const WorldTruth& World::step(double t, double dt, const OperatorCommand& cmd, JawButton jaw_button) {
  pose_.apply(cmd, dt);
  // Pin the pose clock to the tick clock so long sessions do not drift.
  pose_.set_time(t);
  const ToolPose& p = pose_.pose();
  const Vec3& v = pose_.tip_velocity();
  jaw_ = jaw_step(jaw_, jaw_button, t, dt, scene_.jaw);

  const Rotation& r_wb = scene_.base_to_world.rotation();
  truth_.t = t;
  truth_.tip_world = scene_.base_to_world.apply(p.tip_to_base.translation());
  const Vec3 v_world = r_wb * v;
  truth_.depth = scene_.tissue.probe(truth_.tip_world).depth;
  truth_.force_world = contact_force(truth_.tip_world, v_world, scene_.tissue);
  truth_.contact = truth_.depth > 0.0;
  publish();
  return truth_;
}

void World::publish() {
  const ToolPose& p = pose_.pose();
  RawSensorSample raw =
      synth_sensor(truth_.force_world, p, scene_.base_to_world, scene_.tool, noise_ ? &*noise_ : nullptr);
  truth_.force_sensor = raw.sensor_to_world.inverse() * truth_.force_world;
  sensor_cell_.write(std::move(raw));
  kinematics_cell_.write(pose_.kinematics());
}

}  // namespace wristhap::sim
