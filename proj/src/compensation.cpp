#include "wristhap/compensation.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace wristhap {

namespace {

constexpr int kParams = 10;  // m, b_f(3), m*c(3), b_tau(3)
constexpr double kRankTol = 1e-9;

}  // namespace

CompensationModel CompensationModel::identified(double tool_mass, const Vec3& com_offset, const Wrench& bias,
                                                const Vec3& gravity_world) {
  if (!std::isfinite(tool_mass) || tool_mass < 0.0) {
    throw std::invalid_argument("CompensationModel: tool mass must be finite and >= 0");
  }
  if (!com_offset.allFinite()) throw std::invalid_argument("CompensationModel: non-finite centre of mass");
  if (bias.frame() != FrameId::sensor()) throw FrameMismatchError("CompensationModel: bias must be in sensor frame");
  if (!gravity_world.allFinite() || gravity_world.norm() == 0.0) {
    throw std::invalid_argument("CompensationModel: gravity vector must be finite and non-zero");
  }
  CompensationModel m;
  m.calibrated_ = true;
  m.tool_mass_ = tool_mass;
  m.com_offset_ = com_offset;
  m.bias_ = bias;
  m.gravity_world_ = gravity_world;
  return m;
}

Wrench CompensationModel::gravity_load(const Rotation& sensor_to_world) const {
  const Vec3 f = tool_mass_ * (sensor_to_world.inverse() * gravity_world_);
  return {f, com_offset_.cross(f), FrameId::sensor()};
}

CompensatedForce compensate(const RawSensorSample& sample, const CompensationModel& model) {
  if (!model.calibrated()) throw NotCalibratedError("compensate: compensation model is not calibrated");
  if (sample.wrench.frame() != FrameId::sensor()) {
    throw FrameMismatchError("compensate: raw wrench must be expressed in the sensor frame");
  }
  const Vec3 g = model.gravity_load(sample.sensor_to_world).force();
  return {sample.wrench.force() - model.bias().force() - g, sample.timestamp};
}

Wrench compensate_wrench(const RawSensorSample& sample, const CompensationModel& model) {
  if (!model.calibrated()) throw NotCalibratedError("compensate_wrench: compensation model is not calibrated");
  if (sample.wrench.frame() != FrameId::sensor()) {
    throw FrameMismatchError("compensate_wrench: raw wrench must be expressed in the sensor frame");
  }
  const Wrench g = model.gravity_load(sample.sensor_to_world);
  return {sample.wrench.force() - model.bias().force() - g.force(),
          sample.wrench.torque() - model.bias().torque() - g.torque(), FrameId::sensor()};
}

CalibrationResult calibrate(std::span<const RawSensorSample> poses, const Vec3& gravity_world) {
  if (poses.size() < kMinCalibrationPoses) {
    throw InsufficientExcitationError("calibrate: need at least " + std::to_string(kMinCalibrationPoses) +
                                      " poses, got " + std::to_string(poses.size()));
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(6 * poses.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, kParams);
  Eigen::VectorXd y(rows);

  for (std::size_t k = 0; k < poses.size(); ++k) {
    const auto& p = poses[k];
    if (p.wrench.frame() != FrameId::sensor()) throw FrameMismatchError("calibrate: pose wrench not in sensor frame");
    const Vec3 g_s = p.sensor_to_world.inverse() * gravity_world;
    const Eigen::Index r = static_cast<Eigen::Index>(6 * k);
    // force rows: m * g_s + b_f
    a.block<3, 1>(r, 0) = g_s;
    a.block<3, 3>(r, 1) = Mat3::Identity();
    // torque rows: (m c) x g_s + b_tau = -skew(g_s) (m c) + b_tau
    a.block<3, 3>(r + 3, 4) = -skew(g_s);
    a.block<3, 3>(r + 3, 7) = Mat3::Identity();
    y.segment<3>(r) = p.wrench.force();
    y.segment<3>(r + 3) = p.wrench.torque();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kRankTol);
  if (svd.rank() < kParams) {
    throw InsufficientExcitationError("calibrate: pose orientations do not excite all parameters (rank " +
                                      std::to_string(svd.rank()) + " < " + std::to_string(kParams) + ")");
  }
  const Eigen::VectorXd x = svd.solve(y);
  const Eigen::VectorXd residual = a * x - y;

  CalibrationResult out;
  out.poses = poses.size();
  out.rms_residual = std::sqrt(residual.squaredNorm() / static_cast<double>(rows));

  // Mass only enters the force rows, whose noise differs from the torque
  // rows, so its variance comes from the force block alone.
  const Eigen::Index n = static_cast<Eigen::Index>(poses.size());
  Eigen::MatrixXd af(3 * n, 4);
  Eigen::VectorXd rf(3 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    af.block(3 * k, 0, 3, 4) = a.block(6 * k, 0, 3, 4);
    rf.segment<3>(3 * k) = residual.segment<3>(6 * k);
  }
  const double dof = static_cast<double>(3 * n - 4);
  const double sigma2 = dof > 0.0 ? rf.squaredNorm() / dof : 0.0;
  const Eigen::Matrix4d info = af.transpose() * af;
  const double mass_var = info.inverse()(0, 0);
  out.mass_stddev = std::sqrt(sigma2 * mass_var);

  // A contact-free fit can land marginally below zero for a massless tool.
  const double mass = std::max(0.0, x(0));
  const Vec3 mc = x.segment<3>(4);
  const Vec3 com = mass > 1e-12 ? Vec3(mc / mass) : Vec3::Zero();
  const Wrench bias(x.segment<3>(1), x.segment<3>(7), FrameId::sensor());
  out.model = CompensationModel::identified(mass, com, bias, gravity_world);
  return out;
}

}  // namespace wristhap
