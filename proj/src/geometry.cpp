#include "wristhap/geometry.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace wristhap {

namespace {

void require_frames(const FrameId& have, const FrameId& want, const char* what) {
  if (have != want) {
    std::ostringstream os;
    os << what << ": frame '" << have.name() << "' does not match expected '" << want.name() << "'";
    throw FrameMismatchError(os.str());
  }
}

}  // namespace

FrameId::FrameId(std::string name) : name_(std::move(name)) {
  if (name_.empty()) throw std::invalid_argument("FrameId: empty frame name");
}

bool all_finite(const Vec3& v) { return v.allFinite(); }

bool is_rotation(const Mat3& m, double tol) {
  if (!m.allFinite()) return false;
  const Mat3 gram = m.transpose() * m;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(m.determinant() - 1.0) <= tol;
}

Rotation::Rotation(const Mat3& m) : m_(m) {
  if (!is_rotation(m)) throw std::invalid_argument("Rotation: matrix is not a proper rotation");
}

Rotation Rotation::about_axis(const Vec3& axis, double angle_rad) {
  if (!axis.allFinite() || axis.norm() == 0.0 || !std::isfinite(angle_rad)) {
    throw std::invalid_argument("Rotation::about_axis: bad axis or angle");
  }
  return Rotation(Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix());
}

Rotation Rotation::orthonormalized(const Mat3& m) {
  if (!m.allFinite()) throw std::invalid_argument("Rotation::orthonormalized: non-finite matrix");
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return Rotation(r);
}

Rotation Rotation::inverse() const { return Rotation(m_.transpose(), Unchecked{}); }

Rotation Rotation::operator*(const Rotation& rhs) const { return Rotation(m_ * rhs.m_, Unchecked{}); }

Mat3 skew(const Vec3& p) {
  if (!p.allFinite()) throw std::invalid_argument("skew: non-finite vector");
  Mat3 s;
  s << 0.0, -p.z(), p.y(),
       p.z(), 0.0, -p.x(),
       -p.y(), p.x(), 0.0;
  return s;
}

RigidTransform::RigidTransform(FrameId from, FrameId to, Rotation rotation, Vec3 translation)
    : from_(std::move(from)), to_(std::move(to)), rotation_(rotation), translation_(std::move(translation)) {
  if (!translation_.allFinite()) throw std::invalid_argument("RigidTransform: non-finite translation");
}

RigidTransform RigidTransform::inverse() const {
  const Rotation rt = rotation_.inverse();
  return {to_, from_, rt, -(rt * translation_)};
}

RigidTransform compose(const RigidTransform& x1, const RigidTransform& x2) {
  require_frames(x2.from(), x1.to(), "compose");
  return {x1.from(), x2.to(), x2.rotation() * x1.rotation(),
          x2.rotation() * x1.translation() + x2.translation()};
}

Wrench::Wrench(Vec3 force, Vec3 torque, FrameId frame)
    : force_(std::move(force)), torque_(std::move(torque)), frame_(std::move(frame)) {
  if (!force_.allFinite() || !torque_.allFinite()) throw std::invalid_argument("Wrench: non-finite component");
}

Wrench transform_wrench(const Wrench& w, const RigidTransform& x) {
  require_frames(w.frame(), x.from(), "transform_wrench");
  const Mat3& r = x.rotation().matrix();
  const Vec3 f = r * w.force();
  const Vec3 tau = skew(x.translation()) * f + r * w.torque();
  return {f, tau, x.to()};
}

Vec3 rotate_force(const Vec3& f, const Mat3& rotation) {
  if (!is_rotation(rotation)) throw std::invalid_argument("rotate_force: rotation is not orthonormal");
  return rotation * f;
}

}  // namespace wristhap
