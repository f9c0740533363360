#pragma once
// Frame-tagged rigid-body algebra.
//
// Convention: a RigidTransform {from = i, to = j} maps coordinates expressed
// in frame i into frame j, p_j = R * p_i + t. R is therefore the rotation
// written ^j_i R and t the origin of frame i expressed in j (^j_i P).

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <string>
#include <string_view>

#include "wristhap/errors.hpp"

namespace wristhap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kOrthonormalTol = 1e-9;

class FrameId {
 public:
  FrameId() = default;
  explicit FrameId(std::string name);

  static FrameId sensor() { return FrameId("S"); }
  static FrameId tip() { return FrameId("T"); }
  static FrameId base() { return FrameId("B"); }
  static FrameId haptic() { return FrameId("H"); }
  static FrameId world() { return FrameId("W"); }

  const std::string& name() const { return name_; }
  bool operator==(const FrameId&) const = default;

 private:
  std::string name_;
};

/// Proper rotation matrix; orthonormality and det = +1 are checked on
/// construction to kOrthonormalTol.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}
  explicit Rotation(const Mat3& m);

  static Rotation identity() { return Rotation(); }
  static Rotation about_axis(const Vec3& axis, double angle_rad);
  /// Closest proper rotation to m (polar decomposition); used when a matrix
  /// has accumulated rounding, e.g. after integrating angular velocity.
  static Rotation orthonormalized(const Mat3& m);

  const Mat3& matrix() const { return m_; }
  Rotation inverse() const;
  Rotation operator*(const Rotation& rhs) const;
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

 private:
  struct Unchecked {};
  Rotation(const Mat3& m, Unchecked) : m_(m) {}
  Mat3 m_;
};

bool is_rotation(const Mat3& m, double tol = kOrthonormalTol);

/// Skew-symmetric matrix with skew(p) * v == p.cross(v).
Mat3 skew(const Vec3& p);

class RigidTransform {
 public:
  RigidTransform(FrameId from, FrameId to, Rotation rotation = {}, Vec3 translation = Vec3::Zero());

  static RigidTransform identity(const FrameId& frame) { return {frame, frame}; }

  const FrameId& from() const { return from_; }
  const FrameId& to() const { return to_; }
  const Rotation& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  RigidTransform inverse() const;

 private:
  FrameId from_;
  FrameId to_;
  Rotation rotation_;
  Vec3 translation_;
};

/// x1: i -> j followed by x2: j -> k gives i -> k.
RigidTransform compose(const RigidTransform& x1, const RigidTransform& x2);

class Wrench {
 public:
  Wrench(Vec3 force, Vec3 torque, FrameId frame);

  static Wrench zero(FrameId frame) { return {Vec3::Zero(), Vec3::Zero(), std::move(frame)}; }

  const Vec3& force() const { return force_; }
  const Vec3& torque() const { return torque_; }
  const FrameId& frame() const { return frame_; }

 private:
  Vec3 force_;
  Vec3 torque_;
  FrameId frame_;
};

/// Moves a wrench acting at the origin of frame i to the origin of frame j:
///   f_j = R f_i
///   tau_j = skew(P) R f_i + R tau_i
Wrench transform_wrench(const Wrench& w, const RigidTransform& x);

/// R * f, with the rotation revalidated.
Vec3 rotate_force(const Vec3& f, const Mat3& rotation);
inline Vec3 rotate_force(const Vec3& f, const Rotation& rotation) { return rotation * f; }

bool all_finite(const Vec3& v);

}  // namespace wristhap
