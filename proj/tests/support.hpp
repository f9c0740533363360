#pragma once
// Shared generators and independent oracles for the test suites. Nothing
// here calls into the library's math; the oracles are written out by hand.

#include <cmath>
#include <random>

#include <vector>

#include "wristhap/compensation.hpp"
#include "wristhap/geometry.hpp"

namespace wristhap::testing {

inline Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

/// Uniformly distributed rotation from a random unit quaternion.
inline Mat3 random_rotation_matrix(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  double w = n(rng), x = n(rng), y = n(rng), z = n(rng);
  const double s = std::sqrt(w * w + x * x + y * y + z * z);
  w /= s; x /= s; y /= s; z /= s;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
       2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
       2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return r;
}

inline Rotation random_rotation(std::mt19937_64& rng) { return Rotation::orthonormalized(random_rotation_matrix(rng)); }

/// a x b written out component by component.
inline Vec3 cross_oracle(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// Plain triple loop matrix-vector product.
inline Vec3 matvec_oracle(const Mat3& m, const Vec3& v) {
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) acc += m(i, k) * v[k];
    out[i] = acc;
  }
  return out;
}

/// Wrench transform from the 6x6 block form, using cross_oracle for the
/// skew-symmetric block.
inline void wrench_oracle(const Mat3& r, const Vec3& p, const Vec3& f, const Vec3& tau, Vec3& f_out, Vec3& tau_out) {
  const Vec3 rf = matvec_oracle(r, f);
  f_out = rf;
  tau_out = cross_oracle(p, rf) + matvec_oracle(r, tau);
}

inline double max_abs_diff(const Vec3& a, const Vec3& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Contact-free sensor reading of a tool with known parameters.
struct TrueTool {
  double mass;
  Vec3 com;
  Vec3 bias_f;
  Vec3 bias_t;
};

// Static gravity model written out directly: g_S = R^T g_W.
inline RawSensorSample synthetic_pose(const TrueTool& tool, const Mat3& r_ws, double t, std::mt19937_64* rng = nullptr,
                               double sigma_f = 0.0, double sigma_t = 0.0) {
  const Vec3 g_s = r_ws.transpose() * Vec3(0, 0, -9.81);
  const Vec3 fg = tool.mass * g_s;
  Vec3 f = tool.bias_f + fg;
  Vec3 tau = tool.bias_t + cross_oracle(tool.com, fg);
  if (rng) {
    std::normal_distribution<double> nf(0.0, sigma_f), nt(0.0, sigma_t);
    f += Vec3(nf(*rng), nf(*rng), nf(*rng));
    tau += Vec3(nt(*rng), nt(*rng), nt(*rng));
  }
  return {Wrench(f, tau, FrameId::sensor()), t, Rotation::orthonormalized(r_ws)};
}

inline std::vector<Mat3> capture_orientations(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Mat3> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(random_rotation_matrix(rng));
  return out;
}

}  // namespace wristhap::testing
