#include <doctest.h>

#include <random>
#include <vector>

#include "support.hpp"
#include "wristhap/compensation.hpp"
#include "wristhap/filter.hpp"

using namespace wristhap;
using wristhap::testing::max_abs_diff;
using wristhap::testing::TrueTool;
using wristhap::testing::synthetic_pose;
using wristhap::testing::capture_orientations;

namespace {

const TrueTool kTool{0.42, Vec3(0.003, -0.004, 0.11), Vec3(0.7, -0.3, 1.1), Vec3(0.015, -0.02, 0.004)};

}  // namespace

TEST_CASE("compensate: nothing to remove") {
  const auto model = CompensationModel::identified(0.0, Vec3::Zero(), Wrench::zero(FrameId::sensor()));
  const RawSensorSample s{Wrench(Vec3(1, 2, 3), Vec3::Zero(), FrameId::sensor()), 0.0, Rotation()};
  CHECK(max_abs_diff(compensate(s, model).force, Vec3(1, 2, 3)) == 0.0);
}

TEST_CASE("compensate: 0.5 kg hanging tool reads zero") {
  const auto model = CompensationModel::identified(0.5, Vec3::Zero(), Wrench::zero(FrameId::sensor()));
  const RawSensorSample s{Wrench(Vec3(0, 0, -4.905), Vec3::Zero(), FrameId::sensor()), 0.0, Rotation()};
  CHECK(max_abs_diff(compensate(s, model).force, Vec3::Zero()) <= 1e-15);
}

TEST_CASE("compensate: recovers an injected contact force under gravity and bias") {
  std::mt19937_64 rng(17);
  const auto model = CompensationModel::identified(
      kTool.mass, kTool.com, Wrench(kTool.bias_f, kTool.bias_t, FrameId::sensor()));
  for (int n = 0; n < 500; ++n) {
    const Mat3 r = testing::random_rotation_matrix(rng);
    const Vec3 contact = testing::random_vec(rng, 3.0);
    RawSensorSample s = synthetic_pose(kTool, r, 0.0);
    s.wrench = Wrench(s.wrench.force() + contact, s.wrench.torque(), FrameId::sensor());
    CHECK(max_abs_diff(compensate(s, model).force, contact) <= 1e-9);
  }
}

TEST_CASE("compensate: refuses an uncalibrated model and foreign frames") {
  const RawSensorSample s{Wrench::zero(FrameId::sensor()), 0.0, Rotation()};
  CHECK_THROWS_AS(compensate(s, CompensationModel{}), NotCalibratedError);
  const RawSensorSample foreign{Wrench::zero(FrameId::tip()), 0.0, Rotation()};
  const auto model = CompensationModel::identified(0.1, Vec3::Zero(), Wrench::zero(FrameId::sensor()));
  CHECK_THROWS_AS(compensate(foreign, model), FrameMismatchError);
}

TEST_CASE("CompensationModel invariants") {
  CHECK_THROWS_AS(CompensationModel::identified(-0.1, Vec3::Zero(), Wrench::zero(FrameId::sensor())),
                  std::invalid_argument);
  CHECK_THROWS_AS(CompensationModel::identified(0.1, Vec3::Zero(), Wrench::zero(FrameId::sensor()), Vec3::Zero()),
                  std::invalid_argument);
}

TEST_CASE("calibrate: noise-free generate-then-fit round trip") {
  std::vector<RawSensorSample> poses;
  double t = 0.0;
  for (const Mat3& r : capture_orientations(12, 99)) poses.push_back(synthetic_pose(kTool, r, t += 0.1));
  const CalibrationResult fit = calibrate(poses);
  CHECK(std::abs(fit.model.tool_mass() - kTool.mass) <= 1e-8);
  CHECK(max_abs_diff(fit.model.com_offset(), kTool.com) <= 1e-8);
  CHECK(max_abs_diff(fit.model.bias().force(), kTool.bias_f) <= 1e-8);
  CHECK(max_abs_diff(fit.model.bias().torque(), kTool.bias_t) <= 1e-8);
  CHECK(fit.rms_residual <= 1e-10);
  CHECK(fit.poses == 12);

  SUBCASE("refitting data generated from the fitted model is idempotent") {
    const TrueTool refit{fit.model.tool_mass(), fit.model.com_offset(), fit.model.bias().force(),
                         fit.model.bias().torque()};
    std::vector<RawSensorSample> again;
    for (const auto& p : poses) again.push_back(synthetic_pose(refit, p.sensor_to_world.matrix(), p.timestamp));
    const CalibrationResult fit2 = calibrate(again);
    CHECK(std::abs(fit2.model.tool_mass() - fit.model.tool_mass()) <= 1e-8);
    CHECK(max_abs_diff(fit2.model.com_offset(), fit.model.com_offset()) <= 1e-8);
    CHECK(max_abs_diff(fit2.model.bias().force(), fit.model.bias().force()) <= 1e-8);
    CHECK(max_abs_diff(fit2.model.bias().torque(), fit.model.bias().torque()) <= 1e-8);
  }
}

TEST_CASE("calibrate: noisy capture stays within the covariance bound") {
  int outside = 0;
  double mass_sum = 0.0;
  const auto orientations = capture_orientations(12, 5);
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<RawSensorSample> poses;
    for (const Mat3& r : orientations) poses.push_back(synthetic_pose(kTool, r, 0.0, &rng, 0.05, 0.005));
    const CalibrationResult fit = calibrate(poses);
    mass_sum += fit.model.tool_mass();
    if (std::abs(fit.model.tool_mass() - kTool.mass) > 3.0 * fit.mass_stddev) ++outside;
    CHECK(fit.mass_stddev > 0.0);
  }
  // P(|z| > 3) = 0.27%, so more than two escapes out of 100 would be suspicious.
  CHECK(outside <= 2);
  CHECK(std::abs(mass_sum / 100.0 - kTool.mass) < 0.01 * kTool.mass);
}

TEST_CASE("calibrate: insufficient excitation") {
  std::mt19937_64 rng(1);
  const Mat3 r = testing::random_rotation_matrix(rng);
  std::vector<RawSensorSample> same;
  for (int k = 0; k < 8; ++k) same.push_back(synthetic_pose(kTool, r, k));
  CHECK_THROWS_AS(calibrate(same), InsufficientExcitationError);

  std::vector<RawSensorSample> few;
  for (const Mat3& m : capture_orientations(5, 3)) few.push_back(synthetic_pose(kTool, m, 0.0));
  CHECK_THROWS_AS(calibrate(few), InsufficientExcitationError);
}

TEST_CASE("MovingAverageFilter") {
  auto in = [](double x) { return CompensatedForce{Vec3(x, -x, 2 * x), 0.0}; };

  SUBCASE("DC gain is exactly one") {
    MovingAverageFilter f(10);
    FilteredForce out;
    for (int k = 0; k < 25; ++k) out = f.step(in(0.1));
    CHECK(out.force == Vec3(0.1, -0.1, 0.2));
  }

  SUBCASE("window of four averages 0,0,0,4 to 1") {
    MovingAverageFilter f(4);
    f.step(in(0));
    f.step(in(0));
    f.step(in(0));
    CHECK(f.step(in(4)).force.x() == 1.0);
  }

  SUBCASE("warm-up averages over the samples seen so far") {
    MovingAverageFilter f(10);
    CHECK(f.step(in(2)).force.x() == 2.0);
    CHECK(f.step(in(4)).force.x() == 3.0);
    CHECK(f.size() == 2);
  }

  SUBCASE("impulse response is finite") {
    MovingAverageFilter f(5);
    for (int k = 0; k < 5; ++k) f.step(in(0));
    CHECK(f.step(in(1)).force.x() == doctest::Approx(0.2));
    FilteredForce out;
    for (int k = 0; k < 5; ++k) out = f.step(in(0));
    CHECK(out.force.x() == 0.0);
    CHECK(f.size() <= f.window());
  }

  SUBCASE("linear in its input") {
    std::mt19937_64 rng(4);
    MovingAverageFilter fx(7), fy(7), fz(7);
    const double a = 0.7, b = -1.3;
    for (int k = 0; k < 200; ++k) {
      const Vec3 x = testing::random_vec(rng), y = testing::random_vec(rng);
      const Vec3 ox = fx.step({x, 0.0}).force;
      const Vec3 oy = fy.step({y, 0.0}).force;
      const Vec3 oz = fz.step({a * x + b * y, 0.0}).force;
      CHECK(max_abs_diff(oz, a * ox + b * oy) <= 1e-14);
    }
  }

  SUBCASE("rejects a zero window and non-finite input") {
    CHECK_THROWS_AS(MovingAverageFilter(0), std::invalid_argument);
    MovingAverageFilter f(3);
    CHECK_THROWS_AS(f.step({Vec3(NAN, 0, 0), 0.0}), std::invalid_argument);
  }
}
