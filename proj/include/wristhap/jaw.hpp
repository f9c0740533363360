#pragma once
// Jaw actuation logic: a rising edge on a button moves the jaw one step, a
// press held longer than the long-press threshold moves it continuously until
// release, dedicated commands drive it fully open or closed. Position stays
// within the stroke and never changes faster than the actuator speed.

#include <optional>

namespace wristhap::sim {

enum class JawButton { kReleased, kOpenPressed, kClosePressed };
enum class JawMode { kIdle, kStepping, kContinuousOpen, kContinuousClose };

const char* to_string(JawButton b);
const char* to_string(JawMode m);

struct JawParams {
  double stroke_mm = 20.0;
  double max_speed_mm_s = 15.0;
  double step_mm = 1.0;
  double long_press_s = 0.3;

  void validate() const;
};

struct JawState {
  double position_mm = 0.0;  // 0 = fully closed
  JawMode mode = JawMode::kIdle;
  std::optional<double> press_started;
  JawButton held = JawButton::kReleased;
  double target_mm = 0.0;
  bool latched = false;  // full open/close in progress, survives release
};

/// Advance by one tick of length dt ending at `now`; `button` is the current
/// button level.
JawState jaw_step(const JawState& state, JawButton button, double now, double dt, const JawParams& params = {});

/// Latch a full-stroke move; jaw_step carries it out over subsequent ticks.
JawState full_open(const JawState& state, const JawParams& params = {});
JawState full_close(const JawState& state, const JawParams& params = {});

}  // namespace wristhap::sim
