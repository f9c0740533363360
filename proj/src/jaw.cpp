#include "wristhap/jaw.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wristhap::sim {

namespace {

// Comparisons against the long-press threshold tolerate tick-time rounding.
constexpr double kTimeEps = 1e-9;

double clamp_stroke(double x, const JawParams& p) { return std::clamp(x, 0.0, p.stroke_mm); }

}  // namespace

const char* to_string(JawButton b) {
  switch (b) {
    case JawButton::kReleased: return "released";
    case JawButton::kOpenPressed: return "open_pressed";
    case JawButton::kClosePressed: return "close_pressed";
  }
  return "unknown";
}

const char* to_string(JawMode m) {
  switch (m) {
    case JawMode::kIdle: return "idle";
    case JawMode::kStepping: return "stepping";
    case JawMode::kContinuousOpen: return "continuous_open";
    case JawMode::kContinuousClose: return "continuous_close";
  }
  return "unknown";
}

void JawParams::validate() const {
  if (!(stroke_mm > 0.0) || !(max_speed_mm_s > 0.0) || !(step_mm > 0.0) || !(long_press_s > 0.0)) {
    throw std::invalid_argument("JawParams: all parameters must be positive");
  }
}

JawState jaw_step(const JawState& state, JawButton button, double now, double dt, const JawParams& p) {
  if (!(dt > 0.0)) throw std::invalid_argument("jaw_step: dt must be > 0");
  JawState s = state;

  const bool pressed = button != JawButton::kReleased;
  if (pressed && button != s.held) {
    // Rising edge, or a switch straight from one button to the other.
    const double dir = button == JawButton::kOpenPressed ? 1.0 : -1.0;
    s.held = button;
    s.press_started = now;
    s.latched = false;
    s.mode = JawMode::kStepping;
    s.target_mm = clamp_stroke(s.position_mm + dir * p.step_mm, p);
  } else if (!pressed && s.held != JawButton::kReleased) {
    s.held = JawButton::kReleased;
    s.press_started.reset();
    if (!s.latched && (s.mode == JawMode::kContinuousOpen || s.mode == JawMode::kContinuousClose)) {
      s.mode = JawMode::kIdle;
      s.target_mm = s.position_mm;
    }
  } else if (pressed && s.press_started && now - *s.press_started > p.long_press_s + kTimeEps) {
    const bool open = button == JawButton::kOpenPressed;
    s.mode = open ? JawMode::kContinuousOpen : JawMode::kContinuousClose;
    s.target_mm = open ? p.stroke_mm : 0.0;
  }

  if (s.mode != JawMode::kIdle) {
    const double max_move = p.max_speed_mm_s * dt;
    const double delta = std::clamp(s.target_mm - s.position_mm, -max_move, max_move);
    s.position_mm = clamp_stroke(s.position_mm + delta, p);
    const bool arrived = std::abs(s.target_mm - s.position_mm) <= 1e-12;
    if (arrived) s.position_mm = s.target_mm;
    if (arrived && (s.mode == JawMode::kStepping || s.latched)) {
      s.mode = JawMode::kIdle;
      s.latched = false;
    }
  }
  return s;
}

JawState full_open(const JawState& state, const JawParams& p) {
  JawState s = state;
  s.target_mm = p.stroke_mm;
  if (s.position_mm >= p.stroke_mm) {
    s.position_mm = p.stroke_mm;
    s.mode = JawMode::kIdle;
    s.latched = false;
    return s;
  }
  s.mode = JawMode::kContinuousOpen;
  s.latched = true;
  return s;
}

JawState full_close(const JawState& state, const JawParams& /*params*/) {
  JawState s = state;
  s.target_mm = 0.0;
  if (s.position_mm <= 0.0) {
    s.position_mm = 0.0;
    s.mode = JawMode::kIdle;
    s.latched = false;
    return s;
  }
  s.mode = JawMode::kContinuousClose;
  s.latched = true;
  return s;
}

}  // namespace wristhap::sim
