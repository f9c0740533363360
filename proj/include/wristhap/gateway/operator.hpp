#pragma once
// Synthetic operator for unattended sessions: a proportional force regulator
// acting along the approach direction, with reaction delay and noise.
//
// With feedback the operator senses the rendered haptic command and inverts
// the scaling law to estimate the contact force. Without it the only cue is
// the visible tissue deformation, converted to force through the operator's
// own (imperfect) belief about the tissue stiffness, after a longer visual
// reaction delay and with slowly drifting estimation error.

#include <cstdint>
#include <deque>
#include <optional>
#include <random>

#include <nlohmann/json.hpp>

#include "wristhap/render.hpp"
#include "wristhap/sim.hpp"
#include "wristhap/trial.hpp"

namespace wristhap::gateway {

struct OperatorParams {
  double gain = 0.016;               // m/s of tip speed per N of force error
  double max_speed = 0.02;           // m/s
  double feedback_delay_s = 0.15;    // reaction delay when feedback is available
  double visual_delay_s = 0.35;      // reaction delay on the visual cue alone
  double output_noise = 0.0005;      // m/s, white noise on the commanded speed
  double stiffness_belief_sd = 0.15; // relative error of the believed tissue stiffness, per participant
  double stiffness_trial_sd = 0.05;  // extra relative error redrawn every trial
  double visual_noise_m = 0.0006;    // depth estimation error (m), drifting
  double visual_noise_tau_s = 0.5;   // correlation time of that drift
  double gain_sd = 0.15;             // log-normal spread of the gain across participants
  bool ideal = false;                // zero delay, no noise, perfect force knowledge

  void validate() const;
  static OperatorParams ideal_controller();
};

nlohmann::json operator_to_json(const OperatorParams& p);
/// Missing keys keep their defaults. Throws ConfigError on unknown keys.
OperatorParams operator_from_json(const nlohmann::json& j);

/// What the operator can sense on one tick.
struct Perception {
  double t = 0.0;
  std::optional<Vec3> feedback;  // rendered command, present only with feedback
  double depth_m = 0.0;          // visible penetration, negative above the surface
  double true_force = 0.0;       // contact force magnitude, used by the ideal controller only
};

class ScriptedOperator {
 public:
  /// `approach` is the unit direction, in the base frame, that presses the
  /// tip into the tissue; `stiffness` the true tissue stiffness (N/m).
  ScriptedOperator(OperatorParams params, std::uint64_t seed, const Vec3& approach, double stiffness,
                   ScalingParams scaling);

  void begin_trial(const trial::TrialConfig& trial);
  void end_trial();

  /// Feeds one tick of perception and returns the command for the next tick.
  sim::OperatorCommand act(const Perception& p, double dt);

  const OperatorParams& params() const { return params_; }
  double gain() const { return gain_; }
  double stiffness_belief() const { return participant_belief_; }

 private:
  std::optional<double> estimate_force(double t, bool feedback_available) const;

  OperatorParams params_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> unit_{0.0, 1.0};
  Vec3 approach_;
  double stiffness_;
  ScalingParams scaling_;

  double gain_;
  double participant_belief_;
  double trial_belief_ = 1.0;
  double visual_error_ = 0.0;
  std::optional<trial::TrialConfig> trial_;
  std::deque<Perception> history_;
};

}  // namespace wristhap::gateway
