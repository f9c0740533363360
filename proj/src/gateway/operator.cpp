#include "wristhap/gateway/operator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wristhap/errors.hpp"

namespace wristhap::gateway {

void OperatorParams::validate() const {
  if (!(gain > 0.0) || !(max_speed > 0.0)) throw ConfigError("operator: gain and max_speed must be > 0");
  if (feedback_delay_s < 0.0 || visual_delay_s < 0.0) throw ConfigError("operator: delays must be >= 0");
  if (output_noise < 0.0 || stiffness_belief_sd < 0.0 || stiffness_trial_sd < 0.0 || visual_noise_m < 0.0 ||
      gain_sd < 0.0) {
    throw ConfigError("operator: noise levels must be >= 0");
  }
  if (!(visual_noise_tau_s > 0.0)) throw ConfigError("operator: visual_noise_tau_s must be > 0");
}

OperatorParams OperatorParams::ideal_controller() {
  OperatorParams p;
  p.feedback_delay_s = 0.0;
  p.visual_delay_s = 0.0;
  p.output_noise = 0.0;
  p.stiffness_belief_sd = 0.0;
  p.stiffness_trial_sd = 0.0;
  p.visual_noise_m = 0.0;
  p.gain_sd = 0.0;
  p.ideal = true;
  return p;
}

nlohmann::json operator_to_json(const OperatorParams& p) {
  return {{"gain_m_s_per_N", p.gain},
          {"max_speed_m_s", p.max_speed},
          {"feedback_delay_s", p.feedback_delay_s},
          {"visual_delay_s", p.visual_delay_s},
          {"output_noise_m_s", p.output_noise},
          {"stiffness_belief_sd", p.stiffness_belief_sd},
          {"stiffness_trial_sd", p.stiffness_trial_sd},
          {"visual_noise_m", p.visual_noise_m},
          {"visual_noise_tau_s", p.visual_noise_tau_s},
          {"gain_sd", p.gain_sd},
          {"ideal", p.ideal}};
}

OperatorParams operator_from_json(const nlohmann::json& j) {
  OperatorParams p = j.value("ideal", false) ? OperatorParams::ideal_controller() : OperatorParams{};
  const std::pair<const char*, double*> fields[] = {
      {"gain_m_s_per_N", &p.gain},
      {"max_speed_m_s", &p.max_speed},
      {"feedback_delay_s", &p.feedback_delay_s},
      {"visual_delay_s", &p.visual_delay_s},
      {"output_noise_m_s", &p.output_noise},
      {"stiffness_belief_sd", &p.stiffness_belief_sd},
      {"stiffness_trial_sd", &p.stiffness_trial_sd},
      {"visual_noise_m", &p.visual_noise_m},
      {"visual_noise_tau_s", &p.visual_noise_tau_s},
      {"gain_sd", &p.gain_sd},
  };
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "ideal") continue;
      auto it = std::find_if(std::begin(fields), std::end(fields), [&](const auto& f) { return key == f.first; });
      if (it == std::end(fields)) throw ConfigError("operator: unknown key '" + key + "'");
      *it->second = value.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("operator: ") + e.what());
  }
  p.validate();
  return p;
}

ScriptedOperator::ScriptedOperator(OperatorParams params, std::uint64_t seed, const Vec3& approach, double stiffness,
                                   ScalingParams scaling)
    : params_(params), rng_(seed), approach_(approach.normalized()), stiffness_(stiffness), scaling_(scaling) {
  params_.validate();
  if (!(stiffness > 0.0)) throw std::invalid_argument("ScriptedOperator: stiffness must be > 0");
  gain_ = params_.gain * std::exp(params_.gain_sd * unit_(rng_));
  participant_belief_ = std::max(0.2, 1.0 + params_.stiffness_belief_sd * unit_(rng_));
}

void ScriptedOperator::begin_trial(const trial::TrialConfig& trial) {
  trial_ = trial;
  trial_belief_ = std::max(0.2, participant_belief_ * (1.0 + params_.stiffness_trial_sd * unit_(rng_)));
  visual_error_ = params_.visual_noise_m * unit_(rng_);
  history_.clear();
}

void ScriptedOperator::end_trial() {
  trial_.reset();
  history_.clear();
}

std::optional<double> ScriptedOperator::estimate_force(double t, bool feedback_available) const {
  const double delay = feedback_available ? params_.feedback_delay_s : params_.visual_delay_s;
  // Latest perception at least `delay` old.
  const Perception* seen = nullptr;
  for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
    if (it->t <= t - delay + 1e-9) {
      seen = &*it;
      break;
    }
  }
  if (!seen) return std::nullopt;
  if (params_.ideal) return seen->true_force;
  if (feedback_available) {
    const double m = std::min(seen->feedback->norm() / scaling_.f_max, 1.0 - 1e-12);
    return scaling_.f_scale * std::atanh(m);
  }
  return stiffness_ * trial_belief_ * std::max(0.0, seen->depth_m + visual_error_);
}

sim::OperatorCommand ScriptedOperator::act(const Perception& p, double dt) {
  if (!trial_) return {};
  history_.push_back(p);
  const double keep = std::max(params_.feedback_delay_s, params_.visual_delay_s) + 2.0 * dt;
  while (history_.size() > 2 && history_[1].t <= p.t - keep) history_.pop_front();

  const double a = dt / params_.visual_noise_tau_s;
  visual_error_ += -a * visual_error_ + params_.visual_noise_m * std::sqrt(2.0 * a) * unit_(rng_);

  const bool feedback = p.feedback.has_value();
  const std::optional<double> f = estimate_force(p.t, feedback);
  // Before the first percept arrives the operator keeps still.
  double speed = f ? gain_ * (trial_->target_force - *f) : 0.0;
  speed = std::clamp(speed, -params_.max_speed, params_.max_speed);
  if (params_.output_noise > 0.0) speed += params_.output_noise * unit_(rng_);

  sim::OperatorCommand cmd;
  cmd.linear = approach_ * speed;
  return cmd;
}

}  // namespace wristhap::gateway
