#include "wristhap/gateway/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "wristhap/errors.hpp"
#include "wristhap/scene_io.hpp"

namespace wristhap::gateway {

namespace fs = std::filesystem;
using nlohmann::json;

void SessionConfig::validate() const {
  if (scene_path && !fs::exists(*scene_path)) throw ConfigError("scene file not found: " + scene_path->string());
  if (!(tick_rate_hz >= 100.0 && tick_rate_hz <= 10000.0)) {
    throw ConfigError("tick_rate_hz must be within [100, 10000]");
  }
  if (filter_window < 1 || filter_window > 1000) throw ConfigError("filter_window must be within [1, 1000]");
  if (telemetry_decimation < 1 || telemetry_decimation > 1000) {
    throw ConfigError("telemetry_decimation must be within [1, 1000]");
  }
  if (max_trials < 1 || max_trials > 20) throw ConfigError("max_trials must be within [1, 20]");
  if (participant_id.empty() || participant_id.find_first_of(",\n\r") != std::string::npos) {
    throw ConfigError("participant_id must be non-empty and contain no commas or newlines");
  }
  try {
    scaling.validate();
    trial.validate();
    scene.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const FrameMismatchError& e) {
    throw ConfigError(e.what());
  }
  operator_params.validate();
}

PipelineConfig SessionConfig::pipeline_config() const {
  PipelineConfig p;
  p.tick_rate_hz = tick_rate_hz;
  p.scaling = scaling;
  p.filter_window = filter_window;
  p.base_to_haptic = scene.base_to_haptic;
  return p;
}

namespace {

void only_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(section) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace

SessionConfig session_config_from_json(const json& j, const fs::path& base_dir) {
  SessionConfig c;
  try {
    only_keys(j, "session",
              {"version", "scene_file", "scene", "scaling", "filter_window", "tick_rate_hz", "trial_seed",
               "participant_id", "output_dir", "trial", "max_trials", "operator", "telemetry_decimation",
               "telemetry_log_every", "realtime"});
    if (j.contains("version") && j.at("version").get<int>() != kSessionFormatVersion) {
      throw ConfigError("session: unsupported version " + j.at("version").dump());
    }
    if (j.contains("scene_file") && j.contains("scene")) {
      throw ConfigError("session: give either scene_file or scene, not both");
    }
    if (j.contains("scene_file")) {
      fs::path p = j.at("scene_file").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      c.scene_path = p;
      if (!fs::exists(p)) throw ConfigError("scene file not found: " + p.string());
      c.scene = io::load_scene(p);
    } else if (j.contains("scene")) {
      c.scene = io::scene_from_json(j.at("scene"));
    }
    if (j.contains("scaling")) {
      const json& s = j.at("scaling");
      only_keys(s, "scaling", {"f_scale_N", "f_max_N"});
      c.scaling.f_scale = s.value("f_scale_N", c.scaling.f_scale);
      c.scaling.f_max = s.value("f_max_N", c.scaling.f_max);
    }
    c.filter_window = j.value("filter_window", c.filter_window);
    c.tick_rate_hz = j.value("tick_rate_hz", c.tick_rate_hz);
    c.trial_seed = j.value("trial_seed", c.trial_seed);
    c.participant_id = j.value("participant_id", c.participant_id);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("trial")) {
      const json& t = j.at("trial");
      only_keys(t, "trial", {"tolerance_fraction", "hold_duration_s", "max_duration_s", "inter_trial_pause_s"});
      c.trial.tolerance_fraction = t.value("tolerance_fraction", c.trial.tolerance_fraction);
      c.trial.hold_duration = t.value("hold_duration_s", c.trial.hold_duration);
      c.trial.max_duration = t.value("max_duration_s", c.trial.max_duration);
      c.trial.inter_trial_pause = t.value("inter_trial_pause_s", c.trial.inter_trial_pause);
    }
    c.max_trials = j.value("max_trials", c.max_trials);
    if (j.contains("operator")) c.operator_params = operator_from_json(j.at("operator"));
    c.telemetry_decimation = j.value("telemetry_decimation", c.telemetry_decimation);
    c.telemetry_log_every = j.value("telemetry_log_every", c.telemetry_log_every);
    c.realtime = j.value("realtime", c.realtime);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("session: ") + e.what());
  }
  c.validate();
  return c;
}

SessionConfig load_session_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open session config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("session config " + path.string() + ": " + e.what());
  }
  return session_config_from_json(j, path.parent_path());
}

json session_config_to_json(const SessionConfig& c) {
  return {{"version", kSessionFormatVersion},
          {"scene", io::scene_to_json(c.scene)},
          {"scaling", {{"f_scale_N", c.scaling.f_scale}, {"f_max_N", c.scaling.f_max}}},
          {"filter_window", c.filter_window},
          {"tick_rate_hz", c.tick_rate_hz},
          {"trial_seed", c.trial_seed},
          {"participant_id", c.participant_id},
          {"output_dir", c.output_dir.string()},
          {"trial",
           {{"tolerance_fraction", c.trial.tolerance_fraction},
            {"hold_duration_s", c.trial.hold_duration},
            {"max_duration_s", c.trial.max_duration},
            {"inter_trial_pause_s", c.trial.inter_trial_pause}}},
          {"max_trials", c.max_trials},
          {"operator", operator_to_json(c.operator_params)},
          {"telemetry_decimation", c.telemetry_decimation},
          {"telemetry_log_every", c.telemetry_log_every},
          {"realtime", c.realtime}};
}

ListenAddress parse_listen_address(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == s.size()) {
    throw ConfigError("listen address must be host:port, got '" + s + "'");
  }
  ListenAddress a;
  a.host = s.substr(0, colon);
  const std::string port = s.substr(colon + 1);
  char* end = nullptr;
  const long v = std::strtol(port.c_str(), &end, 10);
  if (*end != '\0' || v < 0 || v > 65535) throw ConfigError("bad port in listen address '" + s + "'");
  a.port = static_cast<unsigned short>(v);
  return a;
}

ListenAddress listen_address_from_env() {
  const char* v = std::getenv("WRISTHAP_LISTEN");
  return v && *v ? parse_listen_address(v) : ListenAddress{};
}

}  // namespace wristhap::gateway
