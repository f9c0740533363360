#pragma once
// Session configuration: one JSON file, optionally overridden from the
// command line. Key-level schema in docs/formats.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "wristhap/gateway/operator.hpp"
#include "wristhap/render.hpp"
#include "wristhap/trial.hpp"
#include "wristhap/world.hpp"

namespace wristhap::gateway {

inline constexpr int kSessionFormatVersion = 1;

struct SessionConfig {
  std::optional<std::filesystem::path> scene_path;  // default scene when absent
  sim::Scene scene = sim::default_scene();           // loaded from scene_path
  ScalingParams scaling;
  std::size_t filter_window = MovingAverageFilter::kDefaultWindow;
  double tick_rate_hz = 1000.0;
  std::uint64_t trial_seed = 1;
  std::string participant_id = "P01";
  std::filesystem::path output_dir = "wristhap_out";
  trial::TrialConfig trial;          // tolerance and timing; target and mode come from the schedule
  std::size_t max_trials = 20;       // run only the first N schedule entries
  OperatorParams operator_params;
  std::size_t telemetry_decimation = 10;
  std::size_t telemetry_log_every = 1;  // 0 disables the telemetry log
  bool realtime = false;

  /// Throws ConfigError with a diagnostic naming the offending field.
  void validate() const;
  PipelineConfig pipeline_config() const;
};

/// Resolves scene_path relative to the config file and loads it.
SessionConfig load_session_config(const std::filesystem::path& path);
SessionConfig session_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
/// The scene is embedded in full so a session directory replays on its own.
nlohmann::json session_config_to_json(const SessionConfig& c);

/// WRISTHAP_LISTEN ("host:port"), defaulting to 127.0.0.1:8765.
struct ListenAddress {
  std::string host = "127.0.0.1";
  unsigned short port = 8765;
};
ListenAddress listen_address_from_env();
ListenAddress parse_listen_address(const std::string& s);

}  // namespace wristhap::gateway
