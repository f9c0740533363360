// wristhap: gateway command-line entry point.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "wristhap/errors.hpp"
#include "wristhap/gateway/config.hpp"
#include "wristhap/gateway/inbox.hpp"
#include "wristhap/gateway/logs.hpp"
#include "wristhap/gateway/report.hpp"
#include "wristhap/gateway/session.hpp"
#include "wristhap/gateway/telemetry.hpp"
#include "wristhap/gateway/ws_server.hpp"
#include "wristhap/scene_io.hpp"

namespace fs = std::filesystem;
using namespace wristhap;
using namespace wristhap::gateway;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> participant;
  std::optional<std::string> output;
  std::optional<double> tick_rate;
};

void add_common(CLI::App* app, CommonArgs& a) {
  app->add_option("-c,--config", a.config, "Session config JSON")->check(CLI::ExistingFile);
  app->add_option("--seed", a.seed, "Trial schedule seed");
  app->add_option("--participant", a.participant, "Participant id");
  app->add_option("-o,--output", a.output, "Output directory");
  app->add_option("--tick-rate", a.tick_rate, "Control rate (Hz)");
}

SessionConfig resolve(const CommonArgs& a) {
  SessionConfig c = a.config.empty() ? SessionConfig{} : load_session_config(a.config);
  if (a.seed) c.trial_seed = *a.seed;
  if (a.participant) c.participant_id = *a.participant;
  if (a.output) c.output_dir = *a.output;
  if (a.tick_rate) c.tick_rate_hz = *a.tick_rate;
  c.validate();
  return c;
}

void print_session(const SessionResult& r) {
  std::size_t ok = 0;
  for (const auto& t : r.records.trials) ok += t.outcome == trial::Outcome::kSuccess;
  std::printf("%s: %zu/%zu trials, %zu successful, deadline met %.4f%%, output %s\n",
              r.records.participant.c_str(), r.records.trials.size(), r.scheduled, ok,
              100.0 * r.loop.deadline_met_rate(), r.dir.string().c_str());
}

void print_summary(const trial::StudySummary& s) {
  for (const auto& [mode, m] : s.by_mode) {
    std::printf("mode %-3s  success %.3f  mean rmse %.4f N  mean max_ae %.4f N", trial::to_string(mode),
                m.overall.success_rate(), m.mean_rmse, m.mean_max_ae);
    if (m.mean_tct) std::printf("  mean tct %.3f s", *m.mean_tct);
    std::printf("\n");
  }
  for (const auto& [name, t] : s.tests) {
    std::printf("wilcoxon %-12s n=%zu W=%.1f p=%.4g%s\n", name.c_str(), t.n, t.statistic, t.p_value,
                t.degenerate ? " (degenerate)" : "");
  }
}

std::unique_ptr<WsServer> serve(TelemetryHub& hub, OperatorInbox* inbox, const std::optional<std::string>& static_root) {
  WsServerOptions o;
  o.address = listen_address_from_env();
  if (static_root) o.static_root = fs::path(*static_root);
  auto server = std::make_unique<WsServer>(hub, o, [inbox](const nlohmann::json& cmd) {
    if (!inbox) throw ConfigError("this session does not take operator commands");
    inbox->apply(cmd);
  });
  server->start();
  spdlog::info("telemetry on ws://{}:{}/", o.address.host, server->port());
  return server;
}

int cmd_run(const CommonArgs& a, const std::optional<std::string>& static_root, bool no_realtime) {
  SessionConfig c = resolve(a);
  c.realtime = !no_realtime;
  TelemetryHub hub;
  OperatorInbox inbox;
  auto server = serve(hub, &inbox, static_root);
  SessionOptions opt;
  opt.source = InputSource::kInteractive;
  opt.inbox = &inbox;
  opt.hub = &hub;
  opt.stop = &g_stop;
  const SessionResult r = run_session(c, opt);
  hub.flush();
  server->stop();
  print_session(r);
  return 0;
}

int cmd_simulate(const CommonArgs& a, std::size_t participants, bool realtime, bool no_log,
                 std::optional<std::size_t> trials, bool ideal, bool with_server) {
  SessionConfig c = resolve(a);
  if (realtime) c.realtime = true;
  if (no_log) c.telemetry_log_every = 0;
  if (trials) c.max_trials = *trials;
  if (ideal) c.operator_params = OperatorParams::ideal_controller();
  c.validate();

  std::unique_ptr<TelemetryHub> hub;
  std::unique_ptr<WsServer> server;
  if (with_server) {
    hub = std::make_unique<TelemetryHub>();
    server = serve(*hub, nullptr, std::nullopt);
  }
  if (participants <= 1) {
    SessionOptions opt;
    opt.hub = hub.get();
    opt.stop = &g_stop;
    print_session(run_session(c, opt));
    return 0;
  }
  const CohortResult r = run_cohort(c, participants, hub.get());
  for (const auto& s : r.sessions) print_session(s);
  if (r.summary) {
    print_summary(*r.summary);
  } else {
    spdlog::warn("no cohort summary: {}", r.summary_error);
  }
  return 0;
}

int cmd_replay(const std::string& dir, const std::string& output) {
  const SessionResult r = replay_session(dir, output);
  print_session(r);
  const auto a = deterministic_lines(fs::path(dir) / "trials.csv");
  const auto b = deterministic_lines(fs::path(output) / "trials.csv");
  if (a == b) {
    std::printf("replay identical: %zu trial-log lines\n", a.size());
    return 0;
  }
  std::size_t i = 0;
  while (i < a.size() && i < b.size() && a[i] == b[i]) ++i;
  std::printf("replay differs at trial-log line %zu\n", i + 1);
  return 1;
}

fs::path trial_log_path(const fs::path& p) { return fs::is_directory(p) ? p / "trials.csv" : p; }

int cmd_analyze(const std::vector<std::string>& inputs, const std::optional<std::string>& fig6,
                const std::string& output) {
  if (fig6) {
    const Fig6Export e = export_fig6(*fig6);
    write_fig6(output, e);
    if (e.truncated) spdlog::warn("{}", e.warning);
    std::printf("%zu rows, %zu contact intervals -> %s.csv\n", e.rows.size(), e.intervals.size(), output.c_str());
    return e.truncated ? 3 : 0;
  }
  if (inputs.empty()) throw ConfigError("analyze needs trial logs or --fig6");
  std::vector<trial::ParticipantRecords> records;
  for (const auto& in : inputs) {
    const TrialLog log = read_trial_log(trial_log_path(in));
    if (!log.complete) spdlog::warn("{}: session did not finish; using {} completed trials", in, log.trials.size());
    records.push_back({log.header.participant, log.trials});
  }
  const trial::StudySummary s = trial::summarize(records);
  write_summary(output, s);
  print_summary(s);
  return 0;
}

std::vector<RawSensorSample> synth_poses(const sim::Scene& truth, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> angle(-2.5, 2.5);
  std::optional<sim::NoiseSource> noise;
  if (truth.noise_enabled) noise.emplace(truth.noise);
  std::vector<RawSensorSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 axis(g(rng), g(rng), g(rng));
    sim::ToolPose pose;
    pose.sensor_mount = truth.sensor_mount;
    pose.tip_to_base = RigidTransform(FrameId::tip(), FrameId::base(), Rotation::about_axis(axis, angle(rng)));
    pose.t = static_cast<double>(i);
    out.push_back(sim::synth_sensor(Vec3::Zero(), pose, truth.base_to_world, truth.tool, noise ? &*noise : nullptr));
  }
  return out;
}

int cmd_calibrate(const std::string& poses, const std::string& scene, std::optional<std::size_t> synth,
                  const std::optional<std::string>& truth, std::uint64_t seed) {
  if (synth) {
    const sim::Scene s = truth ? io::load_scene(*truth) : sim::default_scene();
    io::write_pose_log(poses, synth_poses(s, *synth, seed));
    std::printf("wrote %zu synthetic poses to %s\n", *synth, poses.c_str());
  }
  const auto samples = io::read_pose_log(poses);
  const CalibrationResult fit = calibrate(samples);
  io::write_calibration(scene, fit);
  const Vec3& c = fit.model.com_offset();
  std::printf("mass %.6f kg (sd %.2e), com [%.6f %.6f %.6f] m, rms residual %.3e, %zu poses -> %s\n",
              fit.model.tool_mass(), fit.mass_stddev, c.x(), c.y(), c.z(), fit.rms_residual, fit.poses, scene.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wristhap gateway: haptic force feedback pipeline, simulator and trial protocol"};
  app.require_subcommand(1);
  spdlog::set_pattern("[%H:%M:%S.%e] [%l] %v");

  CommonArgs run_args;
  std::optional<std::string> static_root;
  bool no_realtime = false;
  auto* run = app.add_subcommand("run", "Interactive session; operator commands arrive over WebSocket");
  add_common(run, run_args);
  run->add_option("--static", static_root, "Directory served over HTTP on the same port");
  run->add_flag("--no-realtime", no_realtime, "Run ticks back to back instead of on the wall clock");

  CommonArgs sim_args;
  std::size_t participants = 1;
  bool sim_realtime = false, no_log = false, ideal = false, sim_serve = false;
  std::optional<std::size_t> trials;
  auto* simulate = app.add_subcommand("simulate", "Scripted-operator session(s)");
  add_common(simulate, sim_args);
  simulate->add_option("--participants", participants, "Cohort size; > 1 writes one directory per participant")
      ->check(CLI::Range(1, 1000));
  simulate->add_flag("--realtime", sim_realtime, "Pace ticks on the wall clock");
  simulate->add_flag("--no-telemetry-log", no_log, "Skip telemetry.csv");
  simulate->add_option("--trials", trials, "Run only the first N schedule entries")->check(CLI::Range(1, 20));
  simulate->add_flag("--ideal", ideal, "Noise-free, delay-free operator");
  simulate->add_flag("--serve", sim_serve, "Publish telemetry over WebSocket while running");

  std::string replay_dir, replay_out;
  auto* replay = app.add_subcommand("replay", "Re-run a session from its command log and compare trial logs");
  replay->add_option("session", replay_dir, "Session directory")->required()->check(CLI::ExistingDirectory);
  replay->add_option("-o,--output", replay_out, "Output directory")->required();

  std::vector<std::string> analyze_inputs;
  std::optional<std::string> fig6;
  std::string analyze_out = "analysis";
  auto* analyze = app.add_subcommand("analyze", "Cohort summary from trial logs, or force table from a telemetry log");
  analyze->add_option("inputs", analyze_inputs, "Trial logs or session directories");
  analyze->add_option("--fig6", fig6, "Telemetry log to export")->check(CLI::ExistingFile);
  analyze->add_option("-o,--output", analyze_out, "Output directory (summary) or file stem (--fig6)");

  std::string poses, scene_out;
  std::optional<std::size_t> synth;
  std::optional<std::string> truth;
  std::uint64_t synth_seed = 1;
  auto* cal = app.add_subcommand("calibrate", "Fit mass, centre of mass and bias from a contact-free pose log");
  cal->add_option("--poses", poses, "Pose log CSV")->required();
  cal->add_option("--scene", scene_out, "Scene file to update")->required();
  cal->add_option("--synth", synth, "First write N synthetic poses to --poses")->check(CLI::Range(1, 100000));
  cal->add_option("--truth", truth, "Scene supplying the synthetic tool")->check(CLI::ExistingFile);
  cal->add_option("--synth-seed", synth_seed, "Seed for the synthetic orientations");

  CLI11_PARSE(app, argc, argv);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  try {
    if (*run) return cmd_run(run_args, static_root, no_realtime);
    if (*simulate) return cmd_simulate(sim_args, participants, sim_realtime, no_log, trials, ideal, sim_serve);
    if (*replay) return cmd_replay(replay_dir, replay_out);
    if (*analyze) return cmd_analyze(analyze_inputs, fig6, analyze_out);
    if (*cal) return cmd_calibrate(poses, scene_out, synth, truth, synth_seed);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
