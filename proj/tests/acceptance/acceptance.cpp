// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "support.hpp"
#include "wristhap/compensation.hpp"
#include "wristhap/gateway/logs.hpp"
#include "wristhap/gateway/session.hpp"
#include "wristhap/gateway/telemetry.hpp"
#include "wristhap/gateway/ws_server.hpp"
#include "wristhap/geometry.hpp"
#include "wristhap/jaw.hpp"
#include "wristhap/loop.hpp"
#include "wristhap/render.hpp"
#include "wristhap/trial.hpp"
#include "wristhap/wilcoxon.hpp"
#include "wristhap/world.hpp"
#include "ws_client.hpp"

using namespace wristhap;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path work_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "wristhap_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1 ---------------------------------------------------------------------

Outcome force_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  sim::Scene scene = sim::default_scene();
  scene.noise_enabled = false;
  sim::World world(scene);
  PipelineConfig pc;
  pc.base_to_haptic = scene.base_to_haptic;
  HapticPipeline pipeline(pc, scene.tool);

  // Press into the tissue and back out four times: the tip travels
  // 5 mm along the approach direction per 7.5 s cycle, 2 mm of it above
  // the surface.
  const Vec3 down = scene.base_to_world.rotation().inverse() * Vec3(-scene.tissue.normal);
  const double period = 7.5, depth = 0.005;
  const double amplitude = depth * M_PI / period;
  const double dt = 0.001;

  double max_comp_err = 0.0, max_render_err = 0.0;
  std::size_t contacts = 0;
  bool was_contact = false;
  ControlLoop::Hooks hooks;
  hooks.before_tick = [&](std::uint64_t, double t) {
    sim::OperatorCommand cmd;
    cmd.linear = down * (amplitude * std::sin(2.0 * M_PI * t / period));
    world.step(t, dt, cmd, sim::JawButton::kReleased);
  };
  hooks.after_tick = [&](const PipelineSample& s) {
    const sim::WorldTruth& truth = world.truth();
    max_comp_err = std::max(max_comp_err, (s.f_ext_S - truth.force_sensor).norm());
    const double expect = 3.0 * std::tanh(s.f_filt_S.norm() / 7.0);
    max_render_err = std::max(max_render_err, std::abs(s.f_H_scaled.norm() - expect));
    if (truth.contact && !was_contact) ++contacts;
    was_contact = truth.contact;
  };
  LoopConfig lc;
  lc.realtime = false;
  ControlLoop loop(lc, pipeline, world.sensor_cell(), world.kinematics_cell(), hooks);
  const LoopStats st = loop.run(30000);
  const double runtime = seconds_since(t0);
  const bool pass = st.ticks == 30000 && contacts >= 3 && max_comp_err <= 1e-9 && max_render_err <= 1e-9 &&
                    runtime < 10.0;
  return {pass, fmt("%llu ticks, %zu contact events, max |comp - truth| %.2e N, max |rendered - 3 tanh(|f|/7)| "
                    "%.2e N, %.2f s",
                    static_cast<unsigned long long>(st.ticks), contacts, max_comp_err, max_render_err, runtime)};
}

// ---- 2 ---------------------------------------------------------------------

Outcome wrench_oracle() {
  std::mt19937_64 rng(2024);
  double max_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = testing::random_rotation_matrix(rng);
    const Vec3 p = testing::random_vec(rng, 0.5);
    const Vec3 f = testing::random_vec(rng, 10.0);
    const Vec3 tau = testing::random_vec(rng, 1.0);
    const RigidTransform x(FrameId::sensor(), FrameId::tip(), Rotation::orthonormalized(r), p);
    const Wrench out = transform_wrench(Wrench(f, tau, FrameId::sensor()), x);
    Vec3 f_o, tau_o;
    // The oracle uses the exact matrix the transform stores.
    testing::wrench_oracle(x.rotation().matrix(), p, f, tau, f_o, tau_o);
    max_err = std::max({max_err, testing::max_abs_diff(out.force(), f_o), testing::max_abs_diff(out.torque(), tau_o)});
  }
  double max_assoc = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const RigidTransform a(FrameId::sensor(), FrameId::tip(), testing::random_rotation(rng), testing::random_vec(rng));
    const RigidTransform b(FrameId::tip(), FrameId::base(), testing::random_rotation(rng), testing::random_vec(rng));
    const RigidTransform c(FrameId::base(), FrameId::world(), testing::random_rotation(rng), testing::random_vec(rng));
    const RigidTransform l = compose(compose(a, b), c);
    const RigidTransform r = compose(a, compose(b, c));
    max_assoc = std::max({max_assoc, (l.rotation().matrix() - r.rotation().matrix()).cwiseAbs().maxCoeff(),
                          testing::max_abs_diff(l.translation(), r.translation())});
  }
  return {max_err <= 1e-10 && max_assoc <= 1e-12,
          fmt("1000 transforms, max oracle error %.2e; 1000 triples, max associativity error %.2e", max_err,
              max_assoc)};
}

// ---- 3 ---------------------------------------------------------------------

Outcome scaling_properties() {
  const ScalingParams sp;  // 7 N, 3 N
  std::mt19937_64 rng(3);
  // 1 uN to 100 N. Beyond about 16 f_scale, 3 tanh(x) is within a few ulps
  // of 3 and distinct inputs can no longer map to distinct doubles.
  std::uniform_real_distribution<double> mag_log(-6.0, 2.0);
  std::vector<double> mags;
  double max_out = 0.0, max_cross = 0.0;
  std::size_t n_bad = 0;
  for (int i = 0; i < 10000; ++i) {
    Vec3 dir = testing::random_vec(rng);
    while (dir.norm() < 1e-3) dir = testing::random_vec(rng);
    const double m = std::pow(10.0, mag_log(rng));
    const Vec3 in = dir.normalized() * m;
    const Vec3 out = scale_feedback(in, sp);
    max_out = std::max(max_out, out.norm());
    if (!(out.norm() < 3.0)) ++n_bad;
    max_cross = std::max(max_cross, testing::cross_oracle(in.normalized(), out).norm());
    if (out.dot(in) <= 0.0) ++n_bad;
    mags.push_back(m);
  }
  // Strict monotonicity on sorted distinct magnitudes along a fixed direction.
  std::sort(mags.begin(), mags.end());
  mags.erase(std::unique(mags.begin(), mags.end()), mags.end());
  const Vec3 u = Vec3(1.0, -2.0, 0.5).normalized();
  std::size_t non_monotone = 0;
  double prev = -1.0;
  for (double m : mags) {
    const double o = scale_feedback(u * m, sp).norm();
    if (!(o > prev)) ++non_monotone;
    prev = o;
  }
  const double h = 1e-6;
  const double slope = scale_feedback(u * h, sp).norm() / h;
  const bool pass = n_bad == 0 && max_cross < 1e-12 && non_monotone == 0 && std::abs(slope - 3.0 / 7.0) < 1e-6;
  return {pass, fmt("10^4 inputs: max output %.15f N, max |cross| %.2e, %zu non-monotone steps, slope %.9f "
                    "(3/7 = %.9f)",
                    max_out, max_cross, non_monotone, slope, 3.0 / 7.0)};
}

// ---- 4 ---------------------------------------------------------------------

Outcome calibration_recovery() {
  const testing::TrueTool tool{0.42, Vec3(0.003, -0.004, 0.11), Vec3(0.7, -0.3, 1.1), Vec3(0.015, -0.02, 0.004)};
  std::vector<RawSensorSample> poses;
  std::size_t k = 0;
  for (const Mat3& r : testing::capture_orientations(12, 99)) poses.push_back(testing::synthetic_pose(tool, r, k++ * 1.0));
  const CalibrationResult fit = calibrate(poses);
  const CompensationModel& m = fit.model;
  const double err = std::max({std::abs(m.tool_mass() - tool.mass), testing::max_abs_diff(m.com_offset(), tool.com),
                               testing::max_abs_diff(m.bias().force(), tool.bias_f),
                               testing::max_abs_diff(m.bias().torque(), tool.bias_t)});

  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed + 1000);
    std::vector<RawSensorSample> noisy;
    k = 0;
    for (const Mat3& r : testing::capture_orientations(12, seed)) {
      noisy.push_back(testing::synthetic_pose(tool, r, k++ * 1.0, &rng, 0.05, 0.0));
    }
    sum += calibrate(noisy).model.tool_mass();
  }
  const double bias = std::abs(sum / 100.0 - tool.mass) / tool.mass;
  return {err <= 1e-8 && bias < 0.01,
          fmt("noise-free 12 poses: max parameter error %.2e; sigma 0.05 N over 100 seeds: mass bias %.3f%%", err,
              100.0 * bias)};
}

// ---- 5 ---------------------------------------------------------------------

Outcome jaw_traces() {
  using sim::JawButton;
  const double dt = 0.001;
  const sim::JawParams p;
  std::size_t failures = 0;

  // Press lengths around and beyond the long-press threshold, from closed.
  double worst_threshold = 0.0;
  for (std::uint64_t held = 1; held <= 2000; ++held) {
    sim::JawState s;
    for (std::uint64_t k = 0; k < held + 1500; ++k) {
      s = sim::jaw_step(s, k < held ? JawButton::kOpenPressed : JawButton::kReleased, k * dt, dt, p);
    }
    // Continuous motion on every pressed tick strictly after 0.3 s.
    const double continuous = held > 301 ? static_cast<double>(held - 301) : 0.0;
    const double expect = std::min(p.stroke_mm, p.step_mm + p.max_speed_mm_s * dt * continuous);
    worst_threshold = std::max(worst_threshold, std::abs(s.position_mm - expect));
  }
  if (worst_threshold > 1e-9) ++failures;

  // Random button sequences: bounds and speed limit on every tick.
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick(0, 5), len(1, 800);
  double max_rate = 0.0, lo = 1e9, hi = -1e9;
  for (int trace = 0; trace < 200; ++trace) {
    sim::JawState s;
    s.position_mm = std::uniform_real_distribution<double>(0.0, 20.0)(rng);
    std::uint64_t k = 0;
    for (int seg = 0; seg < 20; ++seg) {
      const int what = pick(rng);
      if (what == 4) s = sim::full_open(s, p);
      if (what == 5) s = sim::full_close(s, p);
      const JawButton b = what == 1 ? JawButton::kOpenPressed : what == 2 ? JawButton::kClosePressed : JawButton::kReleased;
      for (int i = len(rng); i > 0; --i, ++k) {
        const double before = s.position_mm;
        s = sim::jaw_step(s, b, k * dt, dt, p);
        max_rate = std::max(max_rate, std::abs(s.position_mm - before) / dt);
        lo = std::min(lo, s.position_mm);
        hi = std::max(hi, s.position_mm);
      }
    }
  }
  if (max_rate > p.max_speed_mm_s + 1e-9 || lo < 0.0 || hi > p.stroke_mm) ++failures;

  // Full close from fully open.
  sim::JawState s;
  s.position_mm = p.stroke_mm;
  s = sim::full_close(s, p);
  std::uint64_t k = 0;
  while (s.position_mm > 0.0 && k < 5000) {
    s = sim::jaw_step(s, JawButton::kReleased, (k + 1) * dt, dt, p);
    ++k;
  }
  const double took = k * dt;
  const double expect = p.stroke_mm / p.max_speed_mm_s;
  if (std::abs(took - expect) > dt + 1e-12) ++failures;

  return {failures == 0, fmt("2000 press lengths: max deviation %.2e mm; 200 random traces: range [%.3f, %.3f] mm, "
                             "max speed %.6f mm/s; full close %.3f s (expected %.4f s)",
                             worst_threshold, lo, hi, max_rate, took, expect)};
}

// ---- 6 ---------------------------------------------------------------------

Outcome evaluator_equivalence() {
  std::mt19937_64 rng(6);
  std::size_t mismatches = 0, order_violations = 0, successes = 0, boundary_samples = 0;
  for (int n = 0; n < 1000; ++n) {
    trial::TrialConfig c;
    c.target_force = n % 2 ? trial::kGentleN : trial::kFirmN;
    const double dt = 0.01;
    std::vector<trial::ForceSample> s;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 0.02 + 0.02 * (n % 4));
    double f = c.target_force * u(rng) * 1.3;
    const double edges[] = {c.band_low(), c.band_high(), std::nextafter(c.band_low(), 0.0),
                            std::nextafter(c.band_high(), 10.0)};
    for (int k = 1; k * dt <= 13.0 + 1e-12; ++k) {
      f += 0.04 * (c.target_force - f) + g(rng);
      double v = f;
      // Boundary values, alone and in runs.
      if (u(rng) < 0.08) {
        v = edges[static_cast<int>(u(rng) * 4) % 4];
        ++boundary_samples;
      }
      s.push_back({k * dt, v});
    }
    const std::optional<double> expect = testing::sliding_window_tct(s, c);
    const trial::TrialRecord r = trial::evaluate_trial(s, c);
    if (r.tct.has_value() != expect.has_value() || (expect && *r.tct != *expect)) ++mismatches;
    if (r.outcome == trial::Outcome::kSuccess) ++successes;
    if (!(r.max_ae >= r.rmse)) ++order_violations;
  }
  return {mismatches == 0 && order_violations == 0,
          fmt("1000 traces (%zu successes, %zu boundary samples): %zu mismatches vs sliding window, %zu with max_ae < "
              "rmse",
              successes, boundary_samples, mismatches, order_violations)};
}

// ---- 7 ---------------------------------------------------------------------

Outcome wilcoxon_exactness() {
  std::mt19937_64 rng(7);
  std::size_t mismatches = 0;
  double worst = 0.0;
  std::set<std::size_t> sizes;
  for (int f = 0; f < 200; ++f) {
    const std::size_t n = 1 + static_cast<std::size_t>(f % 10);
    std::vector<double> d;
    std::uniform_int_distribution<int> small(-4, 4);
    std::normal_distribution<double> g(0.3, 1.0);
    for (std::size_t i = 0; i < n; ++i) d.push_back(f % 3 == 0 ? small(rng) * 0.5 : g(rng));  // ties and zeros
    const auto r = stats::wilcoxon_signed_rank(d);
    std::vector<double> nz = d;
    nz.erase(std::remove(nz.begin(), nz.end(), 0.0), nz.end());
    if (nz.empty()) {
      if (!r.degenerate || r.p_value != 1.0) ++mismatches;
      continue;
    }
    sizes.insert(nz.size());
    const double p = testing::brute_force_p(d);
    worst = std::max(worst, std::abs(p - r.p_value));
    if (std::abs(p - r.p_value) > 1e-12 || !r.exact) ++mismatches;
  }
  const std::vector<double> zeros(8, 0.0);
  const auto z = stats::wilcoxon_signed_rank(zeros);
  const bool degenerate_ok = z.degenerate && z.p_value == 1.0;
  return {mismatches == 0 && degenerate_ok && sizes.size() == 10,
          fmt("200 fixtures over n = 1..10: max |p - enumeration| %.2e, %zu mismatches; all-zero: degenerate=%d p=%g",
              worst, mismatches, z.degenerate ? 1 : 0, z.p_value)};
}

// ---- 8 ---------------------------------------------------------------------

struct TimedRun {
  gateway::SessionResult result;
  std::uint64_t messages = 0;
};

TimedRun realtime_run(const std::string& name, std::size_t clients, double seconds) {
  gateway::SessionConfig c;
  c.output_dir = work_dir(name);
  c.realtime = true;
  gateway::TelemetryHub hub;
  gateway::WsServerOptions opt;
  opt.address.port = 0;
  gateway::WsServer server(hub, opt, [](const nlohmann::json&) {});
  server.start();
  std::vector<std::unique_ptr<testing::WsTestClient>> cs;
  for (std::size_t i = 0; i < clients; ++i) cs.push_back(std::make_unique<testing::WsTestClient>(server.port(), 10));
  const auto t0 = std::chrono::steady_clock::now();
  while (hub.client_count() < clients && seconds_since(t0) < 5.0) std::this_thread::sleep_for(std::chrono::milliseconds(5));

  gateway::SessionOptions so;
  so.hub = &hub;
  so.max_ticks = static_cast<std::uint64_t>(seconds * c.tick_rate_hz);
  TimedRun out;
  out.result = gateway::run_session(c, so);
  hub.flush();
  for (auto& cl : cs) {
    out.messages += cl->count();
    cl->close();
  }
  server.stop();
  return out;
}

Outcome loop_timing() {
  const TimedRun two = realtime_run("rt_two_clients", 2, 60.0);
  const TimedRun none = realtime_run("rt_no_clients", 0, 30.0);
  const TimedRun four = realtime_run("rt_four_clients", 4, 30.0);
  const double r2 = two.result.loop.deadline_met_rate();
  const double r0 = none.result.loop.deadline_met_rate();
  const double r4 = four.result.loop.deadline_met_rate();
  const double diff_pp = 100.0 * std::abs(r0 - r4);
  const bool pass = two.result.loop.ticks == 60000 && two.messages > 0 && r2 >= 0.99 && diff_pp < 0.5;
  return {pass, fmt("60 s, 2 clients: %.3f%% met (%llu ticks, %llu messages received, max lateness %.2f ms, "
                    "SCHED_FIFO %s); 30 s each: 0 clients %.3f%%, 4 clients %.3f%%, difference %.3f pp",
                    100.0 * r2, static_cast<unsigned long long>(two.result.loop.ticks),
                    static_cast<unsigned long long>(two.messages), 1e3 * two.result.loop.max_lateness_s,
                    two.result.realtime_priority ? "on" : "off", 100.0 * r0, 100.0 * r4, diff_pp)};
}

// ---- 9 ---------------------------------------------------------------------

Outcome determinism() {
  gateway::SessionConfig c;
  c.trial_seed = 9;
  c.telemetry_log_every = 0;
  const fs::path dir_a = work_dir("det_a"), dir_b = work_dir("det_b"), replay = work_dir("det_replay");
  c.output_dir = dir_a;
  gateway::run_session(c);
  c.output_dir = dir_b;
  gateway::run_session(c);
  gateway::replay_session(dir_a, replay);
  const auto a = gateway::deterministic_lines(dir_a / "trials.csv");
  const auto b = gateway::deterministic_lines(dir_b / "trials.csv");
  const auto r = gateway::deterministic_lines(replay / "trials.csv");
  return {!a.empty() && a == b && a == r,
          fmt("%zu trial-log lines; second run %s, replay from command log %s", a.size(),
              a == b ? "identical" : "DIFFERS", a == r ? "identical" : "DIFFERS")};
}

// ---- 10 --------------------------------------------------------------------

Outcome effect_direction() {
  gateway::SessionConfig c;
  c.output_dir = work_dir("cohort");
  c.telemetry_log_every = 0;
  const gateway::CohortResult r = gateway::run_cohort(c, 10);
  if (!r.summary) return {false, "no summary: " + r.summary_error};
  const auto& off = r.summary->by_mode.at(trial::HapticMode::kOff);
  const auto& on = r.summary->by_mode.at(trial::HapticMode::kOn);
  const auto& w = r.summary->tests.at("rmse");
  const bool pass = on.overall.success_rate() > off.overall.success_rate() && on.mean_rmse < off.mean_rmse &&
                    w.p_value < 0.05;
  return {pass, fmt("10 participants: success off %.2f / on %.2f, RMSE off %.3f N / on %.3f N, Wilcoxon on RMSE "
                    "W=%.1f p=%.4f",
                    off.overall.success_rate(), on.overall.success_rate(), off.mean_rmse, on.mean_rmse, w.statistic,
                    w.p_value)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"end-to-end force fidelity", force_fidelity},
      {"wrench transform oracle", wrench_oracle},
      {"feedback scaling properties", scaling_properties},
      {"calibration recovery", calibration_recovery},
      {"jaw state machine", jaw_traces},
      {"trial evaluator equivalence", evaluator_equivalence},
      {"wilcoxon exactness", wilcoxon_exactness},
      {"loop timing", loop_timing},
      {"determinism", determinism},
      {"effect direction", effect_direction},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
