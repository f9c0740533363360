#include "wristhap/gateway/session.hpp"

#include <pthread.h>
#include <sched.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>

#include <spdlog/spdlog.h>

#include "wristhap/errors.hpp"
#include "wristhap/gateway/report.hpp"

namespace wristhap::gateway {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(InputSource s) {
  switch (s) {
    case InputSource::kScripted: return "scripted";
    case InputSource::kReplay: return "replay";
    case InputSource::kInteractive: return "interactive";
  }
  return "unknown";
}

std::uint64_t operator_seed(std::uint64_t trial_seed) {
  // splitmix64 finalizer, so neighbouring trial seeds give unrelated operators.
  std::uint64_t z = trial_seed + 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool same(const sim::OperatorCommand& a, const sim::OperatorCommand& b) {
  return a.linear == b.linear && a.angular == b.angular;
}

/// SCHED_FIFO for the calling thread while in scope, when permitted.
class RealtimePriority {
 public:
  explicit RealtimePriority(bool want) {
    if (!want) return;
    if (pthread_getschedparam(pthread_self(), &old_policy_, &old_param_) != 0) return;
    sched_param p{};
    p.sched_priority = std::min(80, sched_get_priority_max(SCHED_FIFO));
    if (pthread_setschedparam(pthread_self(), SCHED_FIFO, &p) == 0) {
      active_ = true;
    } else {
      spdlog::info("SCHED_FIFO not permitted; control loop runs at normal priority");
    }
  }
  ~RealtimePriority() {
    if (active_) pthread_setschedparam(pthread_self(), old_policy_, &old_param_);
  }
  bool active() const { return active_; }

 private:
  bool active_ = false;
  int old_policy_ = SCHED_OTHER;
  sched_param old_param_{};
};

struct InputFrame {
  sim::OperatorCommand move;
  sim::JawButton button = sim::JawButton::kReleased;
  bool full_open = false;
  bool full_close = false;
  bool start = false;
};

Vec3 approach_direction(const sim::Scene& s) {
  const Vec3 home_world = s.base_to_world.apply(s.home_tip_pose.translation());
  Vec3 dir_world = s.tissue.shape == sim::TissueModel::Shape::kPlane ? Vec3(-s.tissue.normal)
                                                                      : Vec3(s.tissue.origin - home_world);
  if (dir_world.norm() < 1e-12) dir_world = -Vec3::UnitZ();
  return s.base_to_world.rotation().inverse() * dir_world.normalized();
}

class SessionRunner {
 public:
  SessionRunner(const SessionConfig& config, const SessionOptions& options)
      : config_(config),
        options_(options),
        schedule_(trial::build_schedule(config.trial_seed, config.trial)),
        world_(config.scene),
        pipeline_(config.pipeline_config(), config.scene.tool),
        dt_(1.0 / config.tick_rate_hz) {
    config_.validate();
    if (schedule_.entries.size() > config_.max_trials) schedule_.entries.resize(config_.max_trials);
    if (options_.source == InputSource::kInteractive && !options_.inbox) {
      throw ConfigError("interactive session needs an operator inbox");
    }
    if (options_.source == InputSource::kScripted) {
      operator_.emplace(config_.operator_params, operator_seed(config_.trial_seed), approach_direction(config_.scene),
                        config_.scene.tissue.stiffness, config_.scaling);
    }
  }

  SessionResult run() {
    const fs::path dir = config_.output_dir;
    fs::create_directories(dir);
    write_session_json(nullptr);

    commands_.emplace(dir / "commands.csv");
    trials_.emplace(dir / "trials.csv",
                    TrialLogHeader{config_.participant_id, config_.trial_seed, config_.tick_rate_hz,
                                   schedule_.entries.size()},
                    utc_now());
    if (config_.telemetry_log_every > 0) telemetry_.emplace(dir / "telemetry.csv");
    records_.participant = config_.participant_id;

    LoopConfig lc;
    lc.realtime = config_.realtime;
    loop_.emplace(lc, pipeline_, world_.sensor_cell(), world_.kinematics_cell(),
                  ControlLoop::Hooks{[this](std::uint64_t tick, double t) { before_tick(tick, t); },
                                     [this](const PipelineSample& s) { after_tick(s); },
                                     [](const LoopEvent& e) {
                                       spdlog::warn("loop event {} at tick {}: {}", to_string(e.kind), e.tick,
                                                    e.detail);
                                     }});
    if (options_.hub) loop_->add_telemetry_sink(options_.hub);

    if (options_.source == InputSource::kInteractive) post(MessageKind::kTrialEvent, {{"event", "awaiting_operator"}});

    SessionResult result;
    {
      RealtimePriority prio(config_.realtime && options_.try_realtime_priority);
      result.realtime_priority = prio.active();
      loop_->run(tick_budget());
    }

    trials_->end(records_.trials.size());
    commands_->flush();
    if (phase_ != SessionPhase::kDone) {
      spdlog::warn("session {} stopped after {} of {} trials", config_.participant_id, records_.trials.size(),
                   schedule_.entries.size());
    }
    post(MessageKind::kTrialEvent, {{"event", "session_end"}, {"completed", records_.trials.size()}});

    result.records = records_;
    result.loop = loop_->stats();
    result.scheduled = schedule_.entries.size();
    result.completed = records_.trials.size() == schedule_.entries.size();
    result.telemetry_queue_drops = options_.hub ? options_.hub->queue_drops() : 0;
    result.dir = dir;
    write_session_json(&result);

    if (!records_.trials.empty()) {
      try {
        const trial::ParticipantRecords one[] = {records_};
        write_summary(dir, trial::summarize(one));
      } catch (const PairingError& e) {
        spdlog::warn("no summary for {}: {}", config_.participant_id, e.what());
      }
    }
    return result;
  }

 private:
  std::uint64_t tick_budget() const {
    if (options_.max_ticks) return *options_.max_ticks;
    if (options_.source == InputSource::kInteractive) return std::numeric_limits<std::uint64_t>::max();
    const double per_trial = config_.trial.max_duration + config_.trial.inter_trial_pause + 1.0;
    return static_cast<std::uint64_t>(std::ceil(per_trial * static_cast<double>(schedule_.entries.size() + 1) *
                                                config_.tick_rate_hz));
  }

  InputFrame gather(std::uint64_t tick) {
    InputFrame f;
    switch (options_.source) {
      case InputSource::kScripted:
        f.move = next_move_;
        f.start = tick == 0;
        break;
      case InputSource::kInteractive: {
        const PendingInput in = options_.inbox->take();
        f = {in.move, in.button, in.full_open, in.full_close, in.start};
        break;
      }
      case InputSource::kReplay: {
        const auto& cmds = options_.replay_commands;
        while (replay_cursor_ < cmds.size() && cmds[replay_cursor_].tick < tick) ++replay_cursor_;
        for (; replay_cursor_ < cmds.size() && cmds[replay_cursor_].tick == tick; ++replay_cursor_) {
          const CommandEvent& e = cmds[replay_cursor_];
          switch (e.type) {
            case CommandType::kMove: replay_move_ = e.move; break;
            case CommandType::kJaw: replay_button_ = e.button; break;
            case CommandType::kFullOpen: f.full_open = true; break;
            case CommandType::kFullClose: f.full_close = true; break;
            case CommandType::kStart: f.start = true; break;
          }
        }
        f.move = replay_move_;
        f.button = replay_button_;
        break;
      }
    }
    return f;
  }

  void log_input(std::uint64_t tick, double t, const InputFrame& f) {
    auto write = [&](CommandType type) {
      CommandEvent e;
      e.tick = tick;
      e.t = t;
      e.type = type;
      e.move = f.move;
      e.button = f.button;
      commands_->write(e);
    };
    if (f.start) write(CommandType::kStart);
    if (!same(f.move, logged_move_)) {
      write(CommandType::kMove);
      logged_move_ = f.move;
    }
    if (f.button != logged_button_) {
      write(CommandType::kJaw);
      logged_button_ = f.button;
    }
    if (f.full_open) write(CommandType::kFullOpen);
    if (f.full_close) write(CommandType::kFullClose);
  }

  void start_trial(std::uint64_t tick, double t) {
    const std::size_t idx = records_.trials.size();
    const trial::TrialConfig& tc = schedule_.entries[idx];
    world_.rehome();
    evaluator_.emplace(tc);
    trial_index_ = static_cast<int>(idx);
    trial_t0_ = t;
    phase_ = SessionPhase::kTrial;
    if (operator_) operator_->begin_trial(tc);
    trials_->begin_trial(idx, tick, tc);

    const std::size_t n = schedule_.entries.size();
    post(MessageKind::kTrialEvent,
         {{"event", "start"}, {"trial", idx}, {"k", idx + 1}, {"n", n}, {"tick", tick}, {"t", t}});
    post(MessageKind::kScheduleInfo, {{"trial", idx},
                                      {"k", idx + 1},
                                      {"n", n},
                                      {"target", trial::target_label(tc.target_force)},
                                      {"target_N", tc.target_force},
                                      {"mode", trial::to_string(tc.mode)},
                                      {"tolerance_fraction", tc.tolerance_fraction},
                                      {"hold_s", tc.hold_duration},
                                      {"max_s", tc.max_duration}});
  }

  void end_trial(std::uint64_t tick, double t) {
    const std::size_t idx = records_.trials.size();
    trial::TrialRecord rec = evaluator_->finish();
    trials_->result(idx, rec);
    json ev = {{"event", "end"},
               {"trial", idx},
               {"outcome", trial::to_string(rec.outcome)},
               {"rmse_N", rec.rmse},
               {"max_ae_N", rec.max_ae},
               {"tick", tick},
               {"t", t}};
    ev["tct_s"] = rec.tct ? json(*rec.tct) : json(nullptr);
    post(MessageKind::kTrialEvent, std::move(ev));
    records_.trials.push_back(std::move(rec));
    evaluator_.reset();
    trial_index_ = -1;
    if (operator_) operator_->end_trial();
    if (records_.trials.size() == schedule_.entries.size()) {
      phase_ = SessionPhase::kDone;
    } else {
      phase_ = SessionPhase::kPause;
      pause_end_ = t + config_.trial.inter_trial_pause;
    }
  }

  void before_tick(std::uint64_t tick, double t) {
    const InputFrame in = gather(tick);
    log_input(tick, t, in);

    if (phase_ == SessionPhase::kAwaitingOperator && in.start) begin_next_ = true;
    if (begin_next_) {
      begin_next_ = false;
      start_trial(tick, t);
    }
    if (in.full_open) world_.command_full_open();
    if (in.full_close) world_.command_full_close();

    const sim::WorldTruth& truth = world_.step(t, dt_, in.move, in.button);
    const sim::JawState& jaw = world_.jaw();
    if (jaw.mode != last_jaw_mode_ || jaw.held != last_jaw_button_) {
      last_jaw_mode_ = jaw.mode;
      last_jaw_button_ = jaw.held;
      post(MessageKind::kJawState, {{"tick", tick},
                                    {"t", t},
                                    {"mode", sim::to_string(jaw.mode)},
                                    {"button", sim::to_string(jaw.held)},
                                    {"position_mm", jaw.position_mm},
                                    {"target_mm", jaw.target_mm}});
    }

    context_.phase = phase_;
    context_.trial = trial_index_;
    context_.mode = trial_index_ >= 0 ? schedule_.entries[trial_index_].mode : trial::HapticMode::kOff;
    context_.tip_world = truth.tip_world;
    context_.depth_m = truth.depth;
    context_.contact = truth.contact;
    context_.jaw_mm = jaw.position_mm;
    if (options_.hub) options_.hub->set_context(context_);
  }

  void after_tick(const PipelineSample& s) {
    const sim::WorldTruth& truth = world_.truth();
    if (telemetry_ && s.tick % config_.telemetry_log_every == 0) {
      telemetry_->write(TelemetryRow{s, context_.phase, context_.trial, context_.mode, truth, context_.jaw_mm});
    }

    if (phase_ == SessionPhase::kTrial) {
      const trial::ForceSample fs{s.t - trial_t0_, s.f_T.norm()};
      trials_->sample(records_.trials.size(), fs);
      evaluator_->push(fs.t, fs.force);
      if (evaluator_->finished()) end_trial(s.tick, s.t);
    }

    if (operator_) {
      Perception p;
      p.t = s.t;
      if (phase_ == SessionPhase::kTrial && context_.mode == trial::HapticMode::kOn) p.feedback = s.f_H_scaled;
      p.depth_m = truth.depth;
      p.true_force = truth.force_world.norm();
      next_move_ = operator_->act(p, dt_);
    }

    if (phase_ == SessionPhase::kPause && !records_.trials.empty() && s.t + 1e-9 >= pause_end_) begin_next_ = true;
    const bool idle_limit = phase_ == SessionPhase::kAwaitingOperator && options_.max_idle_ticks &&
                            s.tick + 1 >= *options_.max_idle_ticks;
    const bool external = options_.stop && options_.stop->load(std::memory_order_relaxed);
    if (phase_ == SessionPhase::kDone || idle_limit || external) loop_->request_stop();
  }

  void post(MessageKind kind, json payload) {
    if (options_.hub) options_.hub->post_event(kind, std::move(payload));
  }

  void write_session_json(const SessionResult* r) {
    json j;
    j["format"] = "wristhap session";
    j["version"] = kSessionFormatVersion;
    j["source"] = to_string(options_.source);
    j["config"] = session_config_to_json(config_);
    json sched = json::array();
    for (const auto& e : schedule_.entries) {
      sched.push_back({{"target", trial::target_label(e.target_force)}, {"mode", trial::to_string(e.mode)}});
    }
    j["schedule"] = sched;
    if (r) {
      j["result"] = {{"trials_completed", r->records.trials.size()},
                     {"trials_scheduled", r->scheduled},
                     {"completed", r->completed},
                     {"ticks", r->loop.ticks},
                     {"deadline_misses", r->loop.deadline_misses},
                     {"deadline_met_rate", r->loop.deadline_met_rate()},
                     {"max_lateness_s", r->loop.max_lateness_s},
                     {"degraded_events", r->loop.degraded_events},
                     {"telemetry_queue_drops", r->telemetry_queue_drops},
                     {"realtime_priority", r->realtime_priority}};
    }
    std::ofstream out(config_.output_dir / "session.json", std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + (config_.output_dir / "session.json").string());
    out << j.dump(2) << '\n';
  }

  SessionConfig config_;
  SessionOptions options_;
  trial::TrialSchedule schedule_;
  sim::World world_;
  HapticPipeline pipeline_;
  double dt_;
  std::optional<ControlLoop> loop_;
  std::optional<ScriptedOperator> operator_;

  std::optional<CommandLogWriter> commands_;
  std::optional<TrialLogWriter> trials_;
  std::optional<TelemetryLogWriter> telemetry_;

  SessionPhase phase_ = SessionPhase::kAwaitingOperator;
  TickContext context_;
  std::optional<trial::TrialEvaluator> evaluator_;
  trial::ParticipantRecords records_;
  int trial_index_ = -1;
  double trial_t0_ = 0.0;
  double pause_end_ = 0.0;
  bool begin_next_ = false;

  sim::OperatorCommand next_move_;
  sim::OperatorCommand logged_move_;
  sim::JawButton logged_button_ = sim::JawButton::kReleased;
  sim::JawMode last_jaw_mode_ = sim::JawMode::kIdle;
  sim::JawButton last_jaw_button_ = sim::JawButton::kReleased;
  std::size_t replay_cursor_ = 0;
  sim::OperatorCommand replay_move_;
  sim::JawButton replay_button_ = sim::JawButton::kReleased;
};

}  // namespace

SessionResult run_session(const SessionConfig& config, const SessionOptions& options) {
  SessionRunner runner(config, options);
  return runner.run();
}

SessionConfig read_session_config(const fs::path& session_dir) {
  const fs::path p = session_dir / "session.json";
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open " + p.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("config")) throw ConfigError(p.string() + ": no 'config' section");
  return session_config_from_json(j.at("config"), session_dir);
}

SessionResult replay_session(const fs::path& session_dir, const fs::path& output_dir) {
  SessionConfig cfg = read_session_config(session_dir);
  cfg.output_dir = output_dir;
  cfg.realtime = false;
  SessionOptions opt;
  opt.source = InputSource::kReplay;
  opt.replay_commands = read_command_log(session_dir / "commands.csv");
  return run_session(cfg, opt);
}

CohortResult run_cohort(const SessionConfig& base, std::size_t participants, TelemetryHub* hub) {
  if (participants == 0) throw ConfigError("participants must be >= 1");
  CohortResult out;
  std::vector<trial::ParticipantRecords> records;
  for (std::size_t i = 0; i < participants; ++i) {
    SessionConfig c = base;
    const std::string id = fmt::format("P{:02}", i + 1);
    c.participant_id = id;
    c.trial_seed = base.trial_seed + i;
    c.scene.noise.seed = base.scene.noise.seed + i;
    c.output_dir = base.output_dir / id;
    SessionOptions opt;
    opt.hub = hub;
    out.sessions.push_back(run_session(c, opt));
    records.push_back(out.sessions.back().records);
  }
  try {
    out.summary = trial::summarize(records);
    write_summary(base.output_dir, *out.summary);
  } catch (const PairingError& e) {
    out.summary_error = e.what();
  }
  return out;
}

}  // namespace wristhap::gateway
