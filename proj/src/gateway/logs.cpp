#include "wristhap/gateway/logs.hpp"

#include <cmath>

#include "wristhap/csv.hpp"
#include "wristhap/errors.hpp"

namespace wristhap::gateway {

namespace fs = std::filesystem;

namespace {

std::ofstream open_for_write(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("not an integer: '" + std::string(s) + "'");
  return v;
}

[[noreturn]] void bad_line(const fs::path& path, std::size_t line, const std::string& what) {
  throw ConfigError(path.string() + " line " + std::to_string(line) + ": " + what);
}

void add_vec(CsvRow& r, const Vec3& v) { r.add(v.x()).add(v.y()).add(v.z()); }

}  // namespace

// ---- command log -----------------------------------------------------------

const char* to_string(CommandType t) {
  switch (t) {
    case CommandType::kMove: return "move";
    case CommandType::kJaw: return "jaw";
    case CommandType::kFullOpen: return "full_open";
    case CommandType::kFullClose: return "full_close";
    case CommandType::kStart: return "start";
  }
  return "unknown";
}

sim::JawButton parse_jaw_button(const std::string& s) {
  if (s == "released") return sim::JawButton::kReleased;
  if (s == "open_pressed") return sim::JawButton::kOpenPressed;
  if (s == "close_pressed") return sim::JawButton::kClosePressed;
  throw ConfigError("unknown jaw button '" + s + "'");
}

namespace {

constexpr const char* kCommandHeader = "tick,t,type,vx,vy,vz,wx,wy,wz,button";

}  // namespace

CommandLogWriter::CommandLogWriter(const fs::path& path) : out_(open_for_write(path)) { out_ << kCommandHeader << '\n'; }

void CommandLogWriter::write(const CommandEvent& e) {
  CsvRow r;
  r.add(e.tick).add(e.t).add(to_string(e.type));
  if (e.type == CommandType::kMove) {
    add_vec(r, e.move.linear);
    add_vec(r, e.move.angular);
    r.add("");
  } else {
    for (int k = 0; k < 6; ++k) r.add("");
    r.add(e.type == CommandType::kJaw ? sim::to_string(e.button) : "");
  }
  out_ << r.str() << '\n';
}

std::vector<CommandEvent> read_command_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open command log " + path.string());
  std::string line;
  std::size_t n = 0;
  if (!std::getline(in, line) || line != kCommandHeader) bad_line(path, 1, "expected header '" + std::string(kCommandHeader) + "'");
  ++n;
  std::vector<CommandEvent> out;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 10) bad_line(path, n, "expected 10 fields, got " + std::to_string(f.size()));
    try {
      CommandEvent e;
      e.tick = parse_u64(f[0]);
      e.t = parse_double(f[1]);
      const std::string type(f[2]);
      if (type == "move") {
        e.type = CommandType::kMove;
        e.move.linear = Vec3(parse_double(f[3]), parse_double(f[4]), parse_double(f[5]));
        e.move.angular = Vec3(parse_double(f[6]), parse_double(f[7]), parse_double(f[8]));
      } else if (type == "jaw") {
        e.type = CommandType::kJaw;
        e.button = parse_jaw_button(std::string(f[9]));
      } else if (type == "full_open") {
        e.type = CommandType::kFullOpen;
      } else if (type == "full_close") {
        e.type = CommandType::kFullClose;
      } else if (type == "start") {
        e.type = CommandType::kStart;
      } else {
        throw ConfigError("unknown command type '" + type + "'");
      }
      if (!out.empty() && e.tick < out.back().tick) throw ConfigError("ticks go backwards");
      out.push_back(e);
    } catch (const ConfigError& err) {
      bad_line(path, n, err.what());
    }
  }
  return out;
}

// ---- trial log -------------------------------------------------------------

namespace {

constexpr const char* kTrialLogMagic = "# wristhap trial log v1";

}  // namespace

TrialLogWriter::TrialLogWriter(const fs::path& path, const TrialLogHeader& h, const std::string& wall_clock)
    : out_(open_for_write(path)) {
  out_ << kTrialLogMagic << '\n';
  out_ << "meta,wall_clock_utc," << wall_clock << '\n';
  CsvRow r;
  r.add("session").add("participant").add(h.participant).add("seed").add(h.seed).add("tick_rate_hz").add(h.tick_rate_hz)
      .add("trials").add(static_cast<std::uint64_t>(h.trials));
  out_ << r.str() << '\n';
}

void TrialLogWriter::begin_trial(std::size_t index, std::uint64_t start_tick, const trial::TrialConfig& c) {
  CsvRow r;
  r.add("trial").add(static_cast<std::uint64_t>(index)).add(start_tick).add(c.target_force).add(trial::to_string(c.mode))
      .add(c.tolerance_fraction).add(c.hold_duration).add(c.max_duration);
  out_ << r.str() << '\n';
}

void TrialLogWriter::sample(std::size_t index, const trial::ForceSample& s) {
  CsvRow r;
  r.add("sample").add(static_cast<std::uint64_t>(index)).add(s.t).add(s.force);
  out_ << r.str() << '\n';
}

void TrialLogWriter::result(std::size_t index, const trial::TrialRecord& rec) {
  CsvRow r;
  r.add("result").add(static_cast<std::uint64_t>(index)).add(trial::to_string(rec.outcome));
  if (rec.tct) {
    r.add(*rec.tct);
  } else {
    r.add("");
  }
  r.add(rec.rmse).add(rec.max_ae).add(static_cast<std::uint64_t>(rec.samples.size()));
  out_ << r.str() << '\n';
  out_.flush();
}

void TrialLogWriter::end(std::size_t completed) {
  out_ << "end," << completed << '\n';
  out_.flush();
}

TrialLog read_trial_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trial log " + path.string());
  std::string line;
  std::size_t n = 0;
  if (!std::getline(in, line) || line != kTrialLogMagic) bad_line(path, 1, "not a trial log");
  ++n;
  TrialLog log;
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::size_t open_index = kNone;
  bool have_session = false;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    const std::string_view tag = f[0];
    try {
      if (tag == "meta") continue;
      if (tag == "session") {
        if (f.size() != 9) throw ConfigError("session line needs 9 fields");
        log.header.participant = std::string(f[2]);
        log.header.seed = parse_u64(f[4]);
        log.header.tick_rate_hz = parse_double(f[6]);
        log.header.trials = parse_u64(f[8]);
        have_session = true;
      } else if (tag == "trial") {
        if (!have_session) throw ConfigError("trial before session line");
        if (open_index != kNone) throw ConfigError("trial " + std::to_string(open_index) + " has no result line");
        if (f.size() != 8) throw ConfigError("trial line needs 8 fields");
        trial::TrialRecord r;
        const std::size_t idx = parse_u64(f[1]);
        if (idx != log.trials.size()) throw ConfigError("trial index out of sequence");
        r.config.target_force = parse_double(f[3]);
        r.config.mode = trial::parse_mode(std::string(f[4]));
        r.config.tolerance_fraction = parse_double(f[5]);
        r.config.hold_duration = parse_double(f[6]);
        r.config.max_duration = parse_double(f[7]);
        log.trials.push_back(std::move(r));
        open_index = idx;
      } else if (tag == "sample") {
        if (open_index == kNone) throw ConfigError("sample outside a trial block");
        if (f.size() != 4 || parse_u64(f[1]) != open_index) throw ConfigError("bad sample line");
        log.trials.back().samples.push_back({parse_double(f[2]), parse_double(f[3])});
      } else if (tag == "result") {
        if (open_index == kNone || f.size() != 7 || parse_u64(f[1]) != open_index) throw ConfigError("bad result line");
        trial::TrialRecord& r = log.trials.back();
        const std::string outcome(f[2]);
        if (outcome == "success") {
          r.outcome = trial::Outcome::kSuccess;
          r.tct = parse_double(f[3]);
        } else if (outcome == "timeout") {
          r.outcome = trial::Outcome::kTimeout;
          if (!f[3].empty()) throw ConfigError("timeout with a completion time");
        } else {
          throw ConfigError("unknown outcome '" + outcome + "'");
        }
        r.rmse = parse_double(f[4]);
        r.max_ae = parse_double(f[5]);
        if (parse_u64(f[6]) != r.samples.size()) throw ConfigError("sample count mismatch");
        if (r.samples.empty()) throw MalformedTrialError("trial without samples");
        const trial::ErrorMetrics m = trial::error_metrics(r.samples, r.config.target_force);
        if (m.rmse != r.rmse || m.max_ae != r.max_ae) {
          throw MalformedTrialError("stored metrics of trial " + std::to_string(open_index) +
                                    " do not match its samples");
        }
        open_index = kNone;
      } else if (tag == "end") {
        log.complete = true;
      } else {
        throw ConfigError("unknown line tag '" + std::string(tag) + "'");
      }
    } catch (const ConfigError& e) {
      bad_line(path, n, e.what());
    } catch (const std::invalid_argument& e) {
      bad_line(path, n, e.what());
    }
  }
  if (open_index != kNone) log.trials.pop_back();
  return log;
}

std::vector<std::string> deterministic_lines(const fs::path& trial_log) {
  std::ifstream in(trial_log);
  if (!in) throw ConfigError("cannot open trial log " + trial_log.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("meta,", 0) == 0) continue;
    out.push_back(line);
  }
  return out;
}

// ---- telemetry log ---------------------------------------------------------

const char* to_string(SessionPhase p) {
  switch (p) {
    case SessionPhase::kAwaitingOperator: return "awaiting_operator";
    case SessionPhase::kTrial: return "trial";
    case SessionPhase::kPause: return "pause";
    case SessionPhase::kDone: return "done";
  }
  return "unknown";
}

std::string telemetry_log_header() {
  return "tick,t,phase,trial,mode,"
         "raw_fx,raw_fy,raw_fz,raw_tx,raw_ty,raw_tz,"
         "comp_fx,comp_fy,comp_fz,filt_fx,filt_fy,filt_fz,"
         "tip_fx,tip_fy,tip_fz,base_fx,base_fy,base_fz,hap_fx,hap_fy,hap_fz,"
         "rend_fx,rend_fy,rend_fz,state,deadline_met,"
         "truth_fx,truth_fy,truth_fz,contact,depth_m,jaw_mm";
}

TelemetryLogWriter::TelemetryLogWriter(const fs::path& path) : out_(open_for_write(path)) {
  out_ << telemetry_log_header() << '\n';
}

void TelemetryLogWriter::write(const TelemetryRow& row) {
  const PipelineSample& s = row.sample;
  CsvRow r;
  r.add(s.tick).add(s.t).add(to_string(row.phase)).add(row.trial).add(trial::to_string(row.mode));
  add_vec(r, s.raw.force());
  add_vec(r, s.raw.torque());
  add_vec(r, s.f_ext_S);
  add_vec(r, s.f_filt_S);
  add_vec(r, s.f_T);
  add_vec(r, s.f_B);
  add_vec(r, s.f_H);
  add_vec(r, s.f_H_scaled);
  r.add(to_string(s.state)).add(s.deadline_met);
  add_vec(r, row.truth.force_sensor);
  r.add(row.truth.contact).add(row.truth.depth).add(row.jaw_mm);
  out_ << r.str() << '\n';
}

}  // namespace wristhap::gateway
