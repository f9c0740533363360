#include "wristhap/gateway/telemetry.hpp"

#include <algorithm>

#include "wristhap/errors.hpp"

namespace wristhap::gateway {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxDecimation = 1000;
constexpr double kDecimationRecovery_s = 5.0;

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::kPipelineSample: return "pipeline_sample";
    case MessageKind::kTrialEvent: return "trial_event";
    case MessageKind::kJawState: return "jaw_state";
    case MessageKind::kSceneState: return "scene_state";
    case MessageKind::kScheduleInfo: return "schedule_info";
  }
  return "unknown";
}

MessageKind parse_message_kind(const std::string& s) {
  for (MessageKind k : {MessageKind::kPipelineSample, MessageKind::kTrialEvent, MessageKind::kJawState,
                        MessageKind::kSceneState, MessageKind::kScheduleInfo}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown message kind '" + s + "'");
}

namespace {

std::string frame(MessageKind kind, std::uint64_t seq, const std::string& payload) {
  std::string out;
  out.reserve(payload.size() + 64);
  out += R"({"v":)";
  out += std::to_string(kTelemetryVersion);
  out += R"(,"kind":")";
  out += to_string(kind);
  out += R"(","seq":)";
  out += std::to_string(seq);
  out += R"(,"payload":)";
  out += payload;
  out += '}';
  return out;
}

}  // namespace

std::string TelemetryMessage::serialize() const { return frame(kind, seq, payload.dump()); }

TelemetryMessage TelemetryMessage::parse(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("v").get<int>() != kTelemetryVersion) throw ConfigError("unsupported telemetry version");
    TelemetryMessage m;
    m.kind = parse_message_kind(j.at("kind").get<std::string>());
    m.seq = j.at("seq").get<std::uint64_t>();
    m.payload = j.at("payload");
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("telemetry message: ") + e.what());
  }
}

// ---- ClientChannel ---------------------------------------------------------

ClientChannel::ClientChannel(std::size_t requested_decimation, std::size_t capacity)
    : capacity_(std::max<std::size_t>(capacity, 1)),
      requested_(std::clamp<std::size_t>(requested_decimation, 1, kMaxDecimation)),
      effective_(requested_) {}

void ClientChannel::set_decimation(std::size_t d) {
  std::lock_guard lock(mutex_);
  requested_ = std::clamp<std::size_t>(d, 1, kMaxDecimation);
  effective_ = requested_;
}

std::size_t ClientChannel::requested_decimation() const {
  std::lock_guard lock(mutex_);
  return requested_;
}

std::size_t ClientChannel::decimation() const {
  std::lock_guard lock(mutex_);
  return effective_;
}

std::uint64_t ClientChannel::drops() const {
  std::lock_guard lock(mutex_);
  return drops_;
}

std::uint64_t ClientChannel::delivered() const {
  std::lock_guard lock(mutex_);
  return delivered_;
}

std::size_t ClientChannel::pending() const {
  std::lock_guard lock(mutex_);
  return items_.size();
}

void ClientChannel::note_tick(double t) {
  std::lock_guard lock(mutex_);
  last_t_ = t;
  if (effective_ > requested_ && t - last_drop_t_ > kDecimationRecovery_s) {
    effective_ = std::max(requested_, effective_ / 2);
    last_drop_t_ = t;
  }
}

void ClientChannel::push(MessageKind kind, const std::string& payload_json, bool droppable) {
  std::function<void()> notify;
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    if (droppable) {
      const auto n = std::count_if(items_.begin(), items_.end(), [](const Entry& e) { return e.droppable; });
      if (static_cast<std::size_t>(n) >= capacity_) {
        auto it = std::find_if(items_.begin(), items_.end(), [](const Entry& e) { return e.droppable; });
        items_.erase(it);
        ++drops_;
        effective_ = std::min(kMaxDecimation, effective_ * 2);
        last_drop_t_ = last_t_;
      }
    }
    items_.push_back({frame(kind, ++seq_, payload_json), droppable});
    notify = notify_;
  }
  cv_.notify_one();
  if (notify) notify();
}

std::optional<std::string> ClientChannel::pop() {
  std::lock_guard lock(mutex_);
  if (items_.empty()) return std::nullopt;
  std::string s = std::move(items_.front().text);
  items_.pop_front();
  ++delivered_;
  return s;
}

std::optional<std::string> ClientChannel::pop_for(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [&] { return !items_.empty() || closed_; });
  if (items_.empty()) return std::nullopt;
  std::string s = std::move(items_.front().text);
  items_.pop_front();
  ++delivered_;
  return s;
}

void ClientChannel::set_notify(std::function<void()> f) {
  std::lock_guard lock(mutex_);
  notify_ = std::move(f);
}

void ClientChannel::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
    notify_ = nullptr;
  }
  cv_.notify_all();
}

bool ClientChannel::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

// ---- TelemetryHub ----------------------------------------------------------

TelemetryHub::TelemetryHub(std::size_t sample_capacity, std::chrono::milliseconds publish_period)
    : sample_capacity_(std::max<std::size_t>(sample_capacity, 1)), period_(publish_period) {
  thread_ = std::thread([this] { run(); });
}

TelemetryHub::~TelemetryHub() { stop(); }

void TelemetryHub::stop() {
  {
    std::lock_guard lock(mutex_);
    if (stopping_) return;
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
  std::lock_guard lock(clients_mutex_);
  for (auto& c : clients_) c->close();
}

bool TelemetryHub::offer(const PipelineSample& s) {
  if (client_count_.load(std::memory_order_relaxed) == 0) return true;
  std::lock_guard lock(mutex_);
  bool kept = true;
  if (samples_.size() >= sample_capacity_) {
    samples_.pop_front();
    queue_drops_.fetch_add(1, std::memory_order_relaxed);
    kept = false;
  }
  samples_.push_back(Item{next_order_++, false, MessageKind::kPipelineSample, {}, s, context_});
  return kept;
}

void TelemetryHub::post_event(MessageKind kind, json payload) {
  {
    std::lock_guard lock(mutex_);
    events_.push_back(Item{next_order_++, true, kind, std::move(payload), {}, {}});
  }
  cv_.notify_all();
}

std::shared_ptr<ClientChannel> TelemetryHub::attach(std::size_t decimation) {
  auto c = std::make_shared<ClientChannel>(decimation);
  std::lock_guard lock(clients_mutex_);
  clients_.push_back(c);
  client_count_.store(clients_.size());
  return c;
}

void TelemetryHub::detach(const std::shared_ptr<ClientChannel>& c) {
  std::lock_guard lock(clients_mutex_);
  clients_.erase(std::remove(clients_.begin(), clients_.end(), c), clients_.end());
  client_count_.store(clients_.size());
  c->close();
}

std::size_t TelemetryHub::client_count() const { return client_count_.load(); }

void TelemetryHub::flush() {
  std::unique_lock lock(mutex_);
  const std::uint64_t target = next_order_;
  cv_.notify_all();
  drained_.wait(lock, [&] { return published_order_ >= target || stopping_; });
}

json TelemetryHub::sample_payload(const PipelineSample& s, const TickContext& c) {
  json p = {{"tick", s.tick},
            {"t", s.t},
            {"phase", to_string(c.phase)},
            {"trial", c.trial},
            {"state", to_string(s.state)},
            {"deadline_met", s.deadline_met}};
  if (feedback_visible(c)) p["feedback"] = vec_json(s.f_H_scaled);
  return p;
}

json TelemetryHub::scene_payload(const PipelineSample& s, const TickContext& c) {
  return {{"tick", s.tick},
          {"t", s.t},
          {"tip_world", vec_json(c.tip_world)},
          {"depth_m", c.depth_m},
          {"contact", c.contact},
          {"jaw_mm", c.jaw_mm}};
}

void TelemetryHub::publish(Item& item) {
  std::vector<std::shared_ptr<ClientChannel>> clients;
  {
    std::lock_guard lock(clients_mutex_);
    clients = clients_;
  }
  if (item.is_event) {
    const std::string text = item.payload.dump();
    for (auto& c : clients) c->push(item.kind, text, false);
    return;
  }
  std::optional<std::string> sample_text, scene_text;
  for (auto& c : clients) {
    c->note_tick(item.sample.t);
    if (item.sample.tick % c->decimation() != 0) continue;
    if (!sample_text) {
      json p = sample_payload(item.sample, item.context);
      sample_text = p.dump();
      scene_text = scene_payload(item.sample, item.context).dump();
    }
    // Per-client counters go in a copy so other clients see their own.
    json p = json::parse(*sample_text);
    p["decimation"] = c->decimation();
    p["client_drops"] = c->drops();
    c->push(MessageKind::kPipelineSample, p.dump(), true);
    c->push(MessageKind::kSceneState, *scene_text, true);
  }
}

void TelemetryHub::run() {
  std::unique_lock lock(mutex_);
  while (true) {
    cv_.wait_for(lock, period_, [&] { return stopping_ || !events_.empty(); });
    // Drain in global order: merge the sample and event queues.
    while (!samples_.empty() || !events_.empty()) {
      std::deque<Item>* src;
      if (samples_.empty()) {
        src = &events_;
      } else if (events_.empty()) {
        src = &samples_;
      } else {
        src = samples_.front().order < events_.front().order ? &samples_ : &events_;
      }
      Item item = std::move(src->front());
      src->pop_front();
      lock.unlock();
      publish(item);
      lock.lock();
      published_order_ = std::max(published_order_, item.order + 1);
    }
    published_order_ = next_order_;
    drained_.notify_all();
    if (stopping_) break;
  }
}

}  // namespace wristhap::gateway
