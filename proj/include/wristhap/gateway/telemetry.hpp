#pragma once
// Telemetry fan-out from the control loop to connected clients.
//
// The loop thread only copies samples into a bounded queue (oldest dropped
// when full). A publisher thread drains it every few milliseconds, applies
// each client's decimation and the feedback gating, and appends serialized
// messages to per-client channels. Event messages are never decimated or
// dropped and keep their order relative to samples.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "wristhap/gateway/logs.hpp"
#include "wristhap/loop.hpp"

namespace wristhap::gateway {

inline constexpr int kTelemetryVersion = 1;

enum class MessageKind { kPipelineSample, kTrialEvent, kJawState, kSceneState, kScheduleInfo };

const char* to_string(MessageKind k);
MessageKind parse_message_kind(const std::string& s);

/// Wire form: {"v":1,"kind":"...","seq":N,"payload":{...}}, one JSON text
/// per WebSocket message.
struct TelemetryMessage {
  MessageKind kind = MessageKind::kPipelineSample;
  std::uint64_t seq = 0;
  nlohmann::json payload;

  std::string serialize() const;
  /// Throws ConfigError on anything that is not a version-1 message.
  static TelemetryMessage parse(const std::string& text);
};

/// Outbound queue of one client. Sample-class messages are dropped oldest
/// first when the client falls behind, which also doubles its effective
/// decimation; it relaxes back after a quiet period.
class ClientChannel {
 public:
  explicit ClientChannel(std::size_t requested_decimation, std::size_t capacity = 512);

  void set_decimation(std::size_t d);
  std::size_t requested_decimation() const;
  std::size_t decimation() const;
  std::uint64_t drops() const;
  std::uint64_t delivered() const;

  /// Stamps the next sequence number and enqueues.
  void push(MessageKind kind, const std::string& payload_json, bool droppable);
  std::optional<std::string> pop();
  std::optional<std::string> pop_for(std::chrono::milliseconds timeout);
  std::size_t pending() const;

  /// Called after every push, outside the lock. Used by the socket layer to
  /// schedule a write on its own execution context.
  void set_notify(std::function<void()> f);
  void close();
  bool closed() const;

  // Publisher bookkeeping for decimation recovery.
  void note_tick(double t);

 private:
  struct Entry {
    std::string text;
    bool droppable;
  };
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Entry> items_;
  std::size_t capacity_;
  std::size_t requested_;
  std::size_t effective_;
  std::uint64_t seq_ = 0;
  std::uint64_t drops_ = 0;
  std::uint64_t delivered_ = 0;
  double last_drop_t_ = -1e300;
  double last_t_ = 0.0;
  bool closed_ = false;
  std::function<void()> notify_;
};

/// Per-tick session state that accompanies each sample.
struct TickContext {
  SessionPhase phase = SessionPhase::kPause;
  int trial = -1;
  trial::HapticMode mode = trial::HapticMode::kOff;
  Vec3 tip_world = Vec3::Zero();
  double depth_m = 0.0;
  bool contact = false;
  double jaw_mm = 0.0;
};

/// True when the rendered feedback may leave the gateway for this tick.
inline bool feedback_visible(const TickContext& c) {
  return c.phase == SessionPhase::kTrial && c.mode == trial::HapticMode::kOn;
}

class TelemetryHub : public TelemetrySink {
 public:
  explicit TelemetryHub(std::size_t sample_capacity = 4096,
                        std::chrono::milliseconds publish_period = std::chrono::milliseconds(5));
  ~TelemetryHub() override;
  TelemetryHub(const TelemetryHub&) = delete;
  TelemetryHub& operator=(const TelemetryHub&) = delete;

  /// Loop thread: context for the samples offered after this call.
  void set_context(const TickContext& c) { context_ = c; }
  /// Loop thread. Never waits on clients; returns false if the queue had to
  /// drop its oldest sample.
  bool offer(const PipelineSample& s) override;
  /// Any thread. Events are kept in order with samples and never dropped.
  void post_event(MessageKind kind, nlohmann::json payload);

  std::shared_ptr<ClientChannel> attach(std::size_t decimation = 10);
  void detach(const std::shared_ptr<ClientChannel>& c);
  std::size_t client_count() const;
  std::uint64_t queue_drops() const { return queue_drops_.load(); }

  /// Blocks until everything offered or posted so far reached the channels.
  void flush();
  void stop();

  static nlohmann::json sample_payload(const PipelineSample& s, const TickContext& c);
  static nlohmann::json scene_payload(const PipelineSample& s, const TickContext& c);

 private:
  struct Item {
    std::uint64_t order;
    bool is_event;
    MessageKind kind;
    nlohmann::json payload;  // events
    PipelineSample sample;   // samples
    TickContext context;
  };

  void run();
  void publish(Item& item);

  std::size_t sample_capacity_;
  std::chrono::milliseconds period_;
  TickContext context_;

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable drained_;
  std::deque<Item> samples_;
  std::deque<Item> events_;
  std::uint64_t next_order_ = 0;
  std::uint64_t published_order_ = 0;
  bool stopping_ = false;
  std::atomic<std::size_t> client_count_{0};
  std::atomic<std::uint64_t> queue_drops_{0};

  mutable std::mutex clients_mutex_;
  std::vector<std::shared_ptr<ClientChannel>> clients_;

  std::thread thread_;
};

}  // namespace wristhap::gateway
