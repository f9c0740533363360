#include <doctest.h>

#include <chrono>
#include <thread>

#include "wristhap/gateway/inbox.hpp"
#include "wristhap/gateway/session.hpp"
#include "wristhap/gateway/telemetry.hpp"
#include "wristhap/gateway/ws_server.hpp"
#include "ws_client.hpp"

using namespace wristhap;
using namespace wristhap::gateway;
using wristhap::testing::WsTestClient;
using namespace std::chrono_literals;

namespace {

std::size_t count_kind(const std::vector<std::string>& msgs, MessageKind kind) {
  std::size_t n = 0;
  for (const auto& s : msgs) n += TelemetryMessage::parse(s).kind == kind;
  return n;
}

}  // namespace

TEST_CASE("websocket: subscribe, receive decimated samples, send commands") {
  TelemetryHub hub;
  OperatorInbox inbox;
  WsServerOptions opt;
  opt.address.port = 0;
  WsServer server(hub, opt, [&](const nlohmann::json& cmd) { inbox.apply(cmd); });
  server.start();
  REQUIRE(server.port() != 0);

  WsTestClient client(server.port(), 5);
  REQUIRE(client.wait_for([&](auto&&) { return server.connections() == 1 && hub.client_count() == 1; }, 2s));
  // The subscribe message is processed asynchronously.
  std::this_thread::sleep_for(50ms);

  TickContext ctx;
  ctx.phase = SessionPhase::kTrial;
  ctx.mode = trial::HapticMode::kOn;
  hub.set_context(ctx);
  for (std::uint64_t k = 0; k < 100; ++k) {
    PipelineSample s;
    s.tick = k;
    s.t = k * 0.001;
    hub.offer(s);
  }
  hub.post_event(MessageKind::kTrialEvent, {{"event", "end"}});
  REQUIRE(client.wait_for([](const auto& m) { return count_kind(m, MessageKind::kTrialEvent) == 1; }, 2s));

  const auto msgs = client.messages();
  CHECK(count_kind(msgs, MessageKind::kPipelineSample) == 20);
  std::uint64_t prev = 0;
  for (const auto& s : msgs) {
    const auto m = TelemetryMessage::parse(s);
    CHECK(m.seq > prev);
    prev = m.seq;
    if (m.kind == MessageKind::kPipelineSample) {
      CHECK(m.payload.at("tick").get<std::uint64_t>() % 5 == 0);
      CHECK(m.payload.contains("feedback"));
    }
  }

  client.send(R"({"cmd":"move","linear":[0,0,-0.01]})");
  client.send(R"({"cmd":"start"})");
  client.send(R"({"cmd":"warp"})");
  REQUIRE(client.wait_for([&](auto&&) { return server.rejected_commands() == 1; }, 2s));
  const PendingInput in = inbox.take();
  CHECK(in.start);
  CHECK(in.move.linear.z() == -0.01);

  client.close();
  CHECK(client.wait_for([&](auto&&) { return server.connections() == 0 && hub.client_count() == 0; }, 2s));
  server.stop();
}

TEST_CASE("websocket: a busy port is reported") {
  TelemetryHub hub;
  WsServerOptions opt;
  opt.address.port = 0;
  WsServer a(hub, opt, [](const nlohmann::json&) {});
  a.start();
  opt.address.port = a.port();
  WsServer b(hub, opt, [](const nlohmann::json&) {});
  CHECK_THROWS_AS(b.start(), ConfigError);
}

TEST_CASE("websocket: HapticOff trials never carry feedback to clients") {
  TelemetryHub hub;
  WsServerOptions opt;
  opt.address.port = 0;
  WsServer server(hub, opt, [](const nlohmann::json&) {});
  server.start();
  WsTestClient client(server.port(), 1);
  REQUIRE(client.wait_for([&](auto&&) { return hub.client_count() == 1; }, 2s));
  std::this_thread::sleep_for(50ms);

  SessionConfig c;
  c.output_dir = std::filesystem::temp_directory_path() / "wristhap_test_ws_session";
  c.max_trials = 4;
  c.telemetry_log_every = 0;
  SessionOptions so;
  so.hub = &hub;
  const SessionResult r = run_session(c, so);
  hub.flush();
  REQUIRE(client.wait_for(
      [](const auto& m) { return !m.empty() && TelemetryMessage::parse(m.back()).payload.value("event", "") == "session_end"; },
      10s));

  std::size_t on_with = 0, off_samples = 0;
  std::string mode;
  for (const auto& s : client.messages()) {
    const auto m = TelemetryMessage::parse(s);
    if (m.kind == MessageKind::kScheduleInfo) mode = m.payload.at("mode");
    if (m.kind != MessageKind::kPipelineSample || m.payload.at("phase") != "trial") continue;
    if (mode == "HapticOff") {
      ++off_samples;
      CHECK_FALSE(m.payload.contains("feedback"));
    } else {
      on_with += m.payload.contains("feedback");
    }
  }
  CHECK(r.records.trials.size() == 4);
  CHECK(off_samples > 0);
  CHECK(on_with > 0);
}
