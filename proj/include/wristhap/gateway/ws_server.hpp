#pragma once
// WebSocket endpoint for the trainer UI. One network thread serves every
// connection; sockets never touch the control loop directly. Outbound data
// comes from the client's telemetry channel, inbound JSON commands go to the
// command handler. Plain HTTP GET requests are answered from an optional
// static directory.

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <thread>

#include <nlohmann/json.hpp>

#include "wristhap/gateway/config.hpp"
#include "wristhap/gateway/telemetry.hpp"

namespace wristhap::gateway {

struct WsServerOptions {
  ListenAddress address;  // port 0 picks a free port
  std::optional<std::filesystem::path> static_root;
};

class WsServer {
 public:
  /// Commands other than "subscribe" are passed to `on_command`; it may
  /// throw ConfigError to reject one. `on_connect` runs once per new client
  /// and may push initial messages to its channel.
  using CommandHandler = std::function<void(const nlohmann::json&)>;
  using ConnectHandler = std::function<void(ClientChannel&)>;

  WsServer(TelemetryHub& hub, WsServerOptions options, CommandHandler on_command, ConnectHandler on_connect = {});
  ~WsServer();
  WsServer(const WsServer&) = delete;
  WsServer& operator=(const WsServer&) = delete;

  /// Binds and starts the network thread. Throws ConfigError if the address
  /// cannot be bound.
  void start();
  void stop();

  unsigned short port() const { return port_; }
  std::size_t connections() const { return connections_.load(); }
  std::uint64_t rejected_commands() const { return rejected_.load(); }

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
  unsigned short port_ = 0;
  std::atomic<std::size_t> connections_{0};
  std::atomic<std::uint64_t> rejected_{0};
  std::thread thread_;
};

}  // namespace wristhap::gateway
