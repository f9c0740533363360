#include "wristhap/gateway/ws_server.hpp"

#include <deque>
#include <fstream>
#include <sstream>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "wristhap/errors.hpp"

namespace wristhap::gateway {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

struct WsServer::Impl {
  WsServer& owner;
  TelemetryHub& hub;
  WsServerOptions options;
  CommandHandler on_command;
  ConnectHandler on_connect;
  asio::io_context ioc;
  tcp::acceptor acceptor{ioc};

  Impl(WsServer& o, TelemetryHub& h, WsServerOptions opt, CommandHandler c, ConnectHandler k)
      : owner(o), hub(h), options(std::move(opt)), on_command(std::move(c)), on_connect(std::move(k)) {}

  void accept();
};

namespace {

std::string mime_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket socket, WsServer::Impl& server, std::atomic<std::size_t>& count,
               std::atomic<std::uint64_t>& rejected)
      : ws_(std::move(socket)), server_(server), count_(count), rejected_(rejected) {}
  ~WsConnection() { close(); }

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    ws_.text(true);
    channel_ = server_.hub.attach();
    ++count_;
    if (server_.on_connect) server_.on_connect(*channel_);
    std::weak_ptr<WsConnection> weak = shared_from_this();
    auto& ioc = server_.ioc;
    channel_->set_notify([weak, &ioc] {
      asio::post(ioc, [weak] {
        if (auto self = weak.lock()) self->write_next();
      });
    });
    write_next();
    read();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      close();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    try {
      const json cmd = json::parse(text);
      if (cmd.is_object() && cmd.value("cmd", "") == "subscribe") {
        const auto d = cmd.value("decimation", channel_->requested_decimation());
        if (d < 1 || d > 1000) throw ConfigError("decimation must be in [1, 1000]");
        channel_->set_decimation(d);
      } else {
        server_.on_command(cmd);
      }
    } catch (const std::exception& e) {
      ++rejected_;
      spdlog::warn("rejected client command: {}", e.what());
    }
    read();
  }

  void write_next() {
    if (writing_ || !channel_) return;
    auto next = channel_->pop();
    if (!next) return;
    writing_ = true;
    out_ = std::move(*next);
    ws_.async_write(asio::buffer(out_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) {
        self->close();
        return;
      }
      self->write_next();
    });
  }

  void close() {
    if (!channel_) return;
    server_.hub.detach(channel_);
    channel_.reset();
    --count_;
  }

  websocket::stream<tcp::socket> ws_;
  WsServer::Impl& server_;
  std::atomic<std::size_t>& count_;
  std::atomic<std::uint64_t>& rejected_;
  std::shared_ptr<ClientChannel> channel_;
  beast::flat_buffer buffer_;
  std::string out_;
  bool writing_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, WsServer::Impl& server, std::atomic<std::size_t>& count,
              std::atomic<std::uint64_t>& rejected)
      : stream_(std::move(socket)), server_(server), count_(count), rejected_(rejected) {}

  void run() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

 private:
  void on_read(beast::error_code ec) {
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      stream_.expires_never();
      std::make_shared<WsConnection>(stream_.release_socket(), server_, count_, rejected_)->run(std::move(req_));
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>(respond());
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  http::response<http::string_body> respond() {
    http::response<http::string_body> res{http::status::not_found, req_.version()};
    res.set(http::field::content_type, "text/plain");
    res.body() = "not found\n";
    const std::string target(req_.target());
    if (req_.method() == http::verb::get && server_.options.static_root && target.find("..") == std::string::npos &&
        !target.empty() && target[0] == '/') {
      std::filesystem::path p = *server_.options.static_root / target.substr(1);
      if (std::filesystem::is_directory(p)) p /= "index.html";
      std::ifstream in(p, std::ios::binary);
      if (in) {
        std::ostringstream body;
        body << in.rdbuf();
        res.result(http::status::ok);
        res.set(http::field::content_type, mime_type(p));
        res.body() = body.str();
      }
    }
    res.prepare_payload();
    return res;
  }

  beast::tcp_stream stream_;
  WsServer::Impl& server_;
  std::atomic<std::size_t>& count_;
  std::atomic<std::uint64_t>& rejected_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

void WsServer::Impl::accept() {
  acceptor.async_accept(ioc, [this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<HttpSession>(std::move(socket), *this, owner.connections_, owner.rejected_)->run();
    accept();
  });
}

WsServer::WsServer(TelemetryHub& hub, WsServerOptions options, CommandHandler on_command, ConnectHandler on_connect)
    : impl_(std::make_unique<Impl>(*this, hub, std::move(options), std::move(on_command), std::move(on_connect))) {}

WsServer::~WsServer() { stop(); }

void WsServer::start() {
  beast::error_code ec;
  const auto addr = asio::ip::make_address(impl_->options.address.host, ec);
  if (ec) throw ConfigError("bad listen host '" + impl_->options.address.host + "'");
  const tcp::endpoint ep{addr, impl_->options.address.port};
  auto& a = impl_->acceptor;
  a.open(ep.protocol(), ec);
  if (!ec) a.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) a.bind(ep, ec);
  if (!ec) a.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw ConfigError("cannot listen on " + impl_->options.address.host + ":" +
                      std::to_string(impl_->options.address.port) + ": " + ec.message());
  }
  port_ = a.local_endpoint().port();
  impl_->accept();
  thread_ = std::thread([this] { impl_->ioc.run(); });
}

void WsServer::stop() {
  if (!thread_.joinable()) return;
  asio::post(impl_->ioc, [this] {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
  });
  impl_->ioc.stop();
  thread_.join();
}

}  // namespace wristhap::gateway
