#include "vis_presence/relay_server.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <map>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "vis_presence/error.hpp"
#include "vis_presence/relay_core.hpp"

namespace vis_presence::relay {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

// --- configuration -------------------------------------------------------------

void ServerConfig::validate() const {
  parse_bind_address(bind_address);
  if (max_users_per_room == 0) throw Error(ErrorCode::InvalidConfig, "max users must be positive");
  if (!(idle_timeout_s > 0) || !std::isfinite(idle_timeout_s)) {
    throw Error(ErrorCode::InvalidConfig, "idle timeout must be positive");
  }
  if (!(ping_interval_s > 0) || !std::isfinite(ping_interval_s)) {
    throw Error(ErrorCode::InvalidConfig, "ping interval must be positive");
  }
  if (!(ping_interval_s < idle_timeout_s)) {
    throw Error(ErrorCode::InvalidConfig, "ping interval must be shorter than the idle timeout");
  }
}

std::pair<std::string, std::uint16_t> parse_bind_address(const std::string& bind) {
  auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == bind.size()) {
    throw Error(ErrorCode::InvalidConfig, "bind address must be host:port, got '" + bind + "'");
  }
  std::string host = bind.substr(0, colon);
  if (host.size() > 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  unsigned port = 0;
  const char* first = bind.data() + colon + 1;
  const char* last = bind.data() + bind.size();
  auto [ptr, ec] = std::from_chars(first, last, port);
  if (ec != std::errc{} || ptr != last || port > 65535) {
    throw Error(ErrorCode::InvalidConfig, "invalid port in '" + bind + "'");
  }
  return {host, static_cast<std::uint16_t>(port)};
}

EnvLookup process_env() {
  return [](const char* name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name)) return std::string(v);
    return std::nullopt;
  };
}

ServerConfig resolve_config(const ServerFlags& flags, const EnvLookup& env) {
  ServerConfig config;
  if (auto v = env("VIS_PRESENCE_BIND")) config.bind_address = *v;
  if (auto v = env("VIS_PRESENCE_MAX_USERS")) {
    std::size_t n = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), n);
    if (ec != std::errc{} || ptr != v->data() + v->size()) {
      throw Error(ErrorCode::InvalidConfig, "VIS_PRESENCE_MAX_USERS is not an integer: " + *v);
    }
    config.max_users_per_room = n;
  }
  if (flags.bind) config.bind_address = *flags.bind;
  if (flags.max_users) config.max_users_per_room = *flags.max_users;
  if (flags.idle_timeout_s) config.idle_timeout_s = *flags.idle_timeout_s;
  if (flags.ping_interval_s) config.ping_interval_s = *flags.ping_interval_s;
  config.validate();
  return config;
}

// --- server --------------------------------------------------------------------

namespace {

std::optional<std::string> room_from_target(std::string_view target) {
  constexpr std::string_view prefix = "/ws/";
  if (!target.starts_with(prefix)) return std::nullopt;
  target.remove_prefix(prefix.size());
  if (auto q = target.find('?'); q != std::string_view::npos) target = target.substr(0, q);
  std::string room;
  for (std::size_t i = 0; i < target.size(); ++i) {
    char c = target[i];
    if (c == '/') return std::nullopt;
    if (c == '%' && i + 2 < target.size()) {
      unsigned v = 0;
      auto [ptr, ec] = std::from_chars(target.data() + i + 1, target.data() + i + 3, v, 16);
      if (ec != std::errc{} || ptr != target.data() + i + 3) return std::nullopt;
      room.push_back(static_cast<char>(v));
      i += 2;
    } else {
      room.push_back(c);
    }
  }
  auto len = protocol::utf8_length(room);
  if (!len || *len == 0 || *len > protocol::kMaxRoomLength) return std::nullopt;
  return room;
}

}  // namespace

class WsSession;
class HttpSession;

struct RelayServer::Impl : std::enable_shared_from_this<RelayServer::Impl> {
  explicit Impl(ServerConfig c)
      : config(std::move(c)),
        core(session::SessionConfig{config.max_users_per_room, session::default_palette()}),
        acceptor(ioc),
        ping_timer(ioc),
        expiry_timer(ioc),
        epoch(std::chrono::steady_clock::now()) {}

  Millis now() const {
    return std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - epoch);
  }

  void do_accept();
  void schedule_ping();
  void schedule_expiry();
  void apply(const Effects& effects);
  void begin_shutdown();

  ServerConfig config;
  asio::io_context ioc;
  RelayCore core;
  tcp::acceptor acceptor;
  asio::steady_timer ping_timer;
  asio::steady_timer expiry_timer;
  std::chrono::steady_clock::time_point epoch;
  std::map<ConnectionId, std::weak_ptr<WsSession>> ws_sessions;
  std::map<std::uint64_t, std::weak_ptr<HttpSession>> http_sessions;
  ConnectionId next_id = 1;
  std::atomic<bool> shutdown_requested{false};
  bool stopping = false;
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(std::shared_ptr<RelayServer::Impl> server, tcp::socket socket, std::string room,
            ConnectionId id)
      : server_(std::move(server)), ws_(std::move(socket)), room_(std::move(room)), id_(id) {}

  void run(http::request<http::string_body> req) {
    websocket::stream_base::timeout timeouts{};
    timeouts.handshake_timeout = std::chrono::seconds(5);
    timeouts.idle_timeout = websocket::stream_base::none();
    timeouts.keep_alive_pings = false;
    ws_.set_option(timeouts);
    ws_.read_message_max(1 << 20);
    ws_.text(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  void send(std::string frame) {
    if (closing_) return;
    queue_.push_back(std::move(frame));
    if (queue_.size() == 1) do_write();
  }

  void close(CloseCode code, std::string reason) {
    if (closing_) return;
    closing_ = true;
    close_reason_ = websocket::close_reason(static_cast<websocket::close_code>(code), reason);
    if (queue_.empty()) do_close();
  }

  /// Drops the TCP connection without a close handshake.
  void abort() {
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
  }

  bool opened() const { return opened_; }

 private:
  void on_accept(beast::error_code ec) {
    if (ec || server_->stopping) {
      finish();
      return;
    }
    opened_ = true;
    server_->apply(server_->core.on_open(id_, room_, server_->now()));
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      finish();
      return;
    }
    auto& server = *server_;
    if (ws_.got_text()) {
      std::string frame = beast::buffers_to_string(buffer_.data());
      buffer_.consume(buffer_.size());
      server.apply(server.core.on_frame(id_, frame, server.now()));
    } else {
      buffer_.consume(buffer_.size());
      server.apply(server.core.on_binary(id_, server.now()));
    }
    if (!finished_) do_read();
  }

  void do_write() {
    ws_.async_write(asio::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->on_write(ec);
                    });
  }

  void on_write(beast::error_code ec) {
    if (ec) {
      queue_.clear();
      abort();
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) {
      do_write();
    } else if (closing_) {
      do_close();
    }
  }

  void do_close() {
    ws_.async_close(close_reason_, [self = shared_from_this()](beast::error_code) {
      // The pending read completes with `closed` (or an error) and finishes the session.
    });
  }

  void finish() {
    if (finished_) return;
    finished_ = true;
    if (opened_) server_->apply(server_->core.on_close(id_, server_->now()));
    server_->ws_sessions.erase(id_);
    abort();
  }

  std::shared_ptr<RelayServer::Impl> server_;
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::string room_;
  ConnectionId id_;
  std::deque<std::string> queue_;
  websocket::close_reason close_reason_;
  bool opened_ = false;
  bool closing_ = false;
  bool finished_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(std::shared_ptr<RelayServer::Impl> server, tcp::socket socket, std::uint64_t id)
      : server_(std::move(server)), stream_(std::move(socket)), id_(id) {}

  void run() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void abort() {
    beast::error_code ignored;
    stream_.socket().close(ignored);
  }

 private:
  void on_read(beast::error_code ec) {
    auto& server = *server_;
    server.http_sessions.erase(id_);
    if (ec || server.stopping) return;

    if (websocket::is_upgrade(req_)) {
      auto room = room_from_target(std::string_view(req_.target().data(), req_.target().size()));
      if (room) {
        stream_.expires_never();
        ConnectionId id = server.next_id++;
        auto ws = std::make_shared<WsSession>(server_, stream_.release_socket(), *room, id);
        server.ws_sessions.emplace(id, ws);
        ws->run(std::move(req_));
        return;
      }
    }

    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->set(http::field::server, "vis-presence-server");
    res->set(http::field::content_type, "text/plain");
    res->keep_alive(false);
    if (req_.method() == http::verb::get && req_.target() == "/healthz") {
      res->result(http::status::ok);
      res->body() = "ok";
    } else {
      res->result(http::status::not_found);
      res->body() = "not found";
    }
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  std::shared_ptr<RelayServer::Impl> server_;
  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::uint64_t id_;
};

void RelayServer::Impl::do_accept() {
  acceptor.async_accept(ioc, [self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
    if (ec || self->stopping) return;
    std::uint64_t id = self->next_id++;
    auto http_session = std::make_shared<HttpSession>(self, std::move(socket), id);
    self->http_sessions.emplace(id, http_session);
    http_session->run();
    self->do_accept();
  });
}

void RelayServer::Impl::schedule_ping() {
  ping_timer.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(config.ping_interval_s)));
  ping_timer.async_wait([self = shared_from_this()](beast::error_code ec) {
    if (ec || self->stopping) return;
    self->apply(self->core.ping_all());
    self->schedule_ping();
  });
}

void RelayServer::Impl::schedule_expiry() {
  double period = std::clamp(config.idle_timeout_s / 4, 0.05, 1.0);
  expiry_timer.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(period)));
  expiry_timer.async_wait([self = shared_from_this()](beast::error_code ec) {
    if (ec || self->stopping) return;
    auto timeout = std::chrono::duration_cast<Millis>(std::chrono::duration<double>(self->config.idle_timeout_s));
    self->apply(self->core.expire_idle(self->now(), timeout));
    self->schedule_expiry();
  });
}

void RelayServer::Impl::apply(const Effects& effects) {
  for (const auto& effect : effects) {
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          ConnectionId target;
          if constexpr (std::is_same_v<T, SendFrame>) target = e.to;
          else target = e.conn;
          auto it = ws_sessions.find(target);
          if (it == ws_sessions.end()) return;
          auto session = it->second.lock();
          if (!session) return;
          if constexpr (std::is_same_v<T, SendFrame>) session->send(e.frame);
          else session->close(e.code, e.reason);
        },
        effect);
  }
}

void RelayServer::Impl::begin_shutdown() {
  if (stopping) return;
  stopping = true;
  beast::error_code ignored;
  acceptor.close(ignored);
  ping_timer.cancel();
  expiry_timer.cancel();
  apply(core.close_all(CloseCode::GoingAway, "server shutdown"));
  for (auto& [id, weak] : ws_sessions) {
    if (auto s = weak.lock(); s && !s->opened()) s->abort();
  }
  for (auto& [id, weak] : http_sessions) {
    if (auto s = weak.lock()) s->abort();
  }
}

RelayServer::RelayServer(ServerConfig config) {
  config.validate();
  impl_ = std::make_shared<Impl>(std::move(config));
}

// Handlers queued on the loop keep the implementation alive, so drain them.
RelayServer::~RelayServer() {
  shutdown();
  impl_->ioc.restart();
  impl_->ioc.run();
}

void RelayServer::start() {
  auto [host, port] = parse_bind_address(impl_->config.bind_address);
  beast::error_code ec;
  auto address = asio::ip::make_address(host, ec);
  if (ec) throw Error(ErrorCode::BindFailure, "cannot resolve bind host '" + host + "'");
  tcp::endpoint endpoint{address, port};
  auto& acceptor = impl_->acceptor;
  acceptor.open(endpoint.protocol(), ec);
  if (!ec) acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) acceptor.bind(endpoint, ec);
  if (!ec) acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw Error(ErrorCode::BindFailure, impl_->config.bind_address + ": " + ec.message());
  }
  impl_->do_accept();
  impl_->schedule_ping();
  impl_->schedule_expiry();
}

std::uint16_t RelayServer::port() const {
  beast::error_code ec;
  auto ep = impl_->acceptor.local_endpoint(ec);
  return ec ? 0 : ep.port();
}

void RelayServer::run() { impl_->ioc.run(); }

void RelayServer::shutdown() {
  if (impl_->shutdown_requested.exchange(true)) return;
  asio::post(impl_->ioc, [impl = impl_] { impl->begin_shutdown(); });
}

void serve(const ServerConfig& config) {
  RelayServer server(config);
  server.start();

  asio::io_context signal_ioc;
  asio::signal_set signals(signal_ioc, SIGINT, SIGTERM);
  signals.async_wait([&](beast::error_code ec, int) {
    if (!ec) server.shutdown();
  });
  std::thread signal_thread([&] { signal_ioc.run(); });

  server.run();
  signals.cancel();
  signal_thread.join();
}

}  // namespace vis_presence::relay
