#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace vis_presence::relay {

struct ServerConfig {
  std::string bind_address = "127.0.0.1:9870";
  std::size_t max_users_per_room = 32;
  double idle_timeout_s = 30;
  double ping_interval_s = 10;

  /// Throws Error{InvalidConfig}.
  void validate() const;
};

/// Flag values as parsed from the command line; unset flags fall back to the
/// environment (VIS_PRESENCE_BIND, VIS_PRESENCE_MAX_USERS), then defaults.
struct ServerFlags {
  std::optional<std::string> bind;
  std::optional<std::size_t> max_users;
  std::optional<double> idle_timeout_s;
  std::optional<double> ping_interval_s;
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

EnvLookup process_env();
ServerConfig resolve_config(const ServerFlags& flags, const EnvLookup& env = process_env());

/// Splits "host:port". Throws Error{InvalidConfig}.
std::pair<std::string, std::uint16_t> parse_bind_address(const std::string& bind);

/// WebSocket relay on `/ws/{room}` plus `GET /healthz`. Runs on a single
/// event-loop thread, which serializes every room's session handling.
class RelayServer {
 public:
  explicit RelayServer(ServerConfig config);
  ~RelayServer();
  RelayServer(const RelayServer&) = delete;
  RelayServer& operator=(const RelayServer&) = delete;

  /// Binds and listens. Throws Error{BindFailure}.
  void start();
  /// The bound port (useful with port 0).
  std::uint16_t port() const;
  /// Runs the event loop until shutdown() completes.
  void run();
  /// Thread-safe and idempotent: stops accepting, sends every client a close
  /// frame and lets run() return once all connections are gone.
  void shutdown();

  struct Impl;  // defined in relay_server.cpp

 private:
  std::shared_ptr<Impl> impl_;
};

/// start() + run(), stopping on SIGINT/SIGTERM.
void serve(const ServerConfig& config);

}  // namespace vis_presence::relay
