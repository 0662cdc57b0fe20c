#pragma once

// Transport-independent relay logic. A transport (the WebSocket server or
// the simulator's virtual network) reports connection events and frames;
// the core answers with an ordered list of effects to carry out. All calls
// must come from one logical event loop.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vis_presence/session.hpp"

namespace vis_presence::relay {

using ConnectionId = std::uint64_t;

/// WebSocket close codes used by the relay.
enum class CloseCode : std::uint16_t {
  Normal = 1000,
  GoingAway = 1001,
  UnsupportedData = 1003,
  InvalidPayload = 1007,
  PolicyViolation = 1008,
  TryAgainLater = 1013,
};

struct SendFrame {
  ConnectionId to;
  std::string frame;
  friend bool operator==(const SendFrame&, const SendFrame&) = default;
};

struct CloseConnection {
  ConnectionId conn;
  CloseCode code;
  std::string reason;
  friend bool operator==(const CloseConnection&, const CloseConnection&) = default;
};

using Effect = std::variant<SendFrame, CloseConnection>;
using Effects = std::vector<Effect>;

class RelayCore {
 public:
  explicit RelayCore(session::SessionConfig config = {});

  /// A client connected on `/ws/{room}`; it must send Join next.
  Effects on_open(ConnectionId conn, std::string room, Millis now);

  /// One text frame from a client.
  Effects on_frame(ConnectionId conn, std::string_view frame, Millis now);

  /// A client sent a non-text frame.
  Effects on_binary(ConnectionId conn, Millis now);

  /// The transport lost the connection. No-op for connections the core
  /// already closed.
  Effects on_close(ConnectionId conn, Millis now);

  /// Evicts idle users (closing their connections) in every room.
  Effects expire_idle(Millis now, Millis timeout);

  /// A Ping to every joined connection.
  Effects ping_all() const;

  /// Closes every connection, for graceful shutdown.
  Effects close_all(CloseCode code, std::string_view reason);

  const session::SessionRegistry& sessions() const noexcept { return sessions_; }
  std::size_t connection_count() const noexcept { return connections_.size(); }
  std::optional<UserId> user_of(ConnectionId conn) const;

 private:
  struct Connection {
    std::string room;
    std::optional<UserId> user_id;  // set once Join is accepted
  };

  Effects handle_join(ConnectionId conn, Connection& c, const protocol::Join& join, Millis now);
  Effects handle_joined(ConnectionId conn, Connection& c, const protocol::WireMessage& msg,
                        std::string_view frame, Millis now);
  /// Closes `conn` and, if it had joined, announces its departure.
  void drop(ConnectionId conn, CloseCode code, std::string reason, Effects& out, bool send_close);
  void broadcast(const std::string& room, const ConnectionId* except, const std::string& frame,
                 Effects& out) const;

  session::SessionRegistry sessions_;
  std::map<ConnectionId, Connection> connections_;
  std::map<std::pair<std::string, UserId>, ConnectionId> by_user_;
};

}  // namespace vis_presence::relay
