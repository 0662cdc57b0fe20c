#include "vis_presence/relay_core.hpp"

#include "vis_presence/error.hpp"

namespace vis_presence::relay {

using protocol::encode;

RelayCore::RelayCore(session::SessionConfig config) : sessions_(std::move(config)) {}

std::optional<UserId> RelayCore::user_of(ConnectionId conn) const {
  auto it = connections_.find(conn);
  if (it == connections_.end()) return std::nullopt;
  return it->second.user_id;
}

Effects RelayCore::on_open(ConnectionId conn, std::string room, Millis) {
  connections_.insert_or_assign(conn, Connection{std::move(room), std::nullopt});
  return {};
}

void RelayCore::broadcast(const std::string& room, const ConnectionId* except,
                          const std::string& frame, Effects& out) const {
  for (auto it = by_user_.lower_bound({room, UserId{}}); it != by_user_.end() && it->first.first == room;
       ++it) {
    if (except && it->second == *except) continue;
    out.push_back(SendFrame{it->second, frame});
  }
}

void RelayCore::drop(ConnectionId conn, CloseCode code, std::string reason, Effects& out,
                     bool send_close) {
  auto it = connections_.find(conn);
  if (it == connections_.end()) return;
  Connection c = std::move(it->second);
  connections_.erase(it);
  if (send_close) out.push_back(CloseConnection{conn, code, std::move(reason)});
  if (c.user_id) {
    by_user_.erase({c.room, *c.user_id});
    protocol::UserLeft left = sessions_.leave(c.room, *c.user_id);
    broadcast(c.room, nullptr, encode(left), out);
  }
}

Effects RelayCore::handle_join(ConnectionId conn, Connection& c, const protocol::Join& join,
                               Millis now) {
  Effects out;
  if (join.room != c.room) {
    drop(conn, CloseCode::PolicyViolation, "join room does not match path", out, true);
    return out;
  }
  session::JoinResult joined;
  try {
    joined = sessions_.join(c.room, join.name, now);
  } catch (const Error& e) {
    auto code = e.code() == ErrorCode::RoomFull ? CloseCode::TryAgainLater : CloseCode::PolicyViolation;
    drop(conn, code, std::string(to_string(e.code())), out, true);
    return out;
  }
  const UserId& self = joined.self.user_id;
  c.user_id = self;
  by_user_.emplace(std::pair{c.room, self}, conn);

  out.push_back(SendFrame{conn, encode(protocol::Welcome{c.room, self, joined.self.color})});
  out.push_back(SendFrame{conn, encode(session::make_roster(c.room, joined.roster))});
  // Existing members learn the newcomer's name and color from a fresh roster.
  for (const auto& other : joined.roster) {
    auto target = by_user_.find({c.room, other.user_id});
    if (target == by_user_.end()) continue;
    auto tailored = session::make_roster(c.room, sessions_.roster(c.room, other.user_id));
    out.push_back(SendFrame{target->second, encode(tailored)});
  }
  return out;
}

Effects RelayCore::handle_joined(ConnectionId conn, Connection& c, const protocol::WireMessage& msg,
                                 std::string_view frame, Millis now) {
  Effects out;
  if (protocol::room_of(msg) != c.room) {
    drop(conn, CloseCode::PolicyViolation, "message room does not match connection", out, true);
    return out;
  }
  const UserId& self = *c.user_id;
  if (const auto* update = std::get_if<protocol::StateUpdate>(&msg)) {
    if (update->user_id != self) {
      drop(conn, CloseCode::PolicyViolation, "user_id does not match connection", out, true);
      return out;
    }
    auto result = sessions_.apply_update(c.room, self, update->seq, update->state, now);
    if (result == session::ApplyResult::Applied) {
      // Relay the received bytes untouched so receivers see exactly what was sent.
      broadcast(c.room, &conn, std::string(frame), out);
    }
    return out;
  }
  if (std::holds_alternative<protocol::Ping>(msg)) {
    sessions_.touch(c.room, self, now);
    out.push_back(SendFrame{conn, encode(protocol::Pong{c.room})});
    return out;
  }
  if (std::holds_alternative<protocol::Pong>(msg)) {
    sessions_.touch(c.room, self, now);
    return out;
  }
  drop(conn, CloseCode::PolicyViolation,
       "unexpected '" + std::string(protocol::kind_name(msg)) + "' from client", out, true);
  return out;
}

Effects RelayCore::on_frame(ConnectionId conn, std::string_view frame, Millis now) {
  auto it = connections_.find(conn);
  if (it == connections_.end()) return {};
  Connection& c = it->second;

  protocol::WireMessage msg;
  try {
    msg = protocol::decode(frame);
  } catch (const Error& e) {
    Effects out;
    auto code = e.code() == ErrorCode::MalformedInput ? CloseCode::InvalidPayload
                                                      : CloseCode::PolicyViolation;
    drop(conn, code, std::string(to_string(e.code())), out, true);
    return out;
  }

  if (!c.user_id) {
    if (const auto* join = std::get_if<protocol::Join>(&msg)) return handle_join(conn, c, *join, now);
    Effects out;
    drop(conn, CloseCode::PolicyViolation, "first frame must be join", out, true);
    return out;
  }
  return handle_joined(conn, c, msg, frame, now);
}

Effects RelayCore::on_binary(ConnectionId conn, Millis) {
  Effects out;
  drop(conn, CloseCode::UnsupportedData, "text frames only", out, true);
  return out;
}

Effects RelayCore::on_close(ConnectionId conn, Millis) {
  Effects out;
  drop(conn, CloseCode::Normal, {}, out, false);
  return out;
}

Effects RelayCore::expire_idle(Millis now, Millis timeout) {
  Effects out;
  for (const auto& room_id : sessions_.room_ids()) {
    const session::Room* room = sessions_.find_room(room_id);
    std::vector<ConnectionId> idle;
    for (const auto& [id, user] : room->users) {
      if (now - user.last_seen > timeout) {
        auto conn = by_user_.find({room_id, id});
        if (conn != by_user_.end()) idle.push_back(conn->second);
      }
    }
    for (auto conn : idle) drop(conn, CloseCode::GoingAway, "idle timeout", out, true);
  }
  return out;
}

Effects RelayCore::ping_all() const {
  Effects out;
  for (const auto& [key, conn] : by_user_) {
    out.push_back(SendFrame{conn, encode(protocol::Ping{key.first})});
  }
  return out;
}

Effects RelayCore::close_all(CloseCode code, std::string_view reason) {
  Effects out;
  std::vector<ConnectionId> all;
  for (const auto& [id, c] : connections_) all.push_back(id);
  for (auto id : all) drop(id, code, std::string(reason), out, true);
  return out;
}

}  // namespace vis_presence::relay
