#pragma once

// Server-side room state: membership, color assignment and the latest
// interaction state of every user. Mutations of one room must be serialized
// by the caller; the registry itself holds no locks.

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vis_presence/protocol.hpp"
#include "vis_presence/user_presence.hpp"

namespace vis_presence::session {

/// The grammar's default 10-color categorical scheme (tableau10).
inline const std::vector<std::string>& default_palette() {
  static const std::vector<std::string> palette = {
      "#4c78a8", "#f58518", "#e45756", "#72b7b2", "#54a24b",
      "#eeca3b", "#b279a2", "#ff9da6", "#9d755d", "#bab0ac"};
  return palette;
}

struct SessionConfig {
  std::size_t max_users_per_room = 32;
  std::vector<std::string> palette = default_palette();
};

struct Room {
  std::string room_id;
  std::map<UserId, UserPresence> users;
  std::size_t next_color_index = 0;
  std::uint64_t next_user_number = 1;
};

struct JoinResult {
  UserPresence self;
  /// Every other member with their current state, ascending by user_id.
  std::vector<UserPresence> roster;
};

enum class ApplyResult { Applied, Stale };

class SessionRegistry {
 public:
  explicit SessionRegistry(SessionConfig config = {});

  /// Creates the room on first join. Throws InvalidName, RoomFull.
  JoinResult join(const std::string& room_id, std::string_view name, Millis now = Millis{0});

  /// Throws UnknownRoom, UnknownUser.
  ApplyResult apply_update(const std::string& room_id, const UserId& user_id, std::uint64_t seq,
                           const protocol::InteractionState& state, Millis now = Millis{0});

  /// Removes the user; empty rooms are deleted. Throws UnknownUser.
  protocol::UserLeft leave(const std::string& room_id, const UserId& user_id);

  /// Evicts users idle for strictly longer than `timeout`, as if each had left.
  std::vector<UserId> expire_idle(const std::string& room_id, Millis now, Millis timeout);

  /// Refreshes last_seen. Throws UnknownRoom, UnknownUser.
  void touch(const std::string& room_id, const UserId& user_id, Millis now);

  const Room* find_room(const std::string& room_id) const;
  std::vector<std::string> room_ids() const;

  /// Roster snapshot ascending by user_id, optionally excluding one user.
  std::vector<UserPresence> roster(const std::string& room_id, const UserId& exclude = {}) const;

  const SessionConfig& config() const noexcept { return config_; }

 private:
  Room& room_or_throw(const std::string& room_id);
  std::string pick_color(Room& room) const;

  SessionConfig config_;
  std::map<std::string, Room> rooms_;
};

protocol::Roster make_roster(const std::string& room_id, const std::vector<UserPresence>& users);

}  // namespace vis_presence::session
