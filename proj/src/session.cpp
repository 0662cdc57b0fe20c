#include "vis_presence/session.hpp"

#include <algorithm>
#include <set>

#include "vis_presence/error.hpp"

namespace vis_presence::session {

namespace {

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

}  // namespace

SessionRegistry::SessionRegistry(SessionConfig config) : config_(std::move(config)) {
  if (config_.palette.empty()) throw Error(ErrorCode::InvalidConfig, "palette must be non-empty");
  if (config_.max_users_per_room == 0) {
    throw Error(ErrorCode::InvalidConfig, "max_users_per_room must be positive");
  }
}

Room& SessionRegistry::room_or_throw(const std::string& room_id) {
  auto it = rooms_.find(room_id);
  if (it == rooms_.end()) throw Error(ErrorCode::UnknownRoom, room_id);
  return it->second;
}

// Scans forward from the cursor for a color nobody present holds; when the
// palette is exhausted the cursor position is reused. The cursor never moves
// backwards, so a departed user's color is not handed out again while
// untouched colors remain.
std::string SessionRegistry::pick_color(Room& room) const {
  const auto& palette = config_.palette;
  std::set<std::string_view> in_use;
  for (const auto& [id, user] : room.users) in_use.insert(user.color);

  std::size_t chosen = room.next_color_index;
  for (std::size_t step = 0; step < palette.size(); ++step) {
    std::size_t candidate = room.next_color_index + step;
    if (!in_use.contains(palette[candidate % palette.size()])) {
      chosen = candidate;
      break;
    }
  }
  room.next_color_index = chosen + 1;
  return palette[chosen % palette.size()];
}

JoinResult SessionRegistry::join(const std::string& room_id, std::string_view name, Millis now) {
  std::string_view trimmed = trim(name);
  if (trimmed.empty()) throw Error(ErrorCode::InvalidName, "name is empty after trimming");
  auto len = protocol::utf8_length(trimmed);
  if (!len || *len > protocol::kMaxNameLength) {
    throw Error(ErrorCode::InvalidName, "name must be valid UTF-8 of at most 64 characters");
  }

  auto [it, created] = rooms_.try_emplace(room_id);
  Room& room = it->second;
  if (created) room.room_id = room_id;
  if (room.users.size() >= config_.max_users_per_room) {
    throw Error(ErrorCode::RoomFull, room_id);
  }

  UserPresence self;
  self.user_id = "u" + std::to_string(room.next_user_number++);
  self.name = std::string(trimmed);
  self.color = pick_color(room);
  self.last_seen = now;

  JoinResult result;
  result.roster = roster(room_id);
  room.users.emplace(self.user_id, self);
  result.self = std::move(self);
  return result;
}

ApplyResult SessionRegistry::apply_update(const std::string& room_id, const UserId& user_id,
                                          std::uint64_t seq, const protocol::InteractionState& state,
                                          Millis now) {
  Room& room = room_or_throw(room_id);
  auto it = room.users.find(user_id);
  if (it == room.users.end()) throw Error(ErrorCode::UnknownUser, user_id);
  UserPresence& user = it->second;
  user.last_seen = std::max(user.last_seen, now);
  if (!lww_accepts(user.seq, seq)) return ApplyResult::Stale;
  user.seq = seq;
  user.state = state;
  return ApplyResult::Applied;
}

protocol::UserLeft SessionRegistry::leave(const std::string& room_id, const UserId& user_id) {
  auto room_it = rooms_.find(room_id);
  if (room_it == rooms_.end()) throw Error(ErrorCode::UnknownUser, user_id + " (no room " + room_id + ")");
  if (room_it->second.users.erase(user_id) == 0) throw Error(ErrorCode::UnknownUser, user_id);
  if (room_it->second.users.empty()) rooms_.erase(room_it);
  return {room_id, user_id};
}

std::vector<UserId> SessionRegistry::expire_idle(const std::string& room_id, Millis now,
                                                 Millis timeout) {
  std::vector<UserId> evicted;
  auto it = rooms_.find(room_id);
  if (it == rooms_.end()) return evicted;
  for (const auto& [id, user] : it->second.users) {
    if (now - user.last_seen > timeout) evicted.push_back(id);
  }
  for (const auto& id : evicted) leave(room_id, id);
  return evicted;
}

void SessionRegistry::touch(const std::string& room_id, const UserId& user_id, Millis now) {
  Room& room = room_or_throw(room_id);
  auto it = room.users.find(user_id);
  if (it == room.users.end()) throw Error(ErrorCode::UnknownUser, user_id);
  it->second.last_seen = std::max(it->second.last_seen, now);
}

const Room* SessionRegistry::find_room(const std::string& room_id) const {
  auto it = rooms_.find(room_id);
  return it == rooms_.end() ? nullptr : &it->second;
}

std::vector<std::string> SessionRegistry::room_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, room] : rooms_) ids.push_back(id);
  return ids;
}

std::vector<UserPresence> SessionRegistry::roster(const std::string& room_id,
                                                  const UserId& exclude) const {
  std::vector<UserPresence> out;
  if (const Room* room = find_room(room_id)) {
    for (const auto& [id, user] : room->users) {
      if (id != exclude) out.push_back(user);
    }
  }
  return out;
}

protocol::Roster make_roster(const std::string& room_id, const std::vector<UserPresence>& users) {
  protocol::Roster r{room_id, {}};
  for (const auto& u : users) r.users.push_back(to_roster_entry(u));
  std::sort(r.users.begin(), r.users.end(),
            [](const auto& a, const auto& b) { return a.user_id < b.user_id; });
  return r;
}

}  // namespace vis_presence::session
