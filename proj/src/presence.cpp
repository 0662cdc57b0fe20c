#include "vis_presence/presence.hpp"

#include "vis_presence/error.hpp"

namespace vis_presence::presence {

namespace {

const InteractionState& remote_state(const ClientState& cs, const UserId& target) {
  auto it = cs.remotes.find(target);
  if (it == cs.remotes.end()) throw Error(ErrorCode::TargetGone, target);
  return it->second.state;
}

void require_known(const ClientState& cs, const UserId& target) {
  if (target == cs.self.user_id || !cs.remotes.contains(target)) {
    throw Error(ErrorCode::UnknownTarget, target);
  }
}

}  // namespace

ClientState make_client(std::string room, std::string name) {
  ClientState cs;
  cs.room = std::move(room);
  cs.self.name = std::move(name);
  return cs;
}

InteractionState effective_view(const ClientState& cs) {
  return std::visit(
      [&](const auto& m) -> InteractionState {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Independent>) return cs.local;
        else return remote_state(cs, m.target);
      },
      cs.mode);
}

ClientState begin_peek(ClientState cs, const UserId& target) {
  require_known(cs, target);
  if (auto* peek = std::get_if<Peeking>(&cs.mode)) {
    peek->target = target;  // retarget; what to restore stays as it was
  } else if (auto* track = std::get_if<Tracking>(&cs.mode)) {
    cs.mode = Peeking{target, cs.local, track->target};
  } else {
    cs.mode = Peeking{target, cs.local, std::nullopt};
  }
  return cs;
}

ClientState end_peek(ClientState cs) {
  auto* peek = std::get_if<Peeking>(&cs.mode);
  if (!peek) throw Error(ErrorCode::NotPeeking, std::string(mode_name(cs.mode)));
  if (peek->resume_tracking) {
    cs.mode = Tracking{*peek->resume_tracking};
  } else {
    cs.local = std::move(peek->saved);
    cs.mode = Independent{};
  }
  return cs;
}

ClientState begin_track(ClientState cs, const UserId& target) {
  require_known(cs, target);
  cs.mode = Tracking{target};
  return cs;
}

LocalResult on_local_interaction(ClientState cs, const InteractionState& new_state) {
  if (auto target = mode_target(cs.mode)) {
    // Fork: the remote view is the starting point, the interaction lands on top.
    cs.local = protocol::overlay(remote_state(cs, *target), new_state);
  } else {
    cs.local = new_state;
  }
  cs.mode = Independent{};
  protocol::StateUpdate out{cs.room, cs.self.user_id, cs.next_seq++, cs.local};
  return {std::move(cs), std::move(out)};
}

ClientState on_remote_update(ClientState cs, const UserId& user_id, std::uint64_t seq,
                             const InteractionState& state) {
  if (user_id == cs.self.user_id || cs.departed.contains(user_id)) return cs;
  auto [it, inserted] = cs.remotes.try_emplace(user_id);
  UserPresence& user = it->second;
  if (inserted) user.user_id = user_id;
  if (lww_accepts(user.seq, seq)) {
    user.seq = seq;
    user.state = state;
  }
  return cs;
}

ClientState on_user_left(ClientState cs, const UserId& user_id) {
  auto it = cs.remotes.find(user_id);
  if (it == cs.remotes.end()) {
    if (user_id != cs.self.user_id) cs.departed.insert(user_id);
    return cs;
  }
  InteractionState last = std::move(it->second.state);
  cs.remotes.erase(it);
  cs.departed.insert(user_id);

  if (auto* peek = std::get_if<Peeking>(&cs.mode)) {
    if (peek->resume_tracking == user_id) {
      peek->resume_tracking.reset();
      peek->saved = last;
      cs.local = last;
    }
    if (peek->target == user_id) cs = end_peek(std::move(cs));
  } else if (auto* track = std::get_if<Tracking>(&cs.mode); track && track->target == user_id) {
    cs.local = std::move(last);
    cs.mode = Independent{};
  }
  return cs;
}

ClientState on_welcome(ClientState cs, const protocol::Welcome& welcome) {
  cs.self.user_id = welcome.user_id;
  cs.self.color = welcome.color;
  cs.remotes.erase(welcome.user_id);
  return cs;
}

ClientState on_roster(ClientState cs, const protocol::Roster& roster) {
  for (const auto& entry : roster.users) {
    if (entry.user_id == cs.self.user_id || cs.departed.contains(entry.user_id)) continue;
    auto [it, inserted] = cs.remotes.try_emplace(entry.user_id);
    UserPresence& user = it->second;
    user.user_id = entry.user_id;
    user.name = entry.name;
    user.color = entry.color;
    if (entry.seq && lww_accepts(user.seq, *entry.seq)) {
      user.seq = entry.seq;
      user.state = entry.state;
    }
  }
  return cs;
}

ClientState on_server_message(ClientState cs, const protocol::WireMessage& msg) {
  return std::visit(
      [&](const auto& m) -> ClientState {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, protocol::Welcome>) return on_welcome(std::move(cs), m);
        else if constexpr (std::is_same_v<T, protocol::Roster>) return on_roster(std::move(cs), m);
        else if constexpr (std::is_same_v<T, protocol::StateUpdate>)
          return on_remote_update(std::move(cs), m.user_id, m.seq, m.state);
        else if constexpr (std::is_same_v<T, protocol::UserLeft>) return on_user_left(std::move(cs), m.user_id);
        else return std::move(cs);
      },
      msg);
}

std::string_view mode_name(const PresenceMode& mode) {
  static constexpr std::string_view names[] = {"independent", "peeking", "tracking"};
  return names[mode.index()];
}

std::optional<UserId> mode_target(const PresenceMode& mode) {
  if (const auto* p = std::get_if<Peeking>(&mode)) return p->target;
  if (const auto* t = std::get_if<Tracking>(&mode)) return t->target;
  return std::nullopt;
}

protocol::OrderedJson to_json(const PresenceMode& mode) {
  protocol::OrderedJson out = protocol::OrderedJson::object();
  out["type"] = mode_name(mode);
  if (auto target = mode_target(mode)) out["target"] = *target;
  if (const auto* p = std::get_if<Peeking>(&mode); p && p->resume_tracking) {
    out["resume_tracking"] = *p->resume_tracking;
  }
  return out;
}

protocol::OrderedJson to_json(const ClientState& cs) {
  protocol::OrderedJson out = protocol::OrderedJson::object();
  out["user_id"] = cs.self.user_id;
  out["color"] = cs.self.color;
  out["mode"] = to_json(cs.mode);
  out["local"] = protocol::to_json(cs.local);
  try {
    out["effective"] = protocol::to_json(effective_view(cs));
  } catch (const Error&) {
    out["effective"] = nullptr;
  }
  protocol::OrderedJson remotes = protocol::OrderedJson::object();
  for (const auto& [id, user] : cs.remotes) {
    protocol::OrderedJson r = protocol::OrderedJson::object();
    r["name"] = user.name;
    r["color"] = user.color;
    r["seq"] = user.seq ? protocol::OrderedJson(*user.seq) : protocol::OrderedJson(nullptr);
    r["state"] = protocol::to_json(user.state);
    remotes[id] = std::move(r);
  }
  out["remotes"] = std::move(remotes);
  out["next_seq"] = cs.next_seq;
  return out;
}

}  // namespace vis_presence::presence
