#pragma once

// Client-side presence state machine.
//
// Each user explores their own view (Independent). Hovering a collaborator's
// cursor peeks at their state until the hover ends; clicking tracks them,
// mirroring every update; interacting while peeking or tracking forks, i.e.
// adopts the remote state as the starting point for local exploration.
//
// Transitions are pure: they take a ClientState by value and return the next
// one. Only on_local_interaction produces an outbound message.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>

#include "vis_presence/protocol.hpp"
#include "vis_presence/user_presence.hpp"

namespace vis_presence::presence {

using protocol::InteractionState;

struct Independent {
  friend bool operator==(const Independent&, const Independent&) = default;
};

struct Peeking {
  UserId target;
  /// Local state at the moment the peek began (unused when resuming tracking).
  InteractionState saved;
  /// Set when the peek started while tracking; end_peek resumes that track.
  std::optional<UserId> resume_tracking;
  friend bool operator==(const Peeking&, const Peeking&) = default;
};

struct Tracking {
  UserId target;
  friend bool operator==(const Tracking&, const Tracking&) = default;
};

using PresenceMode = std::variant<Independent, Peeking, Tracking>;

struct ClientState {
  std::string room;
  UserPresence self;
  std::map<UserId, UserPresence> remotes;
  /// Users announced as departed; late updates for them are ignored.
  std::set<UserId> departed;
  PresenceMode mode = Independent{};
  InteractionState local;
  std::uint64_t next_seq = 0;

  friend bool operator==(const ClientState&, const ClientState&) = default;
};

ClientState make_client(std::string room, std::string name);

/// What the client renders. Throws TargetGone if the mode refers to a user
/// that is not in `remotes`.
InteractionState effective_view(const ClientState& cs);

/// Throws UnknownTarget.
ClientState begin_peek(ClientState cs, const UserId& target);
/// Throws NotPeeking.
ClientState end_peek(ClientState cs);
/// Throws UnknownTarget.
ClientState begin_track(ClientState cs, const UserId& target);

struct LocalResult {
  ClientState state;
  protocol::StateUpdate outbound;
};

/// `new_state` is the full state after the interaction as seen on screen.
LocalResult on_local_interaction(ClientState cs, const InteractionState& new_state);

ClientState on_remote_update(ClientState cs, const UserId& user_id, std::uint64_t seq,
                             const InteractionState& state);
ClientState on_user_left(ClientState cs, const UserId& user_id);

// Handshake plumbing.
ClientState on_welcome(ClientState cs, const protocol::Welcome& welcome);
ClientState on_roster(ClientState cs, const protocol::Roster& roster);

/// Dispatches a decoded server message to the handlers above.
ClientState on_server_message(ClientState cs, const protocol::WireMessage& msg);

std::string_view mode_name(const PresenceMode& mode);
std::optional<UserId> mode_target(const PresenceMode& mode);

/// {"type": "independent" | "peeking" | "tracking", "target"?, "resume_tracking"?}
protocol::OrderedJson to_json(const PresenceMode& mode);
/// Mode, local/effective views, remotes and counters; `effective` is null
/// when the mode's target is gone.
protocol::OrderedJson to_json(const ClientState& cs);

}  // namespace vis_presence::presence
