#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

#include "vis_presence/protocol.hpp"

namespace vis_presence {

using UserId = std::string;

/// Monotonic time in milliseconds. The server feeds steady_clock readings,
/// the simulator feeds ticks.
using Millis = std::chrono::milliseconds;

struct UserPresence {
  UserId user_id;
  std::string name;
  std::string color;
  /// Seq of the most recently applied StateUpdate; empty until the first one.
  std::optional<std::uint64_t> seq;
  protocol::InteractionState state;
  Millis last_seen{0};

  friend bool operator==(const UserPresence&, const UserPresence&) = default;
};

/// Per-user last-write-wins: an update is accepted iff its seq is strictly
/// greater than anything applied before for that user.
constexpr bool lww_accepts(const std::optional<std::uint64_t>& stored, std::uint64_t incoming) {
  return !stored || incoming > *stored;
}

inline protocol::RosterEntry to_roster_entry(const UserPresence& p) {
  return {p.user_id, p.name, p.color, p.seq, p.state};
}

}  // namespace vis_presence
