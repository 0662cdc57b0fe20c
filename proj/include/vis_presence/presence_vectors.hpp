#pragma once

// Transition-table test vectors for ports of the presence state machine.
//
// Each vector starts from a fresh client and lists steps; every step carries
// the expected outcome (full client state, emitted frame or error code):
//
//   {"name": "...", "room": "r", "client_name": "n",
//    "steps": [{"op": "server", "frame": "<wire bytes>", "expect": {...}},
//              {"op": "begin_peek", "target": "u2", "expect": {...}},
//              {"op": "end_peek", "expect": {...}},
//              {"op": "begin_track", "target": "u2", "expect": {...}},
//              {"op": "local", "state": {...}, "expect": {..., "emitted": "<wire bytes>"}}]}
//
// A failing step has "expect": {"error": "UnknownTarget" | "NotPeeking", "state": {...}}
// and leaves the state unchanged.

#include <cstdint>
#include <optional>
#include <string>

#include "vis_presence/protocol.hpp"

namespace vis_presence::presence {

inline constexpr const char* kVectorFormat = "vis-presence-transition-vectors/1";

/// Hand-picked scenarios followed by `random_walks` seeded walks.
protocol::OrderedJson transition_vectors(std::uint64_t seed = 7, int random_walks = 48);

/// Replays one vector against this implementation; the first mismatch is
/// described in the result, std::nullopt means every step matched.
std::optional<std::string> replay_vector(const protocol::OrderedJson& vector);

}  // namespace vis_presence::presence
