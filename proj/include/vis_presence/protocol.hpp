#pragma once

// Wire messages exchanged between collaborating clients and the relay server.
//
// Every message is one UTF-8 JSON object per WebSocket text frame. encode()
// produces a canonical byte string: keys appear in the fixed order
// kind, room, user_id, seq, then the kind's payload fields; maps keyed by
// user-chosen names (selection names, fields, channels) are sorted; numbers
// that are integral and exactly representable are written without a
// fractional part. decode() accepts any key order.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace vis_presence::protocol {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

inline constexpr std::size_t kMaxRoomLength = 128;
inline constexpr std::size_t kMaxNameLength = 64;

/// A JSON scalar carried inside point tuples and widget bindings. Temporal
/// values travel as epoch milliseconds.
using Scalar = std::variant<std::nullptr_t, bool, double, std::string>;

struct Extent {
  double lo = 0;
  double hi = 0;
  friend bool operator==(const Extent&, const Extent&) = default;
};

using Tuple = std::map<std::string, Scalar>;

struct PointTuples {
  std::vector<Tuple> tuples;
  friend bool operator==(const PointTuples&, const PointTuples&) = default;
};

/// Brush extents keyed by encoding channel (x, y, ...).
struct IntervalExtents {
  std::map<std::string, Extent> extents;
  friend bool operator==(const IntervalExtents&, const IntervalExtents&) = default;
};

/// Values of input widgets keyed by the data field they drive.
struct WidgetBindings {
  std::map<std::string, Scalar> values;
  friend bool operator==(const WidgetBindings&, const WidgetBindings&) = default;
};

/// Visible scale domains keyed by channel (pan/zoom).
struct ScaleDomains {
  std::map<std::string, Extent> domains;
  friend bool operator==(const ScaleDomains&, const ScaleDomains&) = default;
};

/// Pointer location in view pixels.
struct MousePosition {
  double x = 0;
  double y = 0;
  friend bool operator==(const MousePosition&, const MousePosition&) = default;
};

using SelectionValue =
    std::variant<PointTuples, IntervalExtents, WidgetBindings, ScaleDomains, MousePosition>;

std::string_view type_tag(const SelectionValue& value);

struct InteractionState {
  std::map<std::string, SelectionValue> entries;
  std::uint64_t view_epoch = 0;
  friend bool operator==(const InteractionState&, const InteractionState&) = default;
};

/// Entries of `top` replace same-named entries of `base`; the epoch of `top` wins.
InteractionState overlay(const InteractionState& base, const InteractionState& top);

struct Join {
  std::string room;
  std::string name;
  friend bool operator==(const Join&, const Join&) = default;
};

struct Welcome {
  std::string room;
  std::string user_id;
  std::string color;
  friend bool operator==(const Welcome&, const Welcome&) = default;
};

struct RosterEntry {
  std::string user_id;
  std::string name;
  std::string color;
  std::optional<std::uint64_t> seq;  // null on the wire until the user publishes state
  InteractionState state;
  friend bool operator==(const RosterEntry&, const RosterEntry&) = default;
};

struct Roster {
  std::string room;
  std::vector<RosterEntry> users;  // strictly ascending by user_id
  friend bool operator==(const Roster&, const Roster&) = default;
};

struct StateUpdate {
  std::string room;
  std::string user_id;
  std::uint64_t seq = 0;
  InteractionState state;
  friend bool operator==(const StateUpdate&, const StateUpdate&) = default;
};

struct UserLeft {
  std::string room;
  std::string user_id;
  friend bool operator==(const UserLeft&, const UserLeft&) = default;
};

struct Ping {
  std::string room;
  friend bool operator==(const Ping&, const Ping&) = default;
};

struct Pong {
  std::string room;
  friend bool operator==(const Pong&, const Pong&) = default;
};

using WireMessage = std::variant<Join, Welcome, Roster, StateUpdate, UserLeft, Ping, Pong>;

std::string_view kind_name(const WireMessage& msg);
const std::string& room_of(const WireMessage& msg);

/// Throws Error{InvalidMessage} when the message violates its invariants.
std::string encode(const WireMessage& msg);

/// Throws Error{MalformedInput | UnknownKind | SchemaViolation}.
WireMessage decode(std::string_view bytes);

// JSON forms shared with the simulator's scenario and trace files.
OrderedJson to_json(const InteractionState& state);
OrderedJson to_json(const Scalar& value);
/// `require_epoch=false` lets scenario scripts omit view_epoch (treated as 0).
InteractionState state_from_json(const Json& j, bool require_epoch = true);

bool is_valid_color(std::string_view color);
/// Number of Unicode code points; std::nullopt when not valid UTF-8.
std::optional<std::size_t> utf8_length(std::string_view text);

}  // namespace vis_presence::protocol
