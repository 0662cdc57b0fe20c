#pragma once

// Deterministic multi-client simulator.
//
// Virtual clients run the real presence state machine and speak the real wire
// protocol to a RelayCore over an in-memory network. Time is discrete: one
// tick is one millisecond of latency. All randomness comes from one seeded
// mt19937_64, so a (scenario, seed) pair always yields the same trace bytes.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vis_presence/protocol.hpp"

namespace vis_presence::sim {

using protocol::InteractionState;
using protocol::Json;
using protocol::OrderedJson;

/// Per-directed-link probabilities overriding the network defaults. Client
/// names address clients; "server" addresses the relay.
struct LinkOverride {
  std::string from;
  std::string to;
  std::optional<double> drop_prob;
  std::optional<double> reorder_prob;
};

struct NetworkConfig {
  std::int64_t latency_lo = 1;
  std::int64_t latency_hi = 1;
  /// Chance that a StateUpdate may overtake earlier traffic on its link.
  double reorder_prob = 0;
  /// Chance that a StateUpdate is lost. Control traffic is never dropped.
  double drop_prob = 0;
  std::vector<LinkOverride> links;
};

struct Interact {
  /// Selection entries that replace same-named entries of the current view.
  InteractionState delta;
  bool sets_epoch = false;
};
struct Peek {
  std::string target;
};
struct EndPeek {};
struct Track {
  std::string target;
};
struct Leave {};

using Action = std::variant<Interact, Peek, EndPeek, Track, Leave>;

struct ScriptStep {
  std::int64_t at_tick = 0;
  Action action;
};

struct ClientSpec {
  std::string name;
  std::int64_t join_tick = 0;
  std::vector<ScriptStep> script;
};

struct Scenario {
  std::uint64_t seed = 0;
  std::string room = "sim";
  NetworkConfig network;
  std::vector<ClientSpec> clients;
  std::int64_t duration_ticks = 1;

  /// Throws InvalidScenario.
  static Scenario from_json(const Json& j);
  static Scenario parse(std::string_view text);
  /// Throws InvalidScenario.
  void validate() const;
};

inline constexpr std::string_view kServerName = "server";

/// JSON-lines event log: send, deliver, drop, discard, action, snapshot,
/// tick_end and a final end event.
struct Trace {
  std::vector<OrderedJson> events;

  std::string to_jsonl() const;
  /// Throws InvalidScenario on malformed lines.
  static Trace from_jsonl(std::string_view text);
};

/// Ticks 0..duration_ticks-1 run deliveries then script actions; afterwards
/// deliveries continue until no message is in flight. Throws InvalidScenario.
Trace run(const Scenario& scenario);

struct PropertyResult {
  std::string name;
  bool passed = true;
  std::optional<std::int64_t> first_violation_tick;
  std::string detail;
};

struct Report {
  std::vector<PropertyResult> results;
  bool all_passed() const;
  OrderedJson to_json() const;
};

/// convergence, peek-roundtrip, track-mirror, fork-isolation, color-uniqueness.
const std::vector<std::string>& property_names();

/// "all" expands to every property. Throws UnknownProperty.
Report check(const Trace& trace, const std::vector<std::string>& properties);

}  // namespace vis_presence::sim
