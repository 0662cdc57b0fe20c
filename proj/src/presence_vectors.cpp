#include "vis_presence/presence_vectors.hpp"

#include <random>
#include <vector>

#include "vis_presence/error.hpp"
#include "vis_presence/presence.hpp"

namespace vis_presence::presence {

namespace {

using protocol::OrderedJson;

constexpr const char* kRoom = "r";
constexpr const char* kName = "me";

struct Op {
  std::string op;
  std::string target;
  protocol::WireMessage msg;
  InteractionState state;
};

OrderedJson state_json(const ClientState& cs) {
  OrderedJson j = to_json(cs);
  j["departed"] = OrderedJson::array();
  for (const auto& id : cs.departed) j["departed"].push_back(id);
  return j;
}

OrderedJson op_json(const Op& op) {
  OrderedJson j = OrderedJson::object();
  j["op"] = op.op;
  if (op.op == "server") j["frame"] = protocol::encode(op.msg);
  if (op.op == "begin_peek" || op.op == "begin_track") j["target"] = op.target;
  if (op.op == "local") j["state"] = protocol::to_json(op.state);
  return j;
}

Op op_from_json(const OrderedJson& j) {
  Op op;
  op.op = j.at("op").get<std::string>();
  if (op.op == "server") op.msg = protocol::decode(j.at("frame").get<std::string>());
  if (j.contains("target")) op.target = j.at("target").get<std::string>();
  if (op.op == "local") op.state = protocol::state_from_json(protocol::Json::parse(j.at("state").dump()));
  return op;
}

ClientState apply(ClientState cs, const Op& op, OrderedJson& expect) {
  expect = OrderedJson::object();
  try {
    if (op.op == "server") {
      cs = on_server_message(std::move(cs), op.msg);
    } else if (op.op == "begin_peek") {
      cs = begin_peek(cs, op.target);
    } else if (op.op == "end_peek") {
      cs = end_peek(cs);
    } else if (op.op == "begin_track") {
      cs = begin_track(cs, op.target);
    } else if (op.op == "local") {
      auto result = on_local_interaction(std::move(cs), op.state);
      cs = std::move(result.state);
      expect["state"] = state_json(cs);
      expect["emitted"] = protocol::encode(result.outbound);
      return cs;
    } else {
      throw Error(ErrorCode::InvalidMessage, "unknown op " + op.op);
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UnknownTarget && e.code() != ErrorCode::NotPeeking) throw;
    expect["error"] = to_string(e.code());
  }
  expect["state"] = state_json(cs);
  return cs;
}

OrderedJson make_vector(const std::string& name, const std::vector<Op>& ops) {
  OrderedJson v = OrderedJson::object();
  v["name"] = name;
  v["room"] = kRoom;
  v["client_name"] = kName;
  v["steps"] = OrderedJson::array();
  ClientState cs = make_client(kRoom, kName);
  for (const auto& op : ops) {
    OrderedJson step = op_json(op);
    OrderedJson expect;
    cs = apply(std::move(cs), op, expect);
    step["expect"] = std::move(expect);
    v["steps"].push_back(std::move(step));
  }
  return v;
}

// --- builders ----------------------------------------------------------------

const char* color_of(const std::string& uid) {
  static const char* colors[] = {"#4c78a8", "#f58518", "#e45756", "#72b7b2", "#54a24b"};
  return colors[(uid.back() - '1') % 5];
}

InteractionState pool_state(int i) {
  InteractionState s;
  const double v = i;
  switch (i % 4) {
    case 0:
      s.entries["brush"] = protocol::IntervalExtents{{{"x", {v, v + 2}}}};
      break;
    case 1:
      s.entries["pick"] = protocol::PointTuples{{{{"id", v}, {"origin", std::string("USA")}}}};
      break;
    case 2:
      s.entries["brush"] = protocol::IntervalExtents{{{"x", {-v, v}}, {"y", {0, v / 2}}}};
      s.entries["zoom"] = protocol::ScaleDomains{{{"x", {0, 10 + v}}}};
      break;
    default:
      s.entries["query"] = protocol::WidgetBindings{{{"Cylinders", v}, {"Year", nullptr}}};
      s.view_epoch = static_cast<std::uint64_t>(i);
      break;
  }
  return s;
}

Op server(protocol::WireMessage msg) { return Op{"server", "", std::move(msg), {}}; }
Op welcome() { return server(protocol::Welcome{kRoom, "u1", color_of("u1")}); }
Op update(const std::string& uid, std::uint64_t seq, int state) {
  return server(protocol::StateUpdate{kRoom, uid, seq, pool_state(state)});
}
Op left(const std::string& uid) { return server(protocol::UserLeft{kRoom, uid}); }
Op peek(const std::string& uid) { return Op{"begin_peek", uid, {}, {}}; }
Op track(const std::string& uid) { return Op{"begin_track", uid, {}, {}}; }
Op end() { return Op{"end_peek", "", {}, {}}; }
Op local(int state) { return Op{"local", "", {}, pool_state(state)}; }

Op roster(const std::vector<std::pair<std::string, std::optional<int>>>& users) {
  protocol::Roster r{kRoom, {}};
  for (const auto& [uid, state] : users) {
    protocol::RosterEntry e{uid, "user-" + uid, color_of(uid), std::nullopt, {}};
    if (state) {
      e.seq = static_cast<std::uint64_t>(*state);
      e.state = pool_state(*state);
    }
    r.users.push_back(std::move(e));
  }
  return server(std::move(r));
}

std::vector<Op> handshake() {
  return {welcome(), roster({{"u1", std::nullopt}, {"u2", 2}, {"u3", 3}})};
}

std::vector<Op> with_handshake(std::vector<Op> ops) {
  std::vector<Op> all = handshake();
  all.insert(all.end(), ops.begin(), ops.end());
  return all;
}

std::vector<Op> random_walk(std::mt19937_64& rng) {
  const std::vector<std::string> users = {"u1", "u2", "u3", "u4"};
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  std::vector<Op> ops = handshake();
  std::uint64_t seqs[4] = {0, 2, 3, 0};
  for (int i = 0; i < 14; ++i) {
    const std::size_t u = pick(users.size());
    switch (pick(8)) {
      case 0:
      case 1: {
        // Mostly fresh sequence numbers, sometimes a replay of an old one.
        const std::uint64_t seq = pick(4) == 0 ? static_cast<std::uint64_t>(pick(4)) : ++seqs[u];
        ops.push_back(update(users[u], seq, static_cast<int>(pick(12))));
        break;
      }
      case 2: ops.push_back(peek(users[u])); break;
      case 3: ops.push_back(end()); break;
      case 4: ops.push_back(track(users[u])); break;
      case 5: ops.push_back(local(static_cast<int>(pick(12)))); break;
      case 6: ops.push_back(left(users[1 + pick(3)])); break;
      default: ops.push_back(roster({{"u4", pick(2) ? std::optional<int>(5) : std::nullopt}})); break;
    }
  }
  return ops;
}

}  // namespace

OrderedJson transition_vectors(std::uint64_t seed, int random_walks) {
  OrderedJson out = OrderedJson::object();
  out["format"] = kVectorFormat;
  OrderedJson& vectors = out["vectors"] = OrderedJson::array();

  vectors.push_back(make_vector("peek_then_restore", with_handshake({local(1), peek("u2"), end()})));
  vectors.push_back(make_vector("peek_retarget", with_handshake({local(1), peek("u2"), peek("u3"), end()})));
  vectors.push_back(make_vector("peek_while_tracking_resumes", with_handshake({track("u2"), peek("u3"), end()})));
  vectors.push_back(make_vector("track_mirrors_updates",
                                with_handshake({track("u2"), update("u2", 3, 4), update("u2", 4, 5)})));
  vectors.push_back(make_vector("fork_from_tracking", with_handshake({track("u2"), local(6)})));
  vectors.push_back(make_vector("fork_from_peek", with_handshake({peek("u3"), local(7)})));
  vectors.push_back(make_vector("fork_then_target_updates",
                                with_handshake({track("u2"), local(6), update("u2", 3, 8), update("u2", 4, 9)})));
  vectors.push_back(make_vector("stale_update_ignored", with_handshake({update("u2", 5, 4), update("u2", 3, 5)})));
  vectors.push_back(make_vector("peeked_user_leaves", with_handshake({local(1), peek("u2"), left("u2")})));
  vectors.push_back(make_vector("tracked_user_leaves", with_handshake({track("u2"), left("u2")})));
  vectors.push_back(
      make_vector("resume_target_leaves", with_handshake({track("u2"), peek("u3"), left("u2"), end()})));
  vectors.push_back(make_vector("departed_update_ignored", with_handshake({left("u3"), update("u3", 9, 1)})));
  vectors.push_back(make_vector("unknown_sender_inserted", with_handshake({update("u5", 0, 2), peek("u5")})));
  vectors.push_back(make_vector("invalid_transitions",
                                with_handshake({end(), peek("u1"), track("u9"), track("u1"), peek("u9")})));
  vectors.push_back(make_vector("late_joiner", with_handshake({roster({{"u4", std::nullopt}}), track("u4"),
                                                               update("u4", 0, 3), local(2)})));

  std::mt19937_64 rng(seed);
  for (int i = 0; i < random_walks; ++i) {
    vectors.push_back(make_vector("walk_" + std::to_string(i), random_walk(rng)));
  }
  return out;
}

std::optional<std::string> replay_vector(const OrderedJson& vector) {
  const std::string name = vector.value("name", "?");
  ClientState cs = make_client(vector.at("room").get<std::string>(), vector.at("client_name").get<std::string>());
  std::size_t index = 0;
  for (const auto& step : vector.at("steps")) {
    OrderedJson actual;
    cs = apply(std::move(cs), op_from_json(step), actual);
    if (actual != step.at("expect")) {
      return name + " step " + std::to_string(index) + " (" + step.at("op").get<std::string>() +
             "): expected " + step.at("expect").dump() + ", got " + actual.dump();
    }
    ++index;
  }
  return std::nullopt;
}

}  // namespace vis_presence::presence
