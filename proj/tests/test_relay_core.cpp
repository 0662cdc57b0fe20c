#include <gtest/gtest.h>

#include "generators.hpp"
#include "vis_presence/relay_core.hpp"

namespace {

using namespace vis_presence;
using namespace vis_presence::relay;
using namespace vis_presence::protocol;

const Millis t0{0};

std::vector<std::string> frames_to(const Effects& effects, ConnectionId conn) {
  std::vector<std::string> out;
  for (const auto& e : effects) {
    if (const auto* f = std::get_if<SendFrame>(&e); f && f->to == conn) out.push_back(f->frame);
  }
  return out;
}

std::vector<CloseConnection> closes(const Effects& effects) {
  std::vector<CloseConnection> out;
  for (const auto& e : effects) {
    if (const auto* c = std::get_if<CloseConnection>(&e)) out.push_back(*c);
  }
  return out;
}

InteractionState point_state() {
  InteractionState s;
  s.entries["pick"] = PointTuples{{{{"Name", std::string("datsun pl510")}}}};
  return s;
}

class RelayCoreTest : public ::testing::Test {
 protected:
  Effects join(ConnectionId conn, const std::string& room, const std::string& name) {
    core.on_open(conn, room, t0);
    return core.on_frame(conn, encode(Join{room, name}), t0);
  }

  RelayCore core;
};

TEST_F(RelayCoreTest, JoinIsAnsweredByWelcomeThenRoster) {
  const Effects out = join(1, "r", "Ana");
  const auto frames = frames_to(out, 1);
  ASSERT_EQ(frames.size(), 2u);
  EXPECT_EQ(frames[0], R"({"kind":"welcome","room":"r","user_id":"u1","color":"#4c78a8"})");
  EXPECT_EQ(frames[1], R"({"kind":"roster","room":"r","users":[]})");
  EXPECT_EQ(out.size(), 2u);
  EXPECT_EQ(core.user_of(1), std::optional<UserId>("u1"));
}

TEST_F(RelayCoreTest, ExistingMembersReceiveRosterWithNewcomer) {
  join(1, "r", "Ana");
  const Effects out = join(2, "r", "Bo");
  const auto to_new = frames_to(out, 2);
  ASSERT_EQ(to_new.size(), 2u);
  EXPECT_EQ(std::get<Roster>(decode(to_new[1])).users.at(0).user_id, "u1");
  const auto to_old = frames_to(out, 1);
  ASSERT_EQ(to_old.size(), 1u);
  const auto roster = std::get<Roster>(decode(to_old[0]));
  ASSERT_EQ(roster.users.size(), 1u);
  EXPECT_EQ(roster.users[0].user_id, "u2");
  EXPECT_EQ(roster.users[0].name, "Bo");
  EXPECT_EQ(roster.users[0].color, "#f58518");
}

TEST_F(RelayCoreTest, StateUpdateIsRelayedByteIdenticalWithoutEcho) {
  join(1, "r", "Ana");
  join(2, "r", "Bo");
  // Valid but not canonical key order: the relay must not re-serialize.
  const std::string sent =
      R"({"seq":0,"kind":"state_update","user_id":"u1","room":"r","state":{"entries":{"pick":{"value":[{"Name":"datsun pl510"}],"type":"point"}},"view_epoch":0}})";
  const Effects out = core.on_frame(1, sent, t0);
  EXPECT_EQ(frames_to(out, 2), std::vector<std::string>{sent});
  EXPECT_TRUE(frames_to(out, 1).empty());
  EXPECT_EQ(out.size(), 1u);
  EXPECT_EQ(core.sessions().roster("r")[0].state, point_state());
}

TEST_F(RelayCoreTest, StaleUpdateIsNotRelayed) {
  join(1, "r", "Ana");
  join(2, "r", "Bo");
  core.on_frame(1, encode(StateUpdate{"r", "u1", 5, point_state()}), t0);
  EXPECT_TRUE(core.on_frame(1, encode(StateUpdate{"r", "u1", 5, {}}), t0).empty());
  EXPECT_TRUE(core.on_frame(1, encode(StateUpdate{"r", "u1", 2, {}}), t0).empty());
}

TEST_F(RelayCoreTest, PerSenderOrderIsPreserved) {
  join(1, "r", "Ana");
  join(2, "r", "Bo");
  std::vector<std::string> sent;
  std::vector<std::string> received;
  for (std::uint64_t seq = 0; seq < 10; ++seq) {
    sent.push_back(encode(StateUpdate{"r", "u1", seq, {}}));
    for (auto& f : frames_to(core.on_frame(1, sent.back(), t0), 2)) received.push_back(f);
  }
  EXPECT_EQ(received, sent);
}

TEST_F(RelayCoreTest, FirstFrameMustBeJoin) {
  core.on_open(1, "r", t0);
  const Effects out = core.on_frame(1, encode(StateUpdate{"r", "u1", 0, {}}), t0);
  const auto c = closes(out);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].conn, 1u);
  EXPECT_EQ(c[0].code, CloseCode::PolicyViolation);
  EXPECT_EQ(core.connection_count(), 0u);
  EXPECT_TRUE(core.on_frame(1, encode(Join{"r", "late"}), t0).empty());
}

TEST_F(RelayCoreTest, JoinMustMatchPathRoom) {
  core.on_open(1, "r", t0);
  const auto c = closes(core.on_frame(1, encode(Join{"elsewhere", "Ana"}), t0));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].code, CloseCode::PolicyViolation);
  EXPECT_TRUE(core.sessions().room_ids().empty());
}

TEST_F(RelayCoreTest, InvalidNameClosesWithPolicyViolation) {
  core.on_open(1, "r", t0);
  const auto c = closes(core.on_frame(1, encode(Join{"r", "   "}), t0));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].code, CloseCode::PolicyViolation);
}

TEST(RelayCore, RoomFullClosesWithTryAgainLater) {
  RelayCore core(session::SessionConfig{1, session::default_palette()});
  core.on_open(1, "r", t0);
  core.on_frame(1, encode(Join{"r", "a"}), t0);
  core.on_open(2, "r", t0);
  const Effects out = core.on_frame(2, encode(Join{"r", "b"}), t0);
  const auto c = closes(out);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].conn, 2u);
  EXPECT_EQ(c[0].code, CloseCode::TryAgainLater);
  EXPECT_TRUE(frames_to(out, 1).empty());
}

TEST_F(RelayCoreTest, MalformedFrameDisconnectsOnlyTheSender) {
  join(1, "r", "Ana");
  join(2, "r", "Bo");
  const Effects out = core.on_frame(1, "{not json", t0);
  const auto c = closes(out);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].conn, 1u);
  EXPECT_EQ(c[0].code, CloseCode::InvalidPayload);
  EXPECT_EQ(frames_to(out, 2), std::vector<std::string>{R"({"kind":"user_left","room":"r","user_id":"u1"})"});
  EXPECT_EQ(core.connection_count(), 1u);
  EXPECT_EQ(frames_to(core.on_frame(2, encode(Ping{"r"}), t0), 2).size(), 1u);
}

TEST_F(RelayCoreTest, SchemaViolationAndUnknownKindArePolicyViolations) {
  join(1, "r", "Ana");
  EXPECT_EQ(closes(core.on_frame(1, R"({"kind":"ping","room":"r","x":1})", t0)).at(0).code,
            CloseCode::PolicyViolation);
  join(2, "r", "Bo");
  EXPECT_EQ(closes(core.on_frame(2, R"({"kind":"teleport","room":"r"})", t0)).at(0).code,
            CloseCode::PolicyViolation);
}

TEST_F(RelayCoreTest, BinaryFrameIsUnsupportedData) {
  join(1, "r", "Ana");
  join(2, "r", "Bo");
  const Effects out = core.on_binary(2, t0);
  EXPECT_EQ(closes(out).at(0).code, CloseCode::UnsupportedData);
  EXPECT_EQ(frames_to(out, 1).size(), 1u);
}

TEST_F(RelayCoreTest, ImpersonationAndCrossRoomFramesAreRejected) {
  join(1, "r", "Ana");
  join(2, "r", "Bo");
  Effects out = core.on_frame(1, encode(StateUpdate{"r", "u2", 0, {}}), t0);
  EXPECT_EQ(closes(out).at(0).code, CloseCode::PolicyViolation);
  EXPECT_EQ(core.sessions().roster("r").size(), 1u);
  EXPECT_TRUE(core.sessions().roster("r")[0].state.entries.empty());
  out = core.on_frame(2, encode(Ping{"other"}), t0);
  EXPECT_EQ(closes(out).at(0).code, CloseCode::PolicyViolation);
}

TEST_F(RelayCoreTest, ServerKindsFromClientsAreRejected) {
  join(1, "r", "Ana");
  EXPECT_EQ(closes(core.on_frame(1, encode(Join{"r", "again"}), t0)).at(0).code, CloseCode::PolicyViolation);
  join(2, "r", "Bo");
  EXPECT_EQ(closes(core.on_frame(2, encode(Welcome{"r", "u9", "#000000"}), t0)).at(0).code,
            CloseCode::PolicyViolation);
}

TEST_F(RelayCoreTest, PingIsAnsweredWithPong) {
  join(1, "r", "Ana");
  const Effects out = core.on_frame(1, encode(Ping{"r"}), t0);
  EXPECT_EQ(frames_to(out, 1), std::vector<std::string>{R"({"kind":"pong","room":"r"})"});
  EXPECT_TRUE(core.on_frame(1, encode(Pong{"r"}), t0).empty());
}

TEST_F(RelayCoreTest, DisconnectBroadcastsUserLeftOnce) {
  join(1, "r", "Ana");
  join(2, "r", "Bo");
  join(3, "r", "Cy");
  const Effects out = core.on_close(2, t0);
  const std::string left = R"({"kind":"user_left","room":"r","user_id":"u2"})";
  EXPECT_EQ(frames_to(out, 1), std::vector<std::string>{left});
  EXPECT_EQ(frames_to(out, 3), std::vector<std::string>{left});
  EXPECT_TRUE(closes(out).empty());
  EXPECT_TRUE(core.on_close(2, t0).empty());
  EXPECT_TRUE(core.on_frame(2, encode(Ping{"r"}), t0).empty());
}

TEST_F(RelayCoreTest, UnjoinedDisconnectIsSilent) {
  join(1, "r", "Ana");
  core.on_open(2, "r", t0);
  EXPECT_TRUE(core.on_close(2, t0).empty());
}

TEST_F(RelayCoreTest, IdleExpiryClosesWithGoingAway) {
  core.on_open(1, "r", Millis{0});
  core.on_frame(1, encode(Join{"r", "Ana"}), Millis{0});
  core.on_open(2, "r", Millis{0});
  core.on_frame(2, encode(Join{"r", "Bo"}), Millis{0});
  core.on_frame(2, encode(Pong{"r"}), Millis{20000});
  const Effects out = core.expire_idle(Millis{30001}, Millis{30000});
  const auto c = closes(out);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].conn, 1u);
  EXPECT_EQ(c[0].code, CloseCode::GoingAway);
  EXPECT_EQ(frames_to(out, 2).size(), 1u);
}

TEST_F(RelayCoreTest, PingAllAndCloseAll) {
  join(1, "r", "Ana");
  join(2, "s", "Bo");
  core.on_open(3, "r", t0);  // not joined yet
  const Effects pings = core.ping_all();
  EXPECT_EQ(frames_to(pings, 1), std::vector<std::string>{R"({"kind":"ping","room":"r"})"});
  EXPECT_EQ(frames_to(pings, 2), std::vector<std::string>{R"({"kind":"ping","room":"s"})"});
  EXPECT_TRUE(frames_to(pings, 3).empty());

  const Effects out = core.close_all(CloseCode::GoingAway, "shutdown");
  EXPECT_EQ(closes(out).size(), 3u);
  for (const auto& c : closes(out)) EXPECT_EQ(c.code, CloseCode::GoingAway);
  EXPECT_EQ(core.connection_count(), 0u);
  EXPECT_TRUE(core.sessions().room_ids().empty());
}

TEST(RelayCoreProperty, MessagesNeverCrossRooms) {
  testing_support::Generator gen(31);
  for (int trial = 0; trial < 100; ++trial) {
    RelayCore core;
    const std::string rooms[] = {"alpha", "beta"};
    std::map<ConnectionId, std::string> room_of_conn;
    std::map<ConnectionId, std::uint64_t> seq;
    ConnectionId next = 1;
    auto check = [&](const Effects& effects) {
      for (const auto& e : effects) {
        if (const auto* f = std::get_if<SendFrame>(&e)) {
          ASSERT_EQ(protocol::room_of(decode(f->frame)), room_of_conn.at(f->to));
        }
      }
    };
    for (int step = 0; step < 60; ++step) {
      const auto action = gen.below(6);
      if (room_of_conn.size() < 4 && (room_of_conn.empty() || action == 0)) {
        const ConnectionId conn = next++;
        const std::string& room = rooms[conn % 2];
        room_of_conn[conn] = room;
        core.on_open(conn, room, t0);
        check(core.on_frame(conn, encode(Join{room, "n"}), t0));
        continue;
      }
      auto it = std::next(room_of_conn.begin(), static_cast<std::ptrdiff_t>(gen.below(room_of_conn.size())));
      const ConnectionId conn = it->first;
      const auto user = core.user_of(conn);
      ASSERT_TRUE(user.has_value());
      Effects out;
      if (action == 1) {
        out = core.on_close(conn, t0);
        room_of_conn.erase(conn);
      } else if (action == 2) {
        out = core.on_frame(conn, encode(Ping{it->second}), t0);
      } else {
        out = core.on_frame(conn, encode(StateUpdate{it->second, *user, seq[conn]++, gen.state()}), t0);
      }
      check(out);
      if (HasFatalFailure()) return;
    }
  }
}

}  // namespace
