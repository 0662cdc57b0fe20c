#include "vis_presence/sim.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "vis_presence/error.hpp"
#include "vis_presence/presence.hpp"
#include "vis_presence/relay_core.hpp"
#include "vis_presence/session.hpp"

namespace vis_presence::sim {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidScenario, what); }

std::int64_t int_field(const Json& j, const char* key, std::int64_t fallback, bool required = false) {
  auto it = j.find(key);
  if (it == j.end()) {
    if (required) invalid(std::string("missing ") + key);
    return fallback;
  }
  if (!it->is_number_integer()) invalid(std::string(key) + " must be an integer");
  return it->get<std::int64_t>();
}

double prob_field(const Json& j, const char* key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) invalid(std::string(key) + " must be a number");
  return it->get<double>();
}

std::string string_field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) invalid(std::string(key) + " must be a string");
  return it->get<std::string>();
}

bool valid_prob(double p) { return p >= 0 && p <= 1; }

Action parse_action(const Json& step) {
  const std::string name = string_field(step, "action");
  if (name == "interact") {
    auto it = step.find("delta");
    if (it == step.end()) invalid("interact requires delta");
    Interact act;
    try {
      act.delta = protocol::state_from_json(*it, false);
    } catch (const Error& e) {
      invalid(std::string("bad delta: ") + e.what());
    }
    act.sets_epoch = it->is_object() && it->contains("view_epoch");
    return act;
  }
  if (name == "peek") return Peek{string_field(step, "target")};
  if (name == "end_peek") return EndPeek{};
  if (name == "track") return Track{string_field(step, "target")};
  if (name == "leave") return Leave{};
  invalid("unknown action " + name);
}

std::string_view action_name(const Action& a) {
  static constexpr std::string_view names[] = {"interact", "peek", "end_peek", "track", "leave"};
  return names[a.index()];
}

}  // namespace

Scenario Scenario::from_json(const Json& j) {
  if (!j.is_object()) invalid("scenario must be an object");
  Scenario s;
  s.seed = static_cast<std::uint64_t>(int_field(j, "seed", 0));
  if (auto it = j.find("room"); it != j.end()) s.room = string_field(j, "room");
  s.duration_ticks = int_field(j, "duration_ticks", 0, true);

  if (auto it = j.find("network"); it != j.end()) {
    const Json& n = *it;
    if (!n.is_object()) invalid("network must be an object");
    if (auto lat = n.find("latency_ms"); lat != n.end()) {
      if (!lat->is_array() || lat->size() != 2 || !(*lat)[0].is_number_integer() ||
          !(*lat)[1].is_number_integer()) {
        invalid("latency_ms must be [lo, hi] integers");
      }
      s.network.latency_lo = (*lat)[0].get<std::int64_t>();
      s.network.latency_hi = (*lat)[1].get<std::int64_t>();
    }
    s.network.reorder_prob = prob_field(n, "reorder_prob", 0);
    s.network.drop_prob = prob_field(n, "drop_prob", 0);
    if (auto links = n.find("links"); links != n.end()) {
      if (!links->is_array()) invalid("links must be an array");
      for (const auto& l : *links) {
        if (!l.is_object()) invalid("link must be an object");
        LinkOverride o{string_field(l, "from"), string_field(l, "to"), std::nullopt, std::nullopt};
        if (l.contains("drop_prob")) o.drop_prob = prob_field(l, "drop_prob", 0);
        if (l.contains("reorder_prob")) o.reorder_prob = prob_field(l, "reorder_prob", 0);
        s.network.links.push_back(std::move(o));
      }
    }
  }

  auto clients = j.find("clients");
  if (clients == j.end() || !clients->is_array()) invalid("clients must be an array");
  for (const auto& c : *clients) {
    if (!c.is_object()) invalid("client must be an object");
    ClientSpec spec;
    spec.name = string_field(c, "name");
    spec.join_tick = int_field(c, "join_tick", 0);
    if (auto script = c.find("script"); script != c.end()) {
      if (!script->is_array()) invalid("script must be an array");
      for (const auto& step : *script) {
        if (!step.is_object()) invalid("script step must be an object");
        spec.script.push_back({int_field(step, "at_tick", 0, true), parse_action(step)});
      }
    }
    s.clients.push_back(std::move(spec));
  }
  s.validate();
  return s;
}

Scenario Scenario::parse(std::string_view text) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) invalid("scenario is not valid JSON");
  return from_json(j);
}

void Scenario::validate() const {
  if (duration_ticks <= 0) invalid("duration_ticks must be positive");
  if (network.latency_lo < 0 || network.latency_lo > network.latency_hi) {
    invalid("latency_ms must satisfy 0 <= lo <= hi");
  }
  if (!valid_prob(network.reorder_prob) || !valid_prob(network.drop_prob)) {
    invalid("probabilities must lie in [0, 1]");
  }
  if (clients.empty()) invalid("at least one client is required");
  std::set<std::string> names;
  for (const auto& c : clients) {
    if (c.name.empty() || c.name == kServerName) invalid("invalid client name '" + c.name + "'");
    if (!names.insert(c.name).second) invalid("duplicate client name " + c.name);
  }
  for (const auto& l : network.links) {
    for (const auto& end : {l.from, l.to}) {
      if (end != kServerName && !names.contains(end)) invalid("link references unknown client " + end);
    }
    if ((l.drop_prob && !valid_prob(*l.drop_prob)) || (l.reorder_prob && !valid_prob(*l.reorder_prob))) {
      invalid("probabilities must lie in [0, 1]");
    }
  }
  for (const auto& c : clients) {
    if (c.join_tick < 0 || c.join_tick >= duration_ticks) invalid(c.name + ": join_tick out of range");
    std::int64_t prev = c.join_tick;
    for (const auto& step : c.script) {
      if (step.at_tick < prev) invalid(c.name + ": script ticks must be non-decreasing and not precede join");
      if (step.at_tick >= duration_ticks) invalid(c.name + ": step beyond duration_ticks");
      prev = step.at_tick;
      const std::string* target = nullptr;
      if (const auto* p = std::get_if<Peek>(&step.action)) target = &p->target;
      if (const auto* t = std::get_if<Track>(&step.action)) target = &t->target;
      if (target && !names.contains(*target)) invalid(c.name + ": unknown target " + *target);
    }
  }
}

std::string Trace::to_jsonl() const {
  std::string out;
  for (const auto& e : events) {
    out += e.dump();
    out += '\n';
  }
  return out;
}

Trace Trace::from_jsonl(std::string_view text) {
  Trace t;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    OrderedJson e = OrderedJson::parse(line, nullptr, false);
    if (e.is_discarded() || !e.is_object()) invalid("malformed trace line");
    t.events.push_back(std::move(e));
  }
  return t;
}

// --- simulation -------------------------------------------------------------

namespace {

constexpr int kServer = 0;

enum class Status { Pending, Connecting, Joined, Left, Closed };

std::string_view status_name(Status s) {
  static constexpr std::string_view names[] = {"pending", "connecting", "joined", "left", "closed"};
  return names[static_cast<int>(s)];
}

struct Message {
  std::uint64_t id = 0;
  std::int64_t send_tick = 0;
  int from = 0;
  int to = 0;
  std::string kind;
  std::string frame;  // empty for close control messages
  std::optional<std::uint16_t> close_code;
};

struct VirtualClient {
  const ClientSpec* spec = nullptr;
  presence::ClientState cs;
  Status status = Status::Pending;
  std::optional<std::uint64_t> last_emitted_seq;
  std::size_t next_step = 0;
  std::string last_snapshot;
};

OrderedJson view_json(const presence::ClientState& cs) {
  OrderedJson v = OrderedJson::object();
  v["mode"] = presence::to_json(cs.mode);
  v["local"] = protocol::to_json(cs.local);
  try {
    v["effective"] = protocol::to_json(presence::effective_view(cs));
  } catch (const Error&) {
    v["effective"] = nullptr;
  }
  return v;
}

class Simulator {
 public:
  explicit Simulator(const Scenario& s) : scenario_(s), rng_(s.seed) {
    names_.push_back(std::string(kServerName));
    for (const auto& spec : s.clients) {
      names_.push_back(spec.name);
      VirtualClient c;
      c.spec = &spec;
      c.cs = presence::make_client(s.room, spec.name);
      clients_.push_back(std::move(c));
    }
  }

  Trace run() {
    for (std::int64_t t = 0; t < scenario_.duration_ticks; ++t) step(t, true);
    while (!queue_.empty()) step(std::get<0>(queue_.begin()->first), false);
    OrderedJson end = event(last_tick_, "end");
    end["messages"] = next_msg_id_;
    end["in_flight"] = 0;
    trace_.events.push_back(std::move(end));
    return std::move(trace_);
  }

 private:
  using Key = std::tuple<std::int64_t, std::int64_t, int, std::uint64_t>;

  OrderedJson event(std::int64_t tick, std::string_view kind) {
    OrderedJson e = OrderedJson::object();
    e["tick"] = tick;
    e["event"] = kind;
    return e;
  }

  void emit(OrderedJson e) {
    trace_.events.push_back(std::move(e));
    tick_active_ = true;
  }

  void step(std::int64_t t, bool run_actions) {
    tick_active_ = false;
    last_tick_ = t;
    while (!queue_.empty() && std::get<0>(queue_.begin()->first) == t) {
      Message m = std::move(queue_.begin()->second);
      queue_.erase(queue_.begin());
      deliver(t, std::move(m));
    }
    if (run_actions) {
      for (std::size_t i = 0; i < clients_.size(); ++i) run_actions_for(t, i);
    }
    for (std::size_t i = 0; i < clients_.size(); ++i) snapshot(t, i);
    if (tick_active_) {
      OrderedJson e = event(t, "tick_end");
      e["in_flight"] = queue_.size();
      trace_.events.push_back(std::move(e));
    }
  }

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::pair<double, double> link_probs(int from, int to) const {
    double drop = scenario_.network.drop_prob;
    double reorder = scenario_.network.reorder_prob;
    for (const auto& l : scenario_.network.links) {
      if (l.from == names_[from] && l.to == names_[to]) {
        if (l.drop_prob) drop = *l.drop_prob;
        if (l.reorder_prob) reorder = *l.reorder_prob;
      }
    }
    return {drop, reorder};
  }

  void send(std::int64_t t, int from, int to, std::string frame, std::optional<std::uint16_t> close_code = {}) {
    Message m;
    m.id = next_msg_id_++;
    m.send_tick = t;
    m.from = from;
    m.to = to;
    m.close_code = close_code;
    m.kind = frame.empty() ? "close" : std::string(protocol::kind_name(protocol::decode(frame)));
    m.frame = std::move(frame);

    const auto& net = scenario_.network;
    const auto span = static_cast<std::uint64_t>(net.latency_hi - net.latency_lo) + 1;
    std::int64_t deliver_tick = t + std::max<std::int64_t>(1, net.latency_lo + static_cast<std::int64_t>(rng_() % span));
    const bool is_update = m.kind == "state_update";
    const auto [drop_p, reorder_p] = link_probs(from, to);
    const bool reordered = is_update && reorder_p > 0 && uniform() < reorder_p;
    std::int64_t& fifo = link_last_[{from, to}];
    if (!reordered) {
      deliver_tick = std::max(deliver_tick, fifo);
      fifo = deliver_tick;
    }
    const bool dropped = is_update && drop_p > 0 && uniform() < drop_p;

    OrderedJson e = event(t, "send");
    e["msg"] = m.id;
    e["from"] = names_[from];
    e["to"] = names_[to];
    e["kind"] = m.kind;
    e["deliver_tick"] = deliver_tick;
    e["reordered"] = reordered;
    if (m.close_code) e["code"] = *m.close_code;
    if (!m.frame.empty()) e["frame"] = m.frame;
    emit(std::move(e));

    if (dropped) {
      OrderedJson d = event(t, "drop");
      d["msg"] = m.id;
      d["from"] = names_[from];
      d["to"] = names_[to];
      d["kind"] = m.kind;
      emit(std::move(d));
      return;
    }
    queue_.emplace(Key{deliver_tick, t, from, m.id}, std::move(m));
  }

  void apply_effects(std::int64_t t, const relay::Effects& effects) {
    for (const auto& effect : effects) {
      if (const auto* f = std::get_if<relay::SendFrame>(&effect)) {
        send(t, kServer, static_cast<int>(f->to), f->frame);
      } else {
        const auto& c = std::get<relay::CloseConnection>(effect);
        send(t, kServer, static_cast<int>(c.conn), {}, static_cast<std::uint16_t>(c.code));
      }
    }
  }

  void deliver(std::int64_t t, Message m) {
    const bool to_server = m.to == kServer;
    VirtualClient* client = to_server ? nullptr : &clients_[m.to - 1];
    const bool discard = client && (client->status == Status::Left || client->status == Status::Closed);

    OrderedJson e = event(t, discard ? "discard" : "deliver");
    e["msg"] = m.id;
    e["from"] = names_[m.from];
    e["to"] = names_[m.to];
    e["kind"] = m.kind;
    emit(std::move(e));
    if (discard) return;

    const Millis now{t};
    if (to_server) {
      const auto conn = static_cast<relay::ConnectionId>(m.from);
      apply_effects(t, m.frame.empty() ? core_.on_close(conn, now) : core_.on_frame(conn, m.frame, now));
      return;
    }
    if (m.frame.empty()) {
      client->status = Status::Closed;
      return;
    }
    const auto msg = protocol::decode(m.frame);
    if (std::holds_alternative<protocol::Ping>(msg)) {
      send(t, m.to, kServer, protocol::encode(protocol::Pong{scenario_.room}));
    }
    if (std::holds_alternative<protocol::Welcome>(msg)) client->status = Status::Joined;
    client->cs = presence::on_server_message(std::move(client->cs), msg);
  }

  void run_actions_for(std::int64_t t, std::size_t i) {
    VirtualClient& c = clients_[i];
    const int self = static_cast<int>(i) + 1;
    if (c.spec->join_tick == t) {
      c.status = Status::Connecting;
      apply_effects(t, core_.on_open(static_cast<relay::ConnectionId>(self), scenario_.room, Millis{t}));
      send(t, self, kServer, protocol::encode(protocol::Join{scenario_.room, c.spec->name}));
    }
    while (c.next_step < c.spec->script.size() && c.spec->script[c.next_step].at_tick == t) {
      perform(t, i, c.spec->script[c.next_step++].action);
    }
  }

  std::string user_id_of(const std::string& name) const {
    for (const auto& c : clients_) {
      if (c.spec->name == name) return c.cs.self.user_id;
    }
    return {};
  }

  void perform(std::int64_t t, std::size_t i, const Action& action) {
    VirtualClient& c = clients_[i];
    const int self = static_cast<int>(i) + 1;
    OrderedJson e = event(t, "action");
    e["client"] = c.spec->name;
    e["action"] = action_name(action);
    e["before"] = view_json(c.cs);
    try {
      if (c.status != Status::Joined) {
        throw Error(ErrorCode::UnknownUser, std::string("client is ") + std::string(status_name(c.status)));
      }
      if (const auto* act = std::get_if<Interact>(&action)) {
        const InteractionState current = presence::effective_view(c.cs);
        InteractionState next = protocol::overlay(current, act->delta);
        if (!act->sets_epoch) next.view_epoch = current.view_epoch;
        auto result = presence::on_local_interaction(std::move(c.cs), next);
        c.cs = std::move(result.state);
        c.last_emitted_seq = result.outbound.seq;
        e["delta"] = protocol::to_json(act->delta);
        e["sets_epoch"] = act->sets_epoch;
        OrderedJson emitted = OrderedJson::object();
        emitted["seq"] = result.outbound.seq;
        emitted["state"] = protocol::to_json(result.outbound.state);
        e["emitted"] = std::move(emitted);
        send(t, self, kServer, protocol::encode(result.outbound));
      } else if (const auto* peek = std::get_if<Peek>(&action)) {
        e["target"] = peek->target;
        c.cs = presence::begin_peek(c.cs, user_id_of(peek->target));
      } else if (std::holds_alternative<EndPeek>(action)) {
        c.cs = presence::end_peek(c.cs);
      } else if (const auto* track = std::get_if<Track>(&action)) {
        e["target"] = track->target;
        c.cs = presence::begin_track(c.cs, user_id_of(track->target));
      } else {
        c.status = Status::Left;
        send(t, self, kServer, {});
      }
      e["ok"] = true;
    } catch (const Error& err) {
      e["ok"] = false;
      e["error"] = to_string(err.code());
      e["detail"] = err.what();
    }
    e["after"] = view_json(c.cs);
    emit(std::move(e));
  }

  void snapshot(std::int64_t t, std::size_t i) {
    VirtualClient& c = clients_[i];
    if (c.status == Status::Pending) return;
    OrderedJson body = OrderedJson::object();
    body["client"] = c.spec->name;
    body["status"] = status_name(c.status);
    body["last_emitted_seq"] = c.last_emitted_seq ? OrderedJson(*c.last_emitted_seq) : OrderedJson(nullptr);
    body["state"] = presence::to_json(c.cs);
    std::string dumped = body.dump();
    if (dumped == c.last_snapshot) return;
    c.last_snapshot = std::move(dumped);
    OrderedJson e = event(t, "snapshot");
    for (auto& [k, v] : body.items()) e[k] = std::move(v);
    emit(std::move(e));
  }

  const Scenario& scenario_;
  std::mt19937_64 rng_;
  relay::RelayCore core_;
  std::vector<std::string> names_;
  std::vector<VirtualClient> clients_;
  std::map<Key, Message> queue_;
  std::map<std::pair<int, int>, std::int64_t> link_last_;
  std::uint64_t next_msg_id_ = 0;
  std::int64_t last_tick_ = 0;
  bool tick_active_ = false;
  Trace trace_;
};

}  // namespace

Trace run(const Scenario& scenario) {
  scenario.validate();
  return Simulator(scenario).run();
}

// --- property checks --------------------------------------------------------

bool Report::all_passed() const {
  return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
}

OrderedJson Report::to_json() const {
  OrderedJson out = OrderedJson::array();
  for (const auto& r : results) {
    OrderedJson j = OrderedJson::object();
    j["property"] = r.name;
    j["passed"] = r.passed;
    j["first_violation_tick"] =
        r.first_violation_tick ? OrderedJson(*r.first_violation_tick) : OrderedJson(nullptr);
    j["detail"] = r.detail;
    out.push_back(std::move(j));
  }
  return out;
}

const std::vector<std::string>& property_names() {
  static const std::vector<std::string> names = {"convergence", "peek-roundtrip", "track-mirror",
                                                 "fork-isolation", "color-uniqueness"};
  return names;
}

namespace {

const OrderedJson& empty_state_json() {
  static const OrderedJson empty = protocol::to_json(InteractionState{});
  return empty;
}

InteractionState as_state(const OrderedJson& j) { return protocol::state_from_json(Json::parse(j.dump())); }

class Checker {
 public:
  explicit Checker(const std::vector<std::string>& wanted) {
    for (const auto& name : wanted) {
      if (name == "all") {
        for (const auto& p : property_names()) add(p);
      } else if (std::find(property_names().begin(), property_names().end(), name) != property_names().end()) {
        add(name);
      } else {
        throw Error(ErrorCode::UnknownProperty, name);
      }
    }
  }

  Report finish(const Trace& trace) {
    for (const auto& e : trace.events) {
      const std::string kind = e.value("event", "");
      const std::int64_t tick = e.value("tick", std::int64_t{0});
      if (kind == "action") on_action(tick, e);
      else if (kind == "snapshot") on_snapshot(tick, e);
      else if (kind == "tick_end") on_tick_end(tick, e);
      else if (kind == "end") on_end(tick);
    }
    Report report;
    for (const auto& name : order_) report.results.push_back(results_.at(name));
    return report;
  }

 private:
  void add(const std::string& name) {
    if (results_.contains(name)) return;
    order_.push_back(name);
    results_[name] = PropertyResult{name, true, std::nullopt, ""};
  }

  bool enabled(const char* name) const { return results_.contains(name); }

  void fail(const char* name, std::int64_t tick, std::string detail) {
    auto it = results_.find(name);
    if (it == results_.end() || !it->second.passed) return;
    it->second.passed = false;
    it->second.first_violation_tick = tick;
    it->second.detail = std::move(detail);
  }

  bool present(const OrderedJson& snap) const { return snap.value("status", "") == "joined"; }

  const OrderedJson& published(const std::string& client) const {
    auto it = last_emitted_.find(client);
    return it == last_emitted_.end() ? empty_state_json() : it->second;
  }

  void on_action(std::int64_t tick, const OrderedJson& e) {
    const std::string client = e.at("client").get<std::string>();
    const std::string action = e.at("action").get<std::string>();
    const bool ok = e.at("ok").get<bool>();
    const OrderedJson& before = e.at("before");
    const OrderedJson& after = e.at("after");
    if (!ok) return;

    if (action == "peek") {
      if (before.at("mode").at("type") != "peeking") peek_origin_[client] = before;
    } else if (action == "end_peek") {
      auto it = peek_origin_.find(client);
      if (it != peek_origin_.end()) {
        const OrderedJson& origin = it->second;
        if (after.at("mode") != origin.at("mode")) {
          fail("peek-roundtrip", tick, client + ": end_peek restored mode " + after.at("mode").dump() +
                                           ", expected " + origin.at("mode").dump());
        } else if (origin.at("mode").at("type") == "independent" && after.at("effective") != origin.at("effective")) {
          fail("peek-roundtrip", tick, client + ": end_peek did not restore the pre-peek view");
        }
        peek_origin_.erase(it);
      }
    } else {
      peek_origin_.erase(client);
    }

    fork_watch_.erase(client);
    if (action == "interact") {
      last_emitted_[client] = e.at("emitted").at("state");
      if (before.at("mode").at("type") != "independent") {
        InteractionState expected = protocol::overlay(as_state(before.at("effective")), as_state(e.at("delta")));
        if (!e.at("sets_epoch").get<bool>()) expected.view_epoch = as_state(before.at("effective")).view_epoch;
        if (protocol::to_json(expected) != e.at("emitted").at("state")) {
          fail("fork-isolation", tick, client + ": first post-fork emission is not target state overlaid with the interaction");
        }
        fork_watch_[client] = after.at("effective");
      }
    }
  }

  void on_snapshot(std::int64_t tick, const OrderedJson& e) {
    const std::string client = e.at("client").get<std::string>();
    latest_[client] = e;
    if (!present(e)) {
      fork_watch_.erase(client);
      peek_origin_.erase(client);
      return;
    }
    const OrderedJson& state = e.at("state");
    if (auto it = fork_watch_.find(client); it != fork_watch_.end() && state.at("effective") != it->second) {
      fail("fork-isolation", tick, client + ": effective view changed after fork without a local action");
    }
    if (state.at("mode").at("type") != "peeking") peek_origin_.erase(client);
  }

  void on_tick_end(std::int64_t tick, const OrderedJson& e) {
    std::map<std::string, std::string> color_owner;
    for (const auto& [client, snap] : latest_) {
      if (!present(snap)) continue;
      const std::string color = snap.at("state").at("color").get<std::string>();
      auto [it, inserted] = color_owner.emplace(color, client);
      if (!inserted && present_count() <= session::default_palette().size()) {
        fail("color-uniqueness", tick, it->second + " and " + client + " share " + color);
      }
    }

    if (e.at("in_flight").get<std::size_t>() != 0) return;
    for (const auto& [client, snap] : latest_) {
      if (!present(snap)) continue;
      const OrderedJson& mode = snap.at("state").at("mode");
      if (mode.at("type") != "tracking") continue;
      const std::string target = mode.at("target").get<std::string>();
      const std::string* target_client = nullptr;
      for (const auto& [other, other_snap] : latest_) {
        if (present(other_snap) && other_snap.at("state").at("user_id") == target) target_client = &other;
      }
      if (!target_client) {
        fail("track-mirror", tick, client + " tracks departed user " + target);
      } else if (snap.at("state").at("effective") != published(*target_client)) {
        fail("track-mirror", tick, client + " does not mirror " + *target_client);
      }
    }
  }

  std::size_t present_count() const {
    return static_cast<std::size_t>(
        std::count_if(latest_.begin(), latest_.end(), [&](const auto& kv) { return present(kv.second); }));
  }

  void on_end(std::int64_t tick) {
    for (const auto& [observer, snap] : latest_) {
      if (!present(snap)) continue;
      const OrderedJson& remotes = snap.at("state").at("remotes");
      std::set<std::string> expected_ids;
      for (const auto& [other, other_snap] : latest_) {
        if (other == observer || !present(other_snap)) continue;
        const std::string uid = other_snap.at("state").at("user_id").get<std::string>();
        expected_ids.insert(uid);
        auto it = remotes.find(uid);
        if (it == remotes.end()) {
          fail("convergence", tick, observer + " never learned of " + other);
          continue;
        }
        if ((*it).at("seq") != other_snap.at("last_emitted_seq") || (*it).at("state") != published(other)) {
          fail("convergence", tick, observer + " holds a stale state for " + other);
        }
      }
      std::set<std::string> actual_ids;
      for (const auto& [uid, _] : remotes.items()) actual_ids.insert(uid);
      if (actual_ids != expected_ids) fail("convergence", tick, observer + " lists departed users");
    }
  }

  std::vector<std::string> order_;
  std::map<std::string, PropertyResult> results_;
  std::map<std::string, OrderedJson> latest_;
  std::map<std::string, OrderedJson> last_emitted_;
  std::map<std::string, OrderedJson> peek_origin_;
  std::map<std::string, OrderedJson> fork_watch_;
};

}  // namespace

Report check(const Trace& trace, const std::vector<std::string>& properties) {
  return Checker(properties).finish(trace);
}

}  // namespace vis_presence::sim
