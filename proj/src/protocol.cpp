#include "vis_presence/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <set>

#include "vis_presence/error.hpp"

namespace vis_presence::protocol {

namespace {

constexpr double kMaxExactInteger = 9007199254740992.0;  // 2^53

[[noreturn]] void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

OrderedJson number(double v) {
  if (!std::isfinite(v)) fail(ErrorCode::InvalidMessage, "non-finite number");
  if (std::trunc(v) == v && std::fabs(v) < kMaxExactInteger) {
    return static_cast<std::int64_t>(v);  // -0.0 collapses to 0
  }
  return v;
}

OrderedJson extent_json(const Extent& e, std::string_view channel) {
  if (!(e.lo <= e.hi)) {
    fail(ErrorCode::InvalidMessage, "extent lo > hi on channel '" + std::string(channel) + "'");
  }
  OrderedJson pair = OrderedJson::array();
  pair.push_back(number(e.lo));
  pair.push_back(number(e.hi));
  return pair;
}

OrderedJson value_json(const SelectionValue& value) {
  return std::visit(
      [](const auto& v) -> OrderedJson {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PointTuples>) {
          OrderedJson out = OrderedJson::array();
          for (const auto& tuple : v.tuples) {
            OrderedJson t = OrderedJson::object();
            for (const auto& [field, scalar] : tuple) t[field] = to_json(scalar);
            out.push_back(std::move(t));
          }
          return out;
        } else if constexpr (std::is_same_v<T, IntervalExtents>) {
          OrderedJson out = OrderedJson::object();
          for (const auto& [channel, e] : v.extents) out[channel] = extent_json(e, channel);
          return out;
        } else if constexpr (std::is_same_v<T, WidgetBindings>) {
          OrderedJson out = OrderedJson::object();
          for (const auto& [field, scalar] : v.values) out[field] = to_json(scalar);
          return out;
        } else if constexpr (std::is_same_v<T, ScaleDomains>) {
          OrderedJson out = OrderedJson::object();
          for (const auto& [channel, e] : v.domains) out[channel] = extent_json(e, channel);
          return out;
        } else {
          OrderedJson out = OrderedJson::object();
          out["x"] = number(v.x);
          out["y"] = number(v.y);
          return out;
        }
      },
      value);
}

void check_room(const std::string& room, ErrorCode code) {
  auto len = utf8_length(room);
  if (!len) fail(code, "room is not valid UTF-8");
  if (*len == 0 || *len > kMaxRoomLength) fail(code, "room must be 1..128 characters");
}

void check_user_id(const std::string& user_id, ErrorCode code) {
  if (user_id.empty()) fail(code, "user_id must be non-empty");
}

void check_color(const std::string& color, ErrorCode code) {
  if (!is_valid_color(color)) fail(code, "color must be #rrggbb lowercase hex: '" + color + "'");
}

void check_name(const std::string& name, ErrorCode code) {
  auto len = utf8_length(name);
  if (!len) fail(code, "name is not valid UTF-8");
  if (*len > kMaxNameLength) fail(code, "name exceeds 64 characters");
}

// --- decoding helpers --------------------------------------------------------

[[noreturn]] void schema(const std::string& detail) { fail(ErrorCode::SchemaViolation, detail); }

void expect_keys(const Json& obj, std::initializer_list<std::string_view> keys,
                 std::string_view where) {
  if (!obj.is_object()) schema(std::string(where) + " must be an object");
  for (auto key : keys) {
    if (!obj.contains(key)) schema(std::string(where) + " missing field '" + std::string(key) + "'");
  }
  if (obj.size() != keys.size()) {
    for (const auto& item : obj.items()) {
      if (std::find(keys.begin(), keys.end(), item.key()) == keys.end()) {
        schema(std::string(where) + " has unexpected field '" + item.key() + "'");
      }
    }
  }
}

const std::string& get_string(const Json& obj, const char* key) {
  const Json& v = obj.at(key);
  if (!v.is_string()) schema(std::string("field '") + key + "' must be a string");
  return v.get_ref<const std::string&>();
}

std::uint64_t get_count(const Json& v, std::string_view what) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  schema(std::string(what) + " must be a non-negative integer");
}

double get_number(const Json& v, std::string_view what) {
  if (!v.is_number()) schema(std::string(what) + " must be a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) schema(std::string(what) + " must be finite");
  return d;
}

Scalar scalar_from_json(const Json& v) {
  if (v.is_null()) return nullptr;
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number()) return get_number(v, "scalar");
  if (v.is_string()) return v.get<std::string>();
  schema("selection values must be scalars (null, boolean, number, string)");
}

std::map<std::string, Extent> extents_from_json(const Json& v, std::string_view what) {
  if (!v.is_object()) schema(std::string(what) + " value must be an object");
  std::map<std::string, Extent> out;
  for (const auto& item : v.items()) {
    if (item.key().empty()) schema("empty channel name");
    const Json& pair = item.value();
    if (!pair.is_array() || pair.size() != 2) schema("extent must be a [lo, hi] pair");
    Extent e{get_number(pair[0], "extent lo"), get_number(pair[1], "extent hi")};
    if (!(e.lo <= e.hi)) schema("extent lo > hi on channel '" + item.key() + "'");
    out.emplace(item.key(), e);
  }
  return out;
}

SelectionValue selection_from_json(const Json& entry) {
  expect_keys(entry, {"type", "value"}, "selection entry");
  const std::string& type = get_string(entry, "type");
  const Json& v = entry.at("value");
  if (type == "point") {
    if (!v.is_array()) schema("point value must be an array of tuples");
    PointTuples pt;
    for (const auto& t : v) {
      if (!t.is_object()) schema("point tuple must be an object");
      Tuple tuple;
      for (const auto& item : t.items()) tuple.emplace(item.key(), scalar_from_json(item.value()));
      pt.tuples.push_back(std::move(tuple));
    }
    return pt;
  }
  if (type == "interval") return IntervalExtents{extents_from_json(v, "interval")};
  if (type == "scales") return ScaleDomains{extents_from_json(v, "scales")};
  if (type == "widgets") {
    if (!v.is_object()) schema("widgets value must be an object");
    WidgetBindings wb;
    for (const auto& item : v.items()) wb.values.emplace(item.key(), scalar_from_json(item.value()));
    return wb;
  }
  if (type == "mouse") {
    expect_keys(v, {"x", "y"}, "mouse value");
    return MousePosition{get_number(v.at("x"), "mouse x"), get_number(v.at("y"), "mouse y")};
  }
  schema("unknown selection type '" + type + "'");
}

RosterEntry roster_entry_from_json(const Json& j) {
  expect_keys(j, {"user_id", "name", "color", "seq", "state"}, "roster user");
  RosterEntry e;
  e.user_id = get_string(j, "user_id");
  e.name = get_string(j, "name");
  e.color = get_string(j, "color");
  check_user_id(e.user_id, ErrorCode::SchemaViolation);
  check_name(e.name, ErrorCode::SchemaViolation);
  check_color(e.color, ErrorCode::SchemaViolation);
  if (!j.at("seq").is_null()) e.seq = get_count(j.at("seq"), "seq");
  e.state = state_from_json(j.at("state"));
  return e;
}

}  // namespace

std::string_view type_tag(const SelectionValue& value) {
  static constexpr std::string_view tags[] = {"point", "interval", "widgets", "scales", "mouse"};
  return tags[value.index()];
}

InteractionState overlay(const InteractionState& base, const InteractionState& top) {
  InteractionState out = base;
  for (const auto& [name, value] : top.entries) out.entries.insert_or_assign(name, value);
  out.view_epoch = top.view_epoch;
  return out;
}

std::string_view kind_name(const WireMessage& msg) {
  static constexpr std::string_view names[] = {"join",     "welcome", "roster", "state_update",
                                               "user_left", "ping",   "pong"};
  return names[msg.index()];
}

const std::string& room_of(const WireMessage& msg) {
  return std::visit([](const auto& m) -> const std::string& { return m.room; }, msg);
}

bool is_valid_color(std::string_view color) {
  if (color.size() != 7 || color[0] != '#') return false;
  return std::all_of(color.begin() + 1, color.end(),
                     [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

std::optional<std::size_t> utf8_length(std::string_view text) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < text.size(); ++count) {
    auto b = static_cast<unsigned char>(text[i]);
    std::size_t extra;
    std::uint32_t cp;
    if (b < 0x80) {
      extra = 0;
      cp = b;
    } else if ((b & 0xE0) == 0xC0) {
      extra = 1;
      cp = b & 0x1F;
    } else if ((b & 0xF0) == 0xE0) {
      extra = 2;
      cp = b & 0x0F;
    } else if ((b & 0xF8) == 0xF0) {
      extra = 3;
      cp = b & 0x07;
    } else {
      return std::nullopt;
    }
    if (i + extra >= text.size()) return std::nullopt;
    for (std::size_t k = 1; k <= extra; ++k) {
      auto c = static_cast<unsigned char>(text[i + k]);
      if ((c & 0xC0) != 0x80) return std::nullopt;
      cp = (cp << 6) | (c & 0x3F);
    }
    static constexpr std::uint32_t min_for[] = {0, 0x80, 0x800, 0x10000};
    if (cp < min_for[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return std::nullopt;
    i += extra + 1;
  }
  return count;
}

OrderedJson to_json(const Scalar& value) {
  return std::visit(
      [](const auto& v) -> OrderedJson {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::nullptr_t>) return nullptr;
        else if constexpr (std::is_same_v<T, double>) return number(v);
        else return v;
      },
      value);
}

OrderedJson to_json(const InteractionState& state) {
  OrderedJson out = OrderedJson::object();
  out["view_epoch"] = state.view_epoch;
  OrderedJson entries = OrderedJson::object();
  for (const auto& [name, value] : state.entries) {
    if (name.empty()) fail(ErrorCode::InvalidMessage, "empty selection name");
    OrderedJson entry = OrderedJson::object();
    entry["type"] = type_tag(value);
    entry["value"] = value_json(value);
    entries[name] = std::move(entry);
  }
  out["entries"] = std::move(entries);
  return out;
}

InteractionState state_from_json(const Json& j, bool require_epoch) {
  if (require_epoch) {
    expect_keys(j, {"view_epoch", "entries"}, "state");
  } else if (!j.is_object() || !j.contains("entries") ||
             j.size() != (j.contains("view_epoch") ? 2u : 1u)) {
    schema("state must be an object with 'entries' and optional 'view_epoch'");
  }
  InteractionState state;
  if (j.contains("view_epoch")) state.view_epoch = get_count(j.at("view_epoch"), "view_epoch");
  const Json& entries = j.at("entries");
  if (!entries.is_object()) schema("entries must be an object");
  for (const auto& item : entries.items()) {
    if (item.key().empty()) schema("empty selection name");
    state.entries.emplace(item.key(), selection_from_json(item.value()));
  }
  return state;
}

std::string encode(const WireMessage& msg) {
  constexpr auto code = ErrorCode::InvalidMessage;
  OrderedJson out = OrderedJson::object();
  out["kind"] = kind_name(msg);
  check_room(room_of(msg), code);
  out["room"] = room_of(msg);

  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Join>) {
          check_name(m.name, code);
          out["name"] = m.name;
        } else if constexpr (std::is_same_v<T, Welcome>) {
          check_user_id(m.user_id, code);
          check_color(m.color, code);
          out["user_id"] = m.user_id;
          out["color"] = m.color;
        } else if constexpr (std::is_same_v<T, Roster>) {
          OrderedJson users = OrderedJson::array();
          const std::string* prev = nullptr;
          for (const auto& u : m.users) {
            check_user_id(u.user_id, code);
            check_name(u.name, code);
            check_color(u.color, code);
            if (prev && !(*prev < u.user_id)) {
              fail(code, "roster users must be strictly ascending by user_id");
            }
            prev = &u.user_id;
            OrderedJson entry = OrderedJson::object();
            entry["user_id"] = u.user_id;
            entry["name"] = u.name;
            entry["color"] = u.color;
            entry["seq"] = u.seq ? OrderedJson(*u.seq) : OrderedJson(nullptr);
            entry["state"] = to_json(u.state);
            users.push_back(std::move(entry));
          }
          out["users"] = std::move(users);
        } else if constexpr (std::is_same_v<T, StateUpdate>) {
          check_user_id(m.user_id, code);
          out["user_id"] = m.user_id;
          out["seq"] = m.seq;
          out["state"] = to_json(m.state);
        } else if constexpr (std::is_same_v<T, UserLeft>) {
          check_user_id(m.user_id, code);
          out["user_id"] = m.user_id;
        }
      },
      msg);

  try {
    return out.dump();
  } catch (const nlohmann::json::exception& e) {
    fail(code, std::string("string is not valid UTF-8: ") + e.what());
  }
}

WireMessage decode(std::string_view bytes) {
  Json j;
  try {
    j = Json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedInput, e.what());
  }
  if (!j.is_object()) schema("message must be a JSON object");
  auto kind_it = j.find("kind");
  if (kind_it == j.end() || !kind_it->is_string()) schema("message missing string field 'kind'");
  const std::string& kind = kind_it->get_ref<const std::string&>();

  auto room = [&] {
    const std::string& r = get_string(j, "room");
    check_room(r, ErrorCode::SchemaViolation);
    return r;
  };
  auto user_id = [&] {
    const std::string& u = get_string(j, "user_id");
    check_user_id(u, ErrorCode::SchemaViolation);
    return u;
  };

  if (kind == "join") {
    expect_keys(j, {"kind", "room", "name"}, "join");
    Join m{room(), get_string(j, "name")};
    check_name(m.name, ErrorCode::SchemaViolation);
    return m;
  }
  if (kind == "welcome") {
    expect_keys(j, {"kind", "room", "user_id", "color"}, "welcome");
    Welcome m{room(), user_id(), get_string(j, "color")};
    check_color(m.color, ErrorCode::SchemaViolation);
    return m;
  }
  if (kind == "roster") {
    expect_keys(j, {"kind", "room", "users"}, "roster");
    Roster m{room(), {}};
    const Json& users = j.at("users");
    if (!users.is_array()) schema("roster users must be an array");
    std::set<std::string> seen;
    for (const auto& u : users) {
      RosterEntry entry = roster_entry_from_json(u);
      if (!seen.insert(entry.user_id).second) schema("duplicate user_id in roster: " + entry.user_id);
      m.users.push_back(std::move(entry));
    }
    std::sort(m.users.begin(), m.users.end(),
              [](const RosterEntry& a, const RosterEntry& b) { return a.user_id < b.user_id; });
    return m;
  }
  if (kind == "state_update") {
    expect_keys(j, {"kind", "room", "user_id", "seq", "state"}, "state_update");
    return StateUpdate{room(), user_id(), get_count(j.at("seq"), "seq"), state_from_json(j.at("state"))};
  }
  if (kind == "user_left") {
    expect_keys(j, {"kind", "room", "user_id"}, "user_left");
    return UserLeft{room(), user_id()};
  }
  if (kind == "ping") {
    expect_keys(j, {"kind", "room"}, "ping");
    return Ping{room()};
  }
  if (kind == "pong") {
    expect_keys(j, {"kind", "room"}, "pong");
    return Pong{room()};
  }
  fail(ErrorCode::UnknownKind, "unknown message kind '" + kind + "'");
}

}  // namespace vis_presence::protocol
