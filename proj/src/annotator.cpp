#include "vis_presence/annotator.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

#include "vis_presence/error.hpp"

namespace vis_presence::annotator {

namespace {

using Pointer = Document::json_pointer;

constexpr std::string_view kConcatKeys[] = {"hconcat", "vconcat", "concat"};
constexpr std::string_view kUnsupportedKeys[] = {"facet", "repeat", "spec"};
constexpr std::string_view kFacetChannels[] = {"row", "column", "facet"};

// Properties that stay on the outermost object when the root view is wrapped.
const std::set<std::string, std::less<>> kRootKeys = {
    "$schema",  "config", "autosize", "background", "padding",
    "datasets", "usermeta", "title",  "description", "name"};
// Sizing properties that belong to a layer wrapper rather than its children.
const std::set<std::string, std::less<>> kFrameKeys = {"width", "height", "view"};
const std::set<std::string, std::less<>> kLegendChannels = {
    "color", "fill", "stroke", "opacity", "fillOpacity", "strokeOpacity",
    "shape", "size",  "strokeWidth", "strokeDash", "angle"};

bool is_concat(const Document& view) {
  return std::any_of(std::begin(kConcatKeys), std::end(kConcatKeys),
                     [&](auto k) { return view.contains(k); });
}

bool is_layer(const Document& view) { return view.contains("layer"); }
bool is_unit(const Document& view) { return view.contains("mark"); }

std::string child_path(const std::string& parent, std::string_view key, std::size_t index) {
  return parent + "/" + std::string(key) + "/" + std::to_string(index);
}

std::string parent_view_path(const std::string& path) {
  // ".../layer/3" -> "..."
  auto last = path.rfind('/');
  if (last == std::string::npos || last == 0) return {};
  auto prev = path.rfind('/', last - 1);
  return prev == std::string::npos ? std::string{} : path.substr(0, prev);
}

[[noreturn]] void unsupported(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::UnsupportedSpec, what + " at '" + (path.empty() ? "/" : path) + "'");
}

struct ViewVisit {
  const Document& view;
  std::string path;
  std::vector<const Document*> ancestors;  // nearest last
};

template <typename F>
void walk_views(const Document& view, const std::string& path, std::vector<const Document*>& ancestors,
                F&& visit) {
  if (!view.is_object()) unsupported(path, "view is not an object");
  for (auto key : kUnsupportedKeys) {
    if (view.contains(key)) unsupported(path, "'" + std::string(key) + "' operator is not supported");
  }
  if (auto enc = view.find("encoding"); enc != view.end() && enc->is_object()) {
    for (auto ch : kFacetChannels) {
      if (enc->contains(ch)) unsupported(path + "/encoding/" + std::string(ch), "faceting channel");
    }
  }
  if (!is_unit(view) && !is_layer(view) && !is_concat(view)) {
    unsupported(path, "object is not a unit, layer or concat view");
  }
  visit(ViewVisit{view, path, ancestors});
  ancestors.push_back(&view);
  if (auto it = view.find("layer"); it != view.end()) {
    if (!it->is_array()) unsupported(path + "/layer", "layer must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) walk_views((*it)[i], child_path(path, "layer", i), ancestors, visit);
  }
  for (auto key : kConcatKeys) {
    if (auto it = view.find(key); it != view.end()) {
      if (!it->is_array()) unsupported(path + "/" + std::string(key), "concat must be an array");
      for (std::size_t i = 0; i < it->size(); ++i) walk_views((*it)[i], child_path(path, key, i), ancestors, visit);
    }
  }
  ancestors.pop_back();
}

template <typename F>
void walk_views(const Document& root, F&& visit) {
  std::vector<const Document*> ancestors;
  walk_views(root, std::string{}, ancestors, visit);
}

// Finds the encoding definition of `channel` as seen by a view: its own
// encoding, then those inherited from enclosing layers, then (for a layer
// that declares the selection itself) its children.
const Document* find_channel_def(const ViewVisit& v, std::string_view channel) {
  auto lookup = [&](const Document& view) -> const Document* {
    auto enc = view.find("encoding");
    if (enc == view.end() || !enc->is_object()) return nullptr;
    auto def = enc->find(channel);
    return def != enc->end() && def->is_object() ? &*def : nullptr;
  };
  if (auto d = lookup(v.view)) return d;
  for (auto it = v.ancestors.rbegin(); it != v.ancestors.rend(); ++it) {
    if (!is_layer(**it)) break;
    if (auto d = lookup(**it)) return d;
  }
  if (auto layer = v.view.find("layer"); layer != v.view.end()) {
    for (const auto& child : *layer) {
      if (auto d = lookup(child)) return d;
    }
  }
  return nullptr;
}

std::optional<ChannelBinding> resolve_binding(const ViewVisit& v, const std::string& channel) {
  const Document* def = find_channel_def(v, channel);
  if (!def) return std::nullopt;
  ChannelBinding b{channel, {}, {}};
  if (auto f = def->find("field"); f != def->end() && f->is_string()) b.field = f->get<std::string>();
  if (auto t = def->find("type"); t != def->end() && t->is_string()) {
    b.type = t->get<std::string>();
  } else if (def->contains("timeUnit")) {
    b.type = "temporal";
  }
  return b;
}

std::vector<std::string> string_list(const Document& obj, const char* key) {
  std::vector<std::string> out;
  if (auto it = obj.find(key); it != obj.end() && it->is_array()) {
    for (const auto& v : *it) {
      if (v.is_string()) out.push_back(v.get<std::string>());
    }
  }
  return out;
}

bool is_input_binding(const Document& bind) {
  if (!bind.is_object()) return false;
  if (bind.contains("input") || bind.contains("element")) return true;
  // Per-field bindings: {"Cylinders": {"input": "range"}, ...}
  return !bind.empty() && std::all_of(bind.begin(), bind.end(), [](const Document& v) {
    return v.is_object() && v.contains("input");
  });
}

std::string default_event(InteractionType t) {
  switch (t) {
    case InteractionType::PointSelect: return "click";
    case InteractionType::IntervalBrush: return "drag";
    case InteractionType::ScaleBound: return "drag, wheel";
    case InteractionType::WidgetBound: return "input";
  }
  return {};
}

std::optional<InteractionKind> classify(const ViewVisit& v, const std::string& name,
                                        const Document& def, bool legacy) {
  std::string select_type;
  const Document* select_obj = nullptr;
  if (legacy) {
    select_obj = &def;
    if (auto t = def.find("type"); t != def.end() && t->is_string()) select_type = t->get<std::string>();
  } else if (auto sel = def.find("select"); sel != def.end()) {
    if (sel->is_string()) {
      select_type = sel->get<std::string>();
    } else if (sel->is_object()) {
      select_obj = &*sel;
      if (auto t = sel->find("type"); t != sel->end() && t->is_string()) select_type = t->get<std::string>();
    }
  }
  auto bind_it = def.find("bind");
  const Document* bind = bind_it != def.end() ? &*bind_it : nullptr;

  InteractionKind kind;
  kind.name = name;
  kind.view_path = v.path;

  if (select_type.empty()) {
    // A plain variable parameter counts only when bound to an input widget.
    if (legacy || !bind || !is_input_binding(*bind)) return std::nullopt;
    kind.type = InteractionType::WidgetBound;
  } else if (select_type == "interval") {
    kind.type = bind && *bind == "scales" ? InteractionType::ScaleBound : InteractionType::IntervalBrush;
  } else if (select_type == "point" || select_type == "single" || select_type == "multi") {
    kind.type = bind && is_input_binding(*bind) ? InteractionType::WidgetBound : InteractionType::PointSelect;
  } else {
    unsupported(v.path, "unknown selection type '" + select_type + "'");
  }

  std::vector<std::string> encodings, fields;
  if (select_obj) {
    encodings = string_list(*select_obj, "encodings");
    fields = string_list(*select_obj, "fields");
  }
  if (!encodings.empty()) {
    kind.channels = encodings;
  } else if (!fields.empty()) {
    for (const char* ch : {"x", "y", "color", "shape", "size", "opacity", "x2", "y2", "theta"}) {
      auto b = resolve_binding(v, ch);
      if (b && std::find(fields.begin(), fields.end(), b->field) != fields.end()) kind.channels.push_back(ch);
    }
  } else if (kind.type == InteractionType::IntervalBrush || kind.type == InteractionType::ScaleBound) {
    for (const char* ch : {"x", "y"}) {
      if (resolve_binding(v, ch)) kind.channels.push_back(ch);
    }
    if (kind.channels.empty()) kind.channels = {"x", "y"};
  }
  for (const auto& ch : kind.channels) {
    if (auto b = resolve_binding(v, ch)) kind.bindings.push_back(*b);
  }

  kind.event_source = default_event(kind.type);
  if (select_obj) {
    if (auto on = select_obj->find("on"); on != select_obj->end()) {
      kind.event_source = on->is_string() ? on->get<std::string>() : on->dump();
    }
  }
  if (kind.type == InteractionType::WidgetBound && bind) {
    if (auto input = bind->find("input"); input != bind->end() && input->is_string()) {
      kind.event_source = "input:" + input->get<std::string>();
    }
  }
  return kind;
}

void check_schema_url(const Document& doc) {
  auto it = doc.find("$schema");
  if (it == doc.end()) return;
  static const std::regex pattern(R"(^https?://vega\.github\.io/schema/vega-lite/v\d+(\.\d+){0,2}\.json$)");
  if (!it->is_string() || !std::regex_match(it->get<std::string>(), pattern)) {
    throw Error(ErrorCode::InvalidSpec, "$schema is not a Vega-Lite schema URL");
  }
}

// --- document construction ---------------------------------------------------

Document cursor_data_ref() { return Document{{"name", std::string(kCursorDataName)}}; }

Document color_channel() {
  return Document{{"field", "color"}, {"type", "nominal"}, {"scale", nullptr}, {"legend", nullptr}};
}

// Each cursor layer gets its own hover (peek) and click (track) selection;
// names must be unique across the whole document.
struct ParamNames {
  std::vector<std::string> peek;
  std::vector<std::string> track;

  Document make() {
    std::string suffix = peek.empty() ? "_" : std::to_string(peek.size() + 1) + "__";
    peek.push_back("__presence_peek_" + suffix);
    track.push_back("__presence_track_" + suffix);
    Document fields = Document::array({"user_id"});
    return Document::array(
        {Document{{"name", peek.back()},
                  {"select", Document{{"type", "point"}, {"on", "mouseover"}, {"clear", "mouseout"}, {"fields", fields}}}},
         Document{{"name", track.back()}, {"select", Document{{"type", "point"}, {"on", "click"}, {"fields", fields}}}}});
  }
};

Document generic_cursor_layer(ParamNames& params) {
  Document layer;
  layer["data"] = cursor_data_ref();
  layer["params"] = params.make();
  layer["mark"] = Document{{"type", "circle"}, {"size", 64}, {"opacity", 0.6}};
  layer["encoding"] = Document{
      {"x", Document{{"field", "anchor_x"}, {"type", "quantitative"}, {"scale", nullptr}, {"axis", nullptr}}},
      {"y", Document{{"field", "anchor_y"}, {"type", "quantitative"}, {"scale", nullptr}, {"axis", nullptr}}},
      {"fill", color_channel()},
      {"tooltip", Document{{"field", "label"}, {"type", "nominal"}}}};
  return layer;
}

Document selection_filter(const std::string& name) {
  return Document::array({Document{{"filter", Document{{"field", "selection"}, {"equal", name}}}}});
}

Document position_def(const char* field, const std::string& type) {
  return Document{{"field", field}, {"type", type}, {"title", nullptr}};
}

bool positional_type(const std::string& type) { return type == "quantitative" || type == "temporal"; }

std::vector<std::string> rect_channels(const InteractionKind& kind) {
  std::vector<std::string> out;
  if (kind.type != InteractionType::IntervalBrush) return out;
  for (const char* ch : {"x", "y"}) {
    if (std::find(kind.channels.begin(), kind.channels.end(), ch) == kind.channels.end()) continue;
    const ChannelBinding* b = kind.binding(ch);
    if (b && !b->field.empty() && positional_type(b->type)) out.push_back(ch);
  }
  return out;
}

bool has_rule_channel(const InteractionKind& kind) {
  if (kind.type != InteractionType::PointSelect) return false;
  const ChannelBinding* b = kind.binding("x");
  return b && !b->field.empty();
}

bool specific_eligible(const InteractionKind& kind) {
  return !rect_channels(kind).empty() || has_rule_channel(kind);
}

Document rect_cursor_layer(const InteractionKind& kind, ParamNames& params) {
  Document encoding = Document::object();
  for (const auto& ch : rect_channels(kind)) {
    const std::string& type = kind.binding(ch)->type;
    encoding[ch] = position_def(ch == "x" ? "x_lo" : "y_lo", type);
    encoding[ch + "2"] = Document{{"field", ch == "x" ? "x_hi" : "y_hi"}};
  }
  encoding["stroke"] = color_channel();
  Document layer;
  layer["data"] = cursor_data_ref();
  layer["transform"] = selection_filter(kind.name);
  layer["params"] = params.make();
  layer["mark"] = Document{{"type", "rect"}, {"filled", false}, {"strokeWidth", 1.5}};
  layer["encoding"] = std::move(encoding);
  return layer;
}

Document rule_cursor_layer(const InteractionKind& kind, ParamNames& params) {
  Document layer;
  layer["data"] = cursor_data_ref();
  layer["transform"] = selection_filter(kind.name);
  layer["params"] = params.make();
  layer["mark"] = Document{{"type", "rule"}, {"strokeWidth", 2}};
  std::string type = kind.binding("x")->type.empty() ? "quantitative" : kind.binding("x")->type;
  layer["encoding"] = Document{{"x", position_def("rule_x", type)}, {"stroke", color_channel()}};
  return layer;
}

Document legend_panel(ParamNames& params) {
  Document y{{"field", "user_id"}, {"type", "nominal"}, {"axis", nullptr}, {"sort", "ascending"}};
  Document swatch;
  swatch["params"] = params.make();
  swatch["mark"] = Document{{"type", "square"}, {"size", 100}};
  swatch["encoding"] = Document{{"x", Document{{"value", 8}}}, {"y", y}, {"fill", color_channel()}};
  Document label;
  label["mark"] = Document{{"type", "text"}, {"align", "left"}, {"baseline", "middle"}};
  label["encoding"] =
      Document{{"x", Document{{"value", 20}}}, {"y", y}, {"text", Document{{"field", "label"}, {"type", "nominal"}}}};
  Document panel;
  panel["data"] = cursor_data_ref();
  panel["width"] = 120;
  panel["height"] = Document{{"step", 20}};
  panel["layer"] = Document::array({std::move(swatch), std::move(label)});
  return panel;
}

Document thumbnail_panel(ParamNames& params) {
  Document y{{"field", "user_id"}, {"type", "nominal"}, {"axis", nullptr}, {"sort", "ascending"}};
  Document frame;
  frame["params"] = params.make();
  frame["mark"] = Document{{"type", "rect"}, {"filled", false}, {"strokeWidth", 2}};
  frame["encoding"] = Document{{"x", Document{{"value", 0}}},
                               {"x2", Document{{"value", kThumbnailWidth}}},
                               {"y", y},
                               {"stroke", color_channel()}};
  Document label;
  label["mark"] = Document{{"type", "text"}, {"align", "left"}, {"baseline", "top"}, {"dx", 3}, {"dy", 3}};
  label["encoding"] =
      Document{{"x", Document{{"value", 0}}}, {"y", y}, {"text", Document{{"field", "label"}, {"type", "nominal"}}}};
  Document panel;
  panel["data"] = cursor_data_ref();
  panel["width"] = kThumbnailWidth;
  panel["height"] = Document{{"step", kThumbnailHeight + 16}};
  panel["layer"] = Document::array({std::move(frame), std::move(label)});
  return panel;
}

/// Moves the view's content into the first child of a new layer; sizing (and,
/// for the root, top-level-only properties) stay on the wrapper.
Document wrap_in_layer(const Document& view, bool is_root, std::vector<Document> extra) {
  Document outer = Document::object();
  Document inner = Document::object();
  for (const auto& item : view.items()) {
    bool stays = kFrameKeys.contains(item.key()) || (is_root && kRootKeys.contains(item.key()));
    (stays ? outer : inner)[item.key()] = item.value();
  }
  Document layers = Document::array({std::move(inner)});
  for (auto& e : extra) layers.push_back(std::move(e));
  outer["layer"] = std::move(layers);
  return outer;
}

/// Places the whole original view beside an external panel.
Document concat_beside(const Document& root, Document panel) {
  Document outer = Document::object();
  Document core = Document::object();
  for (const auto& item : root.items()) {
    (kRootKeys.contains(item.key()) ? outer : core)[item.key()] = item.value();
  }
  outer["hconcat"] = Document::array({std::move(core), std::move(panel)});
  return outer;
}

std::vector<std::string> split_pointer(const std::string& path) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < path.size()) {
    auto next = path.find('/', pos + 1);
    tokens.push_back(path.substr(pos + 1, next == std::string::npos ? std::string::npos : next - pos - 1));
    pos = next == std::string::npos ? path.size() : next;
  }
  return tokens;
}

/// Shortest prefix of `path` that is not a concat view.
std::string panel_of(const Document& root, const std::string& path) {
  auto tokens = split_pointer(path);
  std::string current;
  const Document* view = &root;
  for (std::size_t i = 0; is_concat(*view) && i + 1 < tokens.size(); i += 2) {
    current += "/" + tokens[i] + "/" + tokens[i + 1];
    view = &root.at(Pointer(current));
  }
  return current;
}

/// The first non-concat view in document order.
std::string first_panel(const Document& root) {
  std::string path;
  const Document* view = &root;
  while (is_concat(*view)) {
    const Document* next = nullptr;
    for (auto key : kConcatKeys) {
      if (auto it = view->find(key); it != view->end() && !it->empty()) {
        path = child_path(path, key, 0);
        next = &(*it)[0];
        break;
      }
    }
    if (!next) unsupported(path, "empty concat");
    view = next;
  }
  return path;
}

void replace_at(Document& root, const std::string& path, Document value) {
  if (path.empty()) {
    root = std::move(value);
  } else {
    root[Pointer(path)] = std::move(value);
  }
}

const Document& view_at(const Document& root, const std::string& path) {
  try {
    return path.empty() ? root : root.at(Pointer(path));
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::ModeKindMismatch, "interaction refers to missing view '" + path + "'");
  }
}

// --- thumbnails ----------------------------------------------------------------

bool is_field_like(const Document& def) {
  return def.is_object() && (def.contains("field") || def.contains("aggregate") || def.contains("datum") ||
                             def.contains("timeUnit") || def.contains("bin") || def.contains("type"));
}

void strip_view(Document& view) {
  view.erase("title");
  if (auto enc = view.find("encoding"); enc != view.end() && enc->is_object()) {
    for (auto& item : enc->items()) {
      Document& def = item.value();
      if (!def.is_object()) continue;
      def.erase("title");
      const std::string& channel = item.key();
      if ((channel == "x" || channel == "y") && is_field_like(def)) {
        def["axis"] = nullptr;
      } else if (kLegendChannels.contains(channel) && is_field_like(def)) {
        def["legend"] = nullptr;
      }
    }
  }
  if (auto params = view.find("params"); params != view.end() && params->is_array()) {
    for (auto& p : *params) {
      if (!p.is_object()) continue;
      if (auto bind = p.find("bind"); bind != p.end() && (*bind == "legend" || is_input_binding(*bind))) {
        p.erase("bind");
      }
    }
  }
  if (auto layer = view.find("layer"); layer != view.end() && layer->is_array()) {
    for (auto& child : *layer) strip_view(child);
  }
  for (auto key : kConcatKeys) {
    if (auto it = view.find(key); it != view.end() && it->is_array()) {
      for (auto& child : *it) strip_view(child);
    }
  }
}

void size_view(Document& view, int width, int height) {
  auto spread = [&](const char* key, bool horizontal) {
    Document& children = view[key];
    int n = std::max<int>(1, static_cast<int>(children.size()));
    for (auto& child : children) {
      size_view(child, horizontal ? width / n : width, horizontal ? height : height / n);
    }
  };
  if (view.contains("hconcat")) {
    spread("hconcat", true);
  } else if (view.contains("vconcat")) {
    spread("vconcat", false);
  } else if (view.contains("concat")) {
    Document& children = view["concat"];
    int n = std::max<int>(1, static_cast<int>(children.size()));
    int columns = n;
    if (auto c = view.find("columns"); c != view.end() && c->is_number_integer() && c->get<int>() > 0) {
      columns = std::min(n, c->get<int>());
    }
    int rows = (n + columns - 1) / columns;
    for (auto& child : children) size_view(child, width / columns, height / rows);
  } else {
    view["width"] = width;
    view["height"] = height;
  }
}

// --- anchors -----------------------------------------------------------------

std::optional<double> extent_top_left(const protocol::Extent& e, std::string_view channel,
                                      const ViewGeometry& g) {
  auto a = g.pixel(channel, e.lo);
  auto b = g.pixel(channel, e.hi);
  if (!a || !b) return std::nullopt;
  return std::min(*a, *b);
}

std::optional<PixelPoint> anchor_for(const InteractionKind& kind, const protocol::SelectionValue& value,
                                     const ViewGeometry& g) {
  if (const auto* mouse = std::get_if<protocol::MousePosition>(&value)) return PixelPoint{mouse->x, mouse->y};
  if (kind.type == InteractionType::IntervalBrush) {
    const auto* brush = std::get_if<protocol::IntervalExtents>(&value);
    if (!brush) return std::nullopt;
    auto x_it = brush->extents.find("x");
    auto y_it = brush->extents.find("y");
    if (x_it == brush->extents.end() && y_it == brush->extents.end()) return std::nullopt;
    PixelPoint p;
    if (x_it != brush->extents.end()) {
      auto x = extent_top_left(x_it->second, "x", g);
      if (!x) return std::nullopt;
      p.x = *x;
    }
    if (y_it != brush->extents.end()) {
      auto y = extent_top_left(y_it->second, "y", g);
      if (!y) return std::nullopt;
      p.y = *y;
    }
    return p;
  }
  if (kind.type == InteractionType::PointSelect) {
    const auto* points = std::get_if<protocol::PointTuples>(&value);
    if (!points || points->tuples.empty()) return std::nullopt;
    const auto& tuple = points->tuples.front();
    PixelPoint p;
    bool any = false;
    for (const char* ch : {"x", "y"}) {
      const ChannelBinding* b = kind.binding(ch);
      if (!b || b->field.empty()) continue;
      auto field = tuple.find(b->field);
      if (field == tuple.end()) return std::nullopt;
      auto px = g.pixel(ch, field->second);
      if (!px) return std::nullopt;
      (ch[0] == 'x' ? p.x : p.y) = *px;
      any = true;
    }
    if (!any) return std::nullopt;
    return p;
  }
  return std::nullopt;  // widgets and pan/zoom have no in-situ position
}

}  // namespace

// --- public API ------------------------------------------------------------------

VisSpec::VisSpec(Document document) : document_(std::move(document)) {
  if (!document_.is_object()) throw Error(ErrorCode::NotAnObject, "specification must be a JSON object");
  check_schema_url(document_);
}

VisSpec VisSpec::parse(std::string_view text) {
  Document doc;
  try {
    doc = Document::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::NotAnObject, std::string("specification is not valid JSON: ") + e.what());
  }
  return VisSpec(std::move(doc));
}

std::string VisSpec::schema_url() const {
  auto it = document_.find("$schema");
  return it != document_.end() && it->is_string() ? it->get<std::string>() : std::string{};
}

std::string_view to_string(InteractionType type) {
  switch (type) {
    case InteractionType::PointSelect: return "PointSelect";
    case InteractionType::IntervalBrush: return "IntervalBrush";
    case InteractionType::WidgetBound: return "WidgetBound";
    case InteractionType::ScaleBound: return "ScaleBound";
  }
  return {};
}

std::string_view to_string(RepresentationMode mode) {
  switch (mode) {
    case RepresentationMode::InSituGeneric: return "generic";
    case RepresentationMode::InSituSpecific: return "specific";
    case RepresentationMode::CursorLegend: return "legend";
    case RepresentationMode::ThumbnailLegend: return "thumbnail";
  }
  return {};
}

std::optional<RepresentationMode> mode_from_string(std::string_view name) {
  for (auto m : {RepresentationMode::InSituGeneric, RepresentationMode::InSituSpecific,
                 RepresentationMode::CursorLegend, RepresentationMode::ThumbnailLegend}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

const ChannelBinding* InteractionKind::binding(std::string_view channel) const {
  for (const auto& b : bindings) {
    if (b.channel == channel) return &b;
  }
  return nullptr;
}

std::vector<InteractionKind> parse_interactions(const VisSpec& spec) {
  std::vector<InteractionKind> kinds;
  walk_views(spec.document(), [&](const ViewVisit& v) {
    if (auto params = v.view.find("params"); params != v.view.end() && params->is_array()) {
      for (std::size_t i = 0; i < params->size(); ++i) {
        const Document& p = (*params)[i];
        auto name = p.find("name");
        if (!p.is_object() || name == p.end() || !name->is_string()) {
          unsupported(v.path + "/params/" + std::to_string(i), "parameter without a name");
        }
        if (auto k = classify(v, name->get<std::string>(), p, false)) kinds.push_back(std::move(*k));
      }
    }
    if (auto sel = v.view.find("selection"); sel != v.view.end() && sel->is_object()) {
      for (const auto& item : sel->items()) {
        if (auto k = classify(v, item.key(), item.value(), true)) kinds.push_back(std::move(*k));
      }
    }
  });
  return kinds;
}

RepresentationMode choose_default_mode(const std::vector<InteractionKind>& kinds) {
  auto has = [&](InteractionType t) {
    return std::any_of(kinds.begin(), kinds.end(), [&](const auto& k) { return k.type == t; });
  };
  if (has(InteractionType::WidgetBound) || has(InteractionType::ScaleBound)) {
    return RepresentationMode::CursorLegend;
  }
  if (has(InteractionType::IntervalBrush)) return RepresentationMode::InSituSpecific;
  return RepresentationMode::InSituGeneric;
}

bool is_annotated(const VisSpec& spec) {
  const Document& doc = spec.document();
  auto meta = doc.find("usermeta");
  return meta != doc.end() && meta->is_object() && meta->contains(kMarkerKey);
}

VisSpec annotate(const VisSpec& spec, RepresentationMode mode, const std::vector<InteractionKind>& kinds) {
  if (is_annotated(spec)) throw Error(ErrorCode::AlreadyAnnotated, "specification already carries a presence marker");
  const Document& original = spec.document();
  if (auto meta = original.find("usermeta"); meta != original.end() && !meta->is_object()) {
    throw Error(ErrorCode::InvalidSpec, "usermeta must be an object");
  }
  walk_views(original, [](const ViewVisit&) {});  // rejects unsupported shapes up front
  for (const auto& k : kinds) view_at(original, k.view_path);

  Document out = original;
  ParamNames params;
  Document marker = Document::object();
  marker["mode"] = to_string(mode);
  marker["data"] = kCursorDataName;

  switch (mode) {
    case RepresentationMode::InSituGeneric: {
      std::string target = kinds.empty() ? first_panel(original) : panel_of(original, kinds.front().view_path);
      std::vector<Document> extra;
      extra.push_back(generic_cursor_layer(params));
      replace_at(out, target, wrap_in_layer(view_at(original, target), target.empty(), std::move(extra)));
      marker["panels"] = Document::array({target});
      break;
    }
    case RepresentationMode::InSituSpecific: {
      // target path -> (append to an existing layer?, cursor layers)
      std::map<std::string, std::pair<bool, std::vector<Document>>> targets;
      std::vector<std::string> order;
      for (const auto& kind : kinds) {
        if (!specific_eligible(kind)) continue;
        const Document& host = view_at(original, kind.view_path);
        std::string target = kind.view_path;
        bool append = false;
        if (is_layer(host)) {
          append = true;
        } else if (!kind.view_path.empty()) {
          std::string parent = parent_view_path(kind.view_path);
          if (is_layer(view_at(original, parent))) {
            target = parent;
            append = true;
          }
        }
        auto [it, inserted] = targets.try_emplace(target, append, std::vector<Document>{});
        if (inserted) order.push_back(target);
        it->second.second.push_back(!rect_channels(kind).empty() ? rect_cursor_layer(kind, params)
                                                                 : rule_cursor_layer(kind, params));
      }
      if (targets.empty()) {
        throw Error(ErrorCode::ModeKindMismatch,
                    "specific cursors need a brush on a quantitative/temporal axis or a point selection on x");
      }
      Document panels = Document::array();
      for (const auto& target : order) {
        auto& [append, layers] = targets.at(target);
        if (append) {
          Document& layer_array = target.empty() ? out["layer"] : out[Pointer(target + "/layer")];
          for (auto& l : layers) layer_array.push_back(std::move(l));
        } else {
          replace_at(out, target, wrap_in_layer(view_at(original, target), target.empty(), std::move(layers)));
        }
        panels.push_back(target);
      }
      marker["panels"] = std::move(panels);
      break;
    }
    case RepresentationMode::CursorLegend:
      out = concat_beside(original, legend_panel(params));
      break;
    case RepresentationMode::ThumbnailLegend:
      out = concat_beside(original, thumbnail_panel(params));
      marker["thumbnail"] = make_thumbnail(spec).document();
      break;
  }

  Document names = Document::array();
  for (const auto& k : kinds) names.push_back(k.name);
  marker["interactions"] = std::move(names);
  marker["peek_params"] = params.peek;
  marker["track_params"] = params.track;
  if (!out.contains("usermeta")) out["usermeta"] = Document::object();
  out["usermeta"][std::string(kMarkerKey)] = std::move(marker);
  return VisSpec(std::move(out));
}

VisSpec make_thumbnail(const VisSpec& spec) {
  Document out = spec.document();
  strip_view(out);
  if (auto config = out.find("config"); config != out.end() && config->is_object()) {
    std::vector<std::string> doomed;
    for (const auto& item : config->items()) {
      const std::string& k = item.key();
      if (k == "title" || k == "legend" || k.starts_with("axis") || k.starts_with("header")) doomed.push_back(k);
    }
    for (const auto& k : doomed) config->erase(k);
  }
  if (is_unit(out) || is_layer(out) || is_concat(out)) size_view(out, kThumbnailWidth, kThumbnailHeight);
  return VisSpec(std::move(out));
}

// --- geometry ----------------------------------------------------------------------

double LinearScale::operator()(double v) const {
  if (domain_hi == domain_lo) return range_lo;
  return range_lo + (v - domain_lo) / (domain_hi - domain_lo) * (range_hi - range_lo);
}

std::optional<double> ViewGeometry::pixel(std::string_view channel, const protocol::Scalar& value) const {
  auto it = scales.find(std::string(channel));
  if (it == scales.end()) return std::nullopt;
  if (const auto* linear = std::get_if<LinearScale>(&it->second)) {
    const auto* v = std::get_if<double>(&value);
    if (!v) return std::nullopt;
    return (*linear)(*v);
  }
  const auto& ordinal = std::get<OrdinalScale>(it->second);
  std::string key = std::holds_alternative<std::string>(value) ? std::get<std::string>(value)
                                                               : protocol::to_json(value).dump();
  auto pos = ordinal.positions.find(key);
  if (pos == ordinal.positions.end()) return std::nullopt;
  return pos->second;
}

std::optional<PixelPoint> extract_anchor(const protocol::InteractionState& state,
                                         const std::vector<InteractionKind>& kinds, const ViewGeometry& geometry) {
  for (const auto& kind : kinds) {
    auto entry = state.entries.find(kind.name);
    if (entry == state.entries.end()) continue;
    if (auto p = anchor_for(kind, entry->second, geometry)) return p;
  }
  for (const auto& [name, value] : state.entries) {
    if (const auto* mouse = std::get_if<protocol::MousePosition>(&value)) return PixelPoint{mouse->x, mouse->y};
  }
  return std::nullopt;
}

protocol::OrderedJson to_json(const CursorDatum& d) {
  protocol::OrderedJson out = protocol::OrderedJson::object();
  out["user_id"] = d.user_id;
  out["color"] = d.color;
  out["label"] = d.label;
  if (d.selection) out["selection"] = *d.selection;
  if (d.anchor) {
    out["anchor_x"] = d.anchor->x;
    out["anchor_y"] = d.anchor->y;
  }
  if (d.rect) {
    if (d.rect->x) {
      out["x_lo"] = d.rect->x->lo;
      out["x_hi"] = d.rect->x->hi;
    }
    if (d.rect->y) {
      out["y_lo"] = d.rect->y->lo;
      out["y_hi"] = d.rect->y->hi;
    }
  }
  if (d.rule_x) out["rule_x"] = protocol::to_json(*d.rule_x);
  return out;
}

std::vector<CursorDatum> cursor_data(const std::vector<UserPresence>& roster, const UserId& self_id,
                                     RepresentationMode mode, const std::vector<InteractionKind>& kinds,
                                     const ViewGeometry& geometry, std::optional<std::uint64_t> view_epoch) {
  const bool in_situ = mode == RepresentationMode::InSituGeneric || mode == RepresentationMode::InSituSpecific;
  std::vector<const UserPresence*> remotes;
  for (const auto& u : roster) {
    if (u.user_id != self_id) remotes.push_back(&u);
  }
  std::sort(remotes.begin(), remotes.end(), [](auto* a, auto* b) { return a->user_id < b->user_id; });

  std::vector<CursorDatum> out;
  for (const UserPresence* user : remotes) {
    if (in_situ && view_epoch && user->state.view_epoch != *view_epoch) continue;
    CursorDatum d;
    d.user_id = user->user_id;
    d.color = user->color;
    d.label = user->name.empty() ? user->user_id : user->name;
    switch (mode) {
      case RepresentationMode::InSituGeneric:
        d.anchor = extract_anchor(user->state, kinds, geometry);
        if (!d.anchor) continue;
        break;
      case RepresentationMode::InSituSpecific: {
        bool found = false;
        for (const auto& kind : kinds) {
          auto entry = user->state.entries.find(kind.name);
          if (entry == user->state.entries.end()) continue;
          if (auto channels = rect_channels(kind); !channels.empty()) {
            const auto* brush = std::get_if<protocol::IntervalExtents>(&entry->second);
            if (!brush) continue;
            RectExtents rect;
            for (const auto& ch : channels) {
              if (auto e = brush->extents.find(ch); e != brush->extents.end()) (ch == "x" ? rect.x : rect.y) = e->second;
            }
            if (!rect.x && !rect.y) continue;
            d.rect = rect;
          } else if (has_rule_channel(kind)) {
            const auto* points = std::get_if<protocol::PointTuples>(&entry->second);
            if (!points || points->tuples.empty()) continue;
            auto field = points->tuples.front().find(kind.binding("x")->field);
            if (field == points->tuples.front().end()) continue;
            d.rule_x = field->second;
          } else {
            continue;
          }
          d.selection = kind.name;
          found = true;
          break;
        }
        if (!found) continue;
        break;
      }
      case RepresentationMode::CursorLegend:
      case RepresentationMode::ThumbnailLegend:
        break;
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace vis_presence::annotator
