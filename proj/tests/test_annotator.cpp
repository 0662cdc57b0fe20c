#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "expect_error.hpp"
#include "generators.hpp"
#include "json_schema.hpp"
#include "unannotate.hpp"
#include "vis_presence/annotator.hpp"

namespace {

using testing_support::unannotate;

using namespace vis_presence;
using namespace vis_presence::annotator;
using protocol::Extent;
using protocol::IntervalExtents;
using protocol::InteractionState;
using protocol::MousePosition;
using protocol::PointTuples;

const std::vector<std::string> kGallery = {"histogram_brush",  "line_rule_hover",   "overview_detail",
                                           "pan_zoom_scatter", "query_widget_scatter", "scatter_point_select"};
const RepresentationMode kModes[] = {RepresentationMode::InSituGeneric, RepresentationMode::InSituSpecific,
                                     RepresentationMode::CursorLegend, RepresentationMode::ThumbnailLegend};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

VisSpec gallery(const std::string& name) {
  return VisSpec::parse(read_file(std::filesystem::path(VP_SOURCE_DIR) / "gallery/specs" / (name + ".vl.json")));
}

VisSpec spec_of(const char* text) { return VisSpec::parse(text); }

const char* kBar = R"({
  "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
  "title": "Bars",
  "data": {"values": [{"a": "A", "b": 28}, {"a": "B", "b": 55}]},
  "params": [{"name": "pick", "select": "point"}],
  "mark": "bar",
  "encoding": {"x": {"field": "a", "type": "nominal", "title": "Letter"}, "y": {"field": "b", "type": "quantitative"}}
})";

// --- parse_interactions ----------------------------------------------------------

TEST(ParseInteractions, ClassifiesTheGallery) {
  auto kinds = parse_interactions(gallery("histogram_brush"));
  ASSERT_EQ(kinds.size(), 1u);
  EXPECT_EQ(kinds[0], (InteractionKind{"brush", InteractionType::IntervalBrush, {"x"}, "drag", "",
                                       {{"x", "Horsepower", "quantitative"}}}));

  kinds = parse_interactions(gallery("line_rule_hover"));
  ASSERT_EQ(kinds.size(), 1u);
  EXPECT_EQ(kinds[0], (InteractionKind{"index", InteractionType::PointSelect, {"x"}, "pointerover", "/layer/1",
                                       {{"x", "date", "temporal"}}}));

  kinds = parse_interactions(gallery("overview_detail"));
  ASSERT_EQ(kinds.size(), 1u);
  EXPECT_EQ(kinds[0], (InteractionKind{"brush", InteractionType::IntervalBrush, {"x"}, "drag", "/vconcat/1",
                                       {{"x", "date", "temporal"}}}));

  kinds = parse_interactions(gallery("pan_zoom_scatter"));
  ASSERT_EQ(kinds.size(), 1u);
  EXPECT_EQ(kinds[0],
            (InteractionKind{"grid", InteractionType::ScaleBound, {"x", "y"}, "drag, wheel", "",
                             {{"x", "Horsepower", "quantitative"}, {"y", "Miles_per_Gallon", "quantitative"}}}));

  kinds = parse_interactions(gallery("query_widget_scatter"));
  ASSERT_EQ(kinds.size(), 1u);
  EXPECT_EQ(kinds[0].name, "query");
  EXPECT_EQ(kinds[0].type, InteractionType::WidgetBound);
  EXPECT_EQ(kinds[0].event_source, "input");

  kinds = parse_interactions(gallery("scatter_point_select"));
  ASSERT_EQ(kinds.size(), 1u);
  EXPECT_EQ(kinds[0], (InteractionKind{"pick", InteractionType::PointSelect, {}, "click", "", {}}));
}

TEST(ParseInteractions, HandlesWidgetsVariablesAndLegacySelections) {
  auto kinds = parse_interactions(spec_of(R"({
    "params": [
      {"name": "size", "value": 3, "bind": {"input": "range", "min": 1, "max": 9}},
      {"name": "plain", "value": 1},
      {"name": "legendPick", "select": {"type": "point", "fields": ["c"]}, "bind": "legend"}
    ],
    "selection": {"old": {"type": "interval", "encodings": ["y"]}},
    "mark": "point",
    "encoding": {"y": {"field": "v", "type": "quantitative"}, "color": {"field": "c", "type": "nominal"}}
  })"));
  ASSERT_EQ(kinds.size(), 3u);
  EXPECT_EQ(kinds[0].name, "size");
  EXPECT_EQ(kinds[0].type, InteractionType::WidgetBound);
  EXPECT_EQ(kinds[0].event_source, "input:range");
  EXPECT_EQ(kinds[1].name, "legendPick");
  EXPECT_EQ(kinds[1].type, InteractionType::PointSelect);
  EXPECT_EQ(kinds[1].channels, std::vector<std::string>{"color"});
  EXPECT_EQ(kinds[2], (InteractionKind{"old", InteractionType::IntervalBrush, {"y"}, "drag", "",
                                       {{"y", "v", "quantitative"}}}));
}

TEST(ParseInteractions, RejectsFacetAndRepeat) {
  EXPECT_ERROR_CODE(parse_interactions(spec_of(R"({"facet": {"row": {"field": "a"}}, "spec": {"mark": "bar"}})")),
                    ErrorCode::UnsupportedSpec);
  EXPECT_ERROR_CODE(parse_interactions(spec_of(R"({"repeat": ["a", "b"], "spec": {"mark": "bar"}})")),
                    ErrorCode::UnsupportedSpec);
  EXPECT_ERROR_CODE(
      parse_interactions(spec_of(R"({"mark": "bar", "encoding": {"column": {"field": "a", "type": "nominal"}}})")),
      ErrorCode::UnsupportedSpec);
  EXPECT_ERROR_CODE(parse_interactions(spec_of(R"({"hconcat": [{"mark": "bar"}, {"repeat": ["a"], "spec": {}}]})")),
                    ErrorCode::UnsupportedSpec);
}

TEST(VisSpecTest, RejectsNonObjectsAndForeignSchemas) {
  EXPECT_ERROR_CODE(VisSpec::parse("[1, 2]"), ErrorCode::NotAnObject);
  EXPECT_ERROR_CODE(VisSpec::parse("{oops"), ErrorCode::NotAnObject);
  EXPECT_ERROR_CODE(VisSpec::parse(R"({"$schema": "https://vega.github.io/schema/vega/v5.json"})"),
                    ErrorCode::InvalidSpec);
  EXPECT_EQ(spec_of(kBar).schema_url(), "https://vega.github.io/schema/vega-lite/v5.json");
}

TEST(DefaultMode, FollowsInteractionMix) {
  auto kind = [](InteractionType t) { return InteractionKind{"k", t, {}, "", "", {}}; };
  EXPECT_EQ(choose_default_mode({}), RepresentationMode::InSituGeneric);
  EXPECT_EQ(choose_default_mode({kind(InteractionType::PointSelect)}), RepresentationMode::InSituGeneric);
  EXPECT_EQ(choose_default_mode({kind(InteractionType::PointSelect), kind(InteractionType::IntervalBrush)}),
            RepresentationMode::InSituSpecific);
  EXPECT_EQ(choose_default_mode({kind(InteractionType::IntervalBrush), kind(InteractionType::WidgetBound)}),
            RepresentationMode::CursorLegend);
  EXPECT_EQ(choose_default_mode({kind(InteractionType::ScaleBound)}), RepresentationMode::CursorLegend);
}

TEST(DefaultMode, NamesRoundTrip) {
  for (auto mode : kModes) EXPECT_EQ(mode_from_string(to_string(mode)), mode);
  EXPECT_EQ(mode_from_string("overlay"), std::nullopt);
}

// --- annotate ----------------------------------------------------------------------

TEST(Annotate, GenericBarChartBecomesLayerWithCursorLayer) {
  const VisSpec bar = spec_of(kBar);
  const Document out = annotate(bar, RepresentationMode::InSituGeneric, parse_interactions(bar)).document();

  Document original_content = bar.document();
  original_content.erase("$schema");
  original_content.erase("title");
  std::vector<std::string> keys;
  for (const auto& item : out.items()) keys.push_back(item.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"$schema", "title", "layer", "usermeta"}));
  ASSERT_EQ(out["layer"].size(), 2u);
  EXPECT_EQ(out["layer"][0].dump(), original_content.dump());

  const Document& cursor = out["layer"][1];
  EXPECT_EQ(cursor["data"].dump(), R"({"name":"__presence_cursors__"})");
  EXPECT_EQ(cursor["mark"].dump(), R"({"type":"circle","size":64,"opacity":0.6})");
  EXPECT_EQ(cursor["encoding"]["x"].dump(), R"({"field":"anchor_x","type":"quantitative","scale":null,"axis":null})");
  EXPECT_EQ(cursor["encoding"]["fill"].dump(), R"({"field":"color","type":"nominal","scale":null,"legend":null})");
  EXPECT_EQ(cursor["params"][0]["name"], "__presence_peek__");
  EXPECT_EQ(cursor["params"][1]["name"], "__presence_track__");

  EXPECT_EQ(out["usermeta"].dump(),
            R"({"__presence__":{"mode":"generic","data":"__presence_cursors__","panels":[""],)"
            R"("interactions":["pick"],"peek_params":["__presence_peek__"],"track_params":["__presence_track__"]}})");
  EXPECT_TRUE(is_annotated(VisSpec(out)));
}

TEST(Annotate, OverviewDetailSpecificDrawsOnlyOnTheBrushedPanel) {
  const VisSpec spec = gallery("overview_detail");
  const Document out = annotate(spec, RepresentationMode::InSituSpecific, parse_interactions(spec)).document();
  EXPECT_EQ(out["vconcat"][0], spec.document()["vconcat"][0]);
  const Document& panel = out["vconcat"][1];
  ASSERT_TRUE(panel.contains("layer"));
  ASSERT_EQ(panel["layer"].size(), 2u);
  EXPECT_EQ(panel["width"], spec.document()["vconcat"][1]["width"]);
  const Document& rect = panel["layer"][1];
  EXPECT_EQ(rect["mark"]["type"], "rect");
  EXPECT_EQ(rect["transform"].dump(), R"([{"filter":{"field":"selection","equal":"brush"}}])");
  EXPECT_EQ(rect["encoding"]["x"].dump(), R"({"field":"x_lo","type":"temporal","title":null})");
  EXPECT_EQ(rect["encoding"]["x2"].dump(), R"({"field":"x_hi"})");
  EXPECT_FALSE(rect["encoding"].contains("y"));
  EXPECT_EQ(out["usermeta"]["__presence__"]["panels"].dump(), R"(["/vconcat/1"])");
}

TEST(Annotate, LineRuleAppendsToTheExistingLayer) {
  const VisSpec spec = gallery("line_rule_hover");
  const Document out = annotate(spec, RepresentationMode::InSituSpecific, parse_interactions(spec)).document();
  ASSERT_EQ(out["layer"].size(), 3u);
  EXPECT_EQ(out["layer"][0], spec.document()["layer"][0]);
  EXPECT_EQ(out["layer"][1], spec.document()["layer"][1]);
  EXPECT_EQ(out["layer"][2]["mark"]["type"], "rule");
  EXPECT_EQ(out["layer"][2]["encoding"]["x"].dump(), R"({"field":"rule_x","type":"temporal","title":null})");
  EXPECT_EQ(out["usermeta"]["__presence__"]["panels"].dump(), R"([""])");
}

TEST(Annotate, LegendModesPlaceAPanelBeside) {
  const VisSpec bar = spec_of(kBar);
  for (auto mode : {RepresentationMode::CursorLegend, RepresentationMode::ThumbnailLegend}) {
    const Document out = annotate(bar, mode, parse_interactions(bar)).document();
    ASSERT_EQ(out["hconcat"].size(), 2u);
    EXPECT_EQ(out["hconcat"][0]["mark"], "bar");
    EXPECT_EQ(out["hconcat"][1]["data"]["name"], "__presence_cursors__");
    EXPECT_EQ(out["title"], "Bars");
  }
  const Document thumb = annotate(bar, RepresentationMode::ThumbnailLegend, {}).document();
  EXPECT_EQ(thumb["usermeta"]["__presence__"]["thumbnail"], make_thumbnail(bar).document());
  EXPECT_EQ(thumb["hconcat"][1]["width"], kThumbnailWidth);
}

TEST(Annotate, KeepsExistingUsermeta) {
  const VisSpec spec = spec_of(R"({"mark": "bar", "usermeta": {"owner": "team"}})");
  const Document out = annotate(spec, RepresentationMode::CursorLegend, {}).document();
  EXPECT_EQ(out["usermeta"]["owner"], "team");
  EXPECT_TRUE(out["usermeta"].contains("__presence__"));
  EXPECT_ERROR_CODE(annotate(spec_of(R"({"mark": "bar", "usermeta": 3})"), RepresentationMode::CursorLegend, {}),
                    ErrorCode::InvalidSpec);
}

TEST(Annotate, Errors) {
  const VisSpec bar = spec_of(kBar);
  const VisSpec once = annotate(bar, RepresentationMode::InSituGeneric, parse_interactions(bar));
  EXPECT_ERROR_CODE(annotate(once, RepresentationMode::CursorLegend, {}), ErrorCode::AlreadyAnnotated);
  EXPECT_ERROR_CODE(annotate(bar, RepresentationMode::InSituSpecific, parse_interactions(bar)),
                    ErrorCode::ModeKindMismatch);
  for (const char* name : {"pan_zoom_scatter", "query_widget_scatter", "scatter_point_select"}) {
    const VisSpec spec = gallery(name);
    EXPECT_ERROR_CODE(annotate(spec, RepresentationMode::InSituSpecific, parse_interactions(spec)),
                      ErrorCode::ModeKindMismatch);
  }
  EXPECT_ERROR_CODE(annotate(spec_of(R"({"repeat": ["a"], "spec": {"mark": "bar"}})"),
                             RepresentationMode::CursorLegend, {}),
                    ErrorCode::UnsupportedSpec);
  InteractionKind ghost{"ghost", InteractionType::PointSelect, {}, "click", "/vconcat/7", {}};
  EXPECT_ERROR_CODE(annotate(bar, RepresentationMode::InSituGeneric, {ghost}), ErrorCode::ModeKindMismatch);
}

TEST(Annotate, OriginalContentIsPreserved) {
  std::vector<VisSpec> corpus;
  for (const auto& name : kGallery) corpus.push_back(gallery(name));
  corpus.push_back(spec_of(kBar));
  for (const auto& spec : corpus) {
    const auto kinds = parse_interactions(spec);
    for (auto mode : kModes) {
      VisSpec out(Document::object());
      try {
        out = annotate(spec, mode, kinds);
      } catch (const Error& e) {
        ASSERT_EQ(e.code(), ErrorCode::ModeKindMismatch);
        continue;
      }
      EXPECT_EQ(unannotate(out.document()), nlohmann::json::parse(spec.dump()))
          << to_string(mode) << "\n" << out.dump(2);
    }
  }
}

TEST(Annotate, ParamNamesAreUniqueAcrossCursorLayers) {
  const VisSpec spec = spec_of(R"({
    "vconcat": [
      {"params": [{"name": "a", "select": {"type": "interval", "encodings": ["x"]}}], "mark": "point",
       "encoding": {"x": {"field": "u", "type": "quantitative"}}},
      {"params": [{"name": "b", "select": {"type": "interval", "encodings": ["x"]}}], "mark": "point",
       "encoding": {"x": {"field": "v", "type": "quantitative"}}}
    ]
  })");
  const Document out = annotate(spec, RepresentationMode::InSituSpecific, parse_interactions(spec)).document();
  const auto& meta = out["usermeta"]["__presence__"];
  EXPECT_EQ(meta["panels"].dump(), R"(["/vconcat/0","/vconcat/1"])");
  EXPECT_EQ(meta["peek_params"].dump(), R"(["__presence_peek__","__presence_peek_2__"])");
  EXPECT_EQ(meta["track_params"].dump(), R"(["__presence_track__","__presence_track_2__"])");
}

class AnnotateSchema : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    validator_ = new testing_support::SchemaValidator(testing_support::SchemaValidator::from_file(
        std::string(VP_SOURCE_DIR) + "/tests/data/vega-lite-v5.schema.json"));
  }
  static void TearDownTestSuite() {
    delete validator_;
    validator_ = nullptr;
  }
  static testing_support::SchemaValidator* validator_;
};

testing_support::SchemaValidator* AnnotateSchema::validator_ = nullptr;

TEST_F(AnnotateSchema, GalleryOutputsValidate) {
  int validated = 0;
  for (const auto& name : kGallery) {
    const VisSpec spec = gallery(name);
    EXPECT_TRUE(validator_->validate(nlohmann::json::parse(spec.dump())).empty()) << name;
    const auto kinds = parse_interactions(spec);
    for (auto mode : kModes) {
      if (mode == RepresentationMode::InSituSpecific &&
          (name == "pan_zoom_scatter" || name == "query_widget_scatter" || name == "scatter_point_select")) {
        continue;
      }
      const VisSpec out = annotate(spec, mode, kinds);
      const auto errors = validator_->validate(nlohmann::json::parse(out.dump()));
      EXPECT_TRUE(errors.empty()) << name << " / " << to_string(mode) << ": " << (errors.empty() ? "" : errors[0]);
      ++validated;
    }
  }
  EXPECT_EQ(validated, 21);
}

TEST_F(AnnotateSchema, RejectsABrokenDocument) {
  EXPECT_FALSE(validator_->validate(nlohmann::json::parse(R"({"mark": "bar", "encoding": {"x": 5}})")).empty());
  EXPECT_FALSE(validator_->validate(nlohmann::json::parse(R"({"mark": "sparkle"})")).empty());
}

// --- thumbnails ----------------------------------------------------------------------

TEST(Thumbnail, StripsChromeAndResizes) {
  const Document out = make_thumbnail(spec_of(R"({
    "title": "T",
    "width": 400,
    "params": [{"name": "w", "value": 1, "bind": {"input": "range"}}, {"name": "p", "select": "point"}],
    "config": {"axisX": {"grid": false}, "legend": {"orient": "top"}, "mark": {"tooltip": true}},
    "mark": "point",
    "encoding": {"x": {"field": "a", "type": "quantitative", "title": "A"}, "color": {"field": "c", "type": "nominal"},
                 "size": {"value": 4}}
  })")).document();
  EXPECT_EQ(out.dump(),
            R"({"width":100,"params":[{"name":"w","value":1},{"name":"p","select":"point"}],)"
            R"("config":{"mark":{"tooltip":true}},"mark":"point",)"
            R"("encoding":{"x":{"field":"a","type":"quantitative","axis":null},)"
            R"("color":{"field":"c","type":"nominal","legend":null},"size":{"value":4}},"height":60})");
}

TEST(Thumbnail, SplitsSizeAcrossConcat) {
  const Document out = make_thumbnail(gallery("overview_detail")).document();
  EXPECT_EQ(out["vconcat"][0]["width"], 100);
  EXPECT_EQ(out["vconcat"][0]["height"], 30);
  EXPECT_EQ(out["vconcat"][1]["height"], 30);
  EXPECT_EQ(out["vconcat"][0]["encoding"]["x"]["axis"], nullptr);
}

TEST(Thumbnail, IsIdempotent) {
  std::vector<VisSpec> corpus;
  for (const auto& name : kGallery) corpus.push_back(gallery(name));
  corpus.push_back(spec_of(kBar));
  for (const auto& spec : corpus) {
    const VisSpec once = make_thumbnail(spec);
    EXPECT_EQ(make_thumbnail(once).dump(), once.dump());
  }
}

// --- anchors and cursor data ---------------------------------------------------------

ViewGeometry geometry_xy() {
  ViewGeometry g;
  g.width = 100;
  g.height = 100;
  g.scales["x"] = LinearScale{0, 100, 0, 100};
  g.scales["y"] = LinearScale{0, 100, 100, 0};  // y grows downward
  return g;
}

InteractionKind brush_xy() {
  return {"brush", InteractionType::IntervalBrush, {"x", "y"}, "drag", "",
          {{"x", "p", "quantitative"}, {"y", "q", "quantitative"}}};
}

TEST(Anchor, ContractExamples) {
  const auto g = geometry_xy();
  InteractionState mouse;
  mouse.entries["mouse"] = MousePosition{120, 80};
  EXPECT_EQ(extract_anchor(mouse, {}, g), (PixelPoint{120, 80}));

  InteractionState brush;
  brush.entries["brush"] = IntervalExtents{{{"x", Extent{10, 40}}, {"y", Extent{5, 20}}}};
  // top-left: the smaller pixel of each extent; y(20) = 80 is above y(5) = 95
  EXPECT_EQ(extract_anchor(brush, {brush_xy()}, g), (PixelPoint{10, 80}));

  EXPECT_EQ(extract_anchor(InteractionState{}, {brush_xy()}, g), std::nullopt);
}

TEST(Anchor, PointSelectionUsesFirstTuple) {
  ViewGeometry g = geometry_xy();
  g.scales["x"] = OrdinalScale{{{"A", 25}, {"B", 75}}};
  InteractionKind pick{"pick", InteractionType::PointSelect, {"x"}, "click", "", {{"x", "a", "nominal"}}};
  InteractionState s;
  s.entries["pick"] = PointTuples{{{{"a", std::string("B")}}, {{"a", std::string("A")}}}};
  EXPECT_EQ(extract_anchor(s, {pick}, g), (PixelPoint{75, 0}));
  s.entries["pick"] = PointTuples{{{{"a", std::string("Z")}}}};
  EXPECT_EQ(extract_anchor(s, {pick}, g), std::nullopt);
  s.entries["hover"] = MousePosition{3, 4};
  EXPECT_EQ(extract_anchor(s, {pick}, g), (PixelPoint{3, 4}));
}

TEST(Anchor, ShiftingABrushShiftsTheAnchor) {
  testing_support::Generator gen(5);
  const auto g = geometry_xy();
  for (int i = 0; i < 500; ++i) {
    const double lo = gen.number(), width = std::abs(gen.number()), d = std::abs(gen.number());
    InteractionState a, b;
    a.entries["brush"] = IntervalExtents{{{"x", Extent{lo, lo + width}}}};
    b.entries["brush"] = IntervalExtents{{{"x", Extent{lo + d, lo + width + d}}}};
    const auto pa = extract_anchor(a, {brush_xy()}, g);
    const auto pb = extract_anchor(b, {brush_xy()}, g);
    ASSERT_TRUE(pa && pb);
    EXPECT_NEAR(pb->x - pa->x, d, 1e-9 * (1 + std::abs(lo) + width + d));
    EXPECT_EQ(pa->y, pb->y);
  }
}

UserPresence user(const std::string& id, const std::string& name, InteractionState state) {
  UserPresence u;
  u.user_id = id;
  u.name = name;
  u.color = "#" + id + "0000";
  u.state = std::move(state);
  return u;
}

TEST(CursorData, GenericAndLegendRows) {
  InteractionState brushed;
  brushed.entries["brush"] = IntervalExtents{{{"x", Extent{10, 40}}}};
  InteractionState other_epoch = brushed;
  other_epoch.view_epoch = 1;
  const std::vector<UserPresence> roster = {user("u4", "Dee", other_epoch), user("u1", "Me", brushed),
                                            user("u3", "", {}), user("u2", "Bo", brushed)};
  const auto g = geometry_xy();

  const auto generic = cursor_data(roster, "u1", RepresentationMode::InSituGeneric, {brush_xy()}, g, 0);
  ASSERT_EQ(generic.size(), 1u);
  EXPECT_EQ(generic[0].user_id, "u2");
  EXPECT_EQ(generic[0].anchor, (PixelPoint{10, 0}));
  EXPECT_EQ(to_json(generic[0]).dump(),
            R"({"user_id":"u2","color":"#u20000","label":"Bo","anchor_x":10.0,"anchor_y":0.0})");

  const auto unfiltered = cursor_data(roster, "u1", RepresentationMode::InSituGeneric, {brush_xy()}, g);
  ASSERT_EQ(unfiltered.size(), 2u);
  EXPECT_EQ(unfiltered[1].user_id, "u4");

  const auto legend = cursor_data(roster, "u1", RepresentationMode::CursorLegend, {brush_xy()}, g, 0);
  ASSERT_EQ(legend.size(), 3u);
  EXPECT_EQ(legend[0].user_id, "u2");
  EXPECT_EQ(legend[1].label, "u3");
  EXPECT_EQ(legend[2].user_id, "u4");
  EXPECT_EQ(to_json(legend[1]).dump(), R"({"user_id":"u3","color":"#u30000","label":"u3"})");
}

TEST(CursorData, SpecificRowsCarryDataUnits) {
  InteractionState brushed;
  brushed.entries["brush"] = IntervalExtents{{{"x", Extent{10, 40}}, {"y", Extent{1, 2}}}};
  InteractionState indexed;
  indexed.entries["index"] = PointTuples{{{{"date", std::string("2009-03-01")}}}};
  const InteractionKind brush{"brush", InteractionType::IntervalBrush, {"x"}, "drag", "", {{"x", "p", "quantitative"}}};
  const InteractionKind index{"index", InteractionType::PointSelect, {"x"}, "click", "", {{"x", "date", "temporal"}}};
  const auto rows = cursor_data({user("u2", "Bo", brushed), user("u3", "Cy", indexed), user("u4", "Dee", {})}, "u1",
                                RepresentationMode::InSituSpecific, {brush, index}, geometry_xy());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(to_json(rows[0]).dump(),
            R"({"user_id":"u2","color":"#u20000","label":"Bo","selection":"brush","x_lo":10.0,"x_hi":40.0})");
  EXPECT_EQ(to_json(rows[1]).dump(),
            R"({"user_id":"u3","color":"#u30000","label":"Cy","selection":"index","rule_x":"2009-03-01"})");
}

}  // namespace
