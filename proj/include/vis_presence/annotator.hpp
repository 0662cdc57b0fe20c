#pragma once

// Vega-Lite specification rewriting: discovers a chart's interactions and
// injects the marks, data and parameters that depict remote collaborators.
//
// Four representations are supported, spanning in-situ vs. external
// placement and generic vs. chart-specific design:
//   InSituGeneric    small translucent circles at each collaborator's anchor
//   InSituSpecific   brush outlines / index rules drawn in data units
//   CursorLegend     an adjacent panel with one swatch + name per collaborator
//   ThumbnailLegend  an adjacent panel of reduced previews of remote views
//
// Documents are nlohmann::ordered_json so untouched content keeps its key
// order byte-for-byte.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vis_presence/protocol.hpp"
#include "vis_presence/user_presence.hpp"

namespace vis_presence::annotator {

using Document = nlohmann::ordered_json;

inline constexpr std::string_view kCursorDataName = "__presence_cursors__";
inline constexpr std::string_view kMarkerKey = "__presence__";
inline constexpr std::string_view kPeekParam = "__presence_peek__";
inline constexpr std::string_view kTrackParam = "__presence_track__";
inline constexpr int kThumbnailWidth = 100;
inline constexpr int kThumbnailHeight = 60;

/// A Vega-Lite document. Construction checks that it is a JSON object and
/// that `$schema`, when present, names a Vega-Lite schema.
class VisSpec {
 public:
  /// Throws NotAnObject, InvalidSpec.
  explicit VisSpec(Document document);
  /// Parses text first; malformed JSON is reported as NotAnObject.
  static VisSpec parse(std::string_view text);

  const Document& document() const noexcept { return document_; }
  std::string schema_url() const;
  std::string dump(int indent = -1) const { return document_.dump(indent); }

 private:
  Document document_;
};

enum class InteractionType { PointSelect, IntervalBrush, WidgetBound, ScaleBound };

std::string_view to_string(InteractionType type);

/// The field and type an encoding channel maps in the view hosting a selection.
struct ChannelBinding {
  std::string channel;
  std::string field;
  std::string type;  // quantitative | temporal | ordinal | nominal, may be empty
  friend bool operator==(const ChannelBinding&, const ChannelBinding&) = default;
};

struct InteractionKind {
  std::string name;
  InteractionType type = InteractionType::PointSelect;
  std::vector<std::string> channels;
  std::string event_source;
  /// JSON pointer of the view that declares the selection ("" for the root).
  std::string view_path;
  std::vector<ChannelBinding> bindings;
  friend bool operator==(const InteractionKind&, const InteractionKind&) = default;

  const ChannelBinding* binding(std::string_view channel) const;
};

enum class RepresentationMode { InSituGeneric, InSituSpecific, CursorLegend, ThumbnailLegend };

/// CLI names: generic | specific | legend | thumbnail.
std::string_view to_string(RepresentationMode mode);
std::optional<RepresentationMode> mode_from_string(std::string_view name);

/// Every selection/parameter in document order. Throws UnsupportedSpec for
/// facet and repeat operators (and row/column/facet channels).
std::vector<InteractionKind> parse_interactions(const VisSpec& spec);

/// Widgets or pan/zoom -> CursorLegend; else brushes -> InSituSpecific;
/// else InSituGeneric.
RepresentationMode choose_default_mode(const std::vector<InteractionKind>& kinds);

/// Throws AlreadyAnnotated, ModeKindMismatch, UnsupportedSpec.
VisSpec annotate(const VisSpec& spec, RepresentationMode mode,
                 const std::vector<InteractionKind>& kinds);

bool is_annotated(const VisSpec& spec);

/// Strips titles, axes and legends at every level and sizes the view to
/// 100x60 pixels. Idempotent.
VisSpec make_thumbnail(const VisSpec& spec);

// --- cursor geometry --------------------------------------------------------

struct PixelPoint {
  double x = 0;
  double y = 0;
  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

/// Linear data->pixel mapping; the range may be inverted (y grows downward).
struct LinearScale {
  double domain_lo = 0;
  double domain_hi = 1;
  double range_lo = 0;
  double range_hi = 1;
  double operator()(double v) const;
};

/// Discrete data->pixel mapping (band centers for nominal/ordinal axes).
struct OrdinalScale {
  std::map<std::string, double> positions;
};

using ScaleMapping = std::variant<LinearScale, OrdinalScale>;

struct ViewGeometry {
  double width = 0;
  double height = 0;
  std::map<std::string, ScaleMapping> scales;  // keyed by channel

  /// Pixel of a data value on a channel, if the channel is mapped and the
  /// value is representable on it.
  std::optional<double> pixel(std::string_view channel, const protocol::Scalar& value) const;
};

/// Top-left pixel of a brush, the pixel of a point selection's first tuple,
/// or a raw mouse position. The first kind (in order) whose selection has a
/// usable value wins; a MousePosition entry is the fallback. std::nullopt
/// means there is no anchor and the in-situ cursor is hidden.
std::optional<PixelPoint> extract_anchor(const protocol::InteractionState& state,
                                         const std::vector<InteractionKind>& kinds,
                                         const ViewGeometry& geometry);

struct RectExtents {
  std::optional<protocol::Extent> x;
  std::optional<protocol::Extent> y;
  friend bool operator==(const RectExtents&, const RectExtents&) = default;
};

/// One row of the injected cursor data source.
struct CursorDatum {
  UserId user_id;
  std::string color;
  std::string label;
  std::optional<std::string> selection;  // the selection a specific cursor depicts
  std::optional<PixelPoint> anchor;      // InSituGeneric
  std::optional<RectExtents> rect;       // InSituSpecific brush outline, data units
  std::optional<protocol::Scalar> rule_x;  // InSituSpecific index rule, data units
  friend bool operator==(const CursorDatum&, const CursorDatum&) = default;
};

protocol::OrderedJson to_json(const CursorDatum& datum);

/// One datum per remote user with a representable geometry for `mode`,
/// ascending by user_id; `self_id` is excluded. With `view_epoch` set, in-situ
/// modes also omit users whose state has a different epoch: their data
/// coordinates may not match the local axes, so they appear in legends only.
std::vector<CursorDatum> cursor_data(const std::vector<UserPresence>& roster, const UserId& self_id,
                                     RepresentationMode mode,
                                     const std::vector<InteractionKind>& kinds,
                                     const ViewGeometry& geometry,
                                     std::optional<std::uint64_t> view_epoch = std::nullopt);

}  // namespace vis_presence::annotator
