#include "thermident/building.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "thermident/error.hpp"
#include "thermident/json_doc.hpp"

namespace thermident {
namespace {

using json = nlohmann::json;
using pointer = json::json_pointer;

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorCode::kInvalid, message);
}

ElementKind parse_kind(const JsonDocument& doc, const pointer& where) {
  const std::string s = doc.string(where);
  if (s == "room-air") return ElementKind::kRoomAir;
  if (s == "wall") return ElementKind::kWall;
  if (s == "floor") return ElementKind::kFloor;
  if (s == "ceiling") return ElementKind::kCeiling;
  if (s == "window-bearing-wall") return ElementKind::kWindowBearingWall;
  doc.fail(where, "unknown element kind '" + s + "'");
}

Orientation parse_orientation(const JsonDocument& doc, const pointer& where) {
  const std::string s = doc.string(where);
  if (s == "E") return Orientation::kEast;
  if (s == "S") return Orientation::kSouth;
  if (s == "W") return Orientation::kWest;
  if (s == "N") return Orientation::kNorth;
  doc.fail(where, "orientation must be one of E, S, W, N");
}

}  // namespace

std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::kRoomAir: return "room-air";
    case ElementKind::kWall: return "wall";
    case ElementKind::kFloor: return "floor";
    case ElementKind::kCeiling: return "ceiling";
    case ElementKind::kWindowBearingWall: return "window-bearing-wall";
  }
  return "?";
}

std::string_view to_string(Orientation orientation) {
  switch (orientation) {
    case Orientation::kNone: return "";
    case Orientation::kEast: return "E";
    case Orientation::kSouth: return "S";
    case Orientation::kWest: return "W";
    case Orientation::kNorth: return "N";
  }
  return "?";
}

const Zone* BuildingDescription::find_zone(std::string_view id) const {
  for (const auto& z : zones) {
    if (z.id == id) return &z;
  }
  return nullptr;
}

const BuildingElement* BuildingDescription::find_element(std::string_view id) const {
  for (const auto& e : elements) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

std::optional<std::size_t> BuildingDescription::zone_index(std::string_view id) const {
  for (std::size_t i = 0; i < zones.size(); ++i) {
    if (zones[i].id == id) return i;
  }
  return std::nullopt;
}

std::string BuildingDescription::box_zone(const VavBox& box) const {
  const BuildingElement* room = find_element(box.room);
  return room ? room->zone : std::string{};
}

void validate(const BuildingDescription& desc) {
  if (desc.zones.empty()) invalid("building has no zones");

  std::set<std::string> zone_ids;
  for (const auto& z : desc.zones) {
    if (z.id.empty()) invalid("zone with empty id");
    if (!zone_ids.insert(z.id).second) invalid("duplicate zone id '" + z.id + "'");
    if (!(z.floor_area > 0.0)) invalid("zone '" + z.id + "' floor area must be positive");
  }
  for (const auto& z : desc.zones) {
    for (const auto& n : z.adjacent) {
      const Zone* other = desc.find_zone(n);
      if (!other) invalid("zone '" + z.id + "' lists unknown neighbor '" + n + "'");
      if (n == z.id) invalid("zone '" + z.id + "' lists itself as a neighbor");
      if (std::find(other->adjacent.begin(), other->adjacent.end(), z.id) ==
          other->adjacent.end()) {
        invalid("zone adjacency is not symmetric: '" + z.id + "' -> '" + n + "'");
      }
    }
  }

  std::set<std::string> element_ids;
  std::map<std::string, double> room_area_by_zone;
  for (const auto& e : desc.elements) {
    if (e.id.empty()) invalid("building element with empty id");
    if (e.id == kAmbient || e.id == kAdiabatic) invalid("reserved element id '" + e.id + "'");
    if (!element_ids.insert(e.id).second) invalid("duplicate element id '" + e.id + "'");
    if (e.is_room()) {
      if (!zone_ids.count(e.zone)) {
        invalid("room '" + e.id + "' references unknown zone '" + e.zone + "'");
      }
      if (!(e.floor_area > 0.0)) invalid("room '" + e.id + "' floor area must be positive");
      if (!(e.volume > 0.0)) invalid("room '" + e.id + "' volume must be positive");
      room_area_by_zone[e.zone] += e.floor_area;
    }
  }

  for (const auto& e : desc.elements) {
    if (e.is_room()) continue;
    for (const auto& n : e.neighbors) {
      if (n == kAmbient || n == kAdiabatic) continue;
      const BuildingElement* other = desc.find_element(n);
      if (!other) invalid("element '" + e.id + "' connects unknown node '" + n + "'");
      if (!other->is_room()) {
        invalid("element '" + e.id + "' must connect room-air nodes, got '" + n + "'");
      }
    }
    if (e.neighbors[0] == e.neighbors[1] && e.neighbors[0] != kAdiabatic &&
        e.neighbors[0] != kAmbient) {
      invalid("element '" + e.id + "' connects room '" + e.neighbors[0] + "' to itself");
    }
    if (e.layers.empty()) invalid("element '" + e.id + "' has no layers");
    for (const auto& l : e.layers) {
      if (!(l.thickness > 0.0) || !(l.conductivity > 0.0) || !(l.density > 0.0) ||
          !(l.specific_heat > 0.0)) {
        invalid("element '" + e.id + "' has a layer with non-positive properties");
      }
    }
    if (!(e.area > 0.0)) invalid("element '" + e.id + "' area must be positive");
    if (e.window_area < 0.0 || e.window_area > e.area) {
      invalid("element '" + e.id + "' window area must lie in [0, area]");
    }
    if (e.window_area > 0.0 && !e.is_hull()) {
      invalid("element '" + e.id + "' has windows but no AMBIENT side");
    }
    if (e.kind == ElementKind::kWindowBearingWall && !e.is_hull()) {
      invalid("window-bearing wall '" + e.id + "' must face AMBIENT");
    }
    const bool wall_like =
        e.kind == ElementKind::kWall || e.kind == ElementKind::kWindowBearingWall;
    if (wall_like && e.is_hull() && e.orientation == Orientation::kNone) {
      invalid("hull wall '" + e.id + "' needs an orientation");
    }
  }

  for (const auto& z : desc.zones) {
    auto it = room_area_by_zone.find(z.id);
    if (it == room_area_by_zone.end()) invalid("zone '" + z.id + "' has no room-air element");
    if (std::abs(it->second - z.floor_area) > 1e-6 * z.floor_area) {
      invalid("zone '" + z.id + "' floor area does not match the sum of its rooms");
    }
  }

  if (desc.vav_boxes.empty()) invalid("building has no VAV boxes");
  std::set<std::string> box_ids;
  for (const auto& b : desc.vav_boxes) {
    if (!box_ids.insert(b.id).second) invalid("duplicate VAV box id '" + b.id + "'");
    const BuildingElement* room = desc.find_element(b.room);
    if (!room || !room->is_room()) {
      invalid("VAV box '" + b.id + "' must serve a room-air element");
    }
    if (b.min_flow < 0.0 || !(b.max_flow > 0.0) || b.min_flow > b.max_flow) {
      invalid("VAV box '" + b.id + "' needs 0 <= min_flow <= max_flow, max_flow > 0");
    }
  }
}

BuildingDescription parse_building(std::string_view text, std::string_view source_name) {
  JsonDocument doc{std::string(text), std::string(source_name)};
  doc.expect_schema(kBuildingSchema);

  BuildingDescription desc;
  if (doc.has(pointer(""), "name")) desc.name = doc.string(pointer("/name"));

  const auto& zones = doc.array(pointer("/zones"));
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const pointer p = pointer("/zones") / i;
    doc.object(p);
    Zone z;
    z.id = doc.string(p / "id");
    z.floor_area = doc.positive(p / "floor_area");
    z.adjacent = doc.strings(p / "adjacent");
    desc.zones.push_back(std::move(z));
  }

  const auto& elements = doc.array(pointer("/building_elements"));
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const pointer p = pointer("/building_elements") / i;
    doc.object(p);
    BuildingElement e;
    e.id = doc.string(p / "id");
    e.kind = parse_kind(doc, p / "kind");
    if (e.is_room()) {
      e.zone = doc.string(p / "zone");
      e.floor_area = doc.positive(p / "floor_area");
      e.volume = doc.positive(p / "volume");
    } else {
      const auto names = doc.strings(p / "neighbors");
      if (names.size() != 2) doc.fail(p / "neighbors", "expected exactly two neighbors");
      e.neighbors = {names[0], names[1]};
      const auto& layers = doc.array(p / "layers");
      if (layers.empty()) doc.fail(p / "layers", "expected at least one layer");
      for (std::size_t l = 0; l < layers.size(); ++l) {
        const pointer lp = p / "layers" / l;
        doc.object(lp);
        e.layers.push_back(Layer{doc.positive(lp / "thickness"),
                                 doc.positive(lp / "conductivity"),
                                 doc.positive(lp / "density"),
                                 doc.positive(lp / "specific_heat")});
      }
      e.area = doc.positive(p / "area");
      if (doc.has(p, "window_area")) e.window_area = doc.nonnegative(p / "window_area");
      if (doc.has(p, "orientation")) e.orientation = parse_orientation(doc, p / "orientation");
    }
    desc.elements.push_back(std::move(e));
  }

  const auto& boxes = doc.array(pointer("/vav_boxes"));
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const pointer p = pointer("/vav_boxes") / i;
    doc.object(p);
    VavBox b;
    b.id = doc.string(p / "id");
    b.room = doc.string(p / "room");
    b.min_flow = doc.nonnegative(p / "min_flow");
    b.max_flow = doc.positive(p / "max_flow");
    if (doc.has(p, "zone")) {
      const std::string zone = doc.string(p / "zone");
      const BuildingElement* room = nullptr;
      for (const auto& e : desc.elements) {
        if (e.id == b.room) room = &e;
      }
      if (room && room->zone != zone) {
        doc.fail(p / "zone", "box zone '" + zone + "' differs from its room's zone");
      }
    }
    desc.vav_boxes.push_back(std::move(b));
  }

  try {
    validate(desc);
  } catch (const Error& e) {
    throw Error(ErrorCode::kSchema, std::string(source_name) + ": " + e.what());
  }
  return desc;
}

BuildingDescription load_building(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open building description " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_building(buffer.str(), path.string());
}

std::string dump_building(const BuildingDescription& desc) {
  json root;
  root["schema"] = kBuildingSchema;
  root["name"] = desc.name;
  root["zones"] = json::array();
  for (const auto& z : desc.zones) {
    root["zones"].push_back({{"id", z.id}, {"floor_area", z.floor_area}, {"adjacent", z.adjacent}});
  }
  root["building_elements"] = json::array();
  for (const auto& e : desc.elements) {
    json j{{"id", e.id}, {"kind", to_string(e.kind)}};
    if (e.is_room()) {
      j["zone"] = e.zone;
      j["floor_area"] = e.floor_area;
      j["volume"] = e.volume;
    } else {
      j["neighbors"] = {e.neighbors[0], e.neighbors[1]};
      j["layers"] = json::array();
      for (const auto& l : e.layers) {
        j["layers"].push_back({{"thickness", l.thickness},
                               {"conductivity", l.conductivity},
                               {"density", l.density},
                               {"specific_heat", l.specific_heat}});
      }
      j["area"] = e.area;
      if (e.window_area > 0.0) j["window_area"] = e.window_area;
      if (e.orientation != Orientation::kNone) j["orientation"] = to_string(e.orientation);
    }
    root["building_elements"].push_back(std::move(j));
  }
  root["vav_boxes"] = json::array();
  for (const auto& b : desc.vav_boxes) {
    root["vav_boxes"].push_back({{"id", b.id},
                                 {"room", b.room},
                                 {"min_flow", b.min_flow},
                                 {"max_flow", b.max_flow}});
  }
  return root.dump(2);
}

}  // namespace thermident
