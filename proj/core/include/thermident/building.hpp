#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace thermident {

/// Schema tag carried by building description documents.
inline constexpr std::string_view kBuildingSchema = "thermident-building/1";

/// Sentinel neighbor names for the outer side of an element.
inline constexpr std::string_view kAmbient = "AMBIENT";
inline constexpr std::string_view kAdiabatic = "ADIABATIC";

enum class ElementKind { kRoomAir, kWall, kFloor, kCeiling, kWindowBearingWall };

/// Facade orientation; selects which irradiance channel drives a hull element.
enum class Orientation { kNone, kEast, kSouth, kWest, kNorth };

std::string_view to_string(ElementKind kind);
std::string_view to_string(Orientation orientation);

struct Layer {
  double thickness = 0.0;      // m
  double conductivity = 0.0;   // W/(m K)
  double density = 0.0;        // kg/m^3
  double specific_heat = 0.0;  // J/(kg K)
};

struct Zone {
  std::string id;
  double floor_area = 0.0;  // m^2, equals the sum over the zone's rooms
  std::vector<std::string> adjacent;
};

/// One building element. Room-air elements use `zone`, `floor_area` and
/// `volume`; every other kind is a layered construction between two
/// neighbors (room-air ids, AMBIENT or ADIABATIC) with layers ordered from
/// neighbors[0] towards neighbors[1].
struct BuildingElement {
  std::string id;
  ElementKind kind = ElementKind::kWall;

  std::string zone;
  double floor_area = 0.0;  // m^2
  double volume = 0.0;      // m^3

  std::array<std::string, 2> neighbors;
  std::vector<Layer> layers;
  double area = 0.0;         // total face area, m^2
  double window_area = 0.0;  // glazed part of the face, m^2
  Orientation orientation = Orientation::kNone;

  bool is_room() const { return kind == ElementKind::kRoomAir; }
  bool is_hull() const {
    return !is_room() && (neighbors[0] == kAmbient || neighbors[1] == kAmbient);
  }
  /// Opaque exterior area a_EW (face minus glazing).
  double opaque_area() const { return area - window_area; }
};

struct VavBox {
  std::string id;
  std::string room;      // served room-air element
  double min_flow = 0.0; // kg/s
  double max_flow = 0.0; // kg/s
};

struct BuildingDescription {
  std::string name;
  std::vector<Zone> zones;
  std::vector<BuildingElement> elements;
  std::vector<VavBox> vav_boxes;

  const Zone* find_zone(std::string_view id) const;
  const BuildingElement* find_element(std::string_view id) const;
  std::optional<std::size_t> zone_index(std::string_view id) const;
  /// Zone id of the room served by a box.
  std::string box_zone(const VavBox& box) const;
};

/// Throws Error(kInvalid) describing the first violated invariant.
void validate(const BuildingDescription& desc);

/// Parses and validates a building document. Structural problems are
/// reported as Error(kSchema) with "<source>:<line>: <json-pointer>: ..."
/// diagnostics.
BuildingDescription parse_building(std::string_view text,
                                   std::string_view source_name = "<input>");
BuildingDescription load_building(const std::filesystem::path& path);

std::string dump_building(const BuildingDescription& desc);

}  // namespace thermident
