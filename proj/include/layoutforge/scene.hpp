#pragma once

#include <array>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "layoutforge/vec.hpp"

namespace layoutforge {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class RoomType { bedroom, living_room, kitchen, bathroom };

inline constexpr std::array<RoomType, 4> kAllRoomTypes = {
    RoomType::bedroom, RoomType::living_room, RoomType::kitchen, RoomType::bathroom};

std::string_view to_string(RoomType type);
// Accepts "living_room", "Living Room", "living-room", ... Throws SchemaError.
RoomType parse_room_type(std::string_view text);
// Title-cased form used inside prompts ("Living Room").
std::string_view display_name(RoomType type);

// Ground-plane floor outline in meters, z-up frame.
struct FloorPlan {
  std::vector<Vec2> vertices;
};

struct BoxSize {
  double width = 0.0;
  double depth = 0.0;
  double height = 0.0;

  friend bool operator==(const BoxSize&, const BoxSize&) = default;
};

struct ObjectSpec {
  std::string description;
  int quantity = 1;
  std::optional<BoxSize> size;
  std::optional<std::string> asset_id;

  friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

// position.z is the height of the object origin above the floor. rotation is
// radians about +z, counter-clockwise, kept in [0, 2pi).
struct Placement {
  Vec3 position;
  double rotation = 0.0;
};

struct PlacedObject {
  std::string instance_id;
  std::string description;
  BoxSize size;
  std::optional<std::string> asset_id;
  Placement placement;
};

struct Layout {
  RoomType room_type = RoomType::bedroom;
  FloorPlan floor;
  std::vector<PlacedObject> objects;
};

enum class SceneSource { three_d_front, holodeck_synth, generated };

std::string_view to_string(SceneSource source);
SceneSource parse_scene_source(std::string_view text);

struct SceneRecord {
  std::string scene_id;
  SceneSource source = SceneSource::generated;
  std::optional<std::string> semantic_summary;
  Layout layout;
  // Object counts the scene was asked to contain, when the source declares
  // them. Empty when unknown.
  std::vector<ObjectSpec> requested;
};

struct TaskSpec {
  std::string instruction;
  RoomType room_type = RoomType::bedroom;
  FloorPlan floor;
  std::vector<ObjectSpec> objects;
};

struct CatalogEntry {
  BoxSize size;
  std::string category;
};

class AssetCatalog {
 public:
  AssetCatalog() = default;
  explicit AssetCatalog(std::map<std::string, CatalogEntry> entries);

  // Throws ValueError on a non-positive size.
  void add(std::string name, CatalogEntry entry);

  const std::map<std::string, CatalogEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  // Exact (case-insensitive) name match first, then maximum token overlap.
  // Returns nullopt when no entry shares a token with the description.
  std::optional<std::string> best_match(std::string_view description) const;

  // Catalog shipped with the toolkit.
  static const AssetCatalog& builtin();

 private:
  std::map<std::string, CatalogEntry> entries_;
};

// Wraps into [0, 2pi). Idempotent.
double normalize_angle(double radians);

// Lower-cased alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

std::string make_instance_id(std::string_view description, int ordinal);

// Validation helpers; each throws ValueError or SchemaError on violation.
void check_floor(const FloorPlan& floor);
void check_size(const BoxSize& size);
void check_layout(const Layout& layout);
void check_task(const TaskSpec& task);

// Layout file format (UTF-8 JSON). Unknown keys are ignored.
Layout parse_layout(std::string_view document);
std::string serialize_layout(const Layout& layout);

// Same ids, positions and sizes within `tolerance`, rotations equal mod 2pi.
bool semantically_equal(const Layout& a, const Layout& b, double tolerance = 1e-9);

// Fills missing sizes from the catalog. Throws NoMatchError.
std::vector<ObjectSpec> retrieve_boxes(std::vector<ObjectSpec> specs,
                                       const AssetCatalog& catalog);

// Groups identical (description, size) instances back into a request.
TaskSpec task_from_layout(const Layout& layout, std::string instruction = {});

// Expands quantities into one entry per instance, in order.
std::vector<ObjectSpec> expand_instances(const std::vector<ObjectSpec>& specs);

}  // namespace layoutforge
