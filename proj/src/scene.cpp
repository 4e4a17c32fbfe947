#include "layoutforge/scene.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <tuple>

#include "embedded_assets.hpp"
#include "layoutforge/errors.hpp"
#include "layoutforge/geometry.hpp"
#include "layoutforge/json_io.hpp"

namespace layoutforge {

namespace {

std::string normalize_key(std::string_view text) {
  std::string out;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      out.push_back(static_cast<char>(std::tolower(u)));
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool finite(Vec3 v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

}  // namespace

std::string_view to_string(RoomType type) {
  switch (type) {
    case RoomType::bedroom: return "bedroom";
    case RoomType::living_room: return "living_room";
    case RoomType::kitchen: return "kitchen";
    case RoomType::bathroom: return "bathroom";
  }
  return "bedroom";
}

std::string_view display_name(RoomType type) {
  switch (type) {
    case RoomType::bedroom: return "Bedroom";
    case RoomType::living_room: return "Living Room";
    case RoomType::kitchen: return "Kitchen";
    case RoomType::bathroom: return "Bathroom";
  }
  return "Bedroom";
}

RoomType parse_room_type(std::string_view text) {
  const std::string key = normalize_key(text);
  for (RoomType t : kAllRoomTypes) {
    if (key == to_string(t)) return t;
  }
  if (key == "livingroom") return RoomType::living_room;
  throw SchemaError("unknown room type '" + std::string(text) + "'");
}

std::string_view to_string(SceneSource source) {
  switch (source) {
    case SceneSource::three_d_front: return "three_d_front";
    case SceneSource::holodeck_synth: return "holodeck_synth";
    case SceneSource::generated: return "generated";
  }
  return "generated";
}

SceneSource parse_scene_source(std::string_view text) {
  const std::string key = normalize_key(text);
  if (key == "three_d_front" || key == "3d_front") return SceneSource::three_d_front;
  if (key == "holodeck_synth" || key == "holodeck") return SceneSource::holodeck_synth;
  if (key == "generated") return SceneSource::generated;
  throw SchemaError("unknown scene source '" + std::string(text) + "'");
}

double normalize_angle(double radians) {
  double r = std::fmod(radians, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative number can round back up to exactly 2pi.
  if (r >= kTwoPi) r = 0.0;
  return r;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string make_instance_id(std::string_view description, int ordinal) {
  std::string slug = normalize_key(description);
  if (slug.empty()) slug = "object";
  return slug + "_" + std::to_string(ordinal);
}

void check_size(const BoxSize& size) {
  for (double v : {size.width, size.depth, size.height}) {
    if (!std::isfinite(v)) throw ValueError("bounding box dimension is not finite");
    if (v <= 0.0) throw ValueError("bounding box dimensions must be positive");
  }
}

void check_floor(const FloorPlan& floor) {
  if (floor.vertices.size() < 3) throw ValueError("floor needs at least 3 vertices");
  for (const Vec2& v : floor.vertices) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw ValueError("floor vertex is not finite");
  }
  if (std::abs(geometry::signed_area(floor.vertices)) <= geometry::kEpsilon) {
    throw ValueError("floor polygon has zero area");
  }
  if (!geometry::is_simple(floor.vertices)) throw ValueError("floor polygon self-intersects");
}

void check_layout(const Layout& layout) {
  check_floor(layout.floor);
  std::set<std::string> ids;
  for (const PlacedObject& o : layout.objects) {
    if (o.instance_id.empty()) throw SchemaError("object without instance_id");
    if (!ids.insert(o.instance_id).second) {
      throw SchemaError("duplicate instance_id '" + o.instance_id + "'");
    }
    if (o.description.empty()) throw SchemaError("object '" + o.instance_id + "' has no description");
    check_size(o.size);
    if (!finite(o.placement.position) || !std::isfinite(o.placement.rotation)) {
      throw ValueError("object '" + o.instance_id + "' has a non-finite placement");
    }
    if (o.placement.position.z < 0.0) {
      throw ValueError("object '" + o.instance_id + "' is below the floor (z < 0)");
    }
  }
}

void check_task(const TaskSpec& task) {
  check_floor(task.floor);
  if (task.objects.empty()) throw ValueError("task lists no objects");
  for (const ObjectSpec& s : task.objects) {
    if (s.description.empty()) throw ValueError("object description is empty");
    if (s.quantity < 1) throw ValueError("quantity of '" + s.description + "' must be >= 1");
    if (s.size) check_size(*s.size);
  }
}

Layout parse_layout(std::string_view document) {
  json_io::Json j;
  try {
    j = json_io::Json::parse(document);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("layout is not valid JSON: ") + e.what());
  }
  return json_io::layout_from_json(j);
}

std::string serialize_layout(const Layout& layout) {
  return json_io::to_json(layout).dump(2);
}

bool semantically_equal(const Layout& a, const Layout& b, double tolerance) {
  if (a.room_type != b.room_type) return false;
  if (a.floor.vertices.size() != b.floor.vertices.size()) return false;
  for (std::size_t i = 0; i < a.floor.vertices.size(); ++i) {
    if (norm(a.floor.vertices[i] - b.floor.vertices[i]) > tolerance) return false;
  }
  if (a.objects.size() != b.objects.size()) return false;
  for (std::size_t i = 0; i < a.objects.size(); ++i) {
    const PlacedObject& p = a.objects[i];
    const PlacedObject& q = b.objects[i];
    if (p.instance_id != q.instance_id || p.description != q.description ||
        p.asset_id != q.asset_id) {
      return false;
    }
    if (std::abs(p.size.width - q.size.width) > tolerance ||
        std::abs(p.size.depth - q.size.depth) > tolerance ||
        std::abs(p.size.height - q.size.height) > tolerance) {
      return false;
    }
    const Vec3 dp = p.placement.position;
    const Vec3 dq = q.placement.position;
    if (std::abs(dp.x - dq.x) > tolerance || std::abs(dp.y - dq.y) > tolerance ||
        std::abs(dp.z - dq.z) > tolerance) {
      return false;
    }
    const double dr = std::abs(normalize_angle(p.placement.rotation) -
                               normalize_angle(q.placement.rotation));
    if (std::min(dr, kTwoPi - dr) > tolerance) return false;
  }
  return true;
}

AssetCatalog::AssetCatalog(std::map<std::string, CatalogEntry> entries) {
  for (auto& [name, entry] : entries) add(name, std::move(entry));
}

void AssetCatalog::add(std::string name, CatalogEntry entry) {
  if (name.empty()) throw ValueError("catalog entry without a name");
  check_size(entry.size);
  entries_.insert_or_assign(std::move(name), std::move(entry));
}

std::optional<std::string> AssetCatalog::best_match(std::string_view description) const {
  const std::string wanted = lower(description);
  for (const auto& [name, entry] : entries_) {
    if (lower(name) == wanted) return name;
  }
  const auto desc_tokens = tokenize(description);
  const std::set<std::string> want(desc_tokens.begin(), desc_tokens.end());
  // Rank by overlap, then by fewest unmatched key tokens, then by name.
  std::optional<std::string> best;
  std::tuple<std::size_t, std::size_t> best_rank{0, 0};
  for (const auto& [name, entry] : entries_) {
    const auto key_tokens = tokenize(name);
    const std::set<std::string> have(key_tokens.begin(), key_tokens.end());
    std::size_t overlap = 0;
    for (const auto& t : have) overlap += want.count(t);
    if (overlap == 0) continue;
    const std::size_t extra = have.size() - overlap;
    const bool better = !best || overlap > std::get<0>(best_rank) ||
                        (overlap == std::get<0>(best_rank) && extra < std::get<1>(best_rank));
    if (better) {
      best = name;
      best_rank = {overlap, extra};
    }
  }
  return best;
}

const AssetCatalog& AssetCatalog::builtin() {
  static const AssetCatalog catalog = json_io::catalog_from_json(
      json_io::Json::parse(embedded::builtin_catalog_json()));
  return catalog;
}

std::vector<ObjectSpec> retrieve_boxes(std::vector<ObjectSpec> specs, const AssetCatalog& catalog) {
  if (catalog.empty()) throw PreconditionError("asset catalog is empty");
  for (ObjectSpec& spec : specs) {
    if (spec.size) continue;
    auto match = catalog.best_match(spec.description);
    if (!match) throw NoMatchError("no catalog asset matches '" + spec.description + "'");
    spec.size = catalog.entries().at(*match).size;
    spec.asset_id = *match;
  }
  return specs;
}

TaskSpec task_from_layout(const Layout& layout, std::string instruction) {
  TaskSpec task;
  task.instruction = std::move(instruction);
  task.room_type = layout.room_type;
  task.floor = layout.floor;
  for (const PlacedObject& o : layout.objects) {
    auto it = std::find_if(task.objects.begin(), task.objects.end(), [&](const ObjectSpec& s) {
      return s.description == o.description && s.size == o.size && s.asset_id == o.asset_id;
    });
    if (it != task.objects.end()) {
      ++it->quantity;
    } else {
      task.objects.push_back(ObjectSpec{o.description, 1, o.size, o.asset_id});
    }
  }
  return task;
}

std::vector<ObjectSpec> expand_instances(const std::vector<ObjectSpec>& specs) {
  std::vector<ObjectSpec> out;
  for (const ObjectSpec& s : specs) {
    for (int i = 0; i < s.quantity; ++i) {
      ObjectSpec one = s;
      one.quantity = 1;
      out.push_back(std::move(one));
    }
  }
  return out;
}

}  // namespace layoutforge
