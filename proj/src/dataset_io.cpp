// Source loaders and pipeline config for the dataset module.
#include <cmath>
#include <numbers>

#include "layoutforge/dataset.hpp"
#include "layoutforge/errors.hpp"
#include "layoutforge/json_io.hpp"

namespace layoutforge::dataset {

namespace {

using Json = nlohmann::ordered_json;

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string("missing key '") + key + "'");
  return j.at(key);
}

double finite(const Json& v, const char* what) {
  if (!v.is_number()) throw SchemaError(std::string(what) + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValueError(std::string(what) + " is not finite");
  return d;
}

std::string string_or(const Json& j, const char* key, std::string fallback) {
  if (j.is_object() && j.contains(key) && j.at(key).is_string()) return j.at(key).get<std::string>();
  return fallback;
}

// "double bed-0 (bedroom)" -> "double bed"
std::string clean_holodeck_name(std::string name) {
  if (const auto paren = name.find(" ("); paren != std::string::npos) name.resize(paren);
  if (const auto dash = name.rfind('-'); dash != std::string::npos && dash + 1 < name.size() &&
                                          name.find_first_not_of("0123456789", dash + 1) == std::string::npos) {
    name.resize(dash);
  }
  return name;
}

// Yaw about +y from a unit quaternion [x, y, z, w].
double yaw_from_quaternion(const Json& q) {
  if (!q.is_array() || q.size() != 4) throw SchemaError("rot must be a number or [x, y, z, w]");
  return 2.0 * std::atan2(finite(q[1], "rot.y"), finite(q[3], "rot.w"));
}

BoxSize checked_size(double w, double d, double h) {
  BoxSize s{w, d, h};
  check_size(s);
  return s;
}

UpAxis parse_up_axis(const std::string& s) {
  if (s == "y") return UpAxis::y_up;
  if (s == "z") return UpAxis::z_up;
  throw SchemaError("up_axis must be 'y' or 'z'");
}

RotationUnit parse_unit(const std::string& s) {
  if (s == "radians") return RotationUnit::radians;
  if (s == "degrees") return RotationUnit::degrees;
  throw SchemaError("rotation_unit must be 'radians' or 'degrees'");
}

Origin parse_origin(const std::string& s) {
  if (s == "floor_corner") return Origin::floor_corner;
  if (s == "floor_center") return Origin::floor_center;
  if (s == "unknown") return Origin::unknown;
  throw SchemaError("origin must be floor_corner, floor_center or unknown");
}

}  // namespace

SceneRecord load_front_scene(const Json& j, const std::string& fallback_id) {
  SceneRecord r;
  r.scene_id = string_or(j, "scene_id", fallback_id);
  r.source = SceneSource::three_d_front;
  r.layout.room_type = parse_room_type(require(j, "room_type").get<std::string>());
  const Json& floor = require(j, "floor");
  if (!floor.is_array()) throw SchemaError("floor must be an array of [x, z]");
  for (const Json& v : floor) {
    if (!v.is_array() || v.size() != 2) throw SchemaError("floor vertex must be [x, z]");
    r.layout.floor.vertices.push_back({finite(v[0], "floor.x"), finite(v[1], "floor.z")});
  }
  const Json& furniture = require(j, "furniture");
  if (!furniture.is_array()) throw SchemaError("furniture must be an array");
  int ordinal = 0;
  for (const Json& f : furniture) {
    PlacedObject o;
    o.description = string_or(f, "description", string_or(f, "category", ""));
    if (o.description.empty()) throw SchemaError("furniture entry needs a category");
    if (f.contains("jid") && f["jid"].is_string()) o.asset_id = f["jid"].get<std::string>();
    const Json& size = require(f, "size");
    const Json& pos = require(f, "pos");
    if (!size.is_array() || size.size() != 3) throw SchemaError("size must be [sx, sy, sz]");
    if (!pos.is_array() || pos.size() != 3) throw SchemaError("pos must be [x, y, z]");
    // y is up in this source: size[1] is height.
    o.size = checked_size(finite(size[0], "size.x"), finite(size[2], "size.z"), finite(size[1], "size.y"));
    o.placement.position = {finite(pos[0], "pos.x"), finite(pos[1], "pos.y"), finite(pos[2], "pos.z")};
    const Json& rot = require(f, "rot");
    o.placement.rotation = rot.is_number() ? finite(rot, "rot") : yaw_from_quaternion(rot);
    o.instance_id = make_instance_id(o.description, ordinal++);
    r.layout.objects.push_back(std::move(o));
  }
  check_floor(r.layout.floor);
  return r;
}

SceneRecord load_holodeck_scene(const Json& j, const std::string& fallback_id) {
  SceneRecord r;
  r.scene_id = string_or(j, "id", string_or(j, "scene_id", fallback_id));
  r.source = SceneSource::holodeck_synth;
  r.layout.room_type = parse_room_type(require(j, "room_type").get<std::string>());
  if (j.contains("semantic_summary") && j["semantic_summary"].is_string()) {
    r.semantic_summary = j["semantic_summary"].get<std::string>();
  }
  const Json& floor = require(j, "floor_polygon");
  if (!floor.is_array()) throw SchemaError("floor_polygon must be an array");
  for (const Json& v : floor) {
    r.layout.floor.vertices.push_back({finite(require(v, "x"), "x"), finite(require(v, "z"), "z")});
  }
  const Json& objects = require(j, "objects");
  if (!objects.is_array()) throw SchemaError("objects must be an array");
  int ordinal = 0;
  for (const Json& f : objects) {
    PlacedObject o;
    o.description = string_or(f, "description", clean_holodeck_name(string_or(f, "object_name", "")));
    if (o.description.empty()) throw SchemaError("object needs object_name or description");
    if (f.contains("asset_id") && f["asset_id"].is_string()) o.asset_id = f["asset_id"].get<std::string>();
    const Json& size = f.contains("size") ? f["size"] : require(f, "dimensions");
    o.size = checked_size(finite(require(size, "x"), "size.x"), finite(require(size, "z"), "size.z"),
                          finite(require(size, "y"), "size.y"));
    const Json& pos = require(f, "position");
    o.placement.position = {finite(require(pos, "x"), "x"), finite(require(pos, "y"), "y"),
                            finite(require(pos, "z"), "z")};
    const Json& rot = require(f, "rotation");
    o.placement.rotation = rot.is_number() ? finite(rot, "rotation") : finite(require(rot, "y"), "rotation.y");
    o.instance_id = make_instance_id(o.description, ordinal++);
    r.layout.objects.push_back(std::move(o));
  }
  if (j.contains("requested")) {
    const Json& req = j["requested"];
    if (!req.is_object()) throw SchemaError("requested must map description to quantity");
    for (const auto& [name, qty] : req.items()) {
      if (!qty.is_number_integer() || qty.get<long long>() < 1) throw ValueError("requested quantity must be >= 1");
      r.requested.push_back(ObjectSpec{name, qty.get<int>(), std::nullopt, std::nullopt});
    }
  }
  check_floor(r.layout.floor);
  return r;
}

SceneRecord ingest_scene(const Json& j, SceneSource source, const PipelineConfig& config,
                         const std::string& fallback_id) {
  SceneRecord raw;
  switch (source) {
    case SceneSource::three_d_front: raw = load_front_scene(j, fallback_id); break;
    case SceneSource::holodeck_synth: raw = load_holodeck_scene(j, fallback_id); break;
    case SceneSource::generated: raw = json_io::scene_record_from_json(j); break;
  }
  const auto conv = config.conventions.at(source);
  SceneRecord out = exclude_small_objects(recenter(convert_convention(raw, conv)), config.rules.small_object_area);
  check_layout(out.layout);
  return out;
}

PipelineConfig config_from_json(const Json& j) {
  PipelineConfig config;
  if (!j.is_object()) throw SchemaError("config must be an object");
  if (j.contains("filter")) {
    const Json& f = j["filter"];
    if (f.contains("min_objects")) {
      for (const auto& [room, n] : f["min_objects"].items()) {
        if (!n.is_number_integer() || n.get<long long>() < 0) throw ValueError("min_objects must be >= 0");
        config.rules.min_objects[parse_room_type(room)] = n.get<int>();
      }
    }
    if (f.contains("clustering_threshold")) config.rules.clustering_threshold = json_io::number_at(f, "clustering_threshold");
    if (f.contains("chair_reach")) config.rules.chair_reach = json_io::number_at(f, "chair_reach");
    if (f.contains("small_object_area")) config.rules.small_object_area = json_io::number_at(f, "small_object_area");
  }
  if (j.contains("conventions")) {
    for (const auto& [name, c] : j["conventions"].items()) {
      SourceConvention& conv = config.conventions[parse_scene_source(name)];
      if (c.contains("up_axis")) conv.up_axis = parse_up_axis(c["up_axis"].get<std::string>());
      if (c.contains("rotation_unit")) conv.rotation_unit = parse_unit(c["rotation_unit"].get<std::string>());
      if (c.contains("rotation_flip")) conv.rotation_flip = c["rotation_flip"].get<bool>();
      if (c.contains("origin")) conv.origin = parse_origin(c["origin"].get<std::string>());
    }
  }
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  const std::string text = json_io::read_text_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw SchemaError("config " + path.string() + ": " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const Json::exception& e) {
    throw SchemaError("config " + path.string() + ": " + e.what());
  }
}

}  // namespace layoutforge::dataset
