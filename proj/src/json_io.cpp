#include "layoutforge/json_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "layoutforge/errors.hpp"

namespace layoutforge::json_io {

namespace {

const Json& member(const Json& j, const char* key) {
  if (!j.is_object()) throw SchemaError(std::string("expected an object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw SchemaError(std::string("missing required field '") + key + "'");
  return *it;
}

const Json* optional_member(const Json& j, const char* key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return nullptr;
  return &*it;
}

double as_number(const Json& v, const char* what) {
  if (!v.is_number()) throw SchemaError(std::string("field '") + what + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValueError(std::string("field '") + what + "' is not finite");
  return d;
}

std::string as_string(const Json& v, const char* what) {
  if (!v.is_string()) throw SchemaError(std::string("field '") + what + "' must be a string");
  return v.get<std::string>();
}

// The generation template shows single-element arrays around coordinate and
// rotation objects; plain objects are the file format. Accept both.
const Json& unwrap_singleton(const Json& v, const char* what) {
  if (v.is_array()) {
    if (v.size() != 1) throw SchemaError(std::string("field '") + what + "' must hold exactly one entry");
    return v.front();
  }
  return v;
}

Vec2 point_from_json(const Json& v) {
  if (v.is_array()) {
    if (v.size() < 2) throw SchemaError("floor vertex needs two coordinates");
    return {as_number(v[0], "vertex.x"), as_number(v[1], "vertex.y")};
  }
  if (v.is_object()) return {number_at(v, "x"), number_at(v, "y")};
  throw SchemaError("floor vertex must be [x, y] or {x, y}");
}

}  // namespace

double number_at(const Json& j, const char* key) { return as_number(member(j, key), key); }

Json to_json(const FloorPlan& floor) {
  Json vertices = Json::array();
  for (const Vec2& v : floor.vertices) vertices.push_back(Json::array({v.x, v.y}));
  return Json{{"vertices", std::move(vertices)}};
}

Json to_json(const BoxSize& size) {
  return Json{{"width", size.width}, {"depth", size.depth}, {"height", size.height}};
}

Json to_json(const ObjectSpec& spec) {
  Json j{{"description", spec.description}, {"quantity", spec.quantity}};
  if (spec.size) j["bbox"] = to_json(*spec.size);
  if (spec.asset_id) j["asset_id"] = *spec.asset_id;
  return j;
}

Json to_json(const PlacedObject& o) {
  Json j;
  j["instance_id"] = o.instance_id;
  j["description"] = o.description;
  if (o.asset_id) j["asset_id"] = *o.asset_id;
  j["bbox"] = to_json(o.size);
  j["coordinates"] = Json{{"x", o.placement.position.x},
                          {"y", o.placement.position.y},
                          {"z", o.placement.position.z}};
  j["rotate"] = Json{{"angle", o.placement.rotation}};
  return j;
}

Json to_json(const Layout& layout) {
  Json objects = Json::array();
  for (const PlacedObject& o : layout.objects) objects.push_back(to_json(o));
  return Json{{"room_type", to_string(layout.room_type)},
              {"floor", to_json(layout.floor)},
              {"objects", std::move(objects)}};
}

Json to_json(const TaskSpec& task) {
  Json objects = Json::array();
  for (const ObjectSpec& s : task.objects) objects.push_back(to_json(s));
  return Json{{"instruction", task.instruction},
              {"room_type", to_string(task.room_type)},
              {"floor", to_json(task.floor)},
              {"objects", std::move(objects)}};
}

Json to_json(const SceneRecord& r) {
  Json j{{"scene_id", r.scene_id},
         {"source", to_string(r.source)},
         {"semantic_summary", r.semantic_summary ? Json(*r.semantic_summary) : Json(nullptr)},
         {"layout", to_json(r.layout)}};
  if (!r.requested.empty()) {
    Json req = Json::array();
    for (const ObjectSpec& s : r.requested) req.push_back(to_json(s));
    j["requested"] = std::move(req);
  }
  return j;
}

FloorPlan floor_from_json(const Json& j) {
  const Json& verts = j.is_array() ? j : member(j, "vertices");
  if (!verts.is_array()) throw SchemaError("floor vertices must be an array");
  FloorPlan floor;
  for (const Json& v : verts) floor.vertices.push_back(point_from_json(v));
  return floor;
}

BoxSize size_from_json(const Json& j) {
  BoxSize size;
  if (j.is_array()) {
    if (j.size() != 3) throw SchemaError("bbox array must be [width, depth, height]");
    size = {as_number(j[0], "bbox.width"), as_number(j[1], "bbox.depth"), as_number(j[2], "bbox.height")};
  } else {
    size = {number_at(j, "width"), number_at(j, "depth"), number_at(j, "height")};
  }
  check_size(size);
  return size;
}

ObjectSpec object_spec_from_json(const Json& j) {
  ObjectSpec spec;
  const Json* desc = optional_member(j, "description");
  if (!desc) desc = optional_member(j, "object");
  if (!desc) throw SchemaError("missing required field 'description'");
  spec.description = as_string(*desc, "description");
  if (spec.description.empty()) throw ValueError("object description is empty");
  if (const Json* q = optional_member(j, "quantity")) {
    if (!q->is_number_integer()) throw SchemaError("field 'quantity' must be an integer");
    spec.quantity = q->get<int>();
    if (spec.quantity < 1) throw ValueError("quantity must be >= 1");
  }
  if (const Json* b = optional_member(j, "bbox")) spec.size = size_from_json(*b);
  if (const Json* a = optional_member(j, "asset_id")) spec.asset_id = as_string(*a, "asset_id");
  return spec;
}

PlacedObject placed_object_from_json(const Json& j, int ordinal) {
  if (!j.is_object()) throw SchemaError("layout object must be a JSON object");
  PlacedObject o;
  const Json* desc = optional_member(j, "description");
  if (!desc) desc = optional_member(j, "object");
  if (!desc) throw SchemaError("missing required field 'description'");
  o.description = as_string(*desc, "description");
  if (o.description.empty()) throw ValueError("object description is empty");
  if (const Json* id = optional_member(j, "instance_id")) {
    o.instance_id = as_string(*id, "instance_id");
  } else {
    o.instance_id = make_instance_id(o.description, ordinal);
  }
  if (const Json* a = optional_member(j, "asset_id")) o.asset_id = as_string(*a, "asset_id");
  o.size = size_from_json(member(j, "bbox"));

  const Json& c = unwrap_singleton(member(j, "coordinates"), "coordinates");
  o.placement.position = {number_at(c, "x"), number_at(c, "y"), number_at(c, "z")};

  const Json& r = member(j, "rotate");
  const double angle = r.is_number() ? as_number(r, "rotate")
                                     : number_at(unwrap_singleton(r, "rotate"), "angle");
  o.placement.rotation = normalize_angle(angle);
  return o;
}

Layout layout_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("layout document must be a JSON object");
  Layout layout;
  layout.room_type = parse_room_type(as_string(member(j, "room_type"), "room_type"));
  layout.floor = floor_from_json(member(j, "floor"));
  const Json& objects = member(j, "objects");
  if (!objects.is_array()) throw SchemaError("field 'objects' must be an array");
  int ordinal = 0;
  for (const Json& o : objects) layout.objects.push_back(placed_object_from_json(o, ordinal++));
  check_layout(layout);
  return layout;
}

TaskSpec task_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("task must be a JSON object");
  TaskSpec task;
  if (const Json* ins = optional_member(j, "instruction")) task.instruction = as_string(*ins, "instruction");
  task.room_type = parse_room_type(as_string(member(j, "room_type"), "room_type"));
  task.floor = floor_from_json(member(j, "floor"));
  const Json& objects = member(j, "objects");
  if (!objects.is_array()) throw SchemaError("field 'objects' must be an array");
  for (const Json& o : objects) task.objects.push_back(object_spec_from_json(o));
  check_task(task);
  return task;
}

SceneRecord scene_record_from_json(const Json& j) {
  SceneRecord r;
  r.scene_id = as_string(member(j, "scene_id"), "scene_id");
  if (r.scene_id.empty()) throw SchemaError("scene_id is empty");
  r.source = parse_scene_source(as_string(member(j, "source"), "source"));
  if (const Json* s = optional_member(j, "semantic_summary")) {
    r.semantic_summary = as_string(*s, "semantic_summary");
  }
  r.layout = layout_from_json(member(j, "layout"));
  if (const Json* req = optional_member(j, "requested")) {
    if (!req->is_array()) throw SchemaError("field 'requested' must be an array");
    for (const Json& s : *req) r.requested.push_back(object_spec_from_json(s));
  }
  return r;
}

AssetCatalog catalog_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("asset catalog must be a JSON object");
  AssetCatalog catalog;
  for (const auto& [name, entry] : j.items()) {
    CatalogEntry e;
    e.size = size_from_json(entry);
    if (const Json* c = optional_member(entry, "category")) e.category = as_string(*c, "category");
    catalog.add(name, std::move(e));
  }
  return catalog;
}

Json to_json(const AssetCatalog& catalog) {
  Json j = Json::object();
  for (const auto& [name, entry] : catalog.entries()) {
    Json e = to_json(entry.size);
    e["category"] = entry.category;
    j[name] = std::move(e);
  }
  return j;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<SceneRecord> parse_corpus(const std::string& text) {
  std::vector<SceneRecord> records;
  std::set<std::string> ids;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
    SceneRecord r = scene_record_from_json(j);
    if (!ids.insert(r.scene_id).second) {
      throw SchemaError("corpus line " + std::to_string(line_no) + ": duplicate scene_id '" +
                        r.scene_id + "'");
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<SceneRecord> read_corpus(const std::filesystem::path& path) {
  return parse_corpus(read_text_file(path));
}

std::string format_corpus(const std::vector<SceneRecord>& records) {
  std::string out;
  for (const SceneRecord& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<SceneRecord>& records) {
  write_text_file(path, format_corpus(records));
}

}  // namespace layoutforge::json_io
