#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "layoutforge/scene.hpp"

// JSON encodings of the scene model. Readers throw SchemaError for missing or
// mistyped keys and ValueError for out-of-domain numbers; unknown keys are
// ignored everywhere.
namespace layoutforge::json_io {

using Json = nlohmann::ordered_json;

Json to_json(const FloorPlan& floor);
Json to_json(const BoxSize& size);
Json to_json(const ObjectSpec& spec);
Json to_json(const PlacedObject& object);
Json to_json(const Layout& layout);
Json to_json(const TaskSpec& task);
Json to_json(const SceneRecord& record);

FloorPlan floor_from_json(const Json& j);
BoxSize size_from_json(const Json& j);
ObjectSpec object_spec_from_json(const Json& j);
// `ordinal` names the object when `instance_id` is absent.
PlacedObject placed_object_from_json(const Json& j, int ordinal);
Layout layout_from_json(const Json& j);
TaskSpec task_from_json(const Json& j);
SceneRecord scene_record_from_json(const Json& j);

AssetCatalog catalog_from_json(const Json& j);
Json to_json(const AssetCatalog& catalog);

// Reads a finite number; throws SchemaError when absent, ValueError when not
// finite.
double number_at(const Json& j, const char* key);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// JSONL corpus, one SceneRecord per line. Blank lines are skipped. Throws
// SchemaError on duplicate scene ids.
std::vector<SceneRecord> read_corpus(const std::filesystem::path& path);
std::vector<SceneRecord> parse_corpus(const std::string& text);
std::string format_corpus(const std::vector<SceneRecord>& records);
void write_corpus(const std::filesystem::path& path, const std::vector<SceneRecord>& records);

}  // namespace layoutforge::json_io
