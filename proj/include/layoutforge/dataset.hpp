#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "layoutforge/scene.hpp"

// Corpus construction: convention alignment, recentering, filtering,
// statistics and train/test splits.
namespace layoutforge::dataset {

enum class UpAxis { y_up, z_up };
enum class RotationUnit { radians, degrees };
enum class Origin { floor_corner, floor_center, unknown };

struct SourceConvention {
  UpAxis up_axis = UpAxis::z_up;
  RotationUnit rotation_unit = RotationUnit::radians;
  // Add pi to every rotation (sources whose yaw runs the other way).
  bool rotation_flip = false;
  Origin origin = Origin::unknown;
};

// three_d_front: y-up, radians, no flip. holodeck_synth: y-up, degrees, flip,
// origin at a floor corner. generated: already canonical.
SourceConvention default_convention(SceneSource source);

// Translates floor and objects so the floor's area centroid sits at (0, 0).
// Throws DegenerateError for a zero-area floor.
SceneRecord recenter(const SceneRecord& record);

// Maps a record stored in `conv` into the canonical frame: z up, radians in
// [0, 2pi). y-up positions (x, y, z) become (x, z, y); floors are already
// ground-plane coordinates and pass through.
SceneRecord convert_convention(const SceneRecord& record, const SourceConvention& conv);

// Drops objects whose footprint area is below `min_area` (m^2).
SceneRecord exclude_small_objects(const SceneRecord& record, double min_area);

enum class FlawReason { under_populated, clustered, count_mismatch, orientation_suspect };

std::string_view to_string(FlawReason reason);
// clustered and orientation_suspect only flag a scene for human review.
bool is_advisory(FlawReason reason);

struct FilterRules {
  std::map<RoomType, int> min_objects = {{RoomType::bedroom, 6},
                                         {RoomType::living_room, 6},
                                         {RoomType::kitchen, 3},
                                         {RoomType::bathroom, 2}};
  // Flag when mean object-to-centroid distance / floor circumradius is below.
  double clustering_threshold = 0.25;
  // A chair must face a table or desk within this distance (m).
  double chair_reach = 1.5;
  // Footprints below this area (m^2) are dropped at ingestion.
  double small_object_area = 0.04;
};

struct FilterVerdict {
  bool accepted = true;
  std::vector<FlawReason> reasons;
  std::map<std::string, double> metrics;
};

FilterVerdict filter_scene(const SceneRecord& record, const FilterRules& rules = {});

struct Quartiles {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

// Linear interpolation between closest ranks. Zeros for empty input.
Quartiles quartiles(std::vector<double> values);

struct CorpusStats {
  std::size_t scene_count = 0;
  std::size_t object_count = 0;
  std::map<RoomType, std::size_t> room_counts;
  std::map<RoomType, double> room_fractions;
  Quartiles objects_per_scene;
  std::map<RoomType, Quartiles> objects_per_scene_by_room;
  std::size_t distinct_descriptions = 0;
};

// Single-pass accumulator. merge() lets per-thread partial results combine;
// the final numbers do not depend on how records were partitioned.
class CorpusStatsBuilder {
 public:
  void add(const SceneRecord& record);
  void merge(const CorpusStatsBuilder& other);
  CorpusStats finish() const;

 private:
  std::map<RoomType, std::vector<double>> counts_by_room_;
  std::map<std::string, std::size_t> descriptions_;
};

CorpusStats corpus_stats(const std::vector<SceneRecord>& corpus);
nlohmann::ordered_json to_json(const CorpusStats& stats);

using SplitPlan = std::map<RoomType, std::size_t>;

struct Split {
  std::vector<SceneRecord> train;
  std::vector<SceneRecord> test;
};

// Draws plan[t] test scenes of each room type; everything else is train. Both
// sides keep corpus order. Throws InsufficientDataError.
Split split_corpus(const std::vector<SceneRecord>& corpus, std::uint64_t seed, const SplitPlan& plan);

// "bedroom=423,living_room=53"
SplitPlan parse_split_plan(std::string_view text);

struct PipelineConfig {
  FilterRules rules;
  std::map<SceneSource, SourceConvention> conventions = {
      {SceneSource::three_d_front, default_convention(SceneSource::three_d_front)},
      {SceneSource::holodeck_synth, default_convention(SceneSource::holodeck_synth)},
      {SceneSource::generated, default_convention(SceneSource::generated)}};
};

PipelineConfig config_from_json(const nlohmann::ordered_json& j);
PipelineConfig load_config(const std::filesystem::path& path);

// Source loaders return records still in the source convention; see
// docs/formats.md for the accepted input shapes.
SceneRecord load_front_scene(const nlohmann::ordered_json& j, const std::string& fallback_id);
SceneRecord load_holodeck_scene(const nlohmann::ordered_json& j, const std::string& fallback_id);

// load -> convert_convention -> recenter -> exclude_small_objects.
SceneRecord ingest_scene(const nlohmann::ordered_json& j, SceneSource source,
                         const PipelineConfig& config, const std::string& fallback_id);

}  // namespace layoutforge::dataset
