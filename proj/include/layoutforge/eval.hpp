#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "layoutforge/gateway.hpp"
#include "layoutforge/scene.hpp"

// Layout metrics, generation success rate, navigation check and rendering.
namespace layoutforge::eval {

struct ValidationThresholds {
  double max_pair_overlap = 0.01;        // m^2
  double max_boundary_violation = 0.01;  // m^2
  bool require_counts_match = false;
};

// Zero-tolerance thresholds used when building preference pairs.
ValidationThresholds forge_thresholds();

// Throws ValueError for negative or non-finite thresholds.
void check_thresholds(const ValidationThresholds& t);

struct PairOverlap {
  std::string a;
  std::string b;
  double area = 0.0;
};

struct BoundaryViolation {
  std::string id;
  double area = 0.0;
};

struct ValidationReport {
  double oor = 0.0;
  // Only nonzero entries.
  std::vector<PairOverlap> pair_overlaps;
  std::vector<BoundaryViolation> boundary_violations;
  bool count_match = true;
  bool usable = true;
};

// Oriented footprints. count_match compares per-description instance counts
// with `task` (true when no task is given). OOR is 0 for an empty layout.
ValidationReport validate(const Layout& layout, const ValidationThresholds& t = {}, const TaskSpec* task = nullptr);

nlohmann::ordered_json to_json(const ValidationReport& report);
ValidationReport report_from_json(const nlohmann::ordered_json& j);

struct ItemResult {
  RoomType room_type = RoomType::bedroom;
  std::size_t task_index = 0;
  bool usable = false;
  std::optional<std::string> error_code;
  std::optional<std::string> error_message;
  std::optional<ValidationReport> report;
};

struct RoomTally {
  std::size_t attempted = 0;
  std::size_t usable = 0;
  std::size_t failed = 0;  // gateway or parse failures
  double oor_sum = 0.0;
  std::size_t oor_count = 0;

  double rate() const { return attempted == 0 ? 0.0 : static_cast<double>(usable) / static_cast<double>(attempted); }
  double mean_oor() const { return oor_count == 0 ? 0.0 : oor_sum / static_cast<double>(oor_count); }
};

struct SuccessReport {
  std::map<RoomType, RoomTally> rooms;
  std::vector<ItemResult> items;
};

// Draws n_per_task completions per task in one batch, parses each with the
// task as context and validates it. Parse and gateway failures count as
// unusable.
SuccessReport success_rate(const std::vector<TaskSpec>& tasks, gateway::Gateway& gateway,
                           const gateway::GenerationParams& params, int n_per_task,
                           const ValidationThresholds& t = {});

nlohmann::ordered_json to_json(const SuccessReport& report);

// Heading is the standard math angle of the travel direction (0 = +x, CCW).
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

struct NavTask {
  Pose start;
  std::string target_instance;
  double fov_half_angle = 0.5235987755982988;  // pi / 6
  double success_radius = 2.0;
  double grid_resolution = 0.1;
};

struct NavResult {
  bool success = false;
  bool reachable = false;
  Pose final_pose;
  std::vector<Pose> path;
  // Meters from the final position to the target center.
  double nav_error = 0.0;
  // |bearing to target - final heading|, in [0, pi].
  double bearing_error = 0.0;
};

// Throws UnknownTargetError, InvalidStartError, ValueError (bad task fields).
NavResult nav_eval(const Layout& layout, const NavTask& task);

nlohmann::ordered_json to_json(const NavResult& result);

struct SvgOptions {
  double pixels_per_meter = 100.0;
  double margin = 0.25;  // m
  bool labels = true;
};

std::string render_svg(const Layout& layout, const SvgOptions& options = {});

using JudgeOutcome = std::variant<prompt::JudgeScore, gateway::Failure>;

std::vector<JudgeOutcome> judge_scores(const std::vector<Layout>& layouts, const std::string& preferences,
                                       gateway::Gateway& gateway, const gateway::GenerationParams& params);

nlohmann::ordered_json to_json(const JudgeOutcome& outcome);

}  // namespace layoutforge::eval
