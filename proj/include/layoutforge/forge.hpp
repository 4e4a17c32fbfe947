#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "layoutforge/gateway.hpp"
#include "layoutforge/scene.hpp"

// Preference-pair construction for DPO training data.
namespace layoutforge::forge {

enum class Stage { stage1, stage2 };

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view text);

inline constexpr std::string_view kOutOfBoundsTag = "out_of_bounds";
inline constexpr std::string_view kOverlapTag = "overlap";

struct PreferencePair {
  std::string scene_id;
  TaskSpec task;
  Layout positive;
  Layout negative;
  Stage stage = Stage::stage1;
  std::vector<std::string> tags;
  // Reasoning text carried into the exported completions.
  std::string positive_reasoning;
  std::string negative_reasoning;
};

bool operator==(const PreferencePair& a, const PreferencePair& b);

struct SkipLog {
  std::string scene_id;
  int sample = -1;  // stage-1 sample index, -1 when not applicable
  std::string code;
  std::string message;
};

struct PairBatch {
  std::vector<PreferencePair> pairs;
  std::vector<SkipLog> skips;
};

// Samples k completions per positive through the gateway and pairs every
// parseable one (as rejected) with the curated positive. Positives that fail
// validation at forge thresholds are skipped.
PairBatch make_stage1_pairs(const std::vector<SceneRecord>& positives, gateway::Gateway& gateway,
                            const gateway::GenerationParams& params, int k = 2);

// Moves one uniformly chosen fully-contained object radially away from the
// floor centroid until it first crosses the boundary, then `magnitude` m
// further. Throws NoEligibleObjectError, ValueError.
Layout inject_out_of_bounds(const Layout& layout, std::uint64_t seed, double magnitude = 0.5);

// Slides one uniformly chosen object toward a second one until their overlap
// exceeds a quarter of the smaller footprint. Throws TooFewObjectsError.
Layout inject_overlap(const Layout& layout, std::uint64_t seed);

inline constexpr double kOverlapFraction = 0.25;

// One pair per usable positive. `overlap_share` is the fraction of pairs
// built with the overlap injector; the rest use out-of-bounds. With a mixed
// share an inapplicable injector falls back to the other one; with 0 or 1 the
// item is skipped instead. Negatives that still pass validation are skipped.
PairBatch synth_stage2_pairs(const std::vector<SceneRecord>& positives, std::uint64_t seed, double overlap_share,
                             double magnitude = 0.5);

// -log sigmoid(beta * ((lp_pos_policy - lp_pos_ref) - (lp_neg_policy - lp_neg_ref))).
// Throws NonFiniteError for non-finite inputs, ValueError for beta <= 0.
double dpo_loss(double lp_pos_policy, double lp_neg_policy, double lp_pos_ref, double lp_neg_ref, double beta);

std::string format_pairs(const std::vector<PreferencePair>& pairs);
std::vector<PreferencePair> parse_pairs(const std::string& jsonl);
void export_pairs(const std::vector<PreferencePair>& pairs, const std::filesystem::path& path);
std::vector<PreferencePair> import_pairs(const std::filesystem::path& path);

}  // namespace layoutforge::forge
