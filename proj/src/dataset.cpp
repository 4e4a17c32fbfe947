#include "layoutforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "layoutforge/errors.hpp"
#include "layoutforge/geometry.hpp"
#include "layoutforge/rng.hpp"

namespace layoutforge::dataset {

namespace {

bool has_token(const std::vector<std::string>& tokens, std::string_view t) {
  return std::find(tokens.begin(), tokens.end(), t) != tokens.end();
}

bool is_chair(const PlacedObject& o) { return has_token(tokenize(o.description), "chair"); }

bool is_table(const PlacedObject& o) {
  const auto tokens = tokenize(o.description);
  return has_token(tokens, "table") || has_token(tokens, "desk");
}

}  // namespace

SourceConvention default_convention(SceneSource source) {
  switch (source) {
    case SceneSource::three_d_front:
      return {UpAxis::y_up, RotationUnit::radians, false, Origin::unknown};
    case SceneSource::holodeck_synth:
      return {UpAxis::y_up, RotationUnit::degrees, true, Origin::floor_corner};
    case SceneSource::generated:
      return {UpAxis::z_up, RotationUnit::radians, false, Origin::floor_center};
  }
  return {};
}

SceneRecord recenter(const SceneRecord& record) {
  const Vec2 c = geometry::polygon_centroid(geometry::Polygon2D{record.layout.floor.vertices});
  SceneRecord out = record;
  for (Vec2& v : out.layout.floor.vertices) v = v - c;
  for (PlacedObject& o : out.layout.objects) {
    o.placement.position.x -= c.x;
    o.placement.position.y -= c.y;
  }
  return out;
}

SceneRecord convert_convention(const SceneRecord& record, const SourceConvention& conv) {
  SceneRecord out = record;
  for (PlacedObject& o : out.layout.objects) {
    if (conv.up_axis == UpAxis::y_up) {
      const Vec3 p = o.placement.position;
      o.placement.position = {p.x, p.z, p.y};
    }
    double r = o.placement.rotation;
    if (conv.rotation_unit == RotationUnit::degrees) r *= std::numbers::pi / 180.0;
    if (conv.rotation_flip) r += std::numbers::pi;
    o.placement.rotation = normalize_angle(r);
  }
  return out;
}

SceneRecord exclude_small_objects(const SceneRecord& record, double min_area) {
  SceneRecord out = record;
  std::erase_if(out.layout.objects, [&](const PlacedObject& o) {
    return o.size.width * o.size.depth < min_area;
  });
  return out;
}

std::string_view to_string(FlawReason reason) {
  switch (reason) {
    case FlawReason::under_populated: return "under_populated";
    case FlawReason::clustered: return "clustered";
    case FlawReason::count_mismatch: return "count_mismatch";
    case FlawReason::orientation_suspect: return "orientation_suspect";
  }
  return "unknown";
}

bool is_advisory(FlawReason reason) {
  return reason == FlawReason::clustered || reason == FlawReason::orientation_suspect;
}

FilterVerdict filter_scene(const SceneRecord& record, const FilterRules& rules) {
  FilterVerdict verdict;
  const Layout& layout = record.layout;
  const auto n = static_cast<int>(layout.objects.size());

  const auto min_it = rules.min_objects.find(layout.room_type);
  const int min_objects = min_it == rules.min_objects.end() ? 1 : min_it->second;
  verdict.metrics["object_count"] = n;
  verdict.metrics["min_objects"] = min_objects;
  if (n < min_objects) verdict.reasons.push_back(FlawReason::under_populated);

  if (!record.requested.empty()) {
    int requested = 0;
    for (const ObjectSpec& s : record.requested) requested += s.quantity;
    verdict.metrics["requested_count"] = requested;
    if (requested != n) verdict.reasons.push_back(FlawReason::count_mismatch);
  }

  if (n >= 2) {
    Vec2 mean{};
    for (const PlacedObject& o : layout.objects) mean = mean + o.placement.position.xy();
    mean = mean * (1.0 / n);
    double spread = 0.0;
    for (const PlacedObject& o : layout.objects) spread += norm(o.placement.position.xy() - mean);
    spread /= n;
    const double radius = geometry::circumradius(layout.floor);
    const double ratio = radius > 0.0 ? spread / radius : 0.0;
    verdict.metrics["dispersion_ratio"] = ratio;
    if (ratio < rules.clustering_threshold) verdict.reasons.push_back(FlawReason::clustered);
  }

  std::vector<geometry::OrientedRect2D> tables;
  for (const PlacedObject& o : layout.objects) {
    if (is_table(o)) tables.push_back(geometry::footprint(o));
  }
  int suspect = 0;
  for (const PlacedObject& o : layout.objects) {
    if (!is_chair(o)) continue;
    const Vec2 origin = o.placement.position.xy();
    const Vec2 dir = geometry::facing_direction(o.placement.rotation);
    const bool hits = std::any_of(tables.begin(), tables.end(), [&](const auto& t) {
      return geometry::ray_hit(origin, dir, t, rules.chair_reach).has_value();
    });
    if (!hits) ++suspect;
  }
  verdict.metrics["suspect_chairs"] = suspect;
  if (suspect > 0) verdict.reasons.push_back(FlawReason::orientation_suspect);

  verdict.accepted = std::all_of(verdict.reasons.begin(), verdict.reasons.end(), is_advisory);
  return verdict;
}

Quartiles quartiles(std::vector<double> values) {
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  const auto at = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (values[hi] - values[lo]) * (pos - static_cast<double>(lo));
  };
  return {values.front(), at(0.25), at(0.5), at(0.75), values.back()};
}

void CorpusStatsBuilder::add(const SceneRecord& record) {
  counts_by_room_[record.layout.room_type].push_back(
      static_cast<double>(record.layout.objects.size()));
  for (const PlacedObject& o : record.layout.objects) {
    std::string key;
    for (const auto& t : tokenize(o.description)) key += (key.empty() ? "" : " ") + t;
    ++descriptions_[key];
  }
}

void CorpusStatsBuilder::merge(const CorpusStatsBuilder& other) {
  for (const auto& [room, counts] : other.counts_by_room_) {
    auto& mine = counts_by_room_[room];
    mine.insert(mine.end(), counts.begin(), counts.end());
  }
  for (const auto& [key, n] : other.descriptions_) descriptions_[key] += n;
}

CorpusStats CorpusStatsBuilder::finish() const {
  CorpusStats stats;
  std::vector<double> all;
  for (const auto& [room, counts] : counts_by_room_) {
    stats.room_counts[room] = counts.size();
    stats.scene_count += counts.size();
    stats.objects_per_scene_by_room[room] = quartiles(counts);
    all.insert(all.end(), counts.begin(), counts.end());
  }
  for (double c : all) stats.object_count += static_cast<std::size_t>(c);
  for (const auto& [room, n] : stats.room_counts) {
    stats.room_fractions[room] = static_cast<double>(n) / static_cast<double>(stats.scene_count);
  }
  stats.objects_per_scene = quartiles(std::move(all));
  stats.distinct_descriptions = descriptions_.size();
  return stats;
}

CorpusStats corpus_stats(const std::vector<SceneRecord>& corpus) {
  CorpusStatsBuilder builder;
  for (const SceneRecord& r : corpus) builder.add(r);
  return builder.finish();
}

nlohmann::ordered_json to_json(const CorpusStats& stats) {
  using Json = nlohmann::ordered_json;
  const auto q = [](const Quartiles& v) {
    return Json{{"min", v.min}, {"q1", v.q1}, {"median", v.median}, {"q3", v.q3}, {"max", v.max}};
  };
  Json rooms = Json::object();
  for (RoomType t : kAllRoomTypes) {
    const auto it = stats.room_counts.find(t);
    if (it == stats.room_counts.end()) continue;
    rooms[std::string(layoutforge::to_string(t))] =
        Json{{"scenes", it->second},
             {"fraction", stats.room_fractions.at(t)},
             {"objects_per_scene", q(stats.objects_per_scene_by_room.at(t))}};
  }
  return Json{{"scene_count", stats.scene_count},
              {"object_count", stats.object_count},
              {"distinct_descriptions", stats.distinct_descriptions},
              {"objects_per_scene", q(stats.objects_per_scene)},
              {"rooms", std::move(rooms)}};
}

Split split_corpus(const std::vector<SceneRecord>& corpus, std::uint64_t seed, const SplitPlan& plan) {
  std::vector<bool> in_test(corpus.size(), false);
  Rng rng(seed);
  // Room types are visited in enum order so the draw sequence is fixed.
  for (const auto& [room, wanted] : plan) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (corpus[i].layout.room_type == room) candidates.push_back(i);
    }
    if (candidates.size() < wanted) {
      throw InsufficientDataError("split plan asks for " + std::to_string(wanted) + " " +
                                  std::string(layoutforge::to_string(room)) + " scenes, corpus has " +
                                  std::to_string(candidates.size()));
    }
    rng.shuffle(std::span<std::size_t>(candidates));
    for (std::size_t k = 0; k < wanted; ++k) in_test[candidates[k]] = true;
  }
  Split split;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (in_test[i] ? split.test : split.train).push_back(corpus[i]);
  }
  return split;
}

SplitPlan parse_split_plan(std::string_view text) {
  SplitPlan plan;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    const std::string_view item = text.substr(start, end - start);
    if (!item.empty()) {
      const std::size_t eq = item.find('=');
      if (eq == std::string_view::npos) throw SchemaError("split plan entry '" + std::string(item) + "' lacks '='");
      const RoomType room = parse_room_type(item.substr(0, eq));
      const std::string count(item.substr(eq + 1));
      std::size_t used = 0;
      long long n = -1;
      try {
        n = std::stoll(count, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != count.size() || n < 0) throw SchemaError("bad count in split plan entry '" + std::string(item) + "'");
      plan[room] = static_cast<std::size_t>(n);
    }
    start = end + 1;
  }
  return plan;
}

}  // namespace layoutforge::dataset
