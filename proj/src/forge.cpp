#include "layoutforge/forge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "layoutforge/errors.hpp"
#include "layoutforge/eval.hpp"
#include "layoutforge/geometry.hpp"
#include "layoutforge/json_io.hpp"
#include "layoutforge/rng.hpp"

namespace layoutforge::forge {

namespace {

using Json = nlohmann::ordered_json;

constexpr int kBisectSteps = 60;

bool is_usable(const Layout& layout) { return eval::validate(layout, eval::forge_thresholds()).usable; }

// splitmix64 finalizer; decorrelates per-item seeds.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Smallest t in (lo, hi] with pred(t), given !pred(lo) and pred(hi).
template <typename Pred>
double bisect(double lo, double hi, Pred pred) {
  for (int i = 0; i < kBisectSteps; ++i) {
    const double mid = (lo + hi) / 2.0;
    (pred(mid) ? hi : lo) = mid;
  }
  return hi;
}

std::string code_of(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return err->code();
  return "internal";
}

}  // namespace

std::string_view to_string(Stage stage) { return stage == Stage::stage1 ? "stage1" : "stage2"; }

Stage parse_stage(std::string_view text) {
  if (text == "stage1") return Stage::stage1;
  if (text == "stage2") return Stage::stage2;
  throw SchemaError("stage must be stage1 or stage2");
}

bool operator==(const PreferencePair& a, const PreferencePair& b) {
  return a.scene_id == b.scene_id && json_io::to_json(a.task) == json_io::to_json(b.task) &&
         json_io::to_json(a.positive) == json_io::to_json(b.positive) &&
         json_io::to_json(a.negative) == json_io::to_json(b.negative) && a.stage == b.stage && a.tags == b.tags &&
         a.positive_reasoning == b.positive_reasoning && a.negative_reasoning == b.negative_reasoning;
}

PairBatch make_stage1_pairs(const std::vector<SceneRecord>& positives, gateway::Gateway& gateway,
                            const gateway::GenerationParams& params, int k) {
  if (k < 1) throw ValueError("k must be >= 1");
  PairBatch batch;
  std::vector<std::size_t> usable;
  std::vector<TaskSpec> tasks;
  std::vector<prompt::PromptBundle> bundles;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const SceneRecord& r = positives[i];
    if (r.layout.objects.empty() || !is_usable(r.layout)) {
      batch.skips.push_back({r.scene_id, -1, "positive_invalid", "positive fails validation at forge thresholds"});
      continue;
    }
    usable.push_back(i);
    tasks.push_back(task_from_layout(r.layout));
    const auto bundle = prompt::build_generation_prompt(tasks.back());
    for (int s = 0; s < k; ++s) bundles.push_back(bundle);
  }
  const auto outcomes = gateway.complete_batch(bundles, params);
  for (std::size_t u = 0; u < usable.size(); ++u) {
    const SceneRecord& r = positives[usable[u]];
    for (int s = 0; s < k; ++s) {
      const auto& outcome = outcomes[u * static_cast<std::size_t>(k) + static_cast<std::size_t>(s)];
      if (const auto* f = std::get_if<gateway::Failure>(&outcome)) {
        batch.skips.push_back({r.scene_id, s, f->code, f->message});
        continue;
      }
      try {
        const auto parsed = prompt::parse_completion(std::get<std::string>(outcome), &tasks[u]);
        PreferencePair p;
        p.scene_id = r.scene_id;
        p.task = tasks[u];
        p.positive = r.layout;
        p.negative = parsed.layout;
        p.stage = Stage::stage1;
        p.positive_reasoning = r.semantic_summary.value_or("");
        p.negative_reasoning = parsed.reasoning;
        batch.pairs.push_back(std::move(p));
      } catch (const Error& e) {
        batch.skips.push_back({r.scene_id, s, e.code(), e.what()});
      }
    }
  }
  return batch;
}

Layout inject_out_of_bounds(const Layout& layout, std::uint64_t seed, double magnitude) {
  if (!std::isfinite(magnitude) || magnitude < 0.0) throw ValueError("magnitude must be finite and >= 0");
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < layout.objects.size(); ++i) {
    if (geometry::containment_violation(geometry::footprint(layout.objects[i]), layout.floor) == 0.0) {
      eligible.push_back(i);
    }
  }
  if (eligible.empty()) throw NoEligibleObjectError("no object lies fully inside the floor");
  Rng rng(seed);
  const std::size_t pick = eligible[rng.uniform_index(eligible.size())];
  const PlacedObject& obj = layout.objects[pick];

  const Vec2 centroid = geometry::polygon_centroid(geometry::Polygon2D{layout.floor.vertices});
  Vec2 dir = obj.placement.position.xy() - centroid;
  if (norm(dir) < 1e-9) {
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    dir = {std::cos(theta), std::sin(theta)};
  }
  dir = dir * (1.0 / norm(dir));

  const auto moved = [&](double t) {
    Placement p = obj.placement;
    p.position.x += dir.x * t;
    p.position.y += dir.y * t;
    return p;
  };
  const auto violates = [&](double t) {
    return geometry::containment_violation(geometry::footprint(moved(t), obj.size), layout.floor) > 0.0;
  };
  // Far enough that the footprint is entirely outside the floor.
  const double reach = 2.0 * (geometry::circumradius(layout.floor) + std::hypot(obj.size.width, obj.size.depth)) + 1.0;
  const double step = 0.05;
  double lo = 0.0;
  double hi = step;
  while (!violates(hi) && hi < reach) {
    lo = hi;
    hi += step;
  }
  double t = bisect(lo, hi, violates) + magnitude;
  // Non-convex floors can re-admit the footprint further out.
  while (!violates(t) && t < reach) t += step;

  Layout out = layout;
  out.objects[pick].placement = moved(t);
  return out;
}

Layout inject_overlap(const Layout& layout, std::uint64_t seed) {
  const std::size_t n = layout.objects.size();
  if (n < 2) throw TooFewObjectsError("overlap injection needs at least two objects");
  Rng rng(seed);
  const std::size_t mover = rng.uniform_index(n);
  std::size_t target = rng.uniform_index(n - 1);
  if (target >= mover) ++target;

  const PlacedObject& a = layout.objects[mover];
  const PlacedObject& b = layout.objects[target];
  const auto rect_b = geometry::footprint(b);
  const double need = kOverlapFraction * std::min(a.size.width * a.size.depth, b.size.width * b.size.depth);
  const Vec2 from = a.placement.position.xy();
  const Vec2 to = b.placement.position.xy();

  const auto at = [&](double t, double rotation) {
    Placement p = a.placement;
    p.position.x = from.x + (to.x - from.x) * t;
    p.position.y = from.y + (to.y - from.y) * t;
    p.rotation = rotation;
    return p;
  };
  const auto overlap = [&](double t, double rotation) {
    return geometry::overlap_area(geometry::footprint(at(t, rotation), a.size), rect_b);
  };

  // Coincident centers do not always reach the quota (thin pieces crossing
  // at right angles), so the mover may also turn to line up with the target.
  std::optional<double> rotation;
  for (double r : {a.placement.rotation, b.placement.rotation,
                   normalize_angle(b.placement.rotation + std::numbers::pi / 2.0)}) {
    if (overlap(1.0, r) > need) {
      rotation = r;
      break;
    }
  }
  if (!rotation) throw NoEligibleObjectError("cannot make the chosen objects overlap enough");

  const auto enough = [&](double t) { return overlap(t, *rotation) > need; };
  double t = 1.0;
  if (enough(0.0)) {
    t = 0.0;
  } else {
    const double step = 0.02;
    double lo = 0.0;
    for (double hi = step; hi <= 1.0 + 1e-12; hi += step) {
      if (enough(hi)) {
        t = bisect(lo, hi, enough);
        break;
      }
      lo = hi;
    }
  }
  Layout out = layout;
  out.objects[mover].placement = at(t, *rotation);
  return out;
}

PairBatch synth_stage2_pairs(const std::vector<SceneRecord>& positives, std::uint64_t seed, double overlap_share,
                             double magnitude) {
  if (!(overlap_share >= 0.0 && overlap_share <= 1.0)) throw ValueError("mix must lie in [0, 1]");
  const std::size_t n = positives.size();
  const auto n_overlap = static_cast<std::size_t>(std::llround(overlap_share * static_cast<double>(n)));
  std::vector<char> use_overlap(n, 0);
  std::fill(use_overlap.begin(), use_overlap.begin() + static_cast<std::ptrdiff_t>(n_overlap), 1);
  Rng rng(seed);
  rng.shuffle(std::span<char>(use_overlap));
  const bool mixed = overlap_share > 0.0 && overlap_share < 1.0;

  PairBatch batch;
  for (std::size_t i = 0; i < n; ++i) {
    const SceneRecord& r = positives[i];
    if (r.layout.objects.empty() || !is_usable(r.layout)) {
      batch.skips.push_back({r.scene_id, -1, "positive_invalid", "positive fails validation at forge thresholds"});
      continue;
    }
    const std::uint64_t item_seed = mix(seed ^ mix(i));
    std::vector<bool> order{use_overlap[i] != 0};
    if (mixed) order.push_back(use_overlap[i] == 0);

    std::optional<Layout> negative;
    std::string tag;
    std::string last_code;
    std::string last_message;
    for (bool overlap : order) {
      try {
        negative = overlap ? inject_overlap(r.layout, item_seed) : inject_out_of_bounds(r.layout, item_seed, magnitude);
        tag = overlap ? kOverlapTag : kOutOfBoundsTag;
        break;
      } catch (const std::exception& e) {
        last_code = code_of(e);
        last_message = e.what();
      }
    }
    if (!negative) {
      batch.skips.push_back({r.scene_id, -1, last_code, last_message});
      continue;
    }
    if (is_usable(*negative)) {
      batch.skips.push_back({r.scene_id, -1, "negative_passes", "injected layout still passes validation"});
      continue;
    }
    PreferencePair p;
    p.scene_id = r.scene_id;
    p.task = task_from_layout(r.layout);
    p.positive = r.layout;
    p.negative = std::move(*negative);
    p.stage = Stage::stage2;
    p.tags = {tag};
    p.positive_reasoning = r.semantic_summary.value_or("");
    p.negative_reasoning = p.positive_reasoning;
    batch.pairs.push_back(std::move(p));
  }
  return batch;
}

double dpo_loss(double lp_pos_policy, double lp_neg_policy, double lp_pos_ref, double lp_neg_ref, double beta) {
  for (double v : {lp_pos_policy, lp_neg_policy, lp_pos_ref, lp_neg_ref, beta}) {
    if (!std::isfinite(v)) throw NonFiniteError("dpo_loss inputs must be finite");
  }
  if (beta <= 0.0) throw ValueError("beta must be > 0");
  const double z = beta * ((lp_pos_policy - lp_pos_ref) - (lp_neg_policy - lp_neg_ref));
  // softplus(-z) without overflow on either side.
  const double loss = z >= 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
  // The exact value is positive; below ~1e-308 it no longer fits a double.
  return loss > 0.0 ? loss : std::numeric_limits<double>::denorm_min();
}

std::string format_pairs(const std::vector<PreferencePair>& pairs) {
  std::string out;
  for (const PreferencePair& p : pairs) {
    Json tags = Json::array();
    for (const auto& t : p.tags) tags.push_back(t);
    const Json line{{"scene_id", p.scene_id},
                    {"task", json_io::to_json(p.task)},
                    {"prompt_text", prompt::build_generation_prompt(p.task).full_text()},
                    {"chosen", prompt::format_completion(p.positive_reasoning, p.positive)},
                    {"rejected", prompt::format_completion(p.negative_reasoning, p.negative)},
                    {"stage", std::string(to_string(p.stage))},
                    {"tags", std::move(tags)}};
    out += line.dump() + "\n";
  }
  return out;
}

std::vector<PreferencePair> parse_pairs(const std::string& jsonl) {
  std::vector<PreferencePair> pairs;
  std::istringstream in(jsonl);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      PreferencePair p;
      p.scene_id = j.at("scene_id").get<std::string>();
      p.task = json_io::task_from_json(j.at("task"));
      const auto chosen = prompt::parse_completion(j.at("chosen").get<std::string>(), &p.task);
      const auto rejected = prompt::parse_completion(j.at("rejected").get<std::string>(), &p.task);
      p.positive = chosen.layout;
      p.positive_reasoning = chosen.reasoning;
      p.negative = rejected.layout;
      p.negative_reasoning = rejected.reasoning;
      p.stage = parse_stage(j.at("stage").get<std::string>());
      for (const Json& t : j.at("tags")) p.tags.push_back(t.get<std::string>());
      pairs.push_back(std::move(p));
    } catch (const Json::exception& e) {
      throw SchemaError(fmt::format("pairs line {}: {}", line_no, e.what()));
    } catch (const Error& e) {
      throw SchemaError(fmt::format("pairs line {}: {}", line_no, e.what()));
    }
  }
  return pairs;
}

void export_pairs(const std::vector<PreferencePair>& pairs, const std::filesystem::path& path) {
  json_io::write_text_file(path, format_pairs(pairs));
}

std::vector<PreferencePair> import_pairs(const std::filesystem::path& path) {
  return parse_pairs(json_io::read_text_file(path));
}

}  // namespace layoutforge::forge
