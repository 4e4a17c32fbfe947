#include "layoutforge/eval.hpp"

#include <algorithm>
#include <cmath>

#include "layoutforge/errors.hpp"
#include "layoutforge/geometry.hpp"

namespace layoutforge::eval {

namespace {

using Json = nlohmann::ordered_json;

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool counts_match(const Layout& layout, const TaskSpec& task) {
  std::map<std::string, int> want;
  for (const ObjectSpec& s : task.objects) want[lower(s.description)] += s.quantity;
  std::map<std::string, int> have;
  for (const PlacedObject& o : layout.objects) have[lower(o.description)] += 1;
  return want == have;
}

}  // namespace

ValidationThresholds forge_thresholds() { return {1e-6, 1e-6, false}; }

void check_thresholds(const ValidationThresholds& t) {
  if (!std::isfinite(t.max_pair_overlap) || t.max_pair_overlap < 0.0 || !std::isfinite(t.max_boundary_violation) ||
      t.max_boundary_violation < 0.0) {
    throw ValueError("validation thresholds must be finite and >= 0");
  }
}

ValidationReport validate(const Layout& layout, const ValidationThresholds& t, const TaskSpec* task) {
  check_thresholds(t);
  ValidationReport r;
  std::vector<geometry::OrientedRect2D> rects;
  double total_area = 0.0;
  for (const PlacedObject& o : layout.objects) {
    rects.push_back(geometry::footprint(o));
    total_area += rects.back().area();
    const double v = geometry::containment_violation(rects.back(), layout.floor);
    if (v > 0.0) r.boundary_violations.push_back({o.instance_id, v});
  }
  double total_overlap = 0.0;
  for (std::size_t i = 0; i < rects.size(); ++i) {
    for (std::size_t j = i + 1; j < rects.size(); ++j) {
      const double a = geometry::overlap_area(rects[i], rects[j]);
      if (a > 0.0) {
        r.pair_overlaps.push_back({layout.objects[i].instance_id, layout.objects[j].instance_id, a});
        total_overlap += a;
      }
    }
  }
  r.oor = total_area > 0.0 ? total_overlap / total_area : 0.0;
  r.count_match = task ? counts_match(layout, *task) : true;
  r.usable = std::all_of(r.pair_overlaps.begin(), r.pair_overlaps.end(),
                         [&](const PairOverlap& p) { return p.area <= t.max_pair_overlap; }) &&
             std::all_of(r.boundary_violations.begin(), r.boundary_violations.end(),
                         [&](const BoundaryViolation& b) { return b.area <= t.max_boundary_violation; }) &&
             (!t.require_counts_match || r.count_match);
  return r;
}

Json to_json(const ValidationReport& report) {
  Json overlaps = Json::array();
  for (const PairOverlap& p : report.pair_overlaps) overlaps.push_back(Json{{"a", p.a}, {"b", p.b}, {"area", p.area}});
  Json violations = Json::array();
  for (const BoundaryViolation& b : report.boundary_violations) violations.push_back(Json{{"id", b.id}, {"area", b.area}});
  return Json{{"oor", report.oor},
              {"pair_overlaps", std::move(overlaps)},
              {"boundary_violations", std::move(violations)},
              {"count_match", report.count_match},
              {"usable", report.usable}};
}

ValidationReport report_from_json(const Json& j) {
  try {
    ValidationReport r;
    r.oor = j.at("oor").get<double>();
    for (const Json& p : j.at("pair_overlaps")) {
      r.pair_overlaps.push_back({p.at("a").get<std::string>(), p.at("b").get<std::string>(), p.at("area").get<double>()});
    }
    for (const Json& b : j.at("boundary_violations")) {
      r.boundary_violations.push_back({b.at("id").get<std::string>(), b.at("area").get<double>()});
    }
    r.count_match = j.at("count_match").get<bool>();
    r.usable = j.at("usable").get<bool>();
    return r;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("validation report: ") + e.what());
  }
}

SuccessReport success_rate(const std::vector<TaskSpec>& tasks, gateway::Gateway& gateway,
                           const gateway::GenerationParams& params, int n_per_task, const ValidationThresholds& t) {
  if (n_per_task < 1) throw ValueError("n_per_task must be >= 1");
  check_thresholds(t);
  std::vector<prompt::PromptBundle> bundles;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const prompt::PromptBundle b = prompt::build_generation_prompt(tasks[i]);
    for (int k = 0; k < n_per_task; ++k) {
      bundles.push_back(b);
      owner.push_back(i);
    }
  }
  const auto outcomes = gateway.complete_batch(bundles, params);

  SuccessReport report;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const TaskSpec& task = tasks[owner[k]];
    ItemResult item;
    item.room_type = task.room_type;
    item.task_index = owner[k];
    RoomTally& tally = report.rooms[task.room_type];
    ++tally.attempted;
    if (const auto* failure = std::get_if<gateway::Failure>(&outcomes[k])) {
      item.error_code = failure->code;
      item.error_message = failure->message;
      ++tally.failed;
    } else {
      try {
        const auto parsed = prompt::parse_completion(std::get<std::string>(outcomes[k]), &task);
        item.report = validate(parsed.layout, t, &task);
        item.usable = item.report->usable;
        tally.oor_sum += item.report->oor;
        ++tally.oor_count;
        if (item.usable) ++tally.usable;
      } catch (const Error& e) {
        item.error_code = e.code();
        item.error_message = e.what();
        ++tally.failed;
      }
    }
    report.items.push_back(std::move(item));
  }
  return report;
}

Json to_json(const SuccessReport& report) {
  Json rooms = Json::object();
  for (const auto& [room, tally] : report.rooms) {
    rooms[std::string(to_string(room))] = Json{{"attempted", tally.attempted},
                                               {"usable", tally.usable},
                                               {"failed", tally.failed},
                                               {"success_rate", tally.rate()},
                                               {"mean_oor", tally.mean_oor()}};
  }
  Json items = Json::array();
  for (const ItemResult& item : report.items) {
    Json j{{"room_type", std::string(to_string(item.room_type))}, {"task_index", item.task_index}, {"usable", item.usable}};
    if (item.error_code) j["error"] = Json{{"code", *item.error_code}, {"message", *item.error_message}};
    if (item.report) j["report"] = to_json(*item.report);
    items.push_back(std::move(j));
  }
  return Json{{"rooms", std::move(rooms)}, {"items", std::move(items)}};
}

std::vector<JudgeOutcome> judge_scores(const std::vector<Layout>& layouts, const std::string& preferences,
                                       gateway::Gateway& gateway, const gateway::GenerationParams& params) {
  std::vector<prompt::PromptBundle> bundles;
  for (const Layout& l : layouts) bundles.push_back(prompt::build_judge_prompt(l, preferences));
  std::vector<JudgeOutcome> out;
  for (auto& outcome : gateway.complete_batch(bundles, params)) {
    if (auto* failure = std::get_if<gateway::Failure>(&outcome)) {
      out.emplace_back(std::move(*failure));
      continue;
    }
    try {
      out.emplace_back(prompt::parse_judge(std::get<std::string>(outcome)));
    } catch (const Error& e) {
      out.emplace_back(gateway::Failure{e.code(), e.what()});
    }
  }
  return out;
}

Json to_json(const JudgeOutcome& outcome) {
  if (const auto* f = std::get_if<gateway::Failure>(&outcome)) {
    return Json{{"error", Json{{"code", f->code}, {"message", f->message}}}};
  }
  const auto& s = std::get<prompt::JudgeScore>(outcome);
  return Json{{"functionality_score", s.functionality},
              {"layout_score", s.layout},
              {"aesthetics_score", s.aesthetics},
              {"overall_score", s.overall},
              {"comments", s.comments}};
}

}  // namespace layoutforge::eval
