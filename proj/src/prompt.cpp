#include "layoutforge/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <json.hpp>

#include "embedded_assets.hpp"
#include "layoutforge/errors.hpp"
#include "layoutforge/geometry.hpp"
#include "layoutforge/json_io.hpp"

namespace layoutforge::prompt {

namespace {

using Json = nlohmann::ordered_json;

// Deeper nesting than this is never a layout and would only feed the JSON
// parser pathological input.
constexpr int kMaxDepth = 256;
// Bounds the scan on adversarial input with thousands of brackets.
constexpr int kMaxCandidates = 4096;

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  const auto not_space = [](char c) { return !std::isspace(static_cast<unsigned char>(c)); };
  const auto b = std::find_if(s.begin(), s.end(), not_space);
  const auto e = std::find_if(s.rbegin(), s.rend(), not_space).base();
  return b < e ? std::string_view(&*b, static_cast<std::size_t>(e - b)) : std::string_view{};
}

enum class ScanStatus { complete, unterminated, too_deep };

struct ScanResult {
  ScanStatus status;
  std::size_t end;  // one past the closing bracket when complete
};

// Finds the bracket matching text[start] ('{' or '['), skipping string
// literals. Mismatched closers end the value; the JSON parser rejects it.
ScanResult scan_balanced(std::string_view text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      if (++depth > kMaxDepth) return {ScanStatus::too_deep, i};
    } else if (c == '}' || c == ']') {
      if (--depth == 0) return {ScanStatus::complete, i + 1};
    }
  }
  return {ScanStatus::unterminated, text.size()};
}

struct Region {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool found = false;
};

// Content between `open` and `close` at or after `from`. An unclosed block
// runs to `limit`.
Region between(std::string_view text, std::string_view open, std::string_view close, std::size_t from,
               std::size_t limit) {
  const std::size_t o = text.substr(0, limit).find(open, from);
  if (o == std::string_view::npos) return {};
  const std::size_t b = o + open.size();
  const std::size_t c = text.substr(0, limit).find(close, b);
  return {b, c == std::string_view::npos ? limit : c, true};
}

std::string reasoning_of(std::string_view text) {
  Region r = between(text, "<reasoning>", "</reasoning>", 0, text.size());
  if (r.found) {
    // An unclosed reasoning tag stops where the answer starts.
    const std::size_t answer = std::min(text.find("<answer>", r.begin), text.find("[Design]", r.begin));
    if (answer != std::string_view::npos && answer < r.end) r.end = answer;
    const Region inner = between(text, "[Reason]", "[/Reason]", r.begin, r.end);
    if (inner.found) r = inner;
  } else {
    r = between(text, "[Reason]", "[/Reason]", 0, text.size());
    if (r.found) {
      const std::size_t answer = std::min(text.find("<answer>", r.begin), text.find("[Design]", r.begin));
      if (answer != std::string_view::npos && answer < r.end) r.end = answer;
    }
  }
  if (!r.found) return {};
  return std::string(trim(text.substr(r.begin, r.end - r.begin)));
}

const ObjectSpec* match_spec(const TaskSpec& task, std::string_view description) {
  const std::string wanted = lower(trim(description));
  for (const ObjectSpec& s : task.objects) {
    if (lower(s.description) == wanted) return &s;
  }
  const auto want = tokenize(description);
  const ObjectSpec* best = nullptr;
  std::size_t best_overlap = 0;
  for (const ObjectSpec& s : task.objects) {
    const auto have = tokenize(s.description);
    const auto overlap = static_cast<std::size_t>(std::count_if(
        want.begin(), want.end(), [&](const std::string& t) { return std::find(have.begin(), have.end(), t) != have.end(); }));
    if (overlap > best_overlap) {
      best = &s;
      best_overlap = overlap;
    }
  }
  return best;
}

// Turns a candidate JSON value into a layout document, borrowing missing
// parts from the task. Throws on anything that is not a layout.
Layout interpret(const Json& value, const TaskSpec* context) {
  Json doc;
  if (value.is_array()) {
    if (value.empty() || !value.front().is_object()) throw SchemaError("array is not an object list");
    doc = Json::object();
    doc["objects"] = value;
  } else if (value.is_object() && value.contains("objects")) {
    doc = value;
  } else {
    throw SchemaError("JSON value has no 'objects' list");
  }
  if (!doc.contains("room_type")) {
    if (!context) throw SchemaError("layout lacks 'room_type'");
    doc["room_type"] = std::string(to_string(context->room_type));
  }
  if (!doc.contains("floor")) {
    if (!context) throw SchemaError("layout lacks 'floor'");
    doc["floor"] = json_io::to_json(context->floor);
  }
  if (doc["objects"].is_array()) {
    for (Json& o : doc["objects"]) {
      if (!o.is_object() || o.contains("bbox") || !context) continue;
      std::string desc;
      if (o.contains("description") && o["description"].is_string()) desc = o["description"].get<std::string>();
      else if (o.contains("object") && o["object"].is_string()) desc = o["object"].get<std::string>();
      const ObjectSpec* spec = match_spec(*context, desc);
      if (!spec || !spec->size) throw SchemaError("no bbox for '" + desc + "' in the task");
      o["bbox"] = json_io::to_json(*spec->size);
      if (spec->asset_id && !o.contains("asset_id")) o["asset_id"] = *spec->asset_id;
    }
  }
  return json_io::layout_from_json(doc);
}

std::string_view require_template(std::string_view name) { return template_text(name); }

std::string room_json(const Layout& layout) { return serialize_layout(layout); }

}  // namespace

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::generate: return "generate";
    case TemplateId::edit: return "edit";
    case TemplateId::judge: return "judge";
    case TemplateId::summarize: return "summarize";
  }
  return "generate";
}

TemplateId parse_template_id(std::string_view text) {
  for (TemplateId id : {TemplateId::generate, TemplateId::edit, TemplateId::judge, TemplateId::summarize}) {
    if (to_string(id) == text) return id;
  }
  throw SchemaError("unknown template id '" + std::string(text) + "'");
}

std::string_view to_string(EditKind kind) { return kind == EditKind::add ? "add" : "remove"; }

EditRequest classify_edit(std::string_view instruction) {
  const std::string_view text = trim(instruction);
  const std::size_t space = text.find_first_of(" \t\n");
  std::string verb = lower(text.substr(0, space));
  while (!verb.empty() && std::ispunct(static_cast<unsigned char>(verb.back()))) verb.pop_back();
  std::string_view rest = space == std::string_view::npos ? std::string_view{} : trim(text.substr(space));

  EditRequest req;
  req.instruction = std::string(text);
  if (verb == "add" || verb == "place" || verb == "put") {
    req.kind = EditKind::add;
  } else if (verb == "remove" || verb == "delete" || verb == "take") {
    req.kind = EditKind::remove;
    for (std::string_view particle : {"out ", "away "}) {
      if (lower(rest.substr(0, particle.size())) == particle) rest = trim(rest.substr(particle.size()));
    }
  } else {
    throw UnsupportedEditError("only addition and removal edits are supported: '" + req.instruction + "'");
  }
  if (rest.empty()) throw UnsupportedEditError("edit instruction names no object: '" + req.instruction + "'");
  req.target = std::string(rest);
  return req;
}

std::string PromptBundle::full_text() const {
  if (system_text.empty()) return user_text;
  return system_text + "\n" + user_text;
}

std::string_view template_text(std::string_view name) {
  const std::string key = std::string(kTemplateVersion) + "/" + std::string(name);
  const auto text = embedded::template_text(key);
  if (!text) throw IoError("no prompt template named '" + key + "'");
  return *text;
}

std::string render_template(std::string_view text,
                            const std::vector<std::pair<std::string, std::string>>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = text.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    const std::string_view key = text.substr(open + 2, close - open - 2);
    const auto it = std::find_if(values.begin(), values.end(), [&](const auto& kv) { return kv.first == key; });
    if (it == values.end()) throw PreconditionError("template placeholder '" + std::string(key) + "' has no value");
    out.append(text.substr(pos, open - pos));
    out.append(it->second);
    pos = close + 2;
  }
  out.append(text.substr(pos));
  return out;
}

std::string task_json(const TaskSpec& task) {
  Json j = Json::object();
  j["room_type"] = std::string(to_string(task.room_type));
  // Rounded so float noise from the shoelace sum does not reach the prompt.
  j["room_area"] = std::round(geometry::polygon_area(geometry::Polygon2D{task.floor.vertices}) * 1e6) / 1e6;
  j["floor"] = json_io::to_json(task.floor);
  Json objects = Json::array();
  for (const ObjectSpec& s : task.objects) {
    Json o = Json::object();
    o["object"] = s.description;
    o["quantity"] = s.quantity;
    o["bbox"] = json_io::to_json(*s.size);
    objects.push_back(std::move(o));
  }
  j["objects"] = std::move(objects);
  if (!task.instruction.empty()) j["instruction"] = task.instruction;
  return j.dump(2);
}

PromptBundle build_generation_prompt(const TaskSpec& task) {
  if (task.floor.vertices.empty()) throw PreconditionError("task has an empty floor polygon");
  check_task(task);
  for (const ObjectSpec& s : task.objects) {
    if (!s.size) throw UnresolvedSizeError("object '" + s.description + "' has no bounding box; run retrieval first");
  }
  PromptBundle b;
  b.template_id = TemplateId::generate;
  b.system_text = std::string(require_template("generate.system"));
  b.user_text = render_template(require_template("generate.user"),
                                {{"room_type", std::string(display_name(task.room_type))},
                                 {"task_json", task_json(task)}});
  b.task = task;
  return b;
}

PromptBundle build_edit_prompt(const Layout& layout, std::string_view instruction) {
  EditRequest req = classify_edit(instruction);
  const std::string directive =
      req.kind == EditKind::add
          ? "This is an addition edit: add " + req.target + " to the room, choose its bounding box size, and place it so it does not overlap the existing objects."
          : "This is a removal edit: delete " + req.target + " from the layout and leave the remaining objects in place.";
  PromptBundle b;
  b.template_id = TemplateId::edit;
  b.system_text = std::string(require_template("generate.system"));
  b.user_text = render_template(require_template("edit.user"),
                                {{"room_type", std::string(display_name(layout.room_type))},
                                 {"layout_json", room_json(layout)},
                                 {"instruction", req.instruction},
                                 {"directive", directive}});
  b.layout = layout;
  b.edit = std::move(req);
  return b;
}

PromptBundle build_judge_prompt(const Layout& layout, std::string_view preferences) {
  PromptBundle b;
  b.template_id = TemplateId::judge;
  b.user_text = render_template(require_template("judge.user"),
                                {{"preferences", std::string(preferences)}, {"layout_json", room_json(layout)}});
  b.layout = layout;
  b.preferences = std::string(preferences);
  return b;
}

PromptBundle build_summary_prompt(const Layout& layout) {
  PromptBundle b;
  b.template_id = TemplateId::summarize;
  b.user_text = render_template(require_template("summarize.user"),
                                {{"room_name", lower(display_name(layout.room_type))},
                                 {"layout_json", room_json(layout)}});
  b.layout = layout;
  return b;
}

std::string format_completion(std::string_view reasoning, const Layout& layout) {
  std::string out = "<reasoning>\n[Reason]\n";
  out += trim(reasoning);
  out += "\n[/Reason]\n</reasoning>\n<answer>\n[Design]\n";
  out += serialize_layout(layout);
  out += "\n[/Design]\n</answer>\n";
  return out;
}

CompletionParse parse_completion(std::string_view text, const TaskSpec* context) {
  try {
    CompletionParse result;
    result.raw = std::string(text);
    result.reasoning = reasoning_of(text);

    Region answer = between(text, "<answer>", "</answer>", 0, text.size());
    if (answer.found) {
      const Region design = between(text, "[Design]", "[/Design]", answer.begin, answer.end);
      if (design.found) answer = design;
    } else {
      answer = between(text, "[Design]", "[/Design]", 0, text.size());
    }
    if (!answer.found) {
      if (text.find('{') == std::string_view::npos) {
        throw NoAnswerBlockError("completion has no answer block and no JSON");
      }
      answer = {0, text.size(), true};
    }

    std::optional<std::pair<std::string, std::size_t>> first_error;
    const auto note = [&](std::string message, std::size_t offset) {
      if (!first_error) first_error.emplace(std::move(message), offset);
    };
    int candidates = 0;
    for (std::size_t i = answer.begin; i < answer.end && candidates < kMaxCandidates; ++i) {
      const char c = text[i];
      if (c != '{' && c != '[') continue;
      ++candidates;
      const std::string_view region = text.substr(0, answer.end);
      const ScanResult scan = scan_balanced(region, i);
      if (scan.status == ScanStatus::too_deep) {
        note("JSON nesting deeper than " + std::to_string(kMaxDepth), scan.end);
        break;
      }
      if (scan.status == ScanStatus::unterminated) {
        // A stray brace in prose also looks unterminated, so keep scanning.
        if (c == '{') note("JSON value is truncated", i);
        continue;
      }
      Json value;
      try {
        value = Json::parse(text.substr(i, scan.end - i));
      } catch (const Json::parse_error& e) {
        if (c == '{') note(std::string("invalid JSON: ") + e.what(), i + (e.byte > 0 ? e.byte - 1 : 0));
        continue;
      } catch (const Json::exception& e) {
        if (c == '{') note(std::string("invalid JSON: ") + e.what(), i);
        continue;
      }
      try {
        result.layout = interpret(value, context);
        return result;
      } catch (const std::exception& e) {
        if (c == '{' || value.is_array()) note(std::string("not a layout: ") + e.what(), i);
      }
    }
    if (first_error) throw MalformedLayoutError(first_error->first, first_error->second);
    throw MalformedLayoutError("answer block holds no layout JSON", answer.begin);
  } catch (const NoAnswerBlockError&) {
    throw;
  } catch (const MalformedLayoutError&) {
    throw;
  } catch (const std::exception& e) {
    throw MalformedLayoutError(std::string("unparseable completion: ") + e.what(), 0);
  }
}

JudgeScore parse_judge(std::string_view text) {
  std::optional<Json> block;
  int candidates = 0;
  for (std::size_t i = 0; i < text.size() && candidates < kMaxCandidates && !block; ++i) {
    if (text[i] != '{') continue;
    ++candidates;
    const ScanResult scan = scan_balanced(text, i);
    if (scan.status != ScanStatus::complete) continue;
    try {
      Json v = Json::parse(text.substr(i, scan.end - i));
      if (v.is_object() && (v.contains("functionality_score") || v.contains("overall_score"))) block = std::move(v);
    } catch (const Json::exception&) {
    }
  }
  if (!block) throw MalformedScoreError("no score block in judge output");

  const auto score = [&](const char* key) -> double {
    if (!block->contains(key)) throw MalformedScoreError(std::string("missing '") + key + "'");
    const Json& v = (*block)[key];
    if (!v.is_number()) throw MalformedScoreError(std::string("'") + key + "' is not a number");
    const double d = v.get<double>();
    if (!std::isfinite(d) || d != std::floor(d)) throw MalformedScoreError(std::string("'") + key + "' is not an integer");
    return d;
  };
  const double f = score("functionality_score");
  const double l = score("layout_score");
  const double a = score("aesthetics_score");
  const double o = score("overall_score");
  if (!block->contains("comments") || !(*block)["comments"].is_string()) {
    throw MalformedScoreError("missing 'comments'");
  }
  for (const auto& [key, v] : {std::pair{"functionality_score", f}, std::pair{"layout_score", l},
                               std::pair{"aesthetics_score", a}, std::pair{"overall_score", o}}) {
    if (v < 0 || v > 10) throw RangeError(std::string("'") + key + "' = " + std::to_string(static_cast<long long>(v)) + " is outside 0..10");
  }
  return {static_cast<int>(f), static_cast<int>(l), static_cast<int>(a), static_cast<int>(o),
          (*block)["comments"].get<std::string>()};
}

}  // namespace layoutforge::prompt
