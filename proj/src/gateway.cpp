#include "layoutforge/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <cstdlib>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "layoutforge/errors.hpp"
#include "layoutforge/geometry.hpp"
#include "layoutforge/json_io.hpp"

namespace layoutforge::gateway {

namespace {

using Json = nlohmann::ordered_json;

constexpr double kGridStep = 0.1;
constexpr double kWallGap = 0.02;
constexpr BoxSize kDefaultSize{0.5, 0.5, 0.5};

bool fits(const geometry::OrientedRect2D& rect, const FloorPlan& floor) {
  for (const Vec2& c : rect.corners()) {
    if (!geometry::point_in_polygon(c, floor.vertices)) return false;
  }
  return geometry::containment_violation(rect, floor) == 0.0;
}

bool collides(const geometry::OrientedRect2D& rect, const std::vector<geometry::OrientedRect2D>& placed) {
  return std::any_of(placed.begin(), placed.end(),
                     [&](const auto& other) { return geometry::overlap_area(rect, other) > 0.0; });
}

// First free cell in row-major order over the floor's bounding box, rows
// from the far wall down. Falls back to the first contained cell (touching
// another object) and finally the floor centroid.
Placement first_fit(const BoxSize& size, const FloorPlan& floor,
                    const std::vector<geometry::OrientedRect2D>& placed) {
  const auto box = geometry::bounds(floor.vertices);
  std::optional<Placement> contained;
  for (double rotation : {0.0, std::numbers::pi / 2.0}) {
    const bool turned = rotation != 0.0;
    const double hw = (turned ? size.depth : size.width) / 2.0 + kWallGap;
    const double hd = (turned ? size.width : size.depth) / 2.0 + kWallGap;
    const int cols = static_cast<int>(std::floor((box.max.x - box.min.x - 2.0 * hw) / kGridStep + 1e-9)) + 1;
    const int rows = static_cast<int>(std::floor((box.max.y - box.min.y - 2.0 * hd) / kGridStep + 1e-9)) + 1;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const Vec2 center{box.min.x + hw + c * kGridStep, box.max.y - hd - r * kGridStep};
        const Placement p{{center.x, center.y, 0.0}, rotation};
        const auto rect = geometry::footprint(p, size);
        if (!fits(rect, floor)) continue;
        if (!collides(rect, placed)) return p;
        if (!contained) contained = p;
      }
    }
  }
  if (contained) return *contained;
  const Vec2 c = geometry::polygon_centroid(geometry::Polygon2D{floor.vertices});
  return {{c.x, c.y, 0.0}, 0.0};
}

std::string fenced(const Json& j) { return "```json\n" + j.dump(2) + "\n```"; }

std::string wrap(const std::string& reasoning, const std::string& design) {
  return "<reasoning>\n[Reason]\n" + reasoning + "\n[/Reason]\n</reasoning>\n<answer>\n[Design]\n" + design +
         "\n[/Design]\n</answer>\n";
}

std::string complete_generation(const TaskSpec& task) {
  std::vector<geometry::OrientedRect2D> placed;
  Json objects = Json::array();
  for (const ObjectSpec& spec : expand_instances(task.objects)) {
    const BoxSize size = spec.size.value_or(kDefaultSize);
    const Placement p = first_fit(size, task.floor, placed);
    placed.push_back(geometry::footprint(p, size));
    objects.push_back(Json{{"object", spec.description},
                           {"coordinates", Json::array({Json{{"x", p.position.x}, {"y", p.position.y}, {"z", 0.0}}})},
                           {"rotate", Json::array({Json{{"angle", p.rotation}}})}});
  }
  const std::string reasoning = fmt::format(
      "The {} objects are laid out in rows, starting from the far wall, each in the first free cell of a {} m grid "
      "that keeps its whole footprint on the floor.",
      objects.size(), kGridStep);
  return wrap(reasoning, fenced(objects));
}

// "a chair near the desk" -> "chair"
std::string head_phrase(const std::string& target) {
  static const std::set<std::string> kStops = {"near", "beside", "next", "by", "at", "in", "on", "to", "from",
                                               "against", "between", "under", "behind", "along", "with", "opposite"};
  static const std::set<std::string> kArticles = {"a", "an", "the", "one", "another", "some", "new"};
  std::istringstream in(target);
  std::string word;
  std::string out;
  while (in >> word) {
    std::string bare;
    for (char ch : word) {
      if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-') bare += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    if (bare.empty()) continue;
    if (kStops.count(bare)) break;
    if (out.empty() && kArticles.count(bare)) continue;
    out += (out.empty() ? "" : " ") + bare;
  }
  return out.empty() ? target : out;
}

std::size_t overlap_count(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return static_cast<std::size_t>(
      std::count_if(a.begin(), a.end(), [&](const std::string& t) { return std::find(b.begin(), b.end(), t) != b.end(); }));
}

std::string complete_edit(const Layout& current, const prompt::EditRequest& edit, const AssetCatalog& catalog) {
  Layout layout = current;
  std::string reasoning;
  if (edit.kind == prompt::EditKind::remove) {
    const auto want = tokenize(head_phrase(edit.target));
    std::size_t best = 0;
    std::optional<std::size_t> index;
    for (std::size_t i = 0; i < layout.objects.size(); ++i) {
      const std::size_t n = overlap_count(want, tokenize(layout.objects[i].description));
      if (n > best) {
        best = n;
        index = i;
      }
    }
    if (index) {
      reasoning = "The " + layout.objects[*index].description + " is taken out and the remaining objects keep their places.";
      layout.objects.erase(layout.objects.begin() + static_cast<std::ptrdiff_t>(*index));
    } else {
      reasoning = "No object in the room matches the request, so the layout is unchanged.";
    }
  } else {
    const std::string description = head_phrase(edit.target);
    BoxSize size = kDefaultSize;
    std::optional<std::string> asset;
    if (const auto match = catalog.best_match(description)) {
      size = catalog.entries().at(*match).size;
      asset = *match;
    }
    std::vector<geometry::OrientedRect2D> placed;
    std::set<std::string> ids;
    for (const PlacedObject& o : layout.objects) {
      placed.push_back(geometry::footprint(o));
      ids.insert(o.instance_id);
    }
    PlacedObject added;
    added.description = description;
    added.size = size;
    added.asset_id = asset;
    for (int ordinal = 0;; ++ordinal) {
      added.instance_id = make_instance_id(description, ordinal);
      if (!ids.count(added.instance_id)) break;
    }
    added.placement = first_fit(size, layout.floor, placed);
    reasoning = "The new " + description + " goes into the first free spot along the walls, clear of the existing furniture.";
    layout.objects.push_back(std::move(added));
  }
  return wrap(reasoning, fenced(json_io::to_json(layout)));
}

std::string complete_judge(const Layout& layout) {
  bool clean = true;
  for (const PlacedObject& o : layout.objects) {
    if (geometry::containment_violation(geometry::footprint(o), layout.floor) > 0.0) clean = false;
  }
  if (clean && !layout.objects.empty() && geometry::oor(layout) > 0.0) clean = false;
  const int s = clean ? 8 : 4;
  Json block{{"functionality_score", s},
             {"layout_score", s},
             {"aesthetics_score", s},
             {"overall_score", s},
             {"comments", clean ? "Objects sit inside the room without collisions."
                                : "Some objects collide or leave the room."}};
  return "```" + block.dump() + "```";
}

std::string complete_summary(const Layout& layout) {
  std::string out = fmt::format("The room holds {} objects:", layout.objects.size());
  for (std::size_t i = 0; i < layout.objects.size(); ++i) {
    out += (i == 0 ? " " : ", ") + layout.objects[i].description;
  }
  return out + ".";
}

}  // namespace

void check_params(const GenerationParams& params) {
  if (!std::isfinite(params.temperature) || params.temperature < 0.0) {
    throw ValueError("temperature must be finite and >= 0");
  }
  if (params.max_tokens < 1) throw ValueError("max_tokens must be >= 1");
}

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::http_chat: return "http_chat";
    case BackendKind::mock_scripted: return "mock_scripted";
    case BackendKind::mock_template: return "mock_template";
  }
  return "mock_template";
}

BackendKind parse_backend_kind(std::string_view text) {
  for (BackendKind k : {BackendKind::http_chat, BackendKind::mock_scripted, BackendKind::mock_template}) {
    if (to_string(k) == text) return k;
  }
  throw SchemaError("unknown backend '" + std::string(text) + "' (http_chat, mock_scripted, mock_template)");
}

void check_config(const BackendConfig& config) {
  if (config.max_in_flight < 1) throw PreconditionError("max_in_flight must be >= 1");
  if (config.retry.attempts < 1) throw PreconditionError("retry attempts must be >= 1");
  const bool http = config.kind == BackendKind::http_chat;
  if (http && config.endpoint.empty()) throw PreconditionError("http_chat backend needs an endpoint URL");
  if (!http && !config.endpoint.empty()) throw PreconditionError("endpoint is only valid for http_chat");
}

std::string fingerprint(const prompt::PromptBundle& bundle) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto feed = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  feed(prompt::to_string(bundle.template_id));
  feed(bundle.system_text);
  feed(bundle.user_text);
  return fmt::format("{:016x}", h);
}

ScriptedBackend::ScriptedBackend(std::vector<Entry> entries) {
  for (Entry& e : entries) {
    if (e.fingerprint) {
      keyed_[*e.fingerprint].push_back(std::move(e.response));
    } else {
      shared_.push_back(std::move(e.response));
    }
  }
}

std::vector<ScriptedBackend::Entry> ScriptedBackend::unkeyed(const std::vector<std::string>& responses) {
  std::vector<Entry> entries;
  for (const std::string& r : responses) entries.push_back({std::nullopt, r});
  return entries;
}

std::vector<ScriptedBackend::Entry> ScriptedBackend::parse_script(const std::string& jsonl) {
  std::vector<Entry> entries;
  std::istringstream in(jsonl);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw SchemaError(fmt::format("script line {}: {}", line_no, e.what()));
    }
    if (!j.is_object() || !j.contains("response") || !j["response"].is_string()) {
      throw SchemaError(fmt::format("script line {}: needs a string 'response'", line_no));
    }
    Entry e{std::nullopt, j["response"].get<std::string>()};
    if (j.contains("fingerprint")) {
      if (!j["fingerprint"].is_string()) throw SchemaError(fmt::format("script line {}: fingerprint must be a string", line_no));
      e.fingerprint = j["fingerprint"].get<std::string>();
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<ScriptedBackend::Entry> ScriptedBackend::load_script(const std::filesystem::path& path) {
  return parse_script(json_io::read_text_file(path));
}

std::string ScriptedBackend::complete(const prompt::PromptBundle& bundle, const GenerationParams&) {
  std::lock_guard lock(mutex_);
  if (!keyed_.empty()) {
    const auto it = keyed_.find(fingerprint(bundle));
    if (it != keyed_.end() && !it->second.empty()) {
      std::string r = std::move(it->second.front());
      it->second.pop_front();
      return r;
    }
  }
  if (shared_.empty()) throw ScriptExhaustedError("mock script has no response left for this prompt");
  std::string r = std::move(shared_.front());
  shared_.pop_front();
  return r;
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard lock(mutex_);
  std::size_t n = shared_.size();
  for (const auto& [key, q] : keyed_) n += q.size();
  return n;
}

TemplateBackend::TemplateBackend(AssetCatalog catalog) : catalog_(std::move(catalog)) {}

std::string TemplateBackend::complete(const prompt::PromptBundle& bundle, const GenerationParams&) {
  switch (bundle.template_id) {
    case prompt::TemplateId::generate:
      if (!bundle.task) throw PreconditionError("generation bundle carries no task");
      return complete_generation(*bundle.task);
    case prompt::TemplateId::edit:
      if (!bundle.layout || !bundle.edit) throw PreconditionError("edit bundle carries no layout");
      return complete_edit(*bundle.layout, *bundle.edit, catalog_);
    case prompt::TemplateId::judge:
      if (!bundle.layout) throw PreconditionError("judge bundle carries no layout");
      return complete_judge(*bundle.layout);
    case prompt::TemplateId::summarize:
      if (!bundle.layout) throw PreconditionError("summary bundle carries no layout");
      return complete_summary(*bundle.layout);
  }
  throw PreconditionError("unknown template");
}

InstrumentedBackend::InstrumentedBackend(std::shared_ptr<Backend> inner, std::chrono::milliseconds latency)
    : inner_(std::move(inner)), latency_(latency) {}

std::string InstrumentedBackend::complete(const prompt::PromptBundle& bundle, const GenerationParams& params) {
  const int now = ++current_;
  int peak = peak_.load();
  while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
  }
  ++calls_;
  struct Leave {
    std::atomic<int>& c;
    ~Leave() { --c; }
  } leave{current_};
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  return inner_->complete(bundle, params);
}

std::shared_ptr<Backend> make_backend(const BackendConfig& config) {
  check_config(config);
  switch (config.kind) {
    case BackendKind::http_chat: return std::make_shared<HttpChatBackend>(config);
    case BackendKind::mock_scripted:
      return std::make_shared<ScriptedBackend>(ScriptedBackend::load_script(config.script_path));
    case BackendKind::mock_template: return std::make_shared<TemplateBackend>();
  }
  throw PreconditionError("unknown backend kind");
}

BackendConfig config_from_env(std::optional<BackendKind> kind) {
  BackendConfig config;
  const char* url = std::getenv("LAYOUTFORGE_LLM_URL");
  config.kind = kind.value_or(url && *url ? BackendKind::http_chat : BackendKind::mock_template);
  if (config.kind == BackendKind::http_chat && url) config.endpoint = url;
  return config;
}

Gateway::Gateway(std::shared_ptr<Backend> backend, int max_in_flight)
    : backend_(std::move(backend)), max_in_flight_(max_in_flight) {
  if (!backend_) throw PreconditionError("gateway needs a backend");
  if (max_in_flight_ < 1) throw PreconditionError("max_in_flight must be >= 1");
}

void Gateway::acquire() {
  std::unique_lock lock(slots_mutex_);
  slots_cv_.wait(lock, [&] { return in_use_ < max_in_flight_; });
  ++in_use_;
}

void Gateway::release() {
  {
    std::lock_guard lock(slots_mutex_);
    --in_use_;
  }
  slots_cv_.notify_one();
}

std::string Gateway::complete(const prompt::PromptBundle& bundle, const GenerationParams& params) {
  check_params(params);
  acquire();
  struct Release {
    Gateway* g;
    ~Release() { g->release(); }
  } guard{this};
  if (backend_->sequential()) {
    std::lock_guard lock(sequential_mutex_);
    return backend_->complete(bundle, params);
  }
  return backend_->complete(bundle, params);
}

std::vector<Outcome> Gateway::complete_batch(const std::vector<prompt::PromptBundle>& bundles,
                                             const GenerationParams& params) {
  std::vector<Outcome> out(bundles.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < bundles.size(); i = next++) {
      try {
        out[i] = complete(bundles[i], params);
      } catch (const Error& e) {
        out[i] = Failure{e.code(), e.what()};
      } catch (const std::exception& e) {
        out[i] = Failure{"internal", e.what()};
      }
    }
  };
  // Mock scripts are consumed in call order, so they get one worker and the
  // i-th bundle always sees the i-th response.
  const std::size_t workers =
      backend_->sequential() ? 1 : std::min<std::size_t>(static_cast<std::size_t>(max_in_flight_), bundles.size());
  if (workers <= 1) {
    work();
    return out;
  }
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
  for (std::thread& t : threads) t.join();
  return out;
}

}  // namespace layoutforge::gateway
