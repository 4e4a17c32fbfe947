#include "layoutforge/service.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <httplib.h>

#include "layoutforge/errors.hpp"
#include "layoutforge/json_io.hpp"
#include "layoutforge/prompt.hpp"

namespace layoutforge::service {

namespace {

using Json = nlohmann::ordered_json;

Response json_response(int status, const Json& body) { return {status, "application/json", body.dump() + "\n"}; }

Response error(int status, std::string_view code, std::string_view message) {
  return json_response(status, Json{{"code", code}, {"message", message}});
}

Json parse_body(const std::string& body) {
  try {
    return Json::parse(body);
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("request body is not JSON: ") + e.what());
  }
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                     tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
}

std::string random_id() {
  std::random_device rd;
  const std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  return fmt::format("{:016x}", v);
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start < path.size()) {
    std::size_t end = path.find('/', start);
    if (end == std::string::npos) end = path.size();
    if (end > start) parts.push_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

// Anything that fails between prompt and parsed layout is the upstream
// model's fault from the client's point of view.
constexpr int kBadGateway = 502;

}  // namespace

Service::Service(std::shared_ptr<gateway::Gateway> gateway, Options options)
    : gateway_(std::move(gateway)), options_(std::move(options)) {
  if (!gateway_) throw PreconditionError("service needs a gateway");
  if (!options_.clock) options_.clock = utc_now;
  if (!options_.new_id) options_.new_id = random_id;
  if (options_.persist && std::filesystem::exists(*options_.persist)) replay(*options_.persist);
}

std::size_t Service::session_count() const {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.size();
}

std::shared_ptr<Session> Service::find(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

Json Service::entry_json(const HistoryEntry& e) const {
  return Json{{"kind", e.kind},
              {"instruction", e.instruction},
              {"reasoning", e.reasoning},
              {"layout", json_io::to_json(e.layout)},
              {"report", eval::to_json(e.report)},
              {"timestamp", e.timestamp}};
}

HistoryEntry history_entry_from_json(const Json& j) {
  try {
    HistoryEntry e;
    e.kind = j.at("kind").get<std::string>();
    e.instruction = j.at("instruction").get<std::string>();
    e.reasoning = j.at("reasoning").get<std::string>();
    e.layout = json_io::layout_from_json(j.at("layout"));
    e.report = eval::report_from_json(j.at("report"));
    e.timestamp = j.at("timestamp").get<std::string>();
    return e;
  } catch (const Json::exception& ex) {
    throw SchemaError(std::string("history entry: ") + ex.what());
  }
}

void Service::append_log(const Json& event) {
  if (!options_.persist) return;
  std::lock_guard lock(log_mutex_);
  std::ofstream out(*options_.persist, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to '" + options_.persist->string() + "'");
  out << event.dump() << '\n';
  out.flush();
  if (!out) throw IoError("write to '" + options_.persist->string() + "' failed");
}

void Service::replay(const std::filesystem::path& path) {
  const std::string text = json_io::read_text_file(path);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json event;
    try {
      event = Json::parse(line);
    } catch (const Json::exception& e) {
      // A crash can leave a torn final record; anything earlier is corruption.
      if (in.eof() && text.back() != '\n') break;
      throw SchemaError(fmt::format("{} line {}: {}", path.string(), line_no, e.what()));
    }
    try {
      const std::string kind = event.at("event").get<std::string>();
      const std::string id = event.at("session_id").get<std::string>();
      if (kind == "create") {
        auto s = std::make_shared<Session>();
        s->id = id;
        s->task = json_io::task_from_json(event.at("task"));
        s->created_at = event.at("created_at").get<std::string>();
        sessions_[id] = std::move(s);
      } else if (kind == "append") {
        const auto it = sessions_.find(id);
        if (it == sessions_.end()) throw SchemaError("append to unknown session '" + id + "'");
        it->second->history.push_back(history_entry_from_json(event.at("entry")));
      } else {
        throw SchemaError("unknown event '" + kind + "'");
      }
    } catch (const Json::exception& e) {
      throw SchemaError(fmt::format("{} line {}: {}", path.string(), line_no, e.what()));
    }
  }
}

Response Service::handle(const std::string& method, const std::string& path, const std::string& body) {
  try {
    const auto parts = split_path(path);
    const auto only = [&](const char* allowed) -> std::optional<Response> {
      if (method == allowed) return std::nullopt;
      return error(405, "method_not_allowed", fmt::format("{} expects {}", path, allowed));
    };
    if (parts.size() == 1 && parts[0] == "health") {
      if (auto r = only("GET")) return *r;
      return json_response(200, Json{{"status", "ok"}});
    }
    if (parts.size() == 1 && parts[0] == "validate") {
      if (auto r = only("POST")) return *r;
      return validate(body);
    }
    if (!parts.empty() && parts[0] == "sessions") {
      if (parts.size() == 1) {
        if (auto r = only("POST")) return *r;
        return create_session(body);
      }
      if (parts.size() == 3) {
        const std::string& id = parts[1];
        const std::string& action = parts[2];
        if (action == "generate") {
          if (auto r = only("POST")) return *r;
          return generate(id);
        }
        if (action == "edit") {
          if (auto r = only("POST")) return *r;
          return edit(id, body);
        }
        if (action == "layout") {
          if (auto r = only("GET")) return *r;
          return layout(id);
        }
        if (action == "render.svg") {
          if (auto r = only("GET")) return *r;
          return render(id);
        }
        if (action == "history") {
          if (auto r = only("GET")) return *r;
          return history(id);
        }
      }
    }
    return error(404, "not_found", "no route for " + path);
  } catch (const SchemaError& e) {
    return error(422, e.code(), e.what());
  } catch (const ValueError& e) {
    return error(422, e.code(), e.what());
  } catch (const Error& e) {
    return error(500, e.code(), e.what());
  } catch (const std::exception& e) {
    return error(500, "internal", e.what());
  }
}

Response Service::create_session(const std::string& body) {
  const Json j = parse_body(body);
  if (!j.is_object() || !j.contains("task")) throw SchemaError("body must be {\"task\": {...}}");
  TaskSpec task = json_io::task_from_json(j["task"]);
  try {
    task.objects = retrieve_boxes(std::move(task.objects), options_.catalog);
  } catch (const NoMatchError& e) {
    return error(422, e.code(), e.what());
  }

  auto s = std::make_shared<Session>();
  s->task = std::move(task);
  s->created_at = options_.clock();
  {
    std::lock_guard lock(sessions_mutex_);
    do {
      s->id = options_.new_id();
    } while (sessions_.count(s->id));
    append_log(Json{{"event", "create"}, {"session_id", s->id}, {"task", json_io::to_json(s->task)},
                    {"created_at", s->created_at}});
    sessions_[s->id] = s;
  }
  return json_response(201, Json{{"session_id", s->id}, {"task", json_io::to_json(s->task)}});
}

Response Service::generate(const std::string& id) {
  const auto s = find(id);
  if (!s) return error(404, "unknown_session", "no session '" + id + "'");
  std::lock_guard lock(s->mutex);
  if (!s->history.empty()) return error(409, "already_generated", "session already has a layout; use /edit");

  HistoryEntry e;
  e.kind = "generate";
  e.instruction = s->task.instruction;
  try {
    const auto bundle = prompt::build_generation_prompt(s->task);
    const auto parsed = prompt::parse_completion(gateway_->complete(bundle, options_.params), &s->task);
    e.layout = parsed.layout;
    e.reasoning = parsed.reasoning;
  } catch (const Error& err) {
    return error(kBadGateway, err.code(), err.what());
  }
  e.report = eval::validate(e.layout, options_.thresholds, &s->task);
  e.timestamp = options_.clock();
  Json entry = entry_json(e);
  append_log(Json{{"event", "append"}, {"session_id", id}, {"entry", entry}});
  s->history.push_back(std::move(e));
  entry["history_length"] = s->history.size();
  return json_response(200, entry);
}

Response Service::edit(const std::string& id, const std::string& body) {
  const auto s = find(id);
  if (!s) return error(404, "unknown_session", "no session '" + id + "'");
  const Json j = parse_body(body);
  if (!j.is_object() || !j.contains("instruction") || !j["instruction"].is_string()) {
    throw SchemaError("body must be {\"instruction\": \"...\"}");
  }
  const std::string instruction = j["instruction"].get<std::string>();

  std::lock_guard lock(s->mutex);
  if (s->history.empty()) return error(409, "not_generated", "generate a layout before editing it");
  const Layout& current = s->history.back().layout;
  prompt::PromptBundle bundle;
  try {
    bundle = prompt::build_edit_prompt(current, instruction);
  } catch (const UnsupportedEditError& err) {
    return error(422, err.code(), err.what());
  }
  HistoryEntry e;
  e.kind = "edit";
  e.instruction = instruction;
  try {
    const TaskSpec context = task_from_layout(current);
    const auto parsed = prompt::parse_completion(gateway_->complete(bundle, options_.params), &context);
    e.layout = parsed.layout;
    e.reasoning = parsed.reasoning;
  } catch (const Error& err) {
    return error(kBadGateway, err.code(), err.what());
  }
  e.report = eval::validate(e.layout, options_.thresholds);
  e.timestamp = options_.clock();
  Json entry = entry_json(e);
  append_log(Json{{"event", "append"}, {"session_id", id}, {"entry", entry}});
  s->history.push_back(std::move(e));
  entry["history_length"] = s->history.size();
  return json_response(200, entry);
}

Response Service::layout(const std::string& id) {
  const auto s = find(id);
  if (!s) return error(404, "unknown_session", "no session '" + id + "'");
  std::lock_guard lock(s->mutex);
  if (s->history.empty()) return error(409, "not_generated", "session has no layout yet");
  return json_response(200, json_io::to_json(s->history.back().layout));
}

Response Service::render(const std::string& id) {
  const auto s = find(id);
  if (!s) return error(404, "unknown_session", "no session '" + id + "'");
  std::lock_guard lock(s->mutex);
  if (s->history.empty()) return error(409, "not_generated", "session has no layout yet");
  return {200, "image/svg+xml", eval::render_svg(s->history.back().layout)};
}

Response Service::history(const std::string& id) {
  const auto s = find(id);
  if (!s) return error(404, "unknown_session", "no session '" + id + "'");
  std::lock_guard lock(s->mutex);
  Json entries = Json::array();
  for (const HistoryEntry& e : s->history) entries.push_back(entry_json(e));
  return json_response(200, Json{{"session_id", s->id},
                                 {"created_at", s->created_at},
                                 {"task", json_io::to_json(s->task)},
                                 {"history", std::move(entries)}});
}

Response Service::validate(const std::string& body) {
  const Json j = parse_body(body);
  if (!j.is_object() || !j.contains("layout")) throw SchemaError("body must be {\"layout\": {...}}");
  const Layout l = json_io::layout_from_json(j["layout"]);
  eval::ValidationThresholds t = options_.thresholds;
  if (j.contains("thresholds")) {
    const Json& th = j["thresholds"];
    if (th.contains("max_pair_overlap")) t.max_pair_overlap = json_io::number_at(th, "max_pair_overlap");
    if (th.contains("max_boundary_violation")) t.max_boundary_violation = json_io::number_at(th, "max_boundary_violation");
  }
  return json_response(200, eval::to_json(eval::validate(l, t)));
}

void Service::mount(httplib::Server& server) {
  const auto bind = [this](const httplib::Request& req, httplib::Response& res) {
    const Response r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Get(".*", bind);
  server.Post(".*", bind);
  server.Put(".*", bind);
  server.Delete(".*", bind);
  if (!options_.cors_origin.empty()) {
    const std::string origin = options_.cors_origin;
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", origin);
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.set_header("Vary", "Origin");
    });
  }
}

int serve(Service& service, const std::string& host, int port) {
  httplib::Server server;
  service.mount(server);
  if (!server.bind_to_port(host, port)) return 1;
  return server.listen_after_bind() ? 0 : 1;
}

}  // namespace layoutforge::service
