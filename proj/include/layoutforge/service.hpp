#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "layoutforge/eval.hpp"
#include "layoutforge/gateway.hpp"

namespace httplib {
class Server;
}

// Editing sessions over HTTP/JSON. See docs/api.md for the wire format.
namespace layoutforge::service {

struct HistoryEntry {
  std::string kind;  // "generate" or "edit"
  std::string instruction;
  std::string reasoning;
  Layout layout;
  eval::ValidationReport report;
  std::string timestamp;
};

struct Session {
  std::string id;
  TaskSpec task;
  std::string created_at;
  std::vector<HistoryEntry> history;
  // Held across the gateway call so edits to one session serialize.
  std::mutex mutex;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

struct Options {
  gateway::GenerationParams params;
  eval::ValidationThresholds thresholds;
  // JSONL write-ahead log; replayed on construction when it exists.
  std::optional<std::filesystem::path> persist;
  // Value for Access-Control-Allow-Origin; no CORS headers when empty.
  std::string cors_origin;
  // Injectable for tests; default is UTC ISO-8601 wall time.
  std::function<std::string()> clock;
  // Injectable for tests; default is 16 random hex digits.
  std::function<std::string()> new_id;
  // Resolves object sizes missing from submitted tasks.
  AssetCatalog catalog = AssetCatalog::builtin();
};

class Service {
 public:
  Service(std::shared_ptr<gateway::Gateway> gateway, Options options);

  // Transport-independent entry point; `path` excludes the query string.
  Response handle(const std::string& method, const std::string& path, const std::string& body);

  // Registers every route on `server`, including CORS preflight.
  void mount(httplib::Server& server);

  std::size_t session_count() const;

 private:
  Response create_session(const std::string& body);
  Response generate(const std::string& id);
  Response edit(const std::string& id, const std::string& body);
  Response layout(const std::string& id);
  Response render(const std::string& id);
  Response history(const std::string& id);
  Response validate(const std::string& body);

  std::shared_ptr<Session> find(const std::string& id) const;
  void append_log(const nlohmann::ordered_json& event);
  void replay(const std::filesystem::path& path);
  nlohmann::ordered_json entry_json(const HistoryEntry& e) const;

  std::shared_ptr<gateway::Gateway> gateway_;
  Options options_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex log_mutex_;
};

// Blocks until the server stops. Returns 0, or 1 when the port cannot be bound.
int serve(Service& service, const std::string& host, int port);

HistoryEntry history_entry_from_json(const nlohmann::ordered_json& j);

}  // namespace layoutforge::service
