#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "layoutforge/prompt.hpp"

// Chat-completion clients. Mock backends make every test and offline run
// deterministic.
namespace layoutforge::gateway {

struct GenerationParams {
  double temperature = 0.7;
  int max_tokens = 2048;
  std::optional<std::int64_t> seed;
  std::string model_name = "layoutforge-default";
};

// Throws ValueError for a non-finite or negative temperature or max_tokens < 1.
void check_params(const GenerationParams& params);

enum class BackendKind { http_chat, mock_scripted, mock_template };

std::string_view to_string(BackendKind kind);
BackendKind parse_backend_kind(std::string_view text);

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds backoff{500};
};

struct BackendConfig {
  BackendKind kind = BackendKind::mock_template;
  // http_chat only. Full URL of the chat-completions endpoint.
  std::string endpoint;
  // Name of the environment variable holding the bearer token.
  std::string credentials_env = "LAYOUTFORGE_API_KEY";
  int max_in_flight = 4;
  RetryPolicy retry;
  // mock_scripted only.
  std::filesystem::path script_path;
};

// Throws PreconditionError when the endpoint is set for a mock or missing for
// http_chat, or max_in_flight < 1.
void check_config(const BackendConfig& config);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const prompt::PromptBundle& bundle, const GenerationParams& params) = 0;
  // True when calls must run one at a time to keep results deterministic.
  virtual bool sequential() const { return false; }
};

// FNV-1a 64 over template id, system text and user text, as 16 hex digits.
std::string fingerprint(const prompt::PromptBundle& bundle);

// Serves canned responses. A response keyed by fingerprint is used for
// matching bundles first; unkeyed responses are consumed in order by
// everything else.
class ScriptedBackend : public Backend {
 public:
  struct Entry {
    std::optional<std::string> fingerprint;
    std::string response;
  };

  explicit ScriptedBackend(std::vector<Entry> entries);
  // Unkeyed entries, consumed in order.
  static std::vector<Entry> unkeyed(const std::vector<std::string>& responses);
  // JSONL of {"fingerprint"?: string, "response": string}.
  static std::vector<Entry> parse_script(const std::string& jsonl);
  static std::vector<Entry> load_script(const std::filesystem::path& path);

  std::string complete(const prompt::PromptBundle& bundle, const GenerationParams& params) override;
  bool sequential() const override { return true; }
  std::size_t remaining() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::deque<std::string>> keyed_;
  std::deque<std::string> shared_;
};

// Produces a valid answer for any bundle without a model: a row-major grid
// placement for generation, a keep-everything-else revision for edits, a
// fixed score block for judging and a plain listing for summaries.
class TemplateBackend : public Backend {
 public:
  explicit TemplateBackend(AssetCatalog catalog = AssetCatalog::builtin());
  std::string complete(const prompt::PromptBundle& bundle, const GenerationParams& params) override;
  bool sequential() const override { return true; }

 private:
  AssetCatalog catalog_;
};

// OpenAI-compatible POST {model, messages, temperature, max_tokens, seed?}.
class HttpChatBackend : public Backend {
 public:
  explicit HttpChatBackend(BackendConfig config);
  std::string complete(const prompt::PromptBundle& bundle, const GenerationParams& params) override;

  // Testing hook: replaces std::this_thread::sleep_for between retries.
  std::function<void(std::chrono::milliseconds)> sleeper;

 private:
  BackendConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

// Wraps a backend and records how many calls overlap.
class InstrumentedBackend : public Backend {
 public:
  explicit InstrumentedBackend(std::shared_ptr<Backend> inner, std::chrono::milliseconds latency = {});
  std::string complete(const prompt::PromptBundle& bundle, const GenerationParams& params) override;
  bool sequential() const override { return inner_->sequential(); }
  int peak_in_flight() const { return peak_.load(); }
  int calls() const { return calls_.load(); }

 private:
  std::shared_ptr<Backend> inner_;
  std::chrono::milliseconds latency_;
  std::atomic<int> current_{0};
  std::atomic<int> peak_{0};
  std::atomic<int> calls_{0};
};

std::shared_ptr<Backend> make_backend(const BackendConfig& config);

// Reads LAYOUTFORGE_LLM_URL; kind is http_chat when it is set and `kind` was
// not given explicitly.
BackendConfig config_from_env(std::optional<BackendKind> kind = std::nullopt);

struct Failure {
  std::string code;
  std::string message;
};

using Outcome = std::variant<std::string, Failure>;

// Thread-safe; max_in_flight bounds concurrent backend calls across all
// callers of this gateway.
class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, int max_in_flight);

  std::string complete(const prompt::PromptBundle& bundle, const GenerationParams& params);
  // Output order matches input order; per-item errors become Failure.
  std::vector<Outcome> complete_batch(const std::vector<prompt::PromptBundle>& bundles,
                                      const GenerationParams& params);
  int max_in_flight() const { return max_in_flight_; }

 private:
  void acquire();
  void release();

  std::shared_ptr<Backend> backend_;
  int max_in_flight_;
  std::mutex slots_mutex_;
  std::condition_variable slots_cv_;
  int in_use_ = 0;
  std::mutex sequential_mutex_;
};

}  // namespace layoutforge::gateway
