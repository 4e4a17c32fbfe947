#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "layoutforge/errors.hpp"
#include "layoutforge/gateway.hpp"

namespace layoutforge::gateway {

namespace {

using Json = nlohmann::ordered_json;

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpChatBackend::HttpChatBackend(BackendConfig config) : config_(std::move(config)) {
  check_config(config_);
  const std::string& url = config_.endpoint;
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw PreconditionError("endpoint '" + url + "' is not an absolute URL");
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw PreconditionError("endpoint scheme must be http or https");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw PreconditionError("this build has no TLS support; use an http:// endpoint");
#endif
  const std::size_t path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string HttpChatBackend::complete(const prompt::PromptBundle& bundle, const GenerationParams& params) {
  Json messages = Json::array();
  if (!bundle.system_text.empty()) messages.push_back(Json{{"role", "system"}, {"content", bundle.system_text}});
  messages.push_back(Json{{"role", "user"}, {"content", bundle.user_text}});
  Json body{{"model", params.model_name},
            {"messages", std::move(messages)},
            {"temperature", params.temperature},
            {"max_tokens", params.max_tokens}};
  if (params.seed) body["seed"] = *params.seed;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.credentials_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error;
  for (int attempt = 1; attempt <= config_.retry.attempts; ++attempt) {
    if (attempt > 1) sleeper(config_.retry.backoff * (1 << (attempt - 2)));
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(5);
    client.set_read_timeout(120);
    const auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw AuthError(fmt::format("chat endpoint rejected credentials (HTTP {})", res->status));
    }
    if (retryable(res->status)) {
      last_error = fmt::format("HTTP {}", res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw TransportError(fmt::format("chat endpoint answered HTTP {}: {}", res->status, res->body.substr(0, 200)));
    }
    try {
      const Json j = Json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception& e) {
      throw TransportError(std::string("chat response lacks choices[0].message.content: ") + e.what());
    }
  }
  throw TransportError(fmt::format("giving up after {} attempts: {}", config_.retry.attempts, last_error));
}

}  // namespace layoutforge::gateway
