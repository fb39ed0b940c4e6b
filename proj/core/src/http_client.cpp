#include "ctlopt/backends.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

namespace ctlopt {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path_prefix;
};

ParsedUrl split_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("base_url must include a scheme: " + base_url);
  const auto path_start = base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {base_url, ""};
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, path_start), prefix};
}

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

}  // namespace

void ChatEndpointConfig::validate() const {
  if (base_url.empty()) throw ConfigError("endpoint: base_url is required");
  if (model.empty()) throw ConfigError("endpoint: model is required");
  if (timeout_s <= 0.0) throw ConfigError("endpoint: timeout must be > 0");
  if (max_retries < 0) throw ConfigError("endpoint: max_retries must be >= 0");
}

std::string chat_complete(const ChatEndpointConfig& cfg,
                          const std::string& system_text,
                          const std::string& user_text) {
  cfg.validate();
  const char* key = nullptr;
  if (!cfg.api_key_env.empty()) {
    key = std::getenv(cfg.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
      throw ConfigError("API key environment variable not set: " +
                        cfg.api_key_env);
  }

  const auto url = split_url(cfg.base_url);
  nlohmann::json body{
      {"model", cfg.model},
      {"messages",
       {{{"role", "system"}, {"content", system_text}},
        {{"role", "user"}, {"content", user_text}}}},
      {"temperature", cfg.temperature},
  };
  const std::string payload = body.dump();

  std::mt19937_64 jitter_rng{std::random_device{}()};
  std::uniform_real_distribution<double> jitter(0.0, 0.1);

  std::string last_error;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) {
      const double delay =
          cfg.backoff_base_s * std::pow(2.0, attempt - 1) *
          (1.0 + jitter(jitter_rng));
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }

    httplib::Client client(url.origin);
    client.set_connection_timeout(std::chrono::duration<double>(cfg.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(cfg.timeout_s));
    client.set_write_timeout(std::chrono::duration<double>(cfg.timeout_s));
    httplib::Headers headers;
    if (key) headers.emplace("Authorization", std::string("Bearer ") + key);

    auto res = client.Post(url.path_prefix + "/chat/completions", headers,
                           payload, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;  // timeouts and connection errors are retryable
    }
    if (res->status == 200) {
      auto j = nlohmann::json::parse(res->body, nullptr, false);
      if (j.is_discarded() || !j.contains("choices") || j["choices"].empty() ||
          !j["choices"][0].contains("message"))
        throw TransportError("malformed chat completion response body");
      return j["choices"][0]["message"].value("content", std::string{});
    }
    if (!retryable_status(res->status))
      throw TransportError("chat endpoint returned HTTP " +
                           std::to_string(res->status) + ": " + res->body);
    last_error = "HTTP " + std::to_string(res->status);
  }
  throw TransportError("chat endpoint retries exhausted (" + last_error + ")");
}

}  // namespace ctlopt
