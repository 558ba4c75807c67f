#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "promptmotion/errors.hpp"
#include "promptmotion/prompting.hpp"

namespace promptmotion {

CompletionsApiClient::CompletionsApiClient(Options options) : options_(std::move(options)) {}

Completion CompletionsApiClient::complete(const PromptText& prompt, const LlmConfig& config, int /*index*/) {
  const char* key = std::getenv(options_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    fail(ErrorCode::ClientUnavailable, fmt::format("environment variable {} is not set", options_.api_key_env));
  }

  nlohmann::json body = {
      {"model", config.model_name},
      {"prompt", prompt.text},
      {"temperature", config.temperature},
      {"top_p", config.top_p},
      {"max_tokens", config.max_tokens},
  };

  httplib::Client http(options_.base_url);
  http.set_connection_timeout(options_.timeout_seconds);
  http.set_read_timeout(options_.timeout_seconds);
  http.set_bearer_token_auth(key);

  auto response = http.Post(options_.path, body.dump(), "application/json");
  if (!response) {
    fail(ErrorCode::ClientUnavailable,
         fmt::format("request to {} failed: {}", options_.base_url, httplib::to_string(response.error())));
  }
  if (response->status != 200) {
    fail(ErrorCode::ClientUnavailable, fmt::format("completion endpoint returned HTTP {}", response->status));
  }

  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(response->body);
    Completion completion;
    completion.text = reply.at("choices").at(0).at("text").get<std::string>();
    if (reply.contains("usage") && reply["usage"].contains("completion_tokens")) {
      completion.completion_tokens = reply["usage"]["completion_tokens"].get<int>();
    } else {
      completion.completion_tokens = whitespace_token_count(completion.text);
    }
    return completion;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ClientUnavailable, fmt::format("malformed completion response: {}", e.what()));
  }
}

}  // namespace promptmotion
