#include "promptmotion/description_cache.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include "promptmotion/errors.hpp"
#include "promptmotion/hashing.hpp"

namespace promptmotion {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr int kCacheSchemaVersion = 1;
}

DescriptionCache::DescriptionCache(fs::path root) : root_(std::move(root)) {}

std::string DescriptionCache::key_for(const ActionPhrase& phrase, const LlmConfig& config,
                                      std::string_view prompt_version) {
  // %.17g round-trips doubles exactly, so distinct temperatures never collide.
  return fmt::format("phrase={}\nprompt_version={}\nmodel={}\ntemperature={:.17g}\ntop_p={:.17g}\n"
                     "max_tokens={}\nk={}",
                     phrase.normalized(), prompt_version, config.model_name, config.temperature,
                     config.top_p, config.max_tokens, config.k);
}

fs::path DescriptionCache::path_for(const std::string& key) const {
  return root_ / (sha256_hex(key) + ".json");
}

DescriptionSet parse_cache_record(const std::string& json_text) {
  try {
    const json record = json::parse(json_text);
    const auto& cfg = record.at("config");
    LlmConfig config;
    config.model_name = cfg.at("model").get<std::string>();
    config.temperature = cfg.at("temperature").get<double>();
    config.top_p = cfg.at("top_p").get<double>();
    config.max_tokens = cfg.at("max_tokens").get<int>();
    config.k = cfg.at("k").get<int>();
    config.validate();

    DescriptionSet set{ActionPhrase::make(record.at("phrase").get<std::string>()), {}, config,
                       record.at("prompt_version").get<std::string>()};
    for (const auto& d : record.at("descriptions")) {
      auto text = d.get<std::string>();
      if (text.empty()) fail(ErrorCode::CacheCorrupt, "empty description in record");
      set.descriptions.push_back(std::move(text));
    }
    if (static_cast<int>(set.descriptions.size()) != config.k) {
      fail(ErrorCode::CacheCorrupt,
           fmt::format("record holds {} descriptions, config says k={}", set.descriptions.size(), config.k));
    }
    return set;
  } catch (const json::exception& e) {
    fail(ErrorCode::CacheCorrupt, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CacheCorrupt) throw;
    fail(ErrorCode::CacheCorrupt, e.what());
  }
}

std::optional<DescriptionSet> DescriptionCache::load(const ActionPhrase& phrase, const LlmConfig& config,
                                                     std::string_view prompt_version) const {
  const std::string key = key_for(phrase, config, prompt_version);
  const fs::path path = path_for(key);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    DescriptionSet set = parse_cache_record(buffer.str());
    if (key_for(set.phrase, set.config, set.prompt_version) != key) {
      fail(ErrorCode::CacheCorrupt, "record does not match its key");
    }
    return set;
  } catch (const Error& e) {
    spdlog::warn("ignoring cache record {}: {}", path.string(), e.what());
    return std::nullopt;
  }
}

void DescriptionCache::store(const DescriptionSet& set) const {
  const std::string key = key_for(set.phrase, set.config, set.prompt_version);
  const fs::path path = path_for(key);

  json record = {
      {"schema_version", kCacheSchemaVersion},
      {"phrase", set.phrase.text()},
      {"prompt_version", set.prompt_version},
      {"config",
       {{"model", set.config.model_name},
        {"temperature", set.config.temperature},
        {"top_p", set.config.top_p},
        {"max_tokens", set.config.max_tokens},
        {"k", set.config.k}}},
      {"descriptions", set.descriptions},
      {"created_at", fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr)))},
  };

  static std::atomic<unsigned> counter{0};
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) fail(ErrorCode::IoError, fmt::format("cannot create cache root {}: {}", root_.string(), ec.message()));

  const fs::path tmp = path.string() + fmt::format(".tmp.{}.{}.{}", ::getpid(),
                                                   std::hash<std::thread::id>{}(std::this_thread::get_id()),
                                                   counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, fmt::format("cannot write {}", tmp.string()));
    out << record.dump(2) << '\n';
    if (!out) fail(ErrorCode::IoError, fmt::format("short write to {}", tmp.string()));
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    fail(ErrorCode::IoError, fmt::format("cannot publish {}: {}", path.string(), ec.message()));
  }
}

DescriptionSet cached_descriptions(const ActionPhrase& phrase, const LlmConfig& config,
                                   std::string_view prompt_version, const DescriptionCache& cache,
                                   LlmClient& client) {
  config.validate();
  if (auto hit = cache.load(phrase, config, prompt_version)) return *std::move(hit);
  const PromptText prompt = build_prompt(phrase, prompt_version);
  DescriptionSet set = generate_descriptions(phrase, prompt, config, client);
  cache.store(set);
  return set;
}

}  // namespace promptmotion
