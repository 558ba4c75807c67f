#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "promptmotion/prompting.hpp"

namespace promptmotion {

// On-disk description store: one JSON record per key at <root>/<sha256(key)>.json.
class DescriptionCache {
 public:
  explicit DescriptionCache(std::filesystem::path root);

  // Canonical key over (normalized phrase, prompt_version, model, temperature,
  // top_p, max_tokens, k).
  static std::string key_for(const ActionPhrase& phrase, const LlmConfig& config,
                             std::string_view prompt_version);

  std::filesystem::path path_for(const std::string& key) const;

  // nullopt on miss. A record that fails validation is logged and treated as a miss.
  std::optional<DescriptionSet> load(const ActionPhrase& phrase, const LlmConfig& config,
                                     std::string_view prompt_version) const;

  // Writes via temp file + rename so concurrent writers converge to one valid record.
  void store(const DescriptionSet& set) const;

  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
};

// Parses and validates one cache record. Throws CacheCorrupt.
DescriptionSet parse_cache_record(const std::string& json_text);

DescriptionSet cached_descriptions(const ActionPhrase& phrase, const LlmConfig& config,
                                   std::string_view prompt_version, const DescriptionCache& cache,
                                   LlmClient& client);

}  // namespace promptmotion
