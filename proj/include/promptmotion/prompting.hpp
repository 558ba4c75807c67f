#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace promptmotion {

// A trimmed, nonempty action label such as "act like a dog".
class ActionPhrase {
 public:
  // Trims surrounding whitespace. Throws EmptyPhrase if nothing is left.
  static ActionPhrase make(std::string_view raw);

  const std::string& text() const noexcept { return text_; }
  int word_count() const noexcept { return word_count_; }

  // Cache normalization: trimmed and lowercased.
  std::string normalized() const;

  bool operator==(const ActionPhrase&) const = default;

 private:
  ActionPhrase(std::string text, int word_count);

  std::string text_;
  int word_count_ = 0;
};

struct PromptText {
  std::string text;
  std::string prompt_version;
};

// A registered prompt template: prompt = prefix + phrase + suffix.
struct PromptTemplate {
  std::string version;
  std::string prefix;
  std::string suffix;
};

// Registered versions, from the bare phrase up to the full "v1" template.
const std::vector<PromptTemplate>& prompt_registry();

PromptText build_prompt(const ActionPhrase& phrase, std::string_view prompt_version);

// Inverse of build_prompt for any registered template; the bare template
// matches everything, so this only returns nullopt for empty input.
std::optional<std::string> extract_action(std::string_view prompt_text);

struct LlmConfig {
  std::string model_name = "davinci-002";
  double temperature = 0.5;
  double top_p = 1.0;
  int max_tokens = 140;  // completion budget
  int k = 4;

  // Throws InvalidConfig when a field is out of range.
  void validate() const;

  bool operator==(const LlmConfig&) const = default;
};

struct DescriptionSet {
  ActionPhrase phrase;
  std::vector<std::string> descriptions;
  LlmConfig config;
  std::string prompt_version;

  bool operator==(const DescriptionSet&) const = default;
};

struct Completion {
  std::string text;
  int completion_tokens = 0;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;

  // One completion request. `index` is the position of the request within a
  // k-sample fan-out; live clients ignore it.
  virtual Completion complete(const PromptText& prompt, const LlmConfig& config, int index) = 0;
};

// Offline stand-in for a language model. Produces procedural body-movement
// sentences, fully determined by (seed, prompt, index).
class StubLlmClient final : public LlmClient {
 public:
  explicit StubLlmClient(std::uint64_t seed = 0) : seed_(seed) {}

  Completion complete(const PromptText& prompt, const LlmConfig& config, int index) override;

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
};

// The body-part vocabulary every stub description draws from.
const std::vector<std::string>& body_part_lexicon();

// Whitespace token count, the stub's token accounting.
int whitespace_token_count(std::string_view text);

// Client for an OpenAI-style /v1/completions endpoint.
class CompletionsApiClient final : public LlmClient {
 public:
  struct Options {
    std::string base_url = "https://api.openai.com";
    std::string path = "/v1/completions";
    std::string api_key_env = "OPENAI_API_KEY";
    int timeout_seconds = 60;
  };

  explicit CompletionsApiClient(Options options);

  Completion complete(const PromptText& prompt, const LlmConfig& config, int index) override;

  const Options& options() const noexcept { return options_; }

 private:
  Options options_;
};

// Issues config.k independent completions. A whitespace-only completion is
// retried once before EmptyCompletion is raised.
DescriptionSet generate_descriptions(const ActionPhrase& phrase, const PromptText& prompt,
                                     const LlmConfig& config, LlmClient& client);

}  // namespace promptmotion
