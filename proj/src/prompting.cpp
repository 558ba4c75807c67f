#include "promptmotion/prompting.hpp"

#include <array>
#include <cstdlib>

#include <fmt/format.h>

#include "promptmotion/errors.hpp"
#include "promptmotion/hashing.hpp"
#include "promptmotion/text.hpp"

namespace promptmotion {

ActionPhrase::ActionPhrase(std::string text, int word_count)
    : text_(std::move(text)), word_count_(word_count) {}

ActionPhrase ActionPhrase::make(std::string_view raw) {
  std::string_view trimmed = text::trim(raw);
  if (trimmed.empty()) fail(ErrorCode::EmptyPhrase, "action phrase is empty");
  auto words = static_cast<int>(text::split_whitespace(trimmed).size());
  return ActionPhrase(std::string(trimmed), words);
}

std::string ActionPhrase::normalized() const { return text::to_lower(text_); }

const std::vector<PromptTemplate>& prompt_registry() {
  // Ordered from most specific to least so extract_action can try them in turn.
  static const std::vector<PromptTemplate> registry = {
      {"v1", "Describe a person's body movements who is performing the action ", " in detail"},
      {"no-detail", "Describe a person's body movements who is performing the action ", ""},
      {"person", "Describe a person who is performing the action ", ""},
      {"bare", "", ""},
  };
  return registry;
}

PromptText build_prompt(const ActionPhrase& phrase, std::string_view prompt_version) {
  if (phrase.text().empty()) fail(ErrorCode::EmptyPhrase, "action phrase is empty");
  for (const auto& tmpl : prompt_registry()) {
    if (tmpl.version == prompt_version) {
      return PromptText{tmpl.prefix + phrase.text() + tmpl.suffix, tmpl.version};
    }
  }
  fail(ErrorCode::UnknownPromptVersion, fmt::format("no prompt template '{}'", prompt_version));
}

std::optional<std::string> extract_action(std::string_view prompt_text) {
  for (const auto& tmpl : prompt_registry()) {
    if (prompt_text.size() <= tmpl.prefix.size() + tmpl.suffix.size()) continue;
    if (!prompt_text.starts_with(tmpl.prefix) || !prompt_text.ends_with(tmpl.suffix)) continue;
    std::string_view middle = prompt_text.substr(
        tmpl.prefix.size(), prompt_text.size() - tmpl.prefix.size() - tmpl.suffix.size());
    middle = text::trim(middle);
    if (!middle.empty()) return std::string(middle);
  }
  return std::nullopt;
}

void LlmConfig::validate() const {
  if (model_name.empty()) fail(ErrorCode::InvalidConfig, "model_name is empty");
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    fail(ErrorCode::InvalidConfig, fmt::format("temperature {} outside [0, 2]", temperature));
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    fail(ErrorCode::InvalidConfig, fmt::format("top_p {} outside (0, 1]", top_p));
  }
  if (max_tokens < 1 || max_tokens > 4096) {
    fail(ErrorCode::InvalidConfig, fmt::format("max_tokens {} outside [1, 4096]", max_tokens));
  }
  if (k < 1) fail(ErrorCode::InvalidConfig, fmt::format("k must be >= 1, got {}", k));
}

const std::vector<std::string>& body_part_lexicon() {
  static const std::vector<std::string> lexicon = {"arms", "legs", "torso", "head", "hands", "feet"};
  return lexicon;
}

int whitespace_token_count(std::string_view text) {
  return static_cast<int>(text::split_whitespace(text).size());
}

namespace {

// Movement phrases per lexicon entry, same order as body_part_lexicon().
const std::array<std::array<const char*, 4>, 6> kPartMovements = {{
    {"raises the arms", "swings the arms", "stretches the arms outward", "bends the arms at the elbows"},
    {"bends the legs", "lifts the legs", "steps forward with the legs", "straightens the legs"},
    {"leans the torso forward", "twists the torso", "keeps the torso upright", "arches the torso back"},
    {"turns the head", "tilts the head", "keeps the head level", "nods the head"},
    {"opens the hands", "closes the hands into fists", "moves the hands", "holds the hands steady"},
    {"plants the feet", "lifts the feet", "points the feet forward", "shuffles the feet"},
}};

const std::array<const char*, 8> kManner = {
    "The motion is slow and controlled.",
    "The movement is smooth and repeated.",
    "Each motion is brief and deliberate.",
    "The pace is steady throughout.",
    "The body stays balanced during the action.",
    "The rhythm is relaxed and even.",
    "The movement ends in a neutral stance.",
    "The action is performed with clear intent.",
};

std::string truncate_tokens(const std::string& text, int max_tokens) {
  auto tokens = text::split_whitespace(text);
  if (static_cast<int>(tokens.size()) <= max_tokens) return text;
  std::string out;
  for (int i = 0; i < max_tokens; ++i) {
    if (i) out += ' ';
    out += tokens[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace

Completion StubLlmClient::complete(const PromptText& prompt, const LlmConfig& config, int index) {
  const std::string action = extract_action(prompt.text).value_or(prompt.text);
  const auto n_parts = kPartMovements.size();

  // Phrase-level state is shared by all k samples; the index only perturbs the
  // movement choices and selects the manner clause.
  std::uint64_t state = seed_ ^ fnv1a64(text::to_lower(action));
  const std::uint64_t base = splitmix64(state);
  std::uint64_t sample_state = base ^ (0x632be59bd9b4e019ULL * static_cast<std::uint64_t>(index + 1));
  splitmix64(sample_state);

  std::vector<std::size_t> parts(n_parts);
  for (std::size_t i = 0; i < n_parts; ++i) parts[i] = i;
  std::swap(parts[0], parts[(base >> 7) % n_parts]);
  for (std::size_t i = 1; i < 3; ++i) {
    std::swap(parts[i], parts[i + splitmix64(sample_state) % (n_parts - i)]);
  }

  auto movement = [&](std::size_t part) {
    return kPartMovements[part][splitmix64(sample_state) % kPartMovements[part].size()];
  };
  const char* manner = kManner[(static_cast<std::size_t>(base) + static_cast<std::size_t>(index)) % kManner.size()];

  const char* m0 = movement(parts[0]);
  const char* m1 = movement(parts[1]);
  const char* m2 = movement(parts[2]);
  std::string description =
      fmt::format("To {}, the person {} and {}. Meanwhile the person {}. {}", action, m0, m1, m2, manner);
  if (index >= static_cast<int>(kManner.size())) {
    description += fmt::format(" This is variation {}.", index / static_cast<int>(kManner.size()) + 1);
  }
  description = truncate_tokens(description, config.max_tokens);
  return Completion{description, whitespace_token_count(description)};
}

DescriptionSet generate_descriptions(const ActionPhrase& phrase, const PromptText& prompt,
                                     const LlmConfig& config, LlmClient& client) {
  config.validate();
  DescriptionSet set{phrase, {}, config, prompt.prompt_version};
  set.descriptions.reserve(static_cast<std::size_t>(config.k));
  for (int i = 0; i < config.k; ++i) {
    Completion completion = client.complete(prompt, config, i);
    if (text::trim(completion.text).empty()) {
      completion = client.complete(prompt, config, i);
      if (text::trim(completion.text).empty()) {
        fail(ErrorCode::EmptyCompletion, fmt::format("completion {} was empty after one retry", i));
      }
    }
    set.descriptions.emplace_back(text::trim(completion.text));
  }
  return set;
}

}  // namespace promptmotion
