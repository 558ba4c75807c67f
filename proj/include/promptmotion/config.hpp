#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "promptmotion/embedding.hpp"
#include "promptmotion/models.hpp"
#include "promptmotion/prompting.hpp"

namespace promptmotion {

// Inference either samples z ~ N(mu, sigma) or decodes mu directly.
enum class GenerationMode { Sample, Mean };

std::string_view to_string(GenerationMode mode);
GenerationMode generation_mode_from_string(std::string_view name);

struct TrainingConfig {
  int steps = 500;
  double learning_rate = 2e-3;
  double clip_norm = 1.0;
  int batch_size = 0;  // 0: the whole train split every step

  bool operator==(const TrainingConfig&) const = default;
};

struct RunConfig {
  LlmConfig llm;
  std::string prompt_version = "v1";
  EmbedderConfig embedder;
  ModelConfig model;
  TrainingConfig training;
  std::uint64_t seed = 0;
  bool offline = false;  // true: stub client, no network
  std::filesystem::path cache_root = ".promptmotion-cache";
  std::optional<std::filesystem::path> skeleton_path;
  GenerationMode generation_mode = GenerationMode::Sample;
  CompletionsApiClient::Options api;

  // Cross-field checks: embedder kind and width must match the variant, which
  // for deterministic_ae forces c = d.
  void validate() const;

  int k() const noexcept { return llm.k; }
};

// Defaults per variant: token-matrix e = 16 for the VAE variants, vector
// c = d = 32 for deterministic_ae.
RunConfig default_run_config(Variant variant = Variant::Vae);

nlohmann::json run_config_to_json(const RunConfig& config);
// Missing keys keep the defaults of default_run_config(variant). Throws InvalidConfig.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Name of the environment variable consulted when no --config flag is given.
inline constexpr const char* kConfigEnvVar = "PROMPTMOTION_CONFIG";

}  // namespace promptmotion
