#include "promptmotion/config.hpp"

#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "promptmotion/errors.hpp"

namespace promptmotion {

using nlohmann::json;

std::string_view to_string(GenerationMode mode) { return mode == GenerationMode::Sample ? "sample" : "mean"; }

GenerationMode generation_mode_from_string(std::string_view name) {
  if (name == "sample") return GenerationMode::Sample;
  if (name == "mean") return GenerationMode::Mean;
  fail(ErrorCode::InvalidConfig, fmt::format("unknown generation mode '{}'", name));
}

void RunConfig::validate() const {
  llm.validate();
  model.validate();
  if (embedder.kind != model.expected_embedder()) {
    fail(ErrorCode::InvalidConfig, fmt::format("variant {} needs a {} embedder, config has {}",
                                               to_string(model.variant), to_string(model.expected_embedder()),
                                               to_string(embedder.kind)));
  }
  if (embedder.dimension != model.embed_dim) {
    fail(ErrorCode::InvalidConfig,
         fmt::format("embedder dimension {} != model embed_dim {}", embedder.dimension, model.embed_dim));
  }
  if (training.steps < 0) fail(ErrorCode::InvalidConfig, "training.steps must be >= 0");
  if (!(training.learning_rate >= 0.0)) fail(ErrorCode::InvalidConfig, "training.learning_rate must be >= 0");
  if (training.batch_size < 0) fail(ErrorCode::InvalidConfig, "training.batch_size must be >= 0");
  bool known_version = false;
  for (const auto& t : prompt_registry()) known_version = known_version || t.version == prompt_version;
  if (!known_version) fail(ErrorCode::UnknownPromptVersion, fmt::format("no prompt template '{}'", prompt_version));
}

RunConfig default_run_config(Variant variant) {
  RunConfig cfg;
  cfg.model.variant = variant;
  if (variant == Variant::DeterministicAe) {
    cfg.embedder.kind = EmbedderKind::Vector;
    cfg.embedder.dimension = 32;
  } else {
    cfg.embedder.kind = EmbedderKind::TokenMatrix;
    cfg.embedder.dimension = 16;
  }
  cfg.model.embed_dim = cfg.embedder.dimension;
  return cfg;
}

json run_config_to_json(const RunConfig& c) {
  json j = {
      {"variant", to_string(c.model.variant)},
      {"seed", c.seed},
      {"k", c.llm.k},
      {"prompt_version", c.prompt_version},
      {"offline", c.offline},
      {"cache_root", c.cache_root.string()},
      {"generation_mode", to_string(c.generation_mode)},
      {"llm",
       {{"model", c.llm.model_name},
        {"temperature", c.llm.temperature},
        {"top_p", c.llm.top_p},
        {"max_tokens", c.llm.max_tokens},
        {"base_url", c.api.base_url},
        {"path", c.api.path},
        {"api_key_env", c.api.api_key_env},
        {"timeout_seconds", c.api.timeout_seconds}}},
      {"embedder", {{"kind", to_string(c.embedder.kind)}, {"dimension", c.embedder.dimension}, {"seed", c.embedder.seed}}},
      {"model",
       {{"d", c.model.latent_dim},
        {"width", c.model.width},
        {"layers", c.model.layers},
        {"heads", c.model.heads},
        {"ff_width", c.model.ff_width},
        {"joints", c.model.joints},
        {"P", c.model.past_frames},
        {"init_seed", c.model.init_seed},
        {"loss_weights",
         {{"reconstruction", c.model.loss_weights.reconstruction},
          {"kl", c.model.loss_weights.kl},
          {"alignment", c.model.loss_weights.alignment}}}}},
      {"training",
       {{"steps", c.training.steps},
        {"learning_rate", c.training.learning_rate},
        {"clip_norm", c.training.clip_norm},
        {"batch_size", c.training.batch_size}}},
  };
  if (!c.embedder.model_path.empty()) j["embedder"]["model_path"] = c.embedder.model_path;
  if (c.skeleton_path) j["skeleton"] = c.skeleton_path->string();
  return j;
}

RunConfig run_config_from_json(const json& j) {
  try {
    const Variant variant = variant_from_string(j.value("variant", std::string("vae")));
    RunConfig c = default_run_config(variant);
    c.seed = j.value("seed", c.seed);
    c.llm.k = j.value("k", c.llm.k);
    c.prompt_version = j.value("prompt_version", c.prompt_version);
    c.offline = j.value("offline", c.offline);
    c.cache_root = j.value("cache_root", c.cache_root.string());
    c.generation_mode = generation_mode_from_string(j.value("generation_mode", std::string("sample")));
    if (j.contains("skeleton")) c.skeleton_path = j.at("skeleton").get<std::string>();
    if (j.contains("llm")) {
      const json& l = j.at("llm");
      c.llm.model_name = l.value("model", c.llm.model_name);
      c.llm.temperature = l.value("temperature", c.llm.temperature);
      c.llm.top_p = l.value("top_p", c.llm.top_p);
      c.llm.max_tokens = l.value("max_tokens", c.llm.max_tokens);
      c.api.base_url = l.value("base_url", c.api.base_url);
      c.api.path = l.value("path", c.api.path);
      c.api.api_key_env = l.value("api_key_env", c.api.api_key_env);
      c.api.timeout_seconds = l.value("timeout_seconds", c.api.timeout_seconds);
    }
    if (j.contains("embedder")) {
      const json& e = j.at("embedder");
      if (e.contains("kind")) c.embedder.kind = embedder_kind_from_string(e.at("kind").get<std::string>());
      c.embedder.dimension = e.value("dimension", c.embedder.dimension);
      c.embedder.seed = e.value("seed", c.embedder.seed);
      c.embedder.model_path = e.value("model_path", c.embedder.model_path);
    }
    c.model.embed_dim = c.embedder.dimension;
    if (j.contains("model")) {
      const json& m = j.at("model");
      c.model.latent_dim = m.value("d", c.model.latent_dim);
      c.model.width = m.value("width", c.model.width);
      c.model.layers = m.value("layers", c.model.layers);
      c.model.heads = m.value("heads", c.model.heads);
      c.model.ff_width = m.value("ff_width", c.model.ff_width);
      c.model.joints = m.value("joints", c.model.joints);
      c.model.past_frames = m.value("P", c.model.past_frames);
      c.model.init_seed = m.value("init_seed", c.model.init_seed);
      if (m.contains("loss_weights")) {
        const json& w = m.at("loss_weights");
        c.model.loss_weights.reconstruction = w.value("reconstruction", c.model.loss_weights.reconstruction);
        c.model.loss_weights.kl = w.value("kl", c.model.loss_weights.kl);
        c.model.loss_weights.alignment = w.value("alignment", c.model.loss_weights.alignment);
      }
    }
    if (j.contains("training")) {
      const json& t = j.at("training");
      c.training.steps = t.value("steps", c.training.steps);
      c.training.learning_rate = t.value("learning_rate", c.training.learning_rate);
      c.training.clip_norm = t.value("clip_norm", c.training.clip_norm);
      c.training.batch_size = t.value("batch_size", c.training.batch_size);
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, fmt::format("config: {}", e.what()));
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, fmt::format("cannot open config {}", path.string()));
  try {
    return run_config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::InvalidConfig, fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace promptmotion
