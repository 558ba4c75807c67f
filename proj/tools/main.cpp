// promptmotion command line: describe, embed, make-data, train, generate,
// evaluate, ablate-k, export.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "promptmotion/errors.hpp"
#include "promptmotion/harness.hpp"

namespace pm = promptmotion;
using nlohmann::json;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool offline = false;
  std::string cache_dir;
  bool no_cache = false;
  bool verbose = false;
};

pm::RunConfig resolve_config(const GlobalOptions& g, const std::string& variant = {}) {
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv(pm::kConfigEnvVar)) path = env;
  }
  json j = json::object();
  if (!path.empty()) j = pm::run_config_to_json(pm::load_run_config(path));
  if (!variant.empty()) {
    // Re-deriving from the variant keeps the per-variant embedder defaults
    // when the config file does not pin them.
    if (path.empty()) {
      j = pm::run_config_to_json(pm::default_run_config(pm::variant_from_string(variant)));
    } else {
      j["variant"] = variant;
    }
  }
  pm::RunConfig c = pm::run_config_from_json(j);
  if (g.seed) {
    c.seed = *g.seed;
    c.model.init_seed = *g.seed;
  }
  if (g.offline) c.offline = true;
  if (!g.cache_dir.empty()) c.cache_root = g.cache_dir;
  if (g.no_cache) c.cache_root.clear();
  c.validate();
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) pm::fail(pm::ErrorCode::IoError, fmt::format("cannot write {}", path));
  out << text;
  if (!out) pm::fail(pm::ErrorCode::IoError, fmt::format("short write to {}", path));
}

json embedding_to_json(const pm::AggregatedEmbedding& e) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < e.values.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(e.values.cols()));
    for (Eigen::Index c = 0; c < e.values.cols(); ++c) row[static_cast<std::size_t>(c)] = e.values(r, c);
    rows.push_back(std::move(row));
  }
  json j = {{"kind", pm::to_string(e.kind)}, {"rows", e.values.rows()}, {"cols", e.values.cols()},
            {"values", std::move(rows)}};
  if (e.kind == pm::EmbedderKind::TokenMatrix) {
    j["mask"] = std::vector<int>(e.mask.begin(), e.mask.end());
  }
  return j;
}

pm::StepCallback progress_logger(int every) {
  return [every](int step, const pm::LossReport& r) {
    if (every > 0 && step % every == 0) {
      spdlog::info("step {:4d} total {:.6f} rec {:.6f} kl {:.4f} align {:.6f}", step, r.total, r.reconstruction, r.kl,
                   r.alignment);
    }
  };
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::string token;
  std::stringstream ss(text);
  while (std::getline(ss, token, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      out.push_back(v);
    } catch (const std::exception&) {
      pm::fail(pm::ErrorCode::InvalidConfig, fmt::format("'{}' is not an integer list", text));
    }
  }
  if (out.empty()) pm::fail(pm::ErrorCode::InvalidConfig, "empty integer list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("promptmotion");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Text-to-motion generation with LLM-expanded action descriptions"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config_path, fmt::format("Run config JSON (default: ${})", pm::kConfigEnvVar));
  app.add_option("--seed", g.seed, "Seed for sampling, stub completions and initialization");
  app.add_flag("--offline", g.offline, "Use the deterministic stub instead of the completions API");
  app.add_option("--cache-dir", g.cache_dir, "Description cache root");
  app.add_flag("--no-cache", g.no_cache, "Disable the description cache");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");

  // describe
  auto* describe = app.add_subcommand("describe", "Print the k LLM descriptions of a phrase");
  std::string phrase;
  std::optional<int> k_override;
  std::string prompt_version;
  bool as_json = false;
  describe->add_option("phrase,--phrase", phrase, "Action phrase")->required();
  describe->add_option("--k", k_override, "Number of descriptions");
  describe->add_option("--prompt-version", prompt_version, "Prompt template id");
  describe->add_flag("--json", as_json, "Emit JSON");

  // embed
  auto* embed = app.add_subcommand("embed", "Print the aggregated description embedding of a phrase");
  std::string out_path;
  embed->add_option("phrase,--phrase", phrase, "Action phrase")->required();
  embed->add_option("--k", k_override, "Number of descriptions");
  embed->add_option("--out", out_path, "Output JSON (default stdout)");

  // make-data
  auto* make_data = app.add_subcommand("make-data", "Write the synthetic dataset");
  int count = 12;
  int pairs = 0;
  std::string skeleton_path;
  make_data->add_option("--out", out_path, "Dataset JSON path")->required();
  make_data->add_option("--count", count, "Number of single-action records")->check(CLI::PositiveNumber);
  make_data->add_option("--pairs", pairs, "Number of two-action records")->check(CLI::NonNegativeNumber);
  make_data->add_option("--skeleton", skeleton_path, "Skeleton JSON (default: 22-joint body)");

  // train
  auto* train = app.add_subcommand("train", "Train a model on the dataset train split");
  std::string data_path;
  std::string variant;
  std::optional<int> steps;
  int log_every = 50;
  train->add_option("--data", data_path, "Dataset JSON")->required();
  train->add_option("--out", out_path, "Checkpoint path")->required();
  train->add_option("--variant", variant, "deterministic_ae | vae | past_conditioned_vae");
  train->add_option("--steps", steps, "Optimizer steps")->check(CLI::NonNegativeNumber);
  train->add_option("--log-every", log_every, "Progress interval in steps");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate motion for a phrase or a series of phrases");
  std::string checkpoint_path;
  std::vector<std::string> phrases;
  std::vector<int> frames;
  std::string csv_path;
  bool force = false;
  bool sample = false;
  bool mean = false;
  gen->add_option("--checkpoint", checkpoint_path, "Checkpoint path")->required();
  gen->add_option("--phrase", phrases, "Action phrase; repeat for a series")->required();
  gen->add_option("--frames", frames, "Duration per phrase (one value applies to all)")->required();
  gen->add_option("--out", out_path, "Motion JSON (default stdout)");
  gen->add_option("--csv", csv_path, "Also write global joint positions as CSV");
  gen->add_flag("--force", force, "Overwrite existing outputs");
  auto* sample_flag = gen->add_flag("--sample", sample, "Sample z from the text distribution");
  gen->add_flag("--mean", mean, "Decode the distribution mean")->excludes(sample_flag);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Report APE/AVE on a dataset split");
  std::string split_name = "test";
  evaluate->add_option("--checkpoint", checkpoint_path, "Checkpoint path")->required();
  evaluate->add_option("--data", data_path, "Dataset JSON")->required();
  evaluate->add_option("--split", split_name, "train | val | test");
  evaluate->add_option("--out", out_path, "Report JSON (default stdout)");

  // ablate-k
  auto* ablate = app.add_subcommand("ablate-k", "Train and evaluate one run per k");
  std::string k_list = "1,2,4,8";
  std::string table_path;
  ablate->add_option("--data", data_path, "Dataset JSON")->required();
  ablate->add_option("--k-values", k_list, "Comma separated k values");
  ablate->add_option("--variant", variant, "Model variant");
  ablate->add_option("--steps", steps, "Optimizer steps per run")->check(CLI::NonNegativeNumber);
  ablate->add_option("--split", split_name, "Evaluation split");
  ablate->add_option("--out", out_path, "Table JSON");
  ablate->add_option("--table", table_path, "Text table (default stdout)");

  // export
  auto* exp = app.add_subcommand("export", "Re-export a motion file, optionally with CSV positions");
  std::string input_path;
  exp->add_option("--input", input_path, "Motion JSON")->required();
  exp->add_option("--out", out_path, "Output motion JSON")->required();
  exp->add_option("--csv", csv_path, "Global joint positions CSV");
  exp->add_option("--skeleton", skeleton_path, "Skeleton JSON (default: 22-joint body)");
  exp->add_flag("--force", force, "Overwrite existing outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (g.verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (*describe) {
      pm::RunConfig c = resolve_config(g);
      if (k_override) c.llm.k = *k_override;
      if (!prompt_version.empty()) c.prompt_version = prompt_version;
      c.validate();
      auto client = pm::make_client(c);
      const pm::TextPipeline text(c, *client);
      const pm::DescriptionSet set = text.describe(pm::ActionPhrase::make(phrase));
      if (as_json) {
        std::cout << json{{"phrase", set.phrase.text()},
                          {"prompt", pm::build_prompt(set.phrase, c.prompt_version).text},
                          {"prompt_version", set.prompt_version},
                          {"descriptions", set.descriptions}}
                         .dump(2)
                  << '\n';
      } else {
        for (std::size_t i = 0; i < set.descriptions.size(); ++i) {
          std::cout << fmt::format("[{}] {}\n", i + 1, set.descriptions[i]);
        }
      }
    } else if (*embed) {
      pm::RunConfig c = resolve_config(g);
      if (k_override) c.llm.k = *k_override;
      c.validate();
      auto client = pm::make_client(c);
      const pm::TextPipeline text(c, *client);
      write_text(out_path, embedding_to_json(text.embed(pm::ActionPhrase::make(phrase))).dump() + "\n");
    } else if (*make_data) {
      const pm::Skeleton skeleton = skeleton_path.empty() ? pm::default_skeleton() : pm::load_skeleton(skeleton_path);
      const pm::Dataset dataset = pm::make_synthetic_dataset(g.seed.value_or(0), count, skeleton, pairs);
      pm::save_dataset(dataset, out_path);
      spdlog::info("wrote {} records to {}", dataset.records.size(), out_path);
    } else if (*train) {
      pm::RunConfig c = resolve_config(g, variant);
      if (steps) c.training.steps = *steps;
      const pm::Dataset dataset = pm::load_dataset(data_path);
      auto client = pm::make_client(c);
      pm::TrainingResult result = pm::train_model(dataset, c, *client, progress_logger(log_every));
      pm::save_checkpoint(result.checkpoint, out_path);
      if (!result.history.empty()) {
        spdlog::info("final reconstruction {:.6f} (initial {:.6f})", result.history.back().reconstruction,
                     result.history.front().reconstruction);
      }
    } else if (*gen) {
      pm::Checkpoint cp = pm::load_checkpoint(checkpoint_path);
      // Model shape comes from the checkpoint; only runtime settings are overridden.
      const pm::RunConfig overrides = resolve_config(g);
      cp.config.seed = overrides.seed;
      cp.config.offline = overrides.offline;
      cp.config.cache_root = overrides.cache_root;
      const pm::RunConfig& c = cp.config;

      pm::PhraseSeries series;
      for (const auto& p : phrases) series.phrases.push_back(pm::ActionPhrase::make(p));
      if (frames.size() == 1) frames.assign(phrases.size(), frames.front());
      series.durations = frames;
      std::optional<pm::GenerationMode> mode;
      if (sample) mode = pm::GenerationMode::Sample;
      if (mean) mode = pm::GenerationMode::Mean;
      auto client = pm::make_client(c);
      const pm::MotionSequence motion = pm::generate(cp, series, *client, c.seed, mode);
      if (out_path.empty() || out_path == "-") {
        std::cout << pm::motion_to_json(motion, cp.skeleton).dump() << '\n';
        if (!csv_path.empty()) pm::fail(pm::ErrorCode::InvalidConfig, "--csv needs --out");
      } else {
        pm::ExportOptions opts;
        if (!csv_path.empty()) opts.csv_path = csv_path;
        opts.force = force;
        pm::export_motion(motion, cp.skeleton, out_path, opts);
      }
    } else if (*evaluate) {
      pm::Checkpoint cp = pm::load_checkpoint(checkpoint_path);
      const pm::RunConfig overrides = resolve_config(g);
      cp.config.seed = overrides.seed;
      cp.config.offline = overrides.offline;
      cp.config.cache_root = overrides.cache_root;
      const pm::Dataset dataset = pm::load_dataset(data_path);
      auto client = pm::make_client(cp.config);
      const pm::MetricReport report =
          pm::evaluate_testset(cp, dataset, pm::split_from_string(split_name), *client, cp.config.seed);
      write_text(out_path, pm::report_to_json(report).dump(2) + "\n");
    } else if (*ablate) {
      pm::RunConfig c = resolve_config(g, variant);
      if (steps) c.training.steps = *steps;
      const pm::Dataset dataset = pm::load_dataset(data_path);
      const pm::AblationTable table =
          pm::ablate_k(c, parse_int_list(k_list), dataset, pm::split_from_string(split_name));
      if (!out_path.empty()) write_text(out_path, pm::ablation_to_json(table).dump(2) + "\n");
      write_text(table_path, pm::format_ablation_table(table));
    } else if (*exp) {
      const pm::Skeleton skeleton = skeleton_path.empty() ? pm::default_skeleton() : pm::load_skeleton(skeleton_path);
      const pm::MotionSequence motion = pm::load_motion(input_path, skeleton);
      pm::ExportOptions opts;
      if (!csv_path.empty()) opts.csv_path = csv_path;
      opts.force = force;
      pm::export_motion(motion, skeleton, out_path, opts);
    }
  } catch (const pm::Error& e) {
    spdlog::error("{}", e.what());
    return pm::exit_code_for(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
