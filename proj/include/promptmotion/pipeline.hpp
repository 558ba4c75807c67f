#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "promptmotion/config.hpp"
#include "promptmotion/dataset.hpp"
#include "promptmotion/description_cache.hpp"
#include "promptmotion/metrics.hpp"
#include "promptmotion/models.hpp"
#include "promptmotion/training.hpp"

namespace promptmotion {

// Phrases x^1..x^s with one target duration each.
struct PhraseSeries {
  std::vector<ActionPhrase> phrases;
  std::vector<int> durations;

  static PhraseSeries single(ActionPhrase phrase, int frames);
  // Throws ShapeMismatch unless non-empty, equal-length and all durations >= 1.
  void validate() const;
  std::size_t size() const noexcept { return phrases.size(); }
};

// Stub client when offline, otherwise the completions endpoint.
std::unique_ptr<LlmClient> make_client(const RunConfig& config);

// phrase -> prompt -> k descriptions (through the cache) -> embeddings -> v_aggr.
class TextPipeline {
 public:
  TextPipeline(const RunConfig& config, LlmClient& client);

  DescriptionSet describe(const ActionPhrase& phrase) const;
  AggregatedEmbedding embed(const ActionPhrase& phrase) const;

  const DescriptionEmbedder& embedder() const noexcept { return *embedder_; }
  // Stub and live completions are cached under separate subdirectories;
  // empty when caching is disabled (cache_root = "").
  std::optional<std::filesystem::path> cache_dir() const;

 private:
  RunConfig config_;
  LlmClient* client_;
  std::unique_ptr<DescriptionEmbedder> embedder_;
  std::optional<DescriptionCache> cache_;
};

// Trained weights plus everything needed to rebuild the text path.
struct Checkpoint {
  RunConfig config;
  Skeleton skeleton;
  std::unique_ptr<MotionModel> model;
};

inline constexpr int kCheckpointSchemaVersion = 1;

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
// Throws SchemaError on a malformed file or a parameter name/shape mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TrainingResult {
  Checkpoint checkpoint;
  std::vector<LossReport> history;  // one entry per step
};

using StepCallback = std::function<void(int step, const LossReport& report)>;

// Trains on the train split. The past-conditioned variant alternates
// single-segment steps (zero past) with two-pass steps over pair records, or
// over consecutive train records when the dataset holds no pairs.
TrainingResult train_model(const Dataset& dataset, const RunConfig& config, LlmClient& client,
                           const StepCallback& on_step = {});

// Decodes a series; past-conditioned models chain the Past Encoder over the
// previous generated segment, starting from the zero context. Returns the
// segments concatenated along time.
MotionSequence generate(const Checkpoint& checkpoint, const PhraseSeries& series, LlmClient& client,
                        std::uint64_t seed, std::optional<GenerationMode> mode = std::nullopt);

// Per-segment variant of generate().
std::vector<MotionSequence> generate_segments(const Checkpoint& checkpoint, const PhraseSeries& series,
                                              LlmClient& client, std::uint64_t seed,
                                              std::optional<GenerationMode> mode = std::nullopt);

// decode((1 - t) z_a + t z_b). Throws ShapeMismatch on mismatched d and
// InvalidConfig for t outside [0, 1].
MotionSequence latent_interpolate(const MotionModel& model, const LatentEmbedding& z_a, const LatentEmbedding& z_b,
                                  double t, int frames, const PastContext* past = nullptr);

// One generation per record of `split`, with duration forced to the ground
// truth. Root cells are absent for models that decode no root motion. Pair
// records are generated as two-phrase series.
MetricReport evaluate_testset(const Checkpoint& checkpoint, const Dataset& dataset, Split split, LlmClient& client,
                              std::uint64_t seed);

}  // namespace promptmotion
