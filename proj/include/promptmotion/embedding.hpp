#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace promptmotion {

enum class EmbedderKind { Vector, TokenMatrix };

std::string_view to_string(EmbedderKind kind);
EmbedderKind embedder_kind_from_string(std::string_view name);

using VectorEmbedding = Eigen::VectorXd;
// One row per token: n_i x e.
using TokenEmbeddingMatrix = Eigen::MatrixXd;
using DescriptionEmbedding = std::variant<VectorEmbedding, TokenEmbeddingMatrix>;

// v_aggr. For Vector kind `values` is 1 x c; for TokenMatrix it is G x e with
// G the longest input. mask[g] is true iff some input had more than g rows.
struct AggregatedEmbedding {
  EmbedderKind kind = EmbedderKind::Vector;
  Eigen::MatrixXd values;
  std::vector<bool> mask;

  Eigen::Index dimension() const noexcept { return values.cols(); }
  Eigen::Index rows() const noexcept { return values.rows(); }
  VectorEmbedding vector() const { return values.row(0).transpose(); }
};

// Frozen text encoder. Implementations must be deterministic and immutable
// after construction.
class DescriptionEmbedder {
 public:
  virtual ~DescriptionEmbedder() = default;

  virtual EmbedderKind kind() const noexcept = 0;
  virtual int dimension() const noexcept = 0;
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
  virtual DescriptionEmbedding embed(std::string_view text) const = 0;
};

// Test embedder: every word maps through a seeded hash to a unit vector. The
// vector kind returns the mean of the word vectors.
class HashEmbedder final : public DescriptionEmbedder {
 public:
  HashEmbedder(EmbedderKind kind, int dimension, std::uint64_t seed);

  EmbedderKind kind() const noexcept override { return kind_; }
  int dimension() const noexcept override { return dimension_; }
  std::vector<std::string> tokenize(std::string_view text) const override;
  DescriptionEmbedding embed(std::string_view text) const override;

  Eigen::VectorXd token_vector(std::string_view token) const;

 private:
  EmbedderKind kind_;
  int dimension_;
  std::uint64_t seed_;
};

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::TokenMatrix;
  int dimension = 16;
  std::uint64_t seed = 0;
  std::string model_path;  // pretrained adapters; none are compiled into this build

  bool operator==(const EmbedderConfig&) const = default;
};

std::unique_ptr<DescriptionEmbedder> make_embedder(const EmbedderConfig& config);

// Throws EmptyText for blank input.
DescriptionEmbedding embed_description(std::string_view text, const DescriptionEmbedder& embedder);

class EmbeddingAggregator {
 public:
  virtual ~EmbeddingAggregator() = default;
  virtual AggregatedEmbedding aggregate(std::span<const VectorEmbedding> embeddings) const = 0;
  virtual AggregatedEmbedding aggregate(std::span<const TokenEmbeddingMatrix> embeddings) const = 0;
};

// Elementwise mean. Token matrices are zero-padded to the longest before averaging.
class MeanAggregator final : public EmbeddingAggregator {
 public:
  AggregatedEmbedding aggregate(std::span<const VectorEmbedding> embeddings) const override;
  AggregatedEmbedding aggregate(std::span<const TokenEmbeddingMatrix> embeddings) const override;
};

AggregatedEmbedding aggregate_vectors(std::span<const VectorEmbedding> embeddings);
AggregatedEmbedding aggregate_token_matrices(std::span<const TokenEmbeddingMatrix> embeddings);

// Embeds every description and aggregates with the mean.
AggregatedEmbedding embed_and_aggregate(std::span<const std::string> descriptions,
                                        const DescriptionEmbedder& embedder);

}  // namespace promptmotion
