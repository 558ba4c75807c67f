#include "promptmotion/embedding.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "promptmotion/errors.hpp"
#include "promptmotion/hashing.hpp"
#include "promptmotion/text.hpp"

namespace promptmotion {

std::string_view to_string(EmbedderKind kind) {
  return kind == EmbedderKind::Vector ? "vector" : "token-matrix";
}

EmbedderKind embedder_kind_from_string(std::string_view name) {
  if (name == "vector") return EmbedderKind::Vector;
  if (name == "token-matrix" || name == "token_matrix") return EmbedderKind::TokenMatrix;
  fail(ErrorCode::InvalidConfig, fmt::format("unknown embedder kind '{}'", name));
}

HashEmbedder::HashEmbedder(EmbedderKind kind, int dimension, std::uint64_t seed)
    : kind_(kind), dimension_(dimension), seed_(seed) {
  if (dimension < 1) fail(ErrorCode::InvalidConfig, "embedder dimension must be positive");
}

std::vector<std::string> HashEmbedder::tokenize(std::string_view text) const {
  std::vector<std::string> tokens = text::split_whitespace(text);
  for (auto& token : tokens) {
    std::string lowered = text::to_lower(token);
    auto is_alnum = [](unsigned char c) { return std::isalnum(c) != 0; };
    auto first = std::find_if(lowered.begin(), lowered.end(), is_alnum);
    auto last = std::find_if(lowered.rbegin(), lowered.rend(), is_alnum).base();
    token = first < last ? std::string(first, last) : lowered;
  }
  return tokens;
}

Eigen::VectorXd HashEmbedder::token_vector(std::string_view token) const {
  std::uint64_t state = seed_ ^ fnv1a64(token);
  Eigen::VectorXd v(dimension_);
  for (int i = 0; i < dimension_; ++i) v[i] = 2.0 * to_unit_interval(splitmix64(state)) - 1.0;
  const double norm = v.norm();
  // All-zero draws are impossible in practice; guard anyway to keep unit norm.
  if (norm == 0.0) {
    v.setZero();
    v[0] = 1.0;
    return v;
  }
  return v / norm;
}

DescriptionEmbedding HashEmbedder::embed(std::string_view text) const {
  const auto tokens = tokenize(text);
  if (tokens.empty()) fail(ErrorCode::EmptyText, "description has no tokens");
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(tokens.size()), dimension_);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    rows.row(static_cast<Eigen::Index>(i)) = token_vector(tokens[i]).transpose();
  }
  if (kind_ == EmbedderKind::TokenMatrix) return TokenEmbeddingMatrix(std::move(rows));
  return VectorEmbedding(rows.colwise().mean().transpose());
}

std::unique_ptr<DescriptionEmbedder> make_embedder(const EmbedderConfig& config) {
  if (!config.model_path.empty()) {
    fail(ErrorCode::InvalidConfig,
         fmt::format("pretrained embedder '{}' requested but no pretrained adapters are built in",
                     config.model_path));
  }
  return std::make_unique<HashEmbedder>(config.kind, config.dimension, config.seed);
}

DescriptionEmbedding embed_description(std::string_view text, const DescriptionEmbedder& embedder) {
  if (text::trim(text).empty()) fail(ErrorCode::EmptyText, "cannot embed an empty description");
  return embedder.embed(text);
}

AggregatedEmbedding MeanAggregator::aggregate(std::span<const VectorEmbedding> embeddings) const {
  if (embeddings.empty()) fail(ErrorCode::EmptyList, "no embeddings to aggregate");
  const Eigen::Index dim = embeddings.front().size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (const auto& v : embeddings) {
    if (v.size() != dim) {
      fail(ErrorCode::DimensionMismatch, fmt::format("embedding dimension {} != {}", v.size(), dim));
    }
    sum += v;
  }
  AggregatedEmbedding out;
  out.kind = EmbedderKind::Vector;
  out.values = (sum / static_cast<double>(embeddings.size())).transpose();
  out.mask = {true};
  return out;
}

AggregatedEmbedding MeanAggregator::aggregate(std::span<const TokenEmbeddingMatrix> embeddings) const {
  if (embeddings.empty()) fail(ErrorCode::EmptyList, "no embeddings to aggregate");
  const Eigen::Index dim = embeddings.front().cols();
  Eigen::Index longest = 0;
  for (const auto& m : embeddings) {
    if (m.cols() != dim) {
      fail(ErrorCode::DimensionMismatch, fmt::format("token embedding width {} != {}", m.cols(), dim));
    }
    if (m.rows() < 1) fail(ErrorCode::DimensionMismatch, "token embedding has no rows");
    longest = std::max(longest, m.rows());
  }
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(longest, dim);
  for (const auto& m : embeddings) sum.topRows(m.rows()) += m;

  AggregatedEmbedding out;
  out.kind = EmbedderKind::TokenMatrix;
  out.values = sum / static_cast<double>(embeddings.size());
  // Every input has at least one row, so the mask is a prefix of length G;
  // with zero padding every row below the longest input is covered.
  out.mask.assign(static_cast<std::size_t>(longest), true);
  return out;
}

AggregatedEmbedding aggregate_vectors(std::span<const VectorEmbedding> embeddings) {
  return MeanAggregator{}.aggregate(embeddings);
}

AggregatedEmbedding aggregate_token_matrices(std::span<const TokenEmbeddingMatrix> embeddings) {
  return MeanAggregator{}.aggregate(embeddings);
}

AggregatedEmbedding embed_and_aggregate(std::span<const std::string> descriptions,
                                        const DescriptionEmbedder& embedder) {
  if (descriptions.empty()) fail(ErrorCode::EmptyList, "no descriptions to embed");
  if (embedder.kind() == EmbedderKind::Vector) {
    std::vector<VectorEmbedding> vectors;
    for (const auto& d : descriptions) vectors.push_back(std::get<VectorEmbedding>(embed_description(d, embedder)));
    return aggregate_vectors(vectors);
  }
  std::vector<TokenEmbeddingMatrix> matrices;
  for (const auto& d : descriptions) matrices.push_back(std::get<TokenEmbeddingMatrix>(embed_description(d, embedder)));
  return aggregate_token_matrices(matrices);
}

}  // namespace promptmotion
