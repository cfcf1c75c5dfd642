#pragma once

// Label attention: label embeddings query the document's hidden states.
//
// One block is two post-norm sublayers,
//   A   = LayerNorm(U + MultiHead(U, H, H))
//   out = LayerNorm(A + FFN(A)),
// so the |labels| x d_h shape is preserved and blocks can be stacked. Every
// block keeps its attention weights for explanations.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lame/config.hpp"
#include "lame/layers.hpp"

namespace lame {

struct LabelAttentionBlockParams {
  AttentionParams attention;
  LayerNormParams attention_norm;
  FeedForwardParams ffn;
  LayerNormParams ffn_norm;

  static LabelAttentionBlockParams create(const std::string& prefix, const ModelConfig& config, ParamInit& init);
};

// Attention weights of one block: per head, a |labels| x N matrix whose rows
// are distributions over document positions.
struct AttentionRecord {
  std::size_t block_index = 0;
  std::vector<Matrix> heads;

  std::size_t num_heads() const { return heads.size(); }
  Index num_labels() const { return heads.empty() ? 0 : heads.front().rows(); }
  Index num_positions() const { return heads.empty() ? 0 : heads.front().cols(); }
  double weight(std::size_t head, Index label, Index position) const { return heads.at(head)(label, position); }
};

struct LabelAttentionBlockResult {
  Tensor output;
  AttentionRecord record;
};

struct LabelAttentionResult {
  Tensor output;
  std::vector<AttentionRecord> records;
};

// Softmax temperature for the label attention scores.
double label_attention_divisor(const ModelConfig& config);

LabelAttentionBlockResult label_attention_block(const ForwardContext& ctx, const Tensor& labels,
                                                const Tensor& document, const LabelAttentionBlockParams& params,
                                                const ModelConfig& config, std::size_t block_index = 0);

// Folds the blocks over the label matrix, threading each output into the next block's queries.
LabelAttentionResult run_label_attention(const ForwardContext& ctx, const Tensor& labels, const Tensor& document,
                                         std::span<const LabelAttentionBlockParams> blocks,
                                         const ModelConfig& config);

// Mean over heads of the label's row in the last block: a distribution over positions.
RowVector explanation_scores(std::span<const AttentionRecord> records, std::size_t label);

inline constexpr std::string_view kExplanationStrategy = "last_block_mean_heads";

}  // namespace lame
