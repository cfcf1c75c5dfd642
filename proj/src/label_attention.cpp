#include "lame/label_attention.hpp"

#include <cmath>

namespace lame {

LabelAttentionBlockParams LabelAttentionBlockParams::create(const std::string& prefix, const ModelConfig& config,
                                                            ParamInit& init) {
  const Index d = config.hidden;
  return {AttentionParams::create(prefix + ".attention", d, init),
          LayerNormParams::create(prefix + ".attention_norm", d),
          FeedForwardParams::create(prefix + ".ffn", d, d * config.ffn_mult, init),
          LayerNormParams::create(prefix + ".ffn_norm", d)};
}

double label_attention_divisor(const ModelConfig& config) {
  const int width = config.attention_scale == AttentionScale::per_head ? config.hidden / config.label_heads
                                                                       : config.hidden;
  return std::sqrt(static_cast<double>(width));
}

LabelAttentionBlockResult label_attention_block(const ForwardContext& ctx, const Tensor& labels,
                                                const Tensor& document, const LabelAttentionBlockParams& params,
                                                const ModelConfig& config, std::size_t block_index) {
  if (labels.cols() != config.hidden || document.cols() != config.hidden) {
    throw DimensionError("label_attention_block: labels " + shape_string(labels.rows(), labels.cols()) +
                         " and document " + shape_string(document.rows(), document.cols()) +
                         " must both have width " + std::to_string(config.hidden));
  }
  const auto group = ParamGroup::label_attention;
  AttentionResult attn = multi_head_attention(ctx, labels, document, params.attention, group, config.label_heads,
                                              label_attention_divisor(config), true);
  const Tensor aggregated =
      normalize(ctx, add(labels, ctx.dropout(attn.output)), params.attention_norm, group, config.layer_norm_eps);
  const Tensor ffn = feed_forward(ctx, aggregated, params.ffn, group);
  const Tensor out = normalize(ctx, add(aggregated, ctx.dropout(ffn)), params.ffn_norm, group, config.layer_norm_eps);
  return {out, AttentionRecord{block_index, std::move(attn.weights)}};
}

LabelAttentionResult run_label_attention(const ForwardContext& ctx, const Tensor& labels, const Tensor& document,
                                         std::span<const LabelAttentionBlockParams> blocks,
                                         const ModelConfig& config) {
  if (blocks.empty()) {
    throw ContractError("run_label_attention: at least one block is required");
  }
  LabelAttentionResult result{labels, {}};
  result.records.reserve(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    LabelAttentionBlockResult block = label_attention_block(ctx, result.output, document, blocks[b], config, b);
    result.output = block.output;
    result.records.push_back(std::move(block.record));
  }
  return result;
}

RowVector explanation_scores(std::span<const AttentionRecord> records, std::size_t label) {
  if (records.empty() || records.back().heads.empty()) {
    throw ContractError("explanation_scores: no attention records");
  }
  const AttentionRecord& last = records.back();
  if (label >= static_cast<std::size_t>(last.num_labels())) {
    throw ContractError("explanation_scores: label " + std::to_string(label) + " outside " +
                        std::to_string(last.num_labels()) + " labels");
  }
  RowVector scores = RowVector::Zero(last.num_positions());
  for (const Matrix& head : last.heads) {
    scores += head.row(static_cast<Index>(label));
  }
  return scores / static_cast<double>(last.num_heads());
}

}  // namespace lame
