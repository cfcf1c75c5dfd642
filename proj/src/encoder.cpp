#include "lame/encoder.hpp"

#include <cmath>

namespace lame {

EncoderParams EncoderParams::create(const ModelConfig& config, ParamInit& init) {
  const Index d = config.hidden;
  EncoderParams p{Parameter("encoder.token_embedding", init.normal(config.vocab_size, d)),
                  Parameter("encoder.position_embedding", init.normal(config.max_sequence_length, d)),
                  {}};
  p.layers.reserve(static_cast<std::size_t>(config.encoder_layers));
  for (int l = 0; l < config.encoder_layers; ++l) {
    const std::string prefix = "encoder.layers." + std::to_string(l);
    p.layers.push_back({AttentionParams::create(prefix + ".attention", d, init),
                        LayerNormParams::create(prefix + ".attention_norm", d),
                        FeedForwardParams::create(prefix + ".ffn", d, d * config.ffn_mult, init),
                        LayerNormParams::create(prefix + ".ffn_norm", d)});
  }
  return p;
}

EncodedDocument encode(const ForwardContext& ctx, const TokenizedText& tokens, const EncoderParams& params,
                       const ModelConfig& config) {
  const std::size_t n = tokens.ids.size();
  if (n == 0) {
    throw InputError("encode: empty token sequence");
  }
  if (n > static_cast<std::size_t>(config.max_sequence_length)) {
    throw InputError("encode: sequence of " + std::to_string(n) + " tokens exceeds max_sequence_length " +
                     std::to_string(config.max_sequence_length));
  }
  for (std::int32_t id : tokens.ids) {
    if (id < 0 || id >= config.vocab_size) {
      throw InputError("encode: token id " + std::to_string(id) + " outside vocabulary of size " +
                       std::to_string(config.vocab_size));
    }
  }
  const auto group = ParamGroup::encoder;
  const Tensor embedded = embedding_lookup(ctx.bind(params.token_embedding, group), tokens.ids);
  const Tensor positions = slice_rows(ctx.bind(params.position_embedding, group), 0, static_cast<Index>(n));
  Tensor h = ctx.dropout(add(embedded, positions));

  const double divisor = std::sqrt(static_cast<double>(config.hidden / config.encoder_heads));
  for (const EncoderLayerParams& layer : params.layers) {
    const AttentionResult attn =
        multi_head_attention(ctx, h, h, layer.attention, group, config.encoder_heads, divisor, false);
    h = normalize(ctx, add(h, ctx.dropout(attn.output)), layer.attention_norm, group, config.layer_norm_eps);
    const Tensor ffn = feed_forward(ctx, h, layer.ffn, group);
    h = normalize(ctx, add(h, ctx.dropout(ffn)), layer.ffn_norm, group, config.layer_norm_eps);
  }
  return EncodedDocument{tokens, h, slice_rows(h, 0, 1)};
}

Tensor embed_label(const ForwardContext& ctx, const TokenizedText& description, const EncoderParams& params,
                   const ModelConfig& config) {
  return encode(ctx, description, params, config).cls;
}

LabelMatrix build_label_matrix(const ForwardContext& ctx, const std::vector<TokenizedText>& descriptions,
                               const std::vector<std::string>& label_order, const EncoderParams& params,
                               const ModelConfig& config) {
  if (descriptions.size() != static_cast<std::size_t>(config.num_labels)) {
    throw ContractError("build_label_matrix: " + std::to_string(descriptions.size()) +
                        " descriptions for a model with " + std::to_string(config.num_labels) + " labels");
  }
  if (label_order.size() != descriptions.size()) {
    throw ContractError("build_label_matrix: label_order has " + std::to_string(label_order.size()) +
                        " entries for " + std::to_string(descriptions.size()) + " descriptions");
  }
  std::vector<Tensor> rows;
  rows.reserve(descriptions.size());
  for (const TokenizedText& d : descriptions) {
    rows.push_back(embed_label(ctx, d, params, config));
  }
  return LabelMatrix{rows.size() == 1 ? rows.front() : concat_rows(rows), label_order};
}

}  // namespace lame
