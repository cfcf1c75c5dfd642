#pragma once

// Transformer encoder shared by documents and label descriptions.

#include <string>
#include <vector>

#include "lame/config.hpp"
#include "lame/layers.hpp"
#include "lame/tokenizer.hpp"

namespace lame {

struct EncoderLayerParams {
  AttentionParams attention;
  LayerNormParams attention_norm;
  FeedForwardParams ffn;
  LayerNormParams ffn_norm;
};

struct EncoderParams {
  Parameter token_embedding;     // V x d_h
  Parameter position_embedding;  // N_max x d_h
  std::vector<EncoderLayerParams> layers;

  static EncoderParams create(const ModelConfig& config, ParamInit& init);
};

struct EncodedDocument {
  TokenizedText tokens;
  Tensor hidden;  // N x d_h, final layer
  Tensor cls;     // 1 x d_h, row 0 of hidden
};

// H^0 = token embeddings + learned positions, then post-norm Transformer layers.
EncodedDocument encode(const ForwardContext& ctx, const TokenizedText& tokens, const EncoderParams& params,
                       const ModelConfig& config);

// Final hidden state of the [CLS] position.
Tensor embed_label(const ForwardContext& ctx, const TokenizedText& description, const EncoderParams& params,
                   const ModelConfig& config);

struct LabelMatrix {
  Tensor embeddings;  // |labels| x d_h, row order == label_order
  std::vector<std::string> label_order;
};

// Rebuilt from the descriptions on every call, so the encoder sees label-side gradients.
LabelMatrix build_label_matrix(const ForwardContext& ctx, const std::vector<TokenizedText>& descriptions,
                               const std::vector<std::string>& label_order, const EncoderParams& params,
                               const ModelConfig& config);

}  // namespace lame
