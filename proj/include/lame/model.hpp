#pragma once

// The full classifier: encoder, label attention stack and classification head.

#include <cstdint>
#include <string>
#include <vector>

#include "lame/config.hpp"
#include "lame/encoder.hpp"
#include "lame/heads.hpp"
#include "lame/label_attention.hpp"

namespace lame {

struct ParameterRef {
  ParamGroup group;
  Parameter* param;
};

struct ConstParameterRef {
  ParamGroup group;
  const Parameter* param;
};

class LameModel {
 public:
  // Weights ~ truncated normal(init_std), biases 0, layer-norm gains 1.
  LameModel(const ModelConfig& config, std::uint64_t seed, double init_std = 0.02);

  const ModelConfig& config() const { return config_; }

  // Fixed traversal order: encoder, label attention blocks, head.
  std::vector<ParameterRef> parameters();
  std::vector<ConstParameterRef> parameters() const;
  std::size_t parameter_count() const;

  void zero_grad();

  // Encoder parameters stop receiving gradients and updates.
  void freeze_encoder() { encoder_frozen_ = true; }
  bool encoder_frozen() const { return encoder_frozen_; }

  EncoderParams encoder;
  std::vector<LabelAttentionBlockParams> blocks;
  HeadParams head;

 private:
  ModelConfig config_;
  bool encoder_frozen_ = false;
};

struct DocumentForward {
  EncodedDocument document;
  Tensor label_states;  // output of the last label attention block
  Prediction prediction;
  std::vector<AttentionRecord> records;
};

// Document pass given an already-built label matrix on the same tape.
DocumentForward forward_document(const ForwardContext& ctx, const LameModel& model, const Tensor& label_matrix,
                                 const TokenizedText& document);

// Label indices chosen by argmax (multi_class) or the decision threshold (multi_label).
std::vector<std::size_t> decide_labels(const RowVector& probabilities, TaskMode mode, double threshold);

struct DocumentPrediction {
  RowVector logits;
  RowVector probabilities;
  std::vector<std::size_t> predicted;
  std::vector<AttentionRecord> records;
};

// Eval-mode inference. Embeds the label descriptions once; predict() is const
// and safe to call from several threads.
class Predictor {
 public:
  Predictor(const LameModel& model, const std::vector<TokenizedText>& descriptions);

  DocumentPrediction predict(const TokenizedText& document) const;
  const Matrix& label_matrix() const { return labels_; }
  const LameModel& model() const { return *model_; }

 private:
  const LameModel* model_;
  Matrix labels_;
};

}  // namespace lame
