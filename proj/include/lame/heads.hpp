#pragma once

// Classification head and training objectives.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lame/config.hpp"
#include "lame/layers.hpp"

namespace lame {

// Shared across labels: logit_l = w2 . gelu(W1 O_l + b1) + b2.
struct HeadParams {
  Parameter w1;  // d_h x d_h
  Parameter b1;  // 1 x d_h
  Parameter w2;  // d_h x 1
  Parameter b2;  // 1 x 1

  static HeadParams create(const ModelConfig& config, ParamInit& init);
};

struct Prediction {
  Tensor logits;         // 1 x |labels|
  Tensor probabilities;  // 1 x |labels|
  TaskMode mode = TaskMode::multi_label;
};

Prediction classify(const ForwardContext& ctx, const Tensor& label_states, const HeadParams& params, TaskMode mode);

// -log p[gold] computed as logsumexp(logits) - logits[gold].
Tensor cross_entropy(const Prediction& pred, std::int32_t gold);

// Mean over labels of softplus(z) - y z, the logit form of binary cross-entropy.
Tensor binary_cross_entropy(const Prediction& pred, std::span<const double> gold);

// Soft confusion counts pooled over every (instance, label) pair.
struct SoftCounts {
  double tp = 0.0;
  double tn = 0.0;
  double fp = 0.0;
  double fn = 0.0;
};

SoftCounts soft_counts(const Matrix& probabilities, const Matrix& gold);

// 1 - (F_pos + F_neg) / 2 with
//   F_pos = 2tp / (2tp + fp + fn + eps),  F_neg = 2tn / (2tn + fp + fn + eps)
// over soft counts. `probabilities` and `gold` are batch x |labels|.
Tensor f_measure_loss(const Tensor& probabilities, const Matrix& gold, double eps);
Tensor f_measure_loss(std::span<const Prediction> preds, std::span<const std::vector<double>> golds, double eps);

}  // namespace lame
