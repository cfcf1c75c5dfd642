#include "lame/heads.hpp"

namespace lame {

HeadParams HeadParams::create(const ModelConfig& config, ParamInit& init) {
  const Index d = config.hidden;
  return {Parameter("head.w1", init.normal(d, d)), Parameter("head.b1", ParamInit::zeros(1, d)),
          Parameter("head.w2", init.normal(d, 1)), Parameter("head.b2", ParamInit::zeros(1, 1))};
}

Prediction classify(const ForwardContext& ctx, const Tensor& label_states, const HeadParams& params, TaskMode mode) {
  if (label_states.cols() != params.w1.value.rows()) {
    throw DimensionError("classify: label states " + shape_string(label_states.rows(), label_states.cols()) +
                         " do not match head width " + std::to_string(params.w1.value.rows()));
  }
  const auto group = ParamGroup::head;
  const Tensor hidden =
      gelu(add_row(matmul(label_states, ctx.bind(params.w1, group)), ctx.bind(params.b1, group)));
  const Tensor scores = add_row(matmul(hidden, ctx.bind(params.w2, group)), ctx.bind(params.b2, group));
  const Tensor logits = transpose(scores);
  const Tensor probs = mode == TaskMode::multi_class ? softmax_rows(logits) : sigmoid(logits);
  return {logits, probs, mode};
}

Tensor cross_entropy(const Prediction& pred, std::int32_t gold) {
  if (pred.mode != TaskMode::multi_class) {
    throw ContractError("cross_entropy needs a multi_class prediction");
  }
  if (gold < 0 || gold >= pred.logits.cols()) {
    throw ContractError("cross_entropy: gold class " + std::to_string(gold) + " outside " +
                        std::to_string(pred.logits.cols()) + " classes");
  }
  return scale(slice_cols(log_softmax_rows(pred.logits), gold, 1), -1.0);
}

Tensor binary_cross_entropy(const Prediction& pred, std::span<const double> gold) {
  if (pred.mode != TaskMode::multi_label) {
    throw ContractError("binary_cross_entropy needs a multi_label prediction");
  }
  const Index n = pred.logits.cols();
  if (static_cast<Index>(gold.size()) != n) {
    throw ContractError("binary_cross_entropy: " + std::to_string(gold.size()) + " gold entries for " +
                        std::to_string(n) + " labels");
  }
  Matrix y(1, n);
  for (Index i = 0; i < n; ++i) {
    const double v = gold[static_cast<std::size_t>(i)];
    if (v != 0.0 && v != 1.0) {
      throw InputError("binary_cross_entropy: gold entry " + std::to_string(v) + " is not 0 or 1");
    }
    y(0, i) = v;
  }
  Tape& tape = pred.logits.tape();
  const Tensor target = tape.constant(std::move(y));
  return mean(sub(softplus(pred.logits), mul(target, pred.logits)));
}

SoftCounts soft_counts(const Matrix& probabilities, const Matrix& gold) {
  if (probabilities.rows() != gold.rows() || probabilities.cols() != gold.cols()) {
    throw DimensionError("soft_counts: probabilities " + shape_string(probabilities.rows(), probabilities.cols()) +
                         " vs gold " + shape_string(gold.rows(), gold.cols()));
  }
  const auto p = probabilities.array();
  const auto y = gold.array();
  return {(p * y).sum(), ((1.0 - p) * (1.0 - y)).sum(), (p * (1.0 - y)).sum(), ((1.0 - p) * y).sum()};
}

Tensor f_measure_loss(const Tensor& probabilities, const Matrix& gold, double eps) {
  if (probabilities.rows() != gold.rows() || probabilities.cols() != gold.cols()) {
    throw DimensionError("f_measure_loss: probabilities " +
                         shape_string(probabilities.rows(), probabilities.cols()) + " vs gold " +
                         shape_string(gold.rows(), gold.cols()));
  }
  Tape& tape = probabilities.tape();
  const Tensor y = tape.constant(gold);
  const Tensor not_y = tape.constant((1.0 - gold.array()).matrix());
  const Tensor not_p = add_scalar(scale(probabilities, -1.0), 1.0);

  const Tensor tp = sum(mul(probabilities, y));
  const Tensor fp = sum(mul(probabilities, not_y));
  const Tensor fn = sum(mul(not_p, y));
  const Tensor tn = sum(mul(not_p, not_y));
  const Tensor errors = add(fp, fn);

  const Tensor f_pos = div(scale(tp, 2.0), add_scalar(add(scale(tp, 2.0), errors), eps));
  const Tensor f_neg = div(scale(tn, 2.0), add_scalar(add(scale(tn, 2.0), errors), eps));
  return add_scalar(scale(add(f_pos, f_neg), -0.5), 1.0);
}

Tensor f_measure_loss(std::span<const Prediction> preds, std::span<const std::vector<double>> golds, double eps) {
  if (preds.empty()) {
    throw ContractError("f_measure_loss: empty batch");
  }
  if (preds.size() != golds.size()) {
    throw ContractError("f_measure_loss: " + std::to_string(preds.size()) + " predictions vs " +
                        std::to_string(golds.size()) + " gold vectors");
  }
  const Index labels = preds.front().probabilities.cols();
  Matrix gold(static_cast<Index>(golds.size()), labels);
  std::vector<Tensor> rows;
  rows.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].mode != TaskMode::multi_label) {
      throw ContractError("f_measure_loss needs multi_label predictions");
    }
    if (static_cast<Index>(golds[i].size()) != labels || preds[i].probabilities.cols() != labels) {
      throw ContractError("f_measure_loss: label count mismatch in batch element " + std::to_string(i));
    }
    for (Index l = 0; l < labels; ++l) {
      const double v = golds[i][static_cast<std::size_t>(l)];
      if (v != 0.0 && v != 1.0) {
        throw InputError("f_measure_loss: gold entry " + std::to_string(v) + " is not 0 or 1");
      }
      gold(static_cast<Index>(i), l) = v;
    }
    rows.push_back(preds[i].probabilities);
  }
  const Tensor probs = rows.size() == 1 ? rows.front() : concat_rows(rows);
  return f_measure_loss(probs, gold, eps);
}

}  // namespace lame
