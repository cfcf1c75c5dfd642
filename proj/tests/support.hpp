#pragma once

// Finite-difference oracles shared by the unit tests and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "lame/heads.hpp"
#include "lame/model.hpp"
#include "lame/tensor.hpp"

namespace lame::testing {

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// ||a - n|| / max(||a||, ||n||, 1e-6). The floor keeps exactly-zero
// gradients (e.g. a bias shared by every softmax logit) from dividing
// rounding noise by zero.
inline double relative_error(const Matrix& analytic, const Matrix& numeric) {
  const double denom = std::max({analytic.norm(), numeric.norm(), 1e-6});
  return (analytic - numeric).norm() / denom;
}

using OpFn = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

// Reduces a non-scalar output to a scalar with a fixed random probe so every
// output entry carries a distinct upstream gradient.
inline Tensor probe(const Tensor& out, std::uint64_t seed) {
  if (out.size() == 1) return out;
  std::mt19937_64 rng(seed);
  Tape& tape = out.tape();
  return sum(mul(out, tape.constant(random_matrix(out.rows(), out.cols(), rng))));
}

// Largest relative error over the inputs between reverse mode and central differences.
inline double op_gradient_error(const OpFn& fn, const std::vector<Matrix>& inputs, double eps = 1e-5,
                                std::uint64_t probe_seed = 99) {
  auto evaluate = [&](const std::vector<Matrix>& values) {
    Tape tape;
    std::vector<Tensor> vars;
    for (const Matrix& v : values) vars.push_back(tape.variable(v));
    return probe(fn(tape, vars), probe_seed).item();
  };
  Tape tape;
  std::vector<Tensor> vars;
  for (const Matrix& v : inputs) vars.push_back(tape.variable(v));
  tape.backward(probe(fn(tape, vars), probe_seed));

  double worst = 0.0;
  std::vector<Matrix> shifted = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Matrix numeric(inputs[k].rows(), inputs[k].cols());
    for (Index i = 0; i < inputs[k].size(); ++i) {
      const double saved = shifted[k].data()[i];
      shifted[k].data()[i] = saved + eps;
      const double up = evaluate(shifted);
      shifted[k].data()[i] = saved - eps;
      const double down = evaluate(shifted);
      shifted[k].data()[i] = saved;
      numeric.data()[i] = (up - down) / (2 * eps);
    }
    worst = std::max(worst, relative_error(vars[k].grad(), numeric));
  }
  return worst;
}

struct ModelBatch {
  std::vector<TokenizedText> descriptions;
  std::vector<std::string> label_order;
  std::vector<TokenizedText> documents;
  std::vector<std::int32_t> classes;            // multi_class gold
  std::vector<std::vector<double>> label_sets;  // multi_label gold
};

// Random token ids (specials framed) for a model's vocabulary.
inline TokenizedText random_tokens(std::size_t length, int vocab_size, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int32_t> id(4, vocab_size - 1);
  TokenizedText t;
  t.ids.push_back(kClsId);
  for (std::size_t i = 0; i < length; ++i) t.ids.push_back(id(rng));
  t.ids.push_back(kSepId);
  t.spans.assign(t.ids.size(), CharSpan{});
  return t;
}

inline ModelBatch random_batch(const ModelConfig& config, std::size_t docs, std::size_t max_len, std::mt19937_64& rng) {
  ModelBatch b;
  std::uniform_int_distribution<std::size_t> len(3, max_len - 2);
  std::uniform_int_distribution<std::int32_t> cls(0, config.num_labels - 1);
  std::bernoulli_distribution coin(0.4);
  for (int l = 0; l < config.num_labels; ++l) {
    b.descriptions.push_back(random_tokens(len(rng), config.vocab_size, rng));
    b.label_order.push_back("L" + std::to_string(l));
  }
  for (std::size_t d = 0; d < docs; ++d) {
    b.documents.push_back(random_tokens(len(rng), config.vocab_size, rng));
    b.classes.push_back(cls(rng));
    std::vector<double> y(static_cast<std::size_t>(config.num_labels));
    for (double& v : y) v = coin(rng) ? 1.0 : 0.0;
    b.label_sets.push_back(y);
  }
  return b;
}

// Batch loss of the full model on a fresh tape; all parameter groups trainable.
inline Tensor model_loss(Tape& tape, const LameModel& model, const ModelBatch& batch, LossKind loss) {
  const ForwardContext ctx = ForwardContext::all_trainable(tape);
  const Tensor labels =
      build_label_matrix(ctx, batch.descriptions, batch.label_order, model.encoder, model.config()).embeddings;
  std::vector<Prediction> preds;
  std::vector<Tensor> losses;
  for (std::size_t d = 0; d < batch.documents.size(); ++d) {
    Prediction p = forward_document(ctx, model, labels, batch.documents[d]).prediction;
    if (loss == LossKind::cross_entropy) losses.push_back(cross_entropy(p, batch.classes[d]));
    if (loss == LossKind::bce) losses.push_back(binary_cross_entropy(p, batch.label_sets[d]));
    preds.push_back(p);
  }
  if (loss == LossKind::f_measure) return f_measure_loss(preds, batch.label_sets, 1e-8);
  return scale(sum(concat_rows(losses)), 1.0 / static_cast<double>(losses.size()));
}

struct ModelGradientReport {
  double worst = 0.0;
  std::string worst_parameter;
  std::size_t checked = 0;
};

// Per parameter tensor: relative error over `samples` random coordinates.
inline ModelGradientReport model_gradient_error(LameModel& model, const ModelBatch& batch, LossKind loss,
                                                std::size_t samples, std::mt19937_64& rng, double eps = 1e-5) {
  Tape tape;
  tape.backward(model_loss(tape, model, batch, loss));
  ModelGradientReport report;
  for (ParameterRef& ref : model.parameters()) {
    Parameter& p = *ref.param;
    const Matrix* g = tape.find_gradient(p);
    std::uniform_int_distribution<Index> pick(0, p.value.size() - 1);
    const std::size_t n = std::min<std::size_t>(samples, static_cast<std::size_t>(p.value.size()));
    Matrix analytic(1, static_cast<Index>(n)), numeric(1, static_cast<Index>(n));
    for (std::size_t s = 0; s < n; ++s) {
      const Index i = pick(rng);
      analytic(0, static_cast<Index>(s)) = g ? g->data()[i] : 0.0;
      const double saved = p.value.data()[i];
      p.value.data()[i] = saved + eps;
      Tape up;
      const double f_up = model_loss(up, model, batch, loss).item();
      p.value.data()[i] = saved - eps;
      Tape down;
      const double f_down = model_loss(down, model, batch, loss).item();
      p.value.data()[i] = saved;
      numeric(0, static_cast<Index>(s)) = (f_up - f_down) / (2 * eps);
    }
    const double err = relative_error(analytic, numeric);
    report.checked += n;
    if (err > report.worst) {
      report.worst = err;
      report.worst_parameter = p.name;
    }
  }
  return report;
}

}  // namespace lame::testing
