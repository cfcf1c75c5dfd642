#include "lame/model.hpp"

#include <algorithm>

namespace lame {

namespace {

template <typename Ref, typename Model>
std::vector<Ref> collect(Model& m) {
  std::vector<Ref> out;
  auto push = [&](ParamGroup g, auto& p) { out.push_back(Ref{g, &p}); };
  auto attention = [&](ParamGroup g, auto& a) {
    push(g, a.query);
    push(g, a.key);
    push(g, a.value);
    push(g, a.output);
  };
  auto norm = [&](ParamGroup g, auto& n) {
    push(g, n.gain);
    push(g, n.bias);
  };
  auto ffn = [&](ParamGroup g, auto& f) {
    push(g, f.w1);
    push(g, f.b1);
    push(g, f.w2);
    push(g, f.b2);
  };
  const auto enc = ParamGroup::encoder;
  push(enc, m.encoder.token_embedding);
  push(enc, m.encoder.position_embedding);
  for (auto& layer : m.encoder.layers) {
    attention(enc, layer.attention);
    norm(enc, layer.attention_norm);
    ffn(enc, layer.ffn);
    norm(enc, layer.ffn_norm);
  }
  const auto la = ParamGroup::label_attention;
  for (auto& block : m.blocks) {
    attention(la, block.attention);
    norm(la, block.attention_norm);
    ffn(la, block.ffn);
    norm(la, block.ffn_norm);
  }
  const auto head = ParamGroup::head;
  push(head, m.head.w1);
  push(head, m.head.b1);
  push(head, m.head.w2);
  push(head, m.head.b2);
  return out;
}

}  // namespace

LameModel::LameModel(const ModelConfig& config, std::uint64_t seed, double init_std) : config_(config) {
  config_.validate();
  ParamInit init(seed, init_std);
  encoder = EncoderParams::create(config_, init);
  blocks.reserve(static_cast<std::size_t>(config_.label_attention_blocks));
  for (int b = 0; b < config_.label_attention_blocks; ++b) {
    blocks.push_back(LabelAttentionBlockParams::create("label_attention.blocks." + std::to_string(b), config_, init));
  }
  head = HeadParams::create(config_, init);
}

std::vector<ParameterRef> LameModel::parameters() { return collect<ParameterRef>(*this); }

std::vector<ConstParameterRef> LameModel::parameters() const { return collect<ConstParameterRef>(*this); }

std::size_t LameModel::parameter_count() const {
  std::size_t n = 0;
  for (const ConstParameterRef& r : parameters()) n += static_cast<std::size_t>(r.param->value.size());
  return n;
}

void LameModel::zero_grad() {
  for (ParameterRef& r : parameters()) r.param->zero_grad();
}

DocumentForward forward_document(const ForwardContext& ctx, const LameModel& model, const Tensor& label_matrix,
                                 const TokenizedText& document) {
  const ModelConfig& config = model.config();
  if (label_matrix.rows() != config.num_labels) {
    throw ContractError("forward_document: label matrix has " + std::to_string(label_matrix.rows()) +
                        " rows for a model with " + std::to_string(config.num_labels) + " labels");
  }
  EncodedDocument encoded = encode(ctx, document, model.encoder, config);
  LabelAttentionResult attended = run_label_attention(ctx, label_matrix, encoded.hidden, model.blocks, config);
  Prediction prediction = classify(ctx, attended.output, model.head, config.mode);
  return {std::move(encoded), attended.output, prediction, std::move(attended.records)};
}

std::vector<std::size_t> decide_labels(const RowVector& probabilities, TaskMode mode, double threshold) {
  std::vector<std::size_t> out;
  if (probabilities.size() == 0) return out;
  if (mode == TaskMode::multi_class) {
    Index best = 0;
    probabilities.maxCoeff(&best);
    out.push_back(static_cast<std::size_t>(best));
    return out;
  }
  for (Index i = 0; i < probabilities.size(); ++i) {
    if (probabilities(i) >= threshold) out.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

Predictor::Predictor(const LameModel& model, const std::vector<TokenizedText>& descriptions) : model_(&model) {
  Tape tape;
  const ForwardContext ctx = ForwardContext::inference(tape);
  std::vector<std::string> order(descriptions.size());
  labels_ = build_label_matrix(ctx, descriptions, order, model.encoder, model.config()).embeddings.value();
}

DocumentPrediction Predictor::predict(const TokenizedText& document) const {
  Tape tape;
  const ForwardContext ctx = ForwardContext::inference(tape);
  const Tensor labels = tape.constant(labels_);
  DocumentForward fwd = forward_document(ctx, *model_, labels, document);
  DocumentPrediction out;
  out.logits = fwd.prediction.logits.value().row(0);
  out.probabilities = fwd.prediction.probabilities.value().row(0);
  out.predicted = decide_labels(out.probabilities, model_->config().mode, model_->config().decision_threshold);
  out.records = std::move(fwd.records);
  return out;
}

}  // namespace lame
