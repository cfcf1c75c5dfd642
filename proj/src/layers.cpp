#include "lame/layers.hpp"

namespace lame {

std::string_view to_string(ParamGroup group) {
  switch (group) {
    case ParamGroup::encoder: return "encoder";
    case ParamGroup::label_attention: return "label_attention";
    case ParamGroup::head: return "head";
  }
  return "?";
}

Tensor ForwardContext::dropout(const Tensor& x) const {
  if (mode == Mode::eval || dropout_p == 0.0) {
    return x;
  }
  if (rng == nullptr) {
    throw ContractError("training-mode dropout needs a random generator");
  }
  return lame::dropout(x, dropout_p, mode, *rng);
}

Matrix ParamInit::normal(Index rows, Index cols) {
  std::normal_distribution<double> dist(0.0, std_);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) {
    double v = dist(rng_);
    while (std::abs(v) > 2.0 * std_) v = dist(rng_);
    m.data()[i] = v;
  }
  return m;
}

LayerNormParams LayerNormParams::create(const std::string& prefix, Index width) {
  return {Parameter(prefix + ".gain", ParamInit::ones(1, width)),
          Parameter(prefix + ".bias", ParamInit::zeros(1, width))};
}

FeedForwardParams FeedForwardParams::create(const std::string& prefix, Index width, Index inner,
                                            ParamInit& init) {
  return {Parameter(prefix + ".w1", init.normal(width, inner)), Parameter(prefix + ".b1", ParamInit::zeros(1, inner)),
          Parameter(prefix + ".w2", init.normal(inner, width)), Parameter(prefix + ".b2", ParamInit::zeros(1, width))};
}

AttentionParams AttentionParams::create(const std::string& prefix, Index width, ParamInit& init) {
  return {Parameter(prefix + ".query", init.normal(width, width)),
          Parameter(prefix + ".key", init.normal(width, width)),
          Parameter(prefix + ".value", init.normal(width, width)),
          Parameter(prefix + ".output", init.normal(width, width))};
}

AttentionResult multi_head_attention(const ForwardContext& ctx, const Tensor& queries, const Tensor& keys,
                                     const AttentionParams& params, ParamGroup group, int heads, double divisor,
                                     bool keep_weights) {
  const Index width = params.query.value.rows();
  if (queries.cols() != width || keys.cols() != width) {
    throw DimensionError("attention: inputs " + shape_string(queries.rows(), queries.cols()) + " and " +
                         shape_string(keys.rows(), keys.cols()) + " do not match width " + std::to_string(width));
  }
  if (heads < 1 || width % heads != 0) {
    throw ContractError("attention: width " + std::to_string(width) + " not divisible into " +
                        std::to_string(heads) + " heads");
  }
  const Index head_width = width / heads;
  const Tensor q = matmul(queries, ctx.bind(params.query, group));
  const Tensor k = matmul(keys, ctx.bind(params.key, group));
  const Tensor v = matmul(keys, ctx.bind(params.value, group));

  AttentionResult result;
  std::vector<Tensor> outputs;
  outputs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const Index begin = h * head_width;
    const Tensor qh = heads == 1 ? q : slice_cols(q, begin, head_width);
    const Tensor kh = heads == 1 ? k : slice_cols(k, begin, head_width);
    const Tensor vh = heads == 1 ? v : slice_cols(v, begin, head_width);
    const Tensor weights = softmax_rows(scale(matmul_transposed(qh, kh), 1.0 / divisor));
    if (keep_weights) result.weights.push_back(weights.value());
    outputs.push_back(matmul(ctx.dropout(weights), vh));
  }
  const Tensor concatenated = heads == 1 ? outputs.front() : concat_cols(outputs);
  result.output = matmul(concatenated, ctx.bind(params.output, group));
  return result;
}

Tensor feed_forward(const ForwardContext& ctx, const Tensor& x, const FeedForwardParams& params, ParamGroup group) {
  const Tensor inner = gelu(add_row(matmul(x, ctx.bind(params.w1, group)), ctx.bind(params.b1, group)));
  return add_row(matmul(inner, ctx.bind(params.w2, group)), ctx.bind(params.b2, group));
}

Tensor normalize(const ForwardContext& ctx, const Tensor& x, const LayerNormParams& params, ParamGroup group,
                 double eps) {
  return layer_norm(x, ctx.bind(params.gain, group), ctx.bind(params.bias, group), eps);
}

}  // namespace lame
