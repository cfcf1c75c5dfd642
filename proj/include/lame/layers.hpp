#pragma once

// Building blocks shared by the encoder and the label attention stack.

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lame/tensor.hpp"

namespace lame {

// Optimizer groups. Every trainable parameter belongs to exactly one.
enum class ParamGroup { encoder = 0, label_attention = 1, head = 2 };

inline constexpr std::array<ParamGroup, 3> kParamGroups = {ParamGroup::encoder, ParamGroup::label_attention,
                                                           ParamGroup::head};

std::string_view to_string(ParamGroup group);

// Everything a forward pass needs besides parameters: the tape it records on,
// train/eval mode, and which groups should receive gradients.
struct ForwardContext {
  Tape& tape;
  Mode mode = Mode::eval;
  std::mt19937_64* rng = nullptr;
  std::array<bool, 3> trainable = {false, false, false};
  double dropout_p = 0.0;

  Tensor bind(const Parameter& p, ParamGroup group) const {
    return tape.parameter(p, trainable[static_cast<std::size_t>(group)]);
  }
  Tensor dropout(const Tensor& x) const;

  static ForwardContext inference(Tape& tape) { return ForwardContext{tape}; }
  static ForwardContext all_trainable(Tape& tape, Mode mode = Mode::eval) {
    return ForwardContext{tape, mode, nullptr, {true, true, true}};
  }
};

// Truncated normal (|x| <= 2 std) weights, deterministic per seed.
class ParamInit {
 public:
  ParamInit(std::uint64_t seed, double std) : rng_(seed), std_(std) {}

  Matrix normal(Index rows, Index cols);
  static Matrix zeros(Index rows, Index cols) { return Matrix::Zero(rows, cols); }
  static Matrix ones(Index rows, Index cols) { return Matrix::Ones(rows, cols); }

 private:
  std::mt19937_64 rng_;
  double std_;
};

struct LayerNormParams {
  Parameter gain;
  Parameter bias;

  static LayerNormParams create(const std::string& prefix, Index width);
};

struct FeedForwardParams {
  Parameter w1;
  Parameter b1;
  Parameter w2;
  Parameter b2;

  static FeedForwardParams create(const std::string& prefix, Index width, Index inner, ParamInit& init);
};

// Combined d x d projections; head i uses columns [i * d_k, (i + 1) * d_k).
struct AttentionParams {
  Parameter query;
  Parameter key;
  Parameter value;
  Parameter output;

  static AttentionParams create(const std::string& prefix, Index width, ParamInit& init);
};

struct AttentionResult {
  // Concat(head_i) W^O, one row per query.
  Tensor output;
  // Per head: queries x keys row-stochastic weights. Empty unless requested.
  std::vector<Matrix> weights;
};

// Multi-head scaled dot-product attention:
//   head_i = softmax((Q W^Q_i)(K W^K_i)^T / divisor) (K W^V_i)
AttentionResult multi_head_attention(const ForwardContext& ctx, const Tensor& queries, const Tensor& keys,
                                     const AttentionParams& params, ParamGroup group, int heads, double divisor,
                                     bool keep_weights);

// W2 gelu(x W1 + b1) + b2, row-wise.
Tensor feed_forward(const ForwardContext& ctx, const Tensor& x, const FeedForwardParams& params, ParamGroup group);

Tensor normalize(const ForwardContext& ctx, const Tensor& x, const LayerNormParams& params, ParamGroup group,
                 double eps);

}  // namespace lame
