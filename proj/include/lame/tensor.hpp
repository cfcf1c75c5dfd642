#pragma once

// Dense double-precision tensors with reverse-mode automatic differentiation.
//
// Every value lives on a Tape as a row-major matrix. Vectors are 1 x n rows and
// scalars are 1 x 1. Operations are free functions that record their output
// together with a backward rule; Tape::backward replays those rules in reverse
// recording order.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "lame/errors.hpp"

namespace lame {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Index = Eigen::Index;

enum class Mode { train, eval };

// "[rows x cols]" for error messages.
std::string shape_string(Index rows, Index cols);

// A named trainable matrix owned by a model. Tapes bind it as a read-only leaf;
// the optimizer loop copies tape gradients into `grad` and zeroes it between steps.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string name, Matrix value);

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

// Lightweight handle to a node on a Tape. Valid as long as the tape lives.
class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  // Gradient accumulated by the last backward pass; zeros if none reached it.
  Matrix grad() const;
  bool requires_grad() const;

  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Index size() const { return value().size(); }
  std::vector<std::size_t> shape() const;
  // Value of a 1 x 1 tensor.
  double item() const;

  Tape& tape() const;
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Ordered record of executed operations. Confined to one thread.
class Tape {
 public:
  // Receives the gradient of the node's output; pushes into inputs via accumulate().
  using BackwardFn = std::function<void(Tape&, const Matrix&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor constant(Matrix value);
  Tensor variable(Matrix value);
  // Binds an external parameter without copying it. Repeated binds of the same
  // parameter return the same node, so gradients from all uses add up.
  // The parameter must outlive the tape.
  Tensor parameter(const Parameter& p, bool trainable = true);

  // Gradient reaching a bound parameter in the last backward pass, or nullptr.
  const Matrix* find_gradient(const Parameter& p) const;

  // Records an op output. The backward rule is kept only when some input
  // requires a gradient.
  Tensor record(Matrix value, std::initializer_list<Tensor> inputs, BackwardFn backward);
  Tensor record(Matrix value, std::span<const Tensor> inputs, BackwardFn backward);

  // Seeds d loss / d loss = 1 and replays backward rules in reverse order.
  // Clears gradients left by a previous call first.
  void backward(const Tensor& loss);

  bool requires_grad(const Tensor& t) const { return node(t).requires_grad; }
  const Matrix& value(const Tensor& t) const;
  const Matrix& grad_of(const Tensor& t) const { return node(t).grad; }

  // Zero-initialized gradient buffer for t, for sparse accumulation.
  Matrix& grad_buffer(const Tensor& t);

  template <typename Derived>
  void accumulate(const Tensor& t, const Eigen::MatrixBase<Derived>& g) {
    Node& n = node(t);
    if (!n.requires_grad) {
      return;
    }
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix owned;
    const Matrix* external = nullptr;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Node& node(const Tensor& t);
  const Node& node(const Tensor& t) const;
  Tensor push(Node n);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> bound_;
};

// ---- differentiable operations --------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
// a * b^T without materializing the transpose.
Tensor matmul_transposed(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double offset);
// Adds a 1 x n row to every row of an m x n matrix.
Tensor add_row(const Tensor& x, const Tensor& row);

Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& x, Index begin, Index count);
Tensor slice_cols(const Tensor& x, Index begin, Index count);

Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor log(const Tensor& x);

// Row i of the result is table row ids[i].
Tensor embedding_lookup(const Tensor& table, std::span<const std::int32_t> ids);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Inverted dropout; identity in eval mode or when p == 0.
Tensor dropout(const Tensor& x, double p, Mode mode, std::mt19937_64& rng);

Tensor softmax_rows(const Tensor& x);
Tensor log_softmax_rows(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);

}  // namespace lame
