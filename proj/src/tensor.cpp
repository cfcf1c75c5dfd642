#include "lame/tensor.hpp"

#include <cmath>
#include <sstream>

#include "lame/kernels.hpp"

namespace lame {

std::string shape_string(Index rows, Index cols) {
  std::ostringstream out;
  out << '[' << rows << " x " << cols << ']';
  return out.str();
}

Parameter::Parameter(std::string name, Matrix value)
    : name(std::move(name)), value(std::move(value)) {
  zero_grad();
}

// ---- Tensor ----------------------------------------------------------------

Tape& Tensor::tape() const {
  if (tape_ == nullptr) {
    throw ContractError("tensor is not attached to a tape");
  }
  return *tape_;
}

const Matrix& Tensor::value() const { return tape().value(*this); }

Matrix Tensor::grad() const {
  const Matrix& g = tape().grad_of(*this);
  if (g.size() == 0) {
    return Matrix::Zero(rows(), cols());
  }
  return g;
}

bool Tensor::requires_grad() const { return tape().requires_grad(*this); }

std::vector<std::size_t> Tensor::shape() const {
  return {static_cast<std::size_t>(rows()), static_cast<std::size_t>(cols())};
}

double Tensor::item() const {
  const Matrix& v = value();
  if (v.size() != 1) {
    throw DimensionError("item() on non-scalar tensor " + shape_string(v.rows(), v.cols()));
  }
  return v(0, 0);
}

// ---- Tape ------------------------------------------------------------------

Tape::Node& Tape::node(const Tensor& t) {
  if (t.tape_ != this || t.id_ >= nodes_.size()) {
    throw ContractError("tensor belongs to a different tape");
  }
  return nodes_[t.id_];
}

const Tape::Node& Tape::node(const Tensor& t) const {
  if (t.tape_ != this || t.id_ >= nodes_.size()) {
    throw ContractError("tensor belongs to a different tape");
  }
  return nodes_[t.id_];
}

const Matrix& Tape::value(const Tensor& t) const {
  const Node& n = node(t);
  return n.external != nullptr ? *n.external : n.owned;
}

Tensor Tape::push(Node n) {
  const Matrix& v = n.external != nullptr ? *n.external : n.owned;
  if (v.rows() < 1 || v.cols() < 1) {
    throw DimensionError("tensor dimensions must be >= 1, got " + shape_string(v.rows(), v.cols()));
  }
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::constant(Matrix value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

Tensor Tape::variable(Matrix value) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Tensor Tape::parameter(const Parameter& p, bool trainable) {
  if (auto it = bound_.find(&p); it != bound_.end()) {
    return Tensor(this, it->second);
  }
  Node n;
  n.external = &p.value;
  n.requires_grad = trainable;
  Tensor t = push(std::move(n));
  bound_.emplace(&p, t.id());
  return t;
}

Tensor Tape::record(Matrix value, std::initializer_list<Tensor> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Tensor>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Tensor Tape::record(Matrix value, std::span<const Tensor> inputs, BackwardFn backward) {
  Node n;
  n.owned = std::move(value);
  for (const Tensor& in : inputs) {
    if (node(in).requires_grad) {
      n.requires_grad = true;
      break;
    }
  }
  if (n.requires_grad) {
    n.backward = std::move(backward);
  }
  return push(std::move(n));
}

Matrix& Tape::grad_buffer(const Tensor& t) {
  Node& n = node(t);
  if (n.grad.size() == 0) {
    const Matrix& v = n.external != nullptr ? *n.external : n.owned;
    n.grad = Matrix::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

void Tape::backward(const Tensor& loss) {
  Node& root = node(loss);
  const Matrix& lv = root.external != nullptr ? *root.external : root.owned;
  if (lv.size() != 1) {
    throw ContractError("backward() requires a scalar loss, got " + shape_string(lv.rows(), lv.cols()));
  }
  for (Node& n : nodes_) {
    n.grad.resize(0, 0);
  }
  if (!root.requires_grad) {
    return;
  }
  root.grad = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && n.grad.size() != 0) {
      n.backward(*this, n.grad);
    }
  }
}

const Matrix* Tape::find_gradient(const Parameter& p) const {
  auto it = bound_.find(&p);
  if (it == bound_.end()) return nullptr;
  const Node& n = nodes_[it->second];
  return n.grad.size() == 0 ? nullptr : &n.grad;
}

// ---- operations --------------------------------------------------------------

namespace {

void require_same_tape(const Tensor& a, const Tensor& b, const char* op) {
  if (&a.tape() != &b.tape()) {
    throw ContractError(std::string(op) + ": operands live on different tapes");
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require_same_tape(a, b, op);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.rows(), a.cols()) +
                         " vs " + shape_string(b.rows(), b.cols()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree " + shape_string(a.rows(), a.cols()) +
                         " x " + shape_string(b.rows(), b.cols()));
  }
  // Coefficient-based product: each output row depends only on its own input
  // row, so permuting rows permutes results bit for bit. Blocked GEMM rounds
  // differently depending on a row's position within a panel.
  Matrix out = a.value().lazyProduct(b.value());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

Tensor matmul_transposed(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b, "matmul_transposed");
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_transposed: inner dimensions disagree " +
                         shape_string(a.rows(), a.cols()) + " x " +
                         shape_string(b.rows(), b.cols()) + "^T");
  }
  Matrix out = a.value().lazyProduct(b.value().transpose());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value());
    if (t.requires_grad(b)) t.accumulate(b, g.transpose() * a.value());
  });
}

Tensor transpose(const Tensor& x) {
  Matrix out = x.value().transpose();
  return x.tape().record(std::move(out), {x},
                         [x](Tape& t, const Matrix& g) { t.accumulate(x, g.transpose()); });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Matrix out = a.value() + b.value();
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Matrix out = a.value() - b.value();
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Matrix out = a.value().cwiseProduct(b.value());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
    if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "div");
  Matrix out = a.value().cwiseQuotient(b.value());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    const Matrix& bv = b.value();
    if (t.requires_grad(a)) t.accumulate(a, g.cwiseQuotient(bv));
    if (t.requires_grad(b)) {
      t.accumulate(b, (-g.array() * a.value().array() / bv.array().square()).matrix());
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  Matrix out = x.value() * factor;
  return x.tape().record(std::move(out), {x},
                         [x, factor](Tape& t, const Matrix& g) { t.accumulate(x, g * factor); });
}

Tensor add_scalar(const Tensor& x, double offset) {
  Matrix out = x.value().array() + offset;
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Matrix& g) { t.accumulate(x, g); });
}

Tensor add_row(const Tensor& x, const Tensor& row) {
  require_same_tape(x, row, "add_row");
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw DimensionError("add_row: expected a 1 x " + std::to_string(x.cols()) + " row, got " +
                         shape_string(row.rows(), row.cols()));
  }
  Matrix out = x.value().rowwise() + row.value().row(0);
  return x.tape().record(std::move(out), {x, row}, [x, row](Tape& t, const Matrix& g) {
    t.accumulate(x, g);
    if (t.requires_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) {
    throw ContractError("concat_rows: no inputs");
  }
  const Index cols = parts.front().cols();
  Index rows = 0;
  for (const Tensor& p : parts) {
    require_same_tape(parts.front(), p, "concat_rows");
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column mismatch " + shape_string(parts.front().rows(), cols) +
                           " vs " + shape_string(p.rows(), p.cols()));
    }
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Index offset = 0;
  for (const Tensor& p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return parts.front().tape().record(std::move(out), parts, [inputs](Tape& t, const Matrix& g) {
    Index offset = 0;
    for (const Tensor& p : inputs) {
      const Index r = p.rows();
      t.accumulate(p, g.middleRows(offset, r));
      offset += r;
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) {
    throw ContractError("concat_cols: no inputs");
  }
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const Tensor& p : parts) {
    require_same_tape(parts.front(), p, "concat_cols");
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " + shape_string(rows, parts.front().cols()) +
                           " vs " + shape_string(p.rows(), p.cols()));
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Index offset = 0;
  for (const Tensor& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return parts.front().tape().record(std::move(out), parts, [inputs](Tape& t, const Matrix& g) {
    Index offset = 0;
    for (const Tensor& p : inputs) {
      const Index c = p.cols();
      t.accumulate(p, g.middleCols(offset, c));
      offset += c;
    }
  });
}

Tensor slice_rows(const Tensor& x, Index begin, Index count) {
  if (begin < 0 || count < 1 || begin + count > x.rows()) {
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " +
                         shape_string(x.rows(), x.cols()));
  }
  Matrix out = x.value().middleRows(begin, count);
  return x.tape().record(std::move(out), {x}, [x, begin, count](Tape& t, const Matrix& g) {
    t.grad_buffer(x).middleRows(begin, count) += g;
  });
}

Tensor slice_cols(const Tensor& x, Index begin, Index count) {
  if (begin < 0 || count < 1 || begin + count > x.cols()) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " +
                         shape_string(x.rows(), x.cols()));
  }
  Matrix out = x.value().middleCols(begin, count);
  return x.tape().record(std::move(out), {x}, [x, begin, count](Tape& t, const Matrix& g) {
    t.grad_buffer(x).middleCols(begin, count) += g;
  });
}

Tensor relu(const Tensor& x) {
  Matrix out = x.value().cwiseMax(0.0);
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Matrix& g) {
    t.accumulate(x, (x.value().array() > 0.0).select(g, 0.0).matrix());
  });
}

Tensor gelu(const Tensor& x) {
  Matrix out = x.value().unaryExpr([](double v) { return kernels::gelu(v); });
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Matrix& g) {
    t.accumulate(x, g.cwiseProduct(x.value().unaryExpr([](double v) { return kernels::gelu_derivative(v); })));
  });
}

Tensor sigmoid(const Tensor& x) {
  Matrix out = x.value().unaryExpr([](double v) { return kernels::sigmoid(v); });
  Matrix saved = out;
  return x.tape().record(std::move(out), {x}, [x, s = std::move(saved)](Tape& t, const Matrix& g) {
    t.accumulate(x, (g.array() * s.array() * (1.0 - s.array())).matrix());
  });
}

Tensor softplus(const Tensor& x) {
  Matrix out = x.value().unaryExpr([](double v) { return kernels::softplus(v); });
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Matrix& g) {
    t.accumulate(x, g.cwiseProduct(x.value().unaryExpr([](double v) { return kernels::sigmoid(v); })));
  });
}

Tensor log(const Tensor& x) {
  Matrix out = x.value().array().log().matrix();
  return x.tape().record(std::move(out), {x},
                         [x](Tape& t, const Matrix& g) { t.accumulate(x, g.cwiseQuotient(x.value())); });
}

Tensor embedding_lookup(const Tensor& table, std::span<const std::int32_t> ids) {
  if (ids.empty()) {
    throw ContractError("embedding_lookup: empty id sequence");
  }
  const Matrix& tv = table.value();
  Matrix out(static_cast<Index>(ids.size()), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tv.rows()) {
      throw InputError("embedding_lookup: id " + std::to_string(ids[i]) + " outside table of " +
                       std::to_string(tv.rows()) + " rows");
    }
    out.row(static_cast<Index>(i)) = tv.row(ids[i]);
  }
  std::vector<std::int32_t> saved(ids.begin(), ids.end());
  return table.tape().record(std::move(out), {table}, [table, saved](Tape& t, const Matrix& g) {
    Matrix& buf = t.grad_buffer(table);
    for (std::size_t i = 0; i < saved.size(); ++i) {
      buf.row(saved[i]) += g.row(static_cast<Index>(i));
    }
  });
}

Tensor sum(const Tensor& x) {
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Matrix& g) {
    t.accumulate(x, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
  });
}

Tensor mean(const Tensor& x) {
  const double n = static_cast<double>(x.size());
  Matrix out(1, 1);
  out(0, 0) = x.value().sum() / n;
  return x.tape().record(std::move(out), {x}, [x, n](Tape& t, const Matrix& g) {
    t.accumulate(x, Matrix::Constant(x.rows(), x.cols(), g(0, 0) / n));
  });
}

Tensor dropout(const Tensor& x, double p, Mode mode, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw ContractError("dropout: probability must lie in [0, 1), got " + std::to_string(p));
  }
  if (mode == Mode::eval || p == 0.0) {
    return x;
  }
  std::bernoulli_distribution keep(1.0 - p);
  Matrix mask(x.rows(), x.cols());
  for (Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = keep(rng) ? 1.0 / (1.0 - p) : 0.0;
  }
  Matrix out = x.value().cwiseProduct(mask);
  return x.tape().record(std::move(out), {x}, [x, mask = std::move(mask)](Tape& t, const Matrix& g) {
    t.accumulate(x, g.cwiseProduct(mask));
  });
}

Tensor softmax_rows(const Tensor& x) {
  Matrix out = kernels::softmax_rows(x.value());
  Matrix saved = out;
  return x.tape().record(std::move(out), {x}, [x, y = std::move(saved)](Tape& t, const Matrix& g) {
    const Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
    t.accumulate(x, (y.array() * (g.colwise() - dot).array()).matrix());
  });
}

Tensor log_softmax_rows(const Tensor& x) {
  Matrix out = kernels::log_softmax_rows(x.value());
  Matrix probs = out.array().exp().matrix();
  return x.tape().record(std::move(out), {x}, [x, p = std::move(probs)](Tape& t, const Matrix& g) {
    const Eigen::VectorXd total = g.rowwise().sum();
    t.accumulate(x, g - (p.array().colwise() * total.array()).matrix());
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_same_tape(x, gain, "layer_norm");
  require_same_tape(x, bias, "layer_norm");
  const Index n = x.cols();
  if (n < 2) {
    throw DimensionError("layer_norm: need at least 2 columns, got " + shape_string(x.rows(), n));
  }
  if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 || bias.cols() != n) {
    throw DimensionError("layer_norm: gain " + shape_string(gain.rows(), gain.cols()) + " / bias " +
                         shape_string(bias.rows(), bias.cols()) + " do not match width " +
                         std::to_string(n));
  }
  const Matrix& xv = x.value();
  Matrix normalized(xv.rows(), n);
  Eigen::VectorXd inv_std(xv.rows());
  for (Index r = 0; r < xv.rows(); ++r) {
    const double mu = kernels::sequential_sum(xv.row(r)) / static_cast<double>(n);
    const auto centered = (xv.row(r).array() - mu).eval();
    const double var = kernels::sequential_sum(centered.square().matrix()) / static_cast<double>(n);
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    normalized.row(r) = (centered * inv_std(r)).matrix();
  }
  Matrix out = (normalized.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);
  return x.tape().record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, xhat = std::move(normalized), inv_std](Tape& t, const Matrix& g) {
        if (t.requires_grad(gain)) t.accumulate(gain, g.cwiseProduct(xhat).colwise().sum());
        if (t.requires_grad(bias)) t.accumulate(bias, g.colwise().sum());
        if (!t.requires_grad(x)) return;
        const Matrix dxhat = (g.array().rowwise() * gain.value().row(0).array()).matrix();
        const Eigen::VectorXd mean_d = dxhat.rowwise().mean();
        const Eigen::VectorXd mean_dx = dxhat.cwiseProduct(xhat).rowwise().mean();
        Matrix dx = dxhat.colwise() - mean_d;
        dx -= (xhat.array().colwise() * mean_dx.array()).matrix();
        dx.array().colwise() *= inv_std.array();
        t.accumulate(x, dx);
      });
}

}  // namespace lame
