#include <doctest.h>

#include <random>

#include "lame/errors.hpp"
#include "lame/kernels.hpp"
#include "lame/tensor.hpp"
#include "support.hpp"

using namespace lame;
using lame::testing::op_gradient_error;
using lame::testing::random_matrix;

namespace {

constexpr double kTol = 1e-6;

std::mt19937_64& rng() {
  static std::mt19937_64 r(1234);
  return r;
}

Matrix rand(Index r, Index c, double lo = -1, double hi = 1) { return random_matrix(r, c, rng(), lo, hi); }

}  // namespace

TEST_CASE("matmul matches hand computation and its gradient") {
  Tape tape;
  Matrix a(2, 2), b(2, 1);
  a << 1, 2, 3, 4;
  b << 5, 6;
  const Tensor c = matmul(tape.variable(a), tape.variable(b));
  CHECK(c.value()(0, 0) == 17);
  CHECK(c.value()(1, 0) == 39);
  CHECK(op_gradient_error([](Tape&, const auto& v) { return matmul(v[0], v[1]); }, {rand(3, 4), rand(4, 2)}) < kTol);
  CHECK(op_gradient_error([](Tape&, const auto& v) { return matmul_transposed(v[0], v[1]); },
                          {rand(3, 4), rand(5, 4)}) < kTol);
  CHECK(op_gradient_error([](Tape&, const auto& v) { return transpose(v[0]); }, {rand(3, 4)}) < kTol);
}

TEST_CASE("matmul rejects mismatched shapes with both shapes in the message") {
  Tape tape;
  const Tensor a = tape.constant(Matrix::Zero(2, 3));
  const Tensor b = tape.constant(Matrix::Zero(2, 3));
  CHECK_THROWS_AS(matmul(a, b), DimensionError);
  try {
    matmul(a, b);
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2 x 3]") != std::string::npos);
  }
}

TEST_CASE("elementwise ops have correct gradients") {
  CHECK(op_gradient_error([](Tape&, const auto& v) { return add(v[0], v[1]); }, {rand(2, 3), rand(2, 3)}) < kTol);
  CHECK(op_gradient_error([](Tape&, const auto& v) { return sub(v[0], v[1]); }, {rand(2, 3), rand(2, 3)}) < kTol);
  CHECK(op_gradient_error([](Tape&, const auto& v) { return mul(v[0], v[1]); }, {rand(2, 3), rand(2, 3)}) < kTol);
  CHECK(op_gradient_error([](Tape&, const auto& v) { return div(v[0], v[1]); }, {rand(2, 3), rand(2, 3, 0.5, 2)}) <
        kTol);
  CHECK(op_gradient_error([](Tape&, const auto& v) { return scale(v[0], -2.5); }, {rand(2, 3)}) < kTol);
  CHECK(op_gradient_error([](Tape&, const auto& v) { return add_scalar(v[0], 0.3); }, {rand(2, 3)}) < kTol);
  CHECK(op_gradient_error([](Tape&, const auto& v) { return add_row(v[0], v[1]); }, {rand(4, 3), rand(1, 3)}) < kTol);
  CHECK(op_gradient_error([](Tape&, const auto& v) { return gelu(v[0]); }, {rand(3, 3, -3, 3)}) < kTol);
  CHECK(op_gradient_error([](Tape&, const auto& v) { return sigmoid(v[0]); }, {rand(3, 3, -5, 5)}) < kTol);
  CHECK(op_gradient_error([](Tape&, const auto& v) { return softplus(v[0]); }, {rand(3, 3, -5, 5)}) < kTol);
  CHECK(op_gradient_error([](Tape&, const auto& v) { return log(v[0]); }, {rand(3, 3, 0.2, 3)}) < kTol);
  // Keep inputs away from the kink.
  Matrix x = rand(3, 3);
  x = x.unaryExpr([](double v) { return v + (v >= 0 ? 0.1 : -0.1); });
  CHECK(op_gradient_error([](Tape&, const auto& v) { return relu(v[0]); }, {x}) < kTol);
}

TEST_CASE("reductions, slicing and concatenation") {
  CHECK(op_gradient_error([](Tape&, const auto& v) { return sum(v[0]); }, {rand(3, 4)}) < kTol);
  CHECK(op_gradient_error([](Tape&, const auto& v) { return mean(v[0]); }, {rand(3, 4)}) < kTol);
  CHECK(op_gradient_error([](Tape&, const auto& v) { return slice_rows(v[0], 1, 2); }, {rand(4, 3)}) < kTol);
  CHECK(op_gradient_error([](Tape&, const auto& v) { return slice_cols(v[0], 1, 2); }, {rand(4, 3)}) < kTol);
  CHECK(op_gradient_error(
            [](Tape&, const auto& v) {
              return concat_rows(std::vector<Tensor>{v[0], v[1]});
            },
            {rand(2, 3), rand(1, 3)}) < kTol);
  CHECK(op_gradient_error(
            [](Tape&, const auto& v) {
              return concat_cols(std::vector<Tensor>{v[0], v[1]});
            },
            {rand(2, 3), rand(2, 1)}) < kTol);
  Tape tape;
  CHECK(sum(tape.constant(Matrix::Ones(3, 4))).item() == 12);
  CHECK(mean(tape.constant(Matrix::Ones(3, 4))).item() == 1);
}

TEST_CASE("softmax rows sum to one and gradients match") {
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    const Matrix x = rand(4, 7, -20, 20);
    const Matrix s = softmax_rows(tape.constant(x)).value();
    for (Index r = 0; r < s.rows(); ++r) CHECK(std::abs(s.row(r).sum() - 1.0) < 1e-12);
    CHECK((s.array() >= 0).all());
  }
  CHECK(op_gradient_error([](Tape&, const auto& v) { return softmax_rows(v[0]); }, {rand(3, 5, -3, 3)}) < kTol);
  CHECK(op_gradient_error([](Tape&, const auto& v) { return log_softmax_rows(v[0]); }, {rand(3, 5, -3, 3)}) < kTol);
}

TEST_CASE("softmax is stable for large logits") {
  Tape tape;
  Matrix x(1, 3);
  x << 1000, 1000, -1000;
  const Matrix s = softmax_rows(tape.constant(x)).value();
  CHECK(s(0, 0) == doctest::Approx(0.5));
  CHECK(s(0, 2) == 0.0);
  const Matrix ls = log_softmax_rows(tape.constant(x)).value();
  CHECK(std::isfinite(ls(0, 2)));
}

TEST_CASE("layer norm normalizes rows and has correct gradients") {
  Tape tape;
  const Matrix x = rand(3, 8, -4, 4);
  const Tensor y = layer_norm(tape.constant(x), tape.constant(Matrix::Ones(1, 8)), tape.constant(Matrix::Zero(1, 8)),
                              1e-12);
  for (Index r = 0; r < 3; ++r) {
    CHECK(std::abs(y.value().row(r).mean()) < 1e-12);
    const double var = (y.value().row(r).array() - y.value().row(r).mean()).square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(op_gradient_error([](Tape&, const auto& v) { return layer_norm(v[0], v[1], v[2], 1e-5); },
                          {rand(3, 6, -2, 2), rand(1, 6, 0.5, 1.5), rand(1, 6)}) < kTol);
  CHECK_THROWS_AS(layer_norm(tape.constant(Matrix::Ones(2, 1)), tape.constant(Matrix::Ones(1, 1)),
                             tape.constant(Matrix::Zero(1, 1)), 1e-12),
                  DimensionError);
}

TEST_CASE("embedding lookup gathers rows and scatters gradients") {
  const std::vector<std::int32_t> ids = {2, 0, 2, 3};
  CHECK(op_gradient_error([&](Tape&, const auto& v) { return embedding_lookup(v[0], ids); }, {rand(5, 3)}) < kTol);
  Tape tape;
  const Matrix table = rand(5, 3);
  const Tensor e = embedding_lookup(tape.constant(table), ids);
  CHECK(e.value().row(1) == table.row(0));
  const std::vector<std::int32_t> bad = {5};
  CHECK_THROWS_AS(embedding_lookup(tape.constant(table), bad), InputError);
}

TEST_CASE("dropout is identity in eval mode and unbiased in train mode") {
  std::mt19937_64 r(5);
  Tape tape;
  const Tensor x = tape.constant(Matrix::Ones(200, 50));
  CHECK(dropout(x, 0.5, Mode::eval, r).value() == x.value());
  const Matrix y = dropout(x, 0.5, Mode::train, r).value();
  CHECK(y.mean() == doctest::Approx(1.0).epsilon(0.05));
  CHECK(((y.array() == 0) || (y.array() == 2)).all());
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  const Tensor x = tape.variable(Matrix::Ones(2, 2));
  CHECK_THROWS_AS(tape.backward(x), ContractError);
}

TEST_CASE("parameters accumulate gradients over repeated use") {
  Parameter p{"w", Matrix::Constant(1, 1, 3.0)};
  Tape tape;
  const Tensor a = tape.parameter(p);
  const Tensor b = tape.parameter(p);
  tape.backward(mul(a, b));
  const Matrix* g = tape.find_gradient(p);
  REQUIRE(g != nullptr);
  CHECK((*g)(0, 0) == doctest::Approx(6.0));
  Parameter frozen{"f", Matrix::Constant(1, 1, 3.0)};
  Tape t2;
  t2.backward(mul(t2.parameter(frozen, false), t2.variable(Matrix::Ones(1, 1))));
  CHECK(t2.find_gradient(frozen) == nullptr);
}

TEST_CASE("scalar kernels match closed forms") {
  CHECK(kernels::sigmoid(0.0) == 0.5);
  CHECK(kernels::sigmoid(-800.0) >= 0.0);
  CHECK(kernels::softplus(800.0) == doctest::Approx(800.0));
  CHECK(kernels::softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(kernels::gelu(0.0) == 0.0);
  CHECK(kernels::gelu(1.0) == doctest::Approx(0.8413447460685429));
  for (double x : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
    const double h = 1e-6;
    const double fd = (kernels::gelu(x + h) - kernels::gelu(x - h)) / (2 * h);
    CHECK(kernels::gelu_derivative(x) == doctest::Approx(fd).epsilon(1e-7));
  }
}
