#include <doctest.h>

#include <random>

#include "actdst/autodiff.h"
#include "actdst/training.h"
#include "oracles.h"

using namespace actdst;

namespace {

Parameter random_param(const std::string& name, long r, long c,
                       std::mt19937_64& rng) {
  return Parameter(name, oracle::random_matrix(rng, r, c));
}

void expect_gradients(const std::function<Var(Tape&)>& fn,
                      std::vector<Parameter*> params) {
  const GradCheckReport rep = gradient_check(fn, params, 1e-5);
  for (const auto& e : rep.entries) {
    INFO(e.name);
    CHECK(e.rel_error < 1e-6);
  }
}

}  // namespace

TEST_CASE("parameter init is seeded per name") {
  const Parameter a = uniform_parameter("x", 3, 4, 0.5, 9);
  const Parameter b = uniform_parameter("x", 3, 4, 0.5, 9);
  const Parameter c = uniform_parameter("y", 3, 4, 0.5, 9);
  CHECK(a.value == b.value);
  CHECK(a.value != c.value);
  CHECK(a.value.cwiseAbs().maxCoeff() <= 0.5);
  CHECK(zero_parameter("z", 2, 2).value.isZero());
  CHECK(fan_in_parameter("f", 4, 4, 16, 1).value.cwiseAbs().maxCoeff() <= 0.25);
}

TEST_CASE("elementwise and matrix op gradients") {
  std::mt19937_64 rng(3);
  Parameter A = random_param("A", 3, 4, rng);
  Parameter B = random_param("B", 4, 2, rng);
  Parameter C = random_param("C", 3, 2, rng);
  Parameter r = random_param("r", 1, 2, rng);
  expect_gradients(
      [&](Tape& t) {
        Var ab = matmul(t.param(A), t.param(B));
        Var x = hadamard(sigmoid(ab), tanh(t.param(C)));
        Var y = broadcast_add(sub(x, scale(one_minus(ab), 0.3)), t.param(r));
        return sum(hadamard(y, add(y, t.param(C))));
      },
      {&A, &B, &C, &r});
}

TEST_CASE("shape op gradients") {
  std::mt19937_64 rng(4);
  Parameter A = random_param("A", 5, 3, rng);
  Parameter B = random_param("B", 2, 3, rng);
  expect_gradients(
      [&](Tape& t) {
        Var a = t.param(A);
        Var b = t.param(B);
        std::vector<Var> rows = {a, b};
        Var stacked = vconcat(rows, 3);
        std::vector<Var> cols = {stacked, transpose(transpose(stacked))};
        Var wide = hconcat(cols);
        const std::vector<int> ids = {6, 0, 0, 3};
        Var g = gather_rows(wide, ids);
        Var u = unfold_rows(pad_rows(a, 7), 3);
        Var m = mean_rows(slice_cols(g, 1, 4));
        return add(add(sum(hadamard(m, m)), sum(hadamard(u, u))),
                   add(pick(row(wide, 2), 0, 5), sum(max_rows(tanh(u)))));
      },
      {&A, &B});
}

TEST_CASE("lookup scatters into the table gradient") {
  Parameter table("T", Matrix::Random(4, 3));
  Tape t;
  const std::vector<int> ids = {1, 1, 3};
  t.backward(sum(t.lookup(table, ids)));
  CHECK(table.grad.row(0).isZero());
  CHECK(table.grad.row(1).isApprox(Matrix::Constant(1, 3, 2.0)));
  CHECK(table.grad.row(3).isApprox(Matrix::Constant(1, 3, 1.0)));
}

TEST_CASE("frozen parameters receive no gradient") {
  Parameter p("p", Matrix::Ones(2, 2), false);
  Tape t;
  t.backward(sum(hadamard(t.param(p), t.param(p))));
  CHECK(p.grad.isZero());
}

TEST_CASE("masked softmax normalizes over valid rows only") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const long n = 1 + trial % 7;
    const Matrix logits = oracle::random_matrix(rng, n, 1, 5.0);
    const Mask mask = oracle::random_mask(rng, n);
    Tape t;
    const Matrix p = masked_softmax(t.constant(logits), mask).value();
    const Matrix lp = masked_log_softmax(t.constant(logits), mask).value();
    const oracle::Vec want = oracle::softmax(oracle::to_vec(logits), mask);
    for (long i = 0; i < n; ++i) {
      CHECK(p(i, 0) == doctest::Approx(want[i]).epsilon(1e-12));
      if (mask[i])
        CHECK(lp(i, 0) == doctest::Approx(std::log(want[i])));
      else
        CHECK(p(i, 0) == 0.0);
    }
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("masked softmax gradients") {
  std::mt19937_64 rng(9);
  Parameter z = random_param("z", 6, 1, rng);
  const Mask mask = {1, 0, 1, 1, 0, 1};
  expect_gradients(
      [&](Tape& t) {
        Var p = masked_softmax(t.param(z), mask);
        return add(pick(p, 2, 0), scale(pick(masked_log_softmax(t.param(z), mask), 5, 0), -1.0));
      },
      {&z});
}

TEST_CASE("relu and max_rows record branch signatures") {
  Tape a, b, c;
  relu(a.constant(Matrix::Constant(2, 2, 1.0)));
  relu(b.constant(Matrix::Constant(2, 2, 1.0)));
  relu(c.constant(Matrix::Constant(2, 2, -1.0)));
  CHECK(a.branch_signature() == b.branch_signature());
  CHECK(a.branch_signature() != c.branch_signature());
  Tape d;
  Matrix m(2, 1);
  m << 0.1, 0.3;
  max_rows(d.constant(m));
  CHECK(d.kink_margin() == doctest::Approx(0.2));
}

TEST_CASE("backward requires a scalar root") {
  Tape t;
  CHECK_THROWS(t.backward(t.zeros(2, 1)));
}
