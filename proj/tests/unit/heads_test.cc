#include <doctest.h>

#include <random>

#include "actdst/heads.h"
#include "oracles.h"

using namespace actdst;

TEST_CASE("value probabilities and loss match the oracle") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const long n = 3 + trial % 4;
    const long w = 1 + trial % 6;
    const Matrix P = oracle::random_matrix(rng, n, w);
    const Matrix theta = oracle::random_matrix(rng, w, w);
    const Matrix q = oracle::random_matrix(rng, 1, w);
    const int gold = static_cast<int>(trial % n);
    Tape t;
    Var logits = value_logits(t.constant(P), t.constant(q), t.constant(theta));
    const Matrix p =
        classify_value(t.constant(P), t.constant(q), t.constant(theta)).value();
    const oracle::Vec want = oracle::value_probs(P, theta, q);
    for (long i = 0; i < n; ++i)
      CHECK(p(i, 0) == doctest::Approx(want[i]).epsilon(1e-9));
    CHECK(value_loss(logits, gold).scalar() ==
          doctest::Approx(oracle::nll(want, gold)).epsilon(1e-9));
    CHECK(value_loss(Eigen::VectorXd(p), gold) ==
          doctest::Approx(oracle::nll(want, gold)).epsilon(1e-9));
  }
}

TEST_CASE("value loss rejects out-of-range gold") {
  Tape t;
  Var logits = t.constant(Matrix::Zero(3, 1));
  CHECK_THROWS_AS(value_loss(logits, 3), std::out_of_range);
  CHECK_THROWS_AS(value_loss(Eigen::VectorXd::Constant(3, 1.0 / 3), -1),
                  std::out_of_range);
}

TEST_CASE("span type head and loss match the oracle") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    const long w = 1 + trial % 6;
    const Matrix q = oracle::random_matrix(rng, 1, w);
    const Matrix W1 = oracle::random_matrix(rng, w, w);
    const Matrix b1 = oracle::random_matrix(rng, 1, w);
    const Matrix W2 = oracle::random_matrix(rng, w, 3);
    const Matrix b2 = oracle::random_matrix(rng, 1, 3);
    Tape t;
    Var logits = span_type_logits(t.constant(q), t.constant(W1), t.constant(b1),
                                  t.constant(W2), t.constant(b2));
    const oracle::Vec want = oracle::type_probs(q, W1, b1, W2, b2);
    const auto gold = static_cast<SpanType>(trial % 3);
    CHECK(type_loss(logits, gold).scalar() ==
          doctest::Approx(oracle::nll(want, trial % 3)).epsilon(1e-9));
  }
}

TEST_CASE("span distributions and loss match the oracle") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 300; ++trial) {
    const long n = 1 + trial % 8;
    const long w = 1 + trial % 5;
    const Matrix X = oracle::random_matrix(rng, n, w);
    const Matrix q = oracle::random_matrix(rng, 1, w);
    const Matrix ts = oracle::random_matrix(rng, w, w);
    const Matrix te = oracle::random_matrix(rng, w, w);
    const Matrix c1W = oracle::random_matrix(rng, w, w);
    const Matrix c1b = oracle::random_matrix(rng, 1, w);
    const Matrix c2W = oracle::random_matrix(rng, w, w);
    const Matrix c2b = oracle::random_matrix(rng, 1, w);
    const Mask mask = oracle::random_mask(rng, n);
    Tape t;
    const SpanLogits sl = span_logits(t.constant(X), t.constant(q), t.constant(ts),
                                      t.constant(te), t.constant(c1W),
                                      t.constant(c1b), t.constant(c2W),
                                      t.constant(c2b));
    const Matrix p_st = masked_softmax(sl.start, mask).value();
    const Matrix p_end = masked_softmax(sl.end, mask).value();
    const oracle::Vec ws = oracle::span_probs(X, c1W, c1b, ts, q, mask);
    const oracle::Vec we = oracle::span_probs(X, c2W, c2b, te, q, mask);
    for (long i = 0; i < n; ++i) {
      CHECK(p_st(i, 0) == doctest::Approx(ws[i]).epsilon(1e-9));
      CHECK(p_end(i, 0) == doctest::Approx(we[i]).epsilon(1e-9));
    }
    std::vector<int> valid;
    for (long i = 0; i < n; ++i)
      if (mask[i]) valid.push_back(static_cast<int>(i));
    const int s = valid.front();
    const int e = valid.back();
    CHECK(span_loss(sl, mask, s, e).scalar() ==
          doctest::Approx(oracle::nll(ws, s) + oracle::nll(we, e)).epsilon(1e-9));
  }
}

TEST_CASE("span loss rejects invalid spans") {
  Tape t;
  SpanLogits sl{t.constant(Matrix::Zero(4, 1)), t.constant(Matrix::Zero(4, 1))};
  CHECK_THROWS(span_loss(sl, {1, 1, 1, 1}, 2, 1));
  CHECK_THROWS(span_loss(sl, {1, 1, 1, 1}, 0, 4));
  CHECK_THROWS(span_loss(sl, {1, 0, 1, 1}, 1, 2));
}

TEST_CASE("decode_span matches exhaustive search") {
  std::mt19937_64 rng(34);
  std::uniform_int_distribution<int> coarse(0, 3);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + trial % 12;
    const int max_len = 1 + trial % 5;
    Eigen::VectorXd a(n), b(n);
    for (int i = 0; i < n; ++i) {
      // Coarse values make ties common.
      a(i) = coarse(rng) / 3.0;
      b(i) = coarse(rng) / 3.0;
    }
    const auto got = decode_span(a, b, max_len);
    const auto want = oracle::decode_span(oracle::Vec(a.data(), a.data() + n),
                                          oracle::Vec(b.data(), b.data() + n),
                                          max_len);
    CHECK(got == want);
  }
}

TEST_CASE("decode_span respects the length limit") {
  Eigen::VectorXd st(4), en(4);
  st << 0.9, 0.05, 0.03, 0.02;
  en << 0.01, 0.01, 0.01, 0.97;
  CHECK(decode_span(st, en, 10) == std::make_pair(0, 3));
  CHECK(decode_span(st, en, 2) == std::make_pair(2, 3));
}

TEST_CASE("heads expose named parameters") {
  Heads h(4, 1);
  CHECK(h.parameters().size() == 11);
  CHECK(h.theta_v().name == "heads.theta_v");
  Tape t;
  const SpanBasis b = h.span_basis(t, t.constant(Matrix::Random(3, 4)));
  CHECK(b.start.rows() == 3);
  CHECK(b.end.cols() == 4);
  CHECK(h.type_logits(t, t.constant(Matrix::Random(1, 4))).rows() == kNumSpanTypes);
  CHECK_THROWS(h.span_basis(t, t.zeros(0, 4)));
}
