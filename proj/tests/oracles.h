// Brute-force reference implementations. Plain loops over the raw
// coefficients; nothing here calls into the library except tokenize().

#ifndef ACTDST_TESTS_ORACLES_H_
#define ACTDST_TESTS_ORACLES_H_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "actdst/text.h"

namespace oracle {

using Vec = std::vector<double>;

inline Vec softmax(const Vec& logits, const std::vector<std::uint8_t>& mask) {
  const std::size_t n = logits.size();
  Vec out(n, 0.0);
  double top = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < n; ++i)
    if (mask.empty() || mask[i]) {
      top = std::max(top, logits[i]);
      any = true;
    }
  if (!any) return out;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (mask.empty() || mask[i]) {
      out[i] = std::exp(logits[i] - top);
      total += out[i];
    }
  for (double& v : out) v /= total;
  return out;
}

// [R_i; s; R_i * s] . k for each row.
inline Vec attention_logits(const Eigen::MatrixXd& R, const Eigen::MatrixXd& s,
                            const Eigen::MatrixXd& k) {
  const long h = R.cols();
  Vec out(R.rows(), 0.0);
  for (long i = 0; i < R.rows(); ++i) {
    double acc = 0.0;
    for (long j = 0; j < h; ++j) {
      acc += R(i, j) * k(0, j);
      acc += s(0, j) * k(0, h + j);
      acc += R(i, j) * s(0, j) * k(0, 2 * h + j);
    }
    out[i] = acc;
  }
  return out;
}

inline Vec attention(const Eigen::MatrixXd& R, const Eigen::MatrixXd& s,
                     const Eigen::MatrixXd& k,
                     const std::vector<std::uint8_t>& mask) {
  return softmax(attention_logits(R, s, k), mask);
}

// sum over rows of weight_i * R_i.
inline Vec weighted_rows(const Vec& weights, const Eigen::MatrixXd& R) {
  Vec out(R.cols(), 0.0);
  for (long i = 0; i < R.rows(); ++i)
    for (long j = 0; j < R.cols(); ++j) out[j] += weights[i] * R(i, j);
  return out;
}

// P_e Theta Q^T
inline Vec bilinear(const Eigen::MatrixXd& P, const Eigen::MatrixXd& theta,
                    const Eigen::MatrixXd& q) {
  Vec out(P.rows(), 0.0);
  for (long i = 0; i < P.rows(); ++i) {
    double acc = 0.0;
    for (long a = 0; a < theta.rows(); ++a)
      for (long b = 0; b < theta.cols(); ++b)
        acc += P(i, a) * theta(a, b) * q(0, b);
    out[i] = acc;
  }
  return out;
}

inline Vec value_probs(const Eigen::MatrixXd& P, const Eigen::MatrixXd& theta,
                       const Eigen::MatrixXd& q) {
  return softmax(bilinear(P, theta, q), {});
}

// relu(X W + b)
inline Eigen::MatrixXd ffn(const Eigen::MatrixXd& X, const Eigen::MatrixXd& W,
                           const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(X.rows(), W.cols());
  for (long i = 0; i < X.rows(); ++i)
    for (long j = 0; j < W.cols(); ++j) {
      double acc = b(0, j);
      for (long a = 0; a < X.cols(); ++a) acc += X(i, a) * W(a, j);
      out(i, j) = acc > 0.0 ? acc : 0.0;
    }
  return out;
}

inline Vec span_probs(const Eigen::MatrixXd& X, const Eigen::MatrixXd& W,
                      const Eigen::MatrixXd& b, const Eigen::MatrixXd& theta,
                      const Eigen::MatrixXd& q,
                      const std::vector<std::uint8_t>& mask) {
  return softmax(bilinear(ffn(X, W, b), theta, q), mask);
}

inline Vec type_probs(const Eigen::MatrixXd& q, const Eigen::MatrixXd& W1,
                      const Eigen::MatrixXd& b1, const Eigen::MatrixXd& W2,
                      const Eigen::MatrixXd& b2) {
  const Eigen::MatrixXd hidden = ffn(q, W1, b1);
  Vec logits(W2.cols(), 0.0);
  for (long j = 0; j < W2.cols(); ++j) {
    double acc = b2(0, j);
    for (long a = 0; a < W2.rows(); ++a) acc += hidden(0, a) * W2(a, j);
    logits[j] = acc;
  }
  return softmax(logits, {});
}

inline double nll(const Vec& p, int gold) { return -std::log(p[gold]); }

// Turn-level: every slot matches. Slot-level: fraction of matching slots.
inline double joint(const std::vector<std::vector<std::string>>& pred,
                    const std::vector<std::vector<std::string>>& gold) {
  if (pred.empty()) return 0.0;
  int hits = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    bool all = true;
    for (std::size_t m = 0; m < pred[t].size(); ++m)
      if (pred[t][m] != gold[t][m]) all = false;
    if (all) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

inline double slot(const std::vector<std::vector<std::string>>& pred,
                   const std::vector<std::vector<std::string>>& gold) {
  if (pred.empty()) return 0.0;
  int hits = 0;
  int total = 0;
  for (std::size_t t = 0; t < pred.size(); ++t)
    for (std::size_t m = 0; m < pred[t].size(); ++m) {
      ++total;
      if (pred[t][m] == gold[t][m]) ++hits;
    }
  return total == 0 ? 0.0 : static_cast<double>(hits) / total;
}

// values[m] lists the raw values of slot m.
inline std::vector<std::vector<int>> exact_match(
    const std::vector<std::string>& context,
    const std::vector<std::vector<std::string>>& values) {
  std::vector<std::vector<int>> out(context.size(),
                                    std::vector<int>(values.size(), 0));
  for (std::size_t m = 0; m < values.size(); ++m)
    for (const std::string& v : values[m]) {
      const std::vector<std::string> vt = actdst::tokenize(v);
      if (vt.empty()) continue;
      for (std::size_t i = 0; i < context.size(); ++i) {
        bool ok = i + vt.size() <= context.size();
        for (std::size_t k = 0; ok && k < vt.size(); ++k)
          ok = context[i + k] == vt[k];
        if (ok)
          for (std::size_t k = 0; k < vt.size(); ++k) out[i + k][m] = 1;
      }
    }
  return out;
}

// Exhaustive scan; the first strictly larger product wins.
inline std::pair<int, int> decode_span(const Vec& p_st, const Vec& p_end,
                                       int max_len) {
  std::pair<int, int> best{0, 0};
  double top = -1.0;
  const int n = static_cast<int>(p_st.size());
  for (int s = 0; s < n; ++s)
    for (int e = 0; e < n; ++e) {
      if (e < s || e - s + 1 > max_len) continue;
      const double v = p_st[s] * p_end[e];
      if (v > top) {
        top = v;
        best = {s, e};
      }
    }
  return best;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, long rows,
                                     long cols, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

inline std::vector<std::uint8_t> random_mask(std::mt19937_64& rng, long n,
                                             bool keep_one = true) {
  std::bernoulli_distribution b(0.7);
  std::vector<std::uint8_t> m(n);
  for (auto& x : m) x = b(rng) ? 1 : 0;
  if (keep_one && n > 0) m[std::uniform_int_distribution<long>(0, n - 1)(rng)] = 1;
  return m;
}

inline Vec to_vec(const Eigen::MatrixXd& column) {
  return Vec(column.data(), column.data() + column.size());
}

}  // namespace oracle

#endif  // ACTDST_TESTS_ORACLES_H_
