#include "actdst/heads.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace actdst {

Var FeedForward::apply(Tape& tape, Var x) {
  return relu(broadcast_add(matmul(x, tape.param(W)), tape.param(b)));
}

FeedForward make_feed_forward(const std::string& name, int in, int out,
                              std::uint64_t seed) {
  return FeedForward{fan_in_parameter(name + ".W", in, out, in, seed),
                     zero_parameter(name + ".b", 1, out)};
}

Var value_logits(Var P_e, Var Q_o, Var theta_v) {
  return matmul(matmul(P_e, theta_v), transpose(Q_o));
}

Var classify_value(Var P_e, Var Q_o, Var theta_v) {
  return masked_softmax(value_logits(P_e, Q_o, theta_v), {});
}

Var value_loss(Var logits, int gold) {
  if (gold < 0 || gold >= logits.rows())
    throw std::out_of_range("value_loss: gold index " + std::to_string(gold) +
                            " outside " + std::to_string(logits.rows()) +
                            " options");
  return scale(pick(masked_log_softmax(logits, {}), gold, 0), -1.0);
}

double value_loss(const Eigen::VectorXd& p_v, int gold) {
  if (gold < 0 || gold >= p_v.size())
    throw std::out_of_range("value_loss: gold index " + std::to_string(gold) +
                            " outside " + std::to_string(p_v.size()) +
                            " options");
  return -std::log(p_v(gold));
}

Var span_type_logits(Var Q_o, Var W1, Var b1, Var W2, Var b2) {
  Var hidden = relu(broadcast_add(matmul(Q_o, W1), b1));
  return transpose(broadcast_add(matmul(hidden, W2), b2));
}

Var type_loss(Var logits, SpanType gold) {
  return scale(
      pick(masked_log_softmax(logits, {}), static_cast<int>(gold), 0), -1.0);
}

SpanBasis span_basis(Var X, Var theta_s, Var theta_e, Var c1_W, Var c1_b,
                     Var c2_W, Var c2_b) {
  if (X.rows() == 0) throw std::invalid_argument("span_logits: empty context");
  Var h1 = relu(broadcast_add(matmul(X, c1_W), c1_b));
  Var h2 = relu(broadcast_add(matmul(X, c2_W), c2_b));
  return {matmul(h1, theta_s), matmul(h2, theta_e)};
}

SpanLogits span_logits(const SpanBasis& basis, Var Q_o) {
  Var q = transpose(Q_o);
  return {matmul(basis.start, q), matmul(basis.end, q)};
}

SpanLogits span_logits(Var X, Var Q_o, Var theta_s, Var theta_e, Var c1_W,
                       Var c1_b, Var c2_W, Var c2_b) {
  return span_logits(span_basis(X, theta_s, theta_e, c1_W, c1_b, c2_W, c2_b),
                     Q_o);
}

Var span_loss(const SpanLogits& logits, const Mask& mask, int start, int end) {
  const Eigen::Index n = logits.start.rows();
  auto valid = [&](int i) {
    return i >= 0 && i < n &&
           (mask.empty() || mask[static_cast<std::size_t>(i)] != 0);
  };
  if (!valid(start) || !valid(end) || end < start)
    throw std::out_of_range("span_loss: gold span (" + std::to_string(start) +
                            ", " + std::to_string(end) +
                            ") outside the context");
  Var ls = pick(masked_log_softmax(logits.start, mask), start, 0);
  Var le = pick(masked_log_softmax(logits.end, mask), end, 0);
  return scale(add(ls, le), -1.0);
}

std::pair<int, int> decode_span(const Eigen::VectorXd& p_st,
                                const Eigen::VectorXd& p_end, int max_len) {
  if (p_st.size() != p_end.size() || p_st.size() == 0)
    throw std::invalid_argument("decode_span: distributions must be non-empty "
                                "and of equal length");
  if (max_len < 1) throw std::invalid_argument("decode_span: max_len < 1");
  const int n = static_cast<int>(p_st.size());
  std::pair<int, int> best{0, 0};
  double best_score = -1.0;
  for (int s = 0; s < n; ++s) {
    const int last = std::min(n - 1, s + max_len - 1);
    for (int e = s; e <= last; ++e) {
      const double score = p_st(s) * p_end(e);
      if (score > best_score) {
        best_score = score;
        best = {s, e};
      }
    }
  }
  return best;
}

Heads::Heads(int w, std::uint64_t seed)
    : theta_v_(fan_in_parameter("heads.theta_v", w, w, w, seed)),
      theta_s_(fan_in_parameter("heads.theta_s", w, w, w, seed)),
      theta_e_(fan_in_parameter("heads.theta_e", w, w, w, seed)),
      type_hidden_(make_feed_forward("heads.type_hidden", w, w, seed)),
      type_W_(fan_in_parameter("heads.type_out.W", w, kNumSpanTypes, w, seed)),
      type_b_(zero_parameter("heads.type_out.b", 1, kNumSpanTypes)),
      c1_(make_feed_forward("heads.c1", w, w, seed)),
      c2_(make_feed_forward("heads.c2", w, w, seed)) {}

Var Heads::value_logits(Tape& tape, Var P_e, Var Q_o) {
  return actdst::value_logits(P_e, Q_o, tape.param(theta_v_));
}

Var Heads::type_logits(Tape& tape, Var Q_o) {
  return span_type_logits(Q_o, tape.param(type_hidden_.W),
                          tape.param(type_hidden_.b), tape.param(type_W_),
                          tape.param(type_b_));
}

SpanBasis Heads::span_basis(Tape& tape, Var X) {
  return actdst::span_basis(X, tape.param(theta_s_), tape.param(theta_e_),
                            tape.param(c1_.W), tape.param(c1_.b),
                            tape.param(c2_.W), tape.param(c2_.b));
}

std::vector<Parameter*> Heads::parameters() {
  return {&theta_v_,        &theta_s_, &theta_e_, &type_hidden_.W,
          &type_hidden_.b,  &type_W_,  &type_b_,  &c1_.W,
          &c1_.b,           &c2_.W,    &c2_.b};
}

}  // namespace actdst
