// Output heads: bilinear option scoring for categorical slots, span type and
// span boundaries for non-categorical slots, and their cross-entropy losses.

#ifndef ACTDST_HEADS_H_
#define ACTDST_HEADS_H_

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

#include "actdst/autodiff.h"
#include "actdst/corpus.h"

namespace actdst {

// Span-type class order: SPAN, NONE, DONT_CARE (matches SpanType values).
inline constexpr int kNumSpanTypes = 3;

// relu(X W + b)
struct FeedForward {
  Parameter W;
  Parameter b;

  Var apply(Tape& tape, Var x);
  std::vector<Parameter*> parameters() { return {&W, &b}; }
};

FeedForward make_feed_forward(const std::string& name, int in, int out,
                              std::uint64_t seed);

// Scores P_e Theta_v Q_o^T, (N+2) x 1.
Var value_logits(Var P_e, Var Q_o, Var theta_v);
// softmax(value_logits).
Var classify_value(Var P_e, Var Q_o, Var theta_v);
// -log p_v[gold], computed from the logits.
Var value_loss(Var logits, int gold);
// -log p_v[gold] for an already normalized distribution.
double value_loss(const Eigen::VectorXd& p_v, int gold);

// hidden: relu(Q_o W1 + b1), then hidden W2 + b2. Returns 3 x 1 logits.
Var span_type_logits(Var Q_o, Var W1, Var b1, Var W2, Var b2);
Var type_loss(Var logits, SpanType gold);

struct SpanLogits {
  Var start;  // n x 1
  Var end;    // n x 1
};

// The slot-independent factors FFN_c1(X) Theta_s and FFN_c2(X) Theta_e,
// n x w each.
struct SpanBasis {
  Var start;
  Var end;
};

SpanBasis span_basis(Var X, Var theta_s, Var theta_e, Var c1_W, Var c1_b,
                     Var c2_W, Var c2_b);
SpanLogits span_logits(const SpanBasis& basis, Var Q_o);
// FFN_c1(X) Theta_s Q_o^T and FFN_c2(X) Theta_e Q_o^T.
SpanLogits span_logits(Var X, Var Q_o, Var theta_s, Var theta_e, Var c1_W,
                       Var c1_b, Var c2_W, Var c2_b);
// -log p_st[start] - log p_end[end] under the context mask.
Var span_loss(const SpanLogits& logits, const Mask& mask, int start, int end);

// argmax over s <= e <= s + max_len - 1 of p_st[s] * p_end[e]; ties go to the
// smaller s, then the smaller e.
std::pair<int, int> decode_span(const Eigen::VectorXd& p_st,
                                const Eigen::VectorXd& p_end, int max_len);

class Heads {
 public:
  Heads(int w, std::uint64_t seed);

  Var value_logits(Tape& tape, Var P_e, Var Q_o);
  Var type_logits(Tape& tape, Var Q_o);
  SpanBasis span_basis(Tape& tape, Var X);

  Parameter& theta_v() { return theta_v_; }
  Parameter& theta_s() { return theta_s_; }
  Parameter& theta_e() { return theta_e_; }
  FeedForward& type_hidden() { return type_hidden_; }
  Parameter& type_W() { return type_W_; }
  Parameter& type_b() { return type_b_; }
  FeedForward& c1() { return c1_; }
  FeedForward& c2() { return c2_; }
  std::vector<Parameter*> parameters();

 private:
  Parameter theta_v_;
  Parameter theta_s_;
  Parameter theta_e_;
  FeedForward type_hidden_;
  Parameter type_W_;
  Parameter type_b_;
  FeedForward c1_;
  FeedForward c2_;
};

}  // namespace actdst

#endif  // ACTDST_HEADS_H_
