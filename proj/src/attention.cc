#include "actdst/attention.h"

#include <stdexcept>
#include <string>

namespace actdst {

Var attention_logits(Var R, Var s, Var k) {
  const Eigen::Index h = R.cols();
  if (s.rows() != 1 || s.cols() != h || k.rows() != 1 || k.cols() != 3 * h)
    throw std::invalid_argument(
        "attention: R is n x " + std::to_string(h) + " but s is " +
        std::to_string(s.rows()) + " x " + std::to_string(s.cols()) +
        " and k is " + std::to_string(k.rows()) + " x " +
        std::to_string(k.cols()));
  Var k_r = transpose(slice_cols(k, 0, h));
  Var k_s = transpose(slice_cols(k, h, h));
  Var k_rs = slice_cols(k, 2 * h, h);
  Var from_rows = matmul(R, k_r);
  Var from_query = matmul(s, k_s);
  Var from_product = matmul(R, transpose(hadamard(s, k_rs)));
  return broadcast_add(add(from_rows, from_product), from_query);
}

AttentionWeights attention(Var R, Var s, Var k, const Mask& mask) {
  if (!mask.empty() && mask.size() != static_cast<std::size_t>(R.rows()))
    throw std::invalid_argument("attention: mask length " +
                                std::to_string(mask.size()) + " != rows " +
                                std::to_string(R.rows()));
  bool any = mask.empty() ? R.rows() > 0 : false;
  for (std::uint8_t m : mask) any = any || m != 0;
  if (!any) return {R.tape()->zeros(R.rows(), 1), true};
  return {masked_softmax(attention_logits(R, s, k), mask), false};
}

ContextAttention attend_context(const EncodedContext& context,
                                const SlotQuery& query, Var k1) {
  AttentionWeights a = attention(context.X, query.query, k1, context.mask);
  if (a.empty) throw std::invalid_argument("attend_context: empty context");
  return {matmul(transpose(a.weights), context.X), a.weights};
}

ActAttention attend_acts(Var W_act, Var Q_c, Var k2) {
  Tape& tape = *Q_c.tape();
  if (W_act.rows() == 0)
    return {tape.zeros(1, Q_c.cols()), tape.zeros(0, 1)};
  AttentionWeights a = attention(W_act, Q_c, k2, {});
  return {matmul(transpose(a.weights), W_act), a.weights};
}

FusedSlot fuse_slot(const ContextAttention& context, const ActAttention& acts,
                    const SlotQuery& query, bool act_attention) {
  FusedSlot out;
  out.Q_c = context.Q_c;
  out.alpha1 = context.alpha1;
  if (act_attention) {
    out.Q_a = acts.Q_a;
    out.alpha2 = acts.alpha2;
  } else {
    Tape& tape = *context.Q_c.tape();
    out.Q_a = tape.zeros(1, context.Q_c.cols());
    out.alpha2 = tape.zeros(0, 1);
  }
  out.Q_o = add(add(add(out.Q_c, out.Q_a), query.domain), query.slot);
  return out;
}

SlotAttention::SlotAttention(int w, bool act_attention, std::uint64_t seed)
    : has_k2_(act_attention) {
  k1_ = fan_in_parameter("attention.k1", 1, 3 * w, 3 * w, seed);
  if (has_k2_)
    k2_ = fan_in_parameter("attention.k2", 1, 3 * w, 3 * w, seed);
}

FusedSlot SlotAttention::forward(Tape& tape, const EncodedContext& context,
                                 Var W_act, const SlotQuery& query) {
  ContextAttention c = attend_context(context, query, tape.param(k1_));
  if (!act_attention()) return fuse_slot(c, {}, query, false);
  return fuse_slot(c, attend_acts(W_act, c.Q_c, tape.param(k2_)), query);
}

std::vector<Parameter*> SlotAttention::parameters() {
  if (has_k2_) return {&k1_, &k2_};
  return {&k1_};
}

}  // namespace actdst
