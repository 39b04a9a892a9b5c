// Slot-query attention over the encoded context and over the system act
// sequence, fused into one slot representation per (domain, slot).

#ifndef ACTDST_ATTENTION_H_
#define ACTDST_ATTENTION_H_

#include <cstdint>
#include <vector>

#include "actdst/autodiff.h"
#include "actdst/encoder.h"

namespace actdst {

// Logits [R_i; s; R_i * s] . k for every row i. R: n x h, s: 1 x h,
// k: 1 x 3h. Returns n x 1.
Var attention_logits(Var R, Var s, Var k);

struct AttentionWeights {
  Var weights;        // n x 1
  bool empty = false; // every position masked; weights are all zero
};

// Softmax of attention_logits over the unmasked rows. An empty mask means
// every row is valid.
AttentionWeights attention(Var R, Var s, Var k, const Mask& mask);

struct ContextAttention {
  Var Q_c;     // 1 x w
  Var alpha1;  // padded length x 1
};

struct ActAttention {
  Var Q_a;     // 1 x w, zero when there are no acts
  Var alpha2;  // |A_t| x 1, 0 x 1 when there are no acts
};

struct FusedSlot {
  Var Q_c;
  Var Q_a;
  Var Q_o;  // Q_c + Q_a + q^d + q^s
  Var alpha1;
  Var alpha2;
};

ContextAttention attend_context(const EncodedContext& context,
                                const SlotQuery& query, Var k1);
ActAttention attend_acts(Var W_act, Var Q_c, Var k2);
FusedSlot fuse_slot(const ContextAttention& context, const ActAttention& acts,
                    const SlotQuery& query, bool act_attention = true);

// k1 and, unless act attention is disabled at construction, k2. An instance
// built with k2 can still run ablated through set_act_attention(false).
class SlotAttention {
 public:
  SlotAttention(int w, bool act_attention, std::uint64_t seed);

  bool has_k2() const { return has_k2_; }
  bool act_attention() const { return has_k2_ && enabled_; }
  void set_act_attention(bool enabled) { enabled_ = enabled; }
  FusedSlot forward(Tape& tape, const EncodedContext& context, Var W_act,
                    const SlotQuery& query);

  Parameter& k1() { return k1_; }
  // Only valid with act attention enabled.
  Parameter& k2() { return k2_; }
  std::vector<Parameter*> parameters();

 private:
  bool has_k2_;
  bool enabled_ = true;
  Parameter k1_;
  Parameter k2_;
};

}  // namespace actdst

#endif  // ACTDST_ATTENTION_H_
