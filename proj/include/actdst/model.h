// The full tracker: encoder, slot attention and heads over every ontology
// slot of one turn, with the joint loss and decoded predictions.

#ifndef ACTDST_MODEL_H_
#define ACTDST_MODEL_H_

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "actdst/attention.h"
#include "actdst/corpus.h"
#include "actdst/encoder.h"
#include "actdst/heads.h"
#include "actdst/ontology.h"

namespace actdst {

struct ModelConfig {
  EmbeddingConfig embedding;
  bool act_attention = true;
  int max_len = 10;
};

struct SlotOutput {
  SlotKind kind = SlotKind::kCategorical;
  FusedSlot fused;
  Var logits;  // categorical: (N+2) x 1 value logits; else 3 x 1 type logits
  Var probs;
  SpanLogits span;  // non-categorical only
  Var p_st;
  Var p_end;
};

struct ForwardResult {
  EncodedContext context;
  Var acts;  // W^act, |A_t| x w
  std::vector<SlotOutput> slots;  // aligned with ontology slots
  Var loss_v;
  Var loss_type;
  Var loss_s;
  Var loss;  // loss_v + loss_type + loss_s
};

struct SlotPrediction {
  SlotKind kind = SlotKind::kCategorical;
  int option_index = -1;  // categorical
  SpanType span_type = SpanType::kNone;  // non-categorical
  int start = -1;
  int end = -1;
  std::string value;
  Eigen::VectorXd probs;  // p^v or p^span
  Eigen::VectorXd p_st;   // over the real context tokens
  Eigen::VectorXd p_end;
};

// Predicted values aligned with ontology slots; "none" when unset.
using DialogueState = std::vector<std::string>;

struct TurnPrediction {
  std::string dialogue_id;
  int turn = 0;
  std::vector<SlotPrediction> slots;
  DialogueState state;
};

// Categorical: option at argmax p^v. Non-categorical: argmax span type, and
// the decoded span text when that is SPAN.
SlotPrediction decode_slot(const OptionSet& options,
                           std::span<const std::string> context,
                           const Eigen::VectorXd& probs,
                           const Eigen::VectorXd& p_st,
                           const Eigen::VectorXd& p_end, int max_len);

class Model {
 public:
  // `ontology` must already be partitioned. Without a provider the word
  // embeddings come from a trainable lookup over `words`.
  Model(const ModelConfig& config, Ontology ontology, Vocabulary words,
        Vocabulary chars, std::uint64_t seed,
        std::unique_ptr<EmbeddingProvider> provider = nullptr);

  // padded_len pads the context (batch padding); outputs over padded
  // positions are masked.
  ForwardResult forward(Tape& tape, const TurnExample& example,
                        Eigen::Index padded_len = 0);
  TurnPrediction predict(const TurnExample& example);

  const ModelConfig& config() const { return config_; }
  const Ontology& ontology() const { return ontology_; }
  const OptionSet& options(std::size_t slot) const { return options_[slot]; }
  const Vocabulary& words() const { return words_; }
  const Vocabulary& chars() const { return chars_; }

  Encoder& encoder() { return encoder_; }
  SlotAttention& attention() { return attention_; }
  Heads& heads() { return heads_; }
  // Runtime ablation switch; has no effect on a model built without k2.
  void set_act_attention(bool enabled) { attention_.set_act_attention(enabled); }

  // Every parameter in a fixed order, frozen ones included.
  std::vector<Parameter*> parameters();
  Parameter* find_parameter(std::string_view name);

 private:
  ModelConfig config_;
  Ontology ontology_;
  std::vector<OptionSet> options_;
  Vocabulary words_;
  Vocabulary chars_;
  Encoder encoder_;
  SlotAttention attention_;
  Heads heads_;
};

}  // namespace actdst

#endif  // ACTDST_MODEL_H_
