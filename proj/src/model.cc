#include "actdst/model.h"

#include <stdexcept>

#include "actdst/text.h"

namespace actdst {
namespace {

EmbeddingConfig sized_for(EmbeddingConfig config, const Ontology& ontology) {
  config.exact_dim = static_cast<int>(ontology.size());
  return config;
}

Eigen::VectorXd column(Var v, Eigen::Index n) {
  return v.value().col(0).head(n);
}

int argmax(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  v.maxCoeff(&best);
  return static_cast<int>(best);
}

}  // namespace

SlotPrediction decode_slot(const OptionSet& options,
                           std::span<const std::string> context,
                           const Eigen::VectorXd& probs,
                           const Eigen::VectorXd& p_st,
                           const Eigen::VectorXd& p_end, int max_len) {
  if (static_cast<std::size_t>(probs.size()) != options.options.size())
    throw std::invalid_argument("decode_slot: distribution does not match "
                                "the option set of " + options.slot.key());
  SlotPrediction out;
  out.kind = options.kind;
  out.probs = probs;
  out.option_index = argmax(probs);
  if (options.kind == SlotKind::kCategorical) {
    out.value = options.options[static_cast<std::size_t>(out.option_index)];
    return out;
  }
  out.span_type = static_cast<SpanType>(out.option_index);
  out.p_st = p_st;
  out.p_end = p_end;
  switch (out.span_type) {
    case SpanType::kNone:
      out.value = kNoneValue;
      break;
    case SpanType::kDontCare:
      out.value = kDontCareValue;
      break;
    case SpanType::kSpan: {
      if (context.empty() ||
          p_st.size() != static_cast<Eigen::Index>(context.size()))
        throw std::invalid_argument("decode_slot: span distributions do not "
                                    "match the context");
      auto [s, e] = decode_span(p_st, p_end, max_len);
      out.start = s;
      out.end = e;
      out.value = detokenize(context, static_cast<std::size_t>(s),
                             static_cast<std::size_t>(e));
      break;
    }
  }
  return out;
}

Model::Model(const ModelConfig& config, Ontology ontology, Vocabulary words,
             Vocabulary chars, std::uint64_t seed,
             std::unique_ptr<EmbeddingProvider> provider)
    : config_(config),
      ontology_(std::move(ontology)),
      words_(std::move(words)),
      chars_(std::move(chars)),
      encoder_(sized_for(config.embedding, ontology_), words_, chars_,
               ontology_.acts(), seed, std::move(provider)),
      attention_(config.embedding.w(), config.act_attention, seed),
      heads_(config.embedding.w(), seed) {
  if (ontology_.size() == 0) throw std::invalid_argument("empty ontology");
  config_.embedding = encoder_.config();
  for (std::size_t m = 0; m < ontology_.size(); ++m)
    options_.push_back(option_set(ontology_, m));
}

ForwardResult Model::forward(Tape& tape, const TurnExample& example,
                             Eigen::Index padded_len) {
  const std::size_t M = ontology_.size();
  if (example.labels.size() != M)
    throw std::invalid_argument("forward: example has " +
                                std::to_string(example.labels.size()) +
                                " labels for " + std::to_string(M) + " slots");
  ForwardResult out;
  Var input =
      encoder_.embed_tokens(tape, example.context, example.roles, example.exact);
  out.context = encoder_.encode_context(tape, input, padded_len);
  out.acts = encoder_.embed_acts(tape, example.acts.names);
  const Eigen::Index n = static_cast<Eigen::Index>(example.context.size());

  SpanBasis basis;
  bool have_basis = false;
  std::vector<Var> lv, lt, ls;
  for (std::size_t m = 0; m < M; ++m) {
    const SlotSpec& spec = ontology_.slot(m);
    const Label& gold = example.labels[m];
    SlotQuery query = encoder_.embed_slot_query(tape, spec.id.domain,
                                                spec.id.slot);
    SlotOutput slot;
    slot.kind = spec.kind;
    slot.fused = attention_.forward(tape, out.context, out.acts, query);
    if (spec.kind == SlotKind::kCategorical) {
      Var P_e = encoder_.embed_options(tape, query, options_[m].options);
      slot.logits = heads_.value_logits(tape, P_e, slot.fused.Q_o);
      slot.probs = masked_softmax(slot.logits, {});
      lv.push_back(value_loss(slot.logits, gold.value_index));
    } else {
      if (!have_basis) {
        basis = heads_.span_basis(tape, out.context.X);
        have_basis = true;
      }
      slot.logits = heads_.type_logits(tape, slot.fused.Q_o);
      slot.probs = masked_softmax(slot.logits, {});
      slot.span = span_logits(basis, slot.fused.Q_o);
      slot.p_st = masked_softmax(slot.span.start, out.context.mask);
      slot.p_end = masked_softmax(slot.span.end, out.context.mask);
      lt.push_back(type_loss(slot.logits, gold.span_type));
      if (gold.span_type == SpanType::kSpan) {
        if (gold.end >= n)
          throw std::out_of_range("forward: gold span beyond the context");
        ls.push_back(span_loss(slot.span, out.context.mask, gold.start,
                               gold.end));
      }
    }
    out.slots.push_back(std::move(slot));
  }
  auto total = [&](const std::vector<Var>& terms) {
    return terms.empty() ? tape.zeros(1, 1) : sum(vconcat(terms, 1));
  };
  out.loss_v = total(lv);
  out.loss_type = total(lt);
  out.loss_s = total(ls);
  out.loss = add(add(out.loss_v, out.loss_type), out.loss_s);
  return out;
}

TurnPrediction Model::predict(const TurnExample& example) {
  Tape tape;
  ForwardResult f = forward(tape, example);
  const Eigen::Index n = static_cast<Eigen::Index>(example.context.size());
  TurnPrediction out;
  out.dialogue_id = example.dialogue_id;
  out.turn = example.turn;
  for (std::size_t m = 0; m < ontology_.size(); ++m) {
    const SlotOutput& s = f.slots[m];
    Eigen::VectorXd probs = s.probs.value().col(0);
    Eigen::VectorXd p_st, p_end;
    if (s.kind == SlotKind::kNonCategorical) {
      p_st = column(s.p_st, n);
      p_end = column(s.p_end, n);
    }
    out.slots.push_back(decode_slot(options_[m], example.context, probs, p_st,
                                    p_end, config_.max_len));
    out.state.push_back(out.slots.back().value);
  }
  return out;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out = encoder_.parameters();
  for (Parameter* p : attention_.parameters()) out.push_back(p);
  for (Parameter* p : heads_.parameters()) out.push_back(p);
  return out;
}

Parameter* Model::find_parameter(std::string_view name) {
  for (Parameter* p : parameters())
    if (p->name == name) return p;
  return nullptr;
}

}  // namespace actdst
