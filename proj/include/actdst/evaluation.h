// Turn-level prediction, joint/slot goal accuracy, the act-attention
// ablation and attention export.

#ifndef ACTDST_EVALUATION_H_
#define ACTDST_EVALUATION_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "actdst/corpus.h"
#include "actdst/model.h"
#include "actdst/training.h"

namespace actdst {

// String matching for metrics: lowercase, punctuation and the articles
// a/an/the removed, whitespace collapsed, then the alias map applied to the
// whole string. '_' and ':' / '.' between digits are kept.
class Canonicalizer {
 public:
  Canonicalizer() = default;
  explicit Canonicalizer(std::map<std::string, std::string> aliases);

  static Canonicalizer with_defaults();
  // {"schema_version": 1, "aliases": {"from": "to", ...}}, merged over the
  // built-in defaults.
  static Canonicalizer load(const std::filesystem::path& path);

  std::string operator()(std::string_view value) const;
  const std::map<std::string, std::string>& aliases() const { return aliases_; }

 private:
  std::map<std::string, std::string> aliases_;
};

// Throws std::invalid_argument when the lists or states are misaligned.
double joint_goal_accuracy(std::span<const DialogueState> predictions,
                           std::span<const DialogueState> golds,
                           const Canonicalizer& canon = {});
double slot_goal_accuracy(std::span<const DialogueState> predictions,
                          std::span<const DialogueState> golds,
                          const Canonicalizer& canon = {});

struct Metrics {
  double joint = 0.0;
  double slot = 0.0;
  std::size_t n_turns = 0;
};

std::vector<TurnPrediction> predict_examples(
    Model& model, std::span<const TurnExample> examples);
Metrics score(std::span<const TurnPrediction> predictions,
              std::span<const TurnExample> examples,
              const Canonicalizer& canon);
Metrics evaluate(Model& model, std::span<const TurnExample> examples,
                 const Canonicalizer& canon);

DialogueState predict_turn(Model& model, const Dialogue& dialogue, int t,
                           const CorpusOptions& options = {});

// One {dialogue_id, turn, slot, predicted, gold} line per (turn, slot).
void write_predictions(std::ostream& out,
                       std::span<const TurnPrediction> predictions,
                       std::span<const TurnExample> examples,
                       const Ontology& ontology);
std::string metrics_summary(const Metrics& metrics);

struct AblationReport {
  Metrics with_acts;
  Metrics without_acts;

  double delta_joint() const { return without_acts.joint - with_acts.joint; }
  double delta_slot() const { return without_acts.slot - with_acts.slot; }
  std::string to_json() const;
  // Two-row text table: full model, then "w/o dialogue acts" with deltas.
  std::string to_table() const;
};

// Throws ConfigError unless the configs differ only in act_attention, with
// `with_acts` enabling it.
void check_ablation_pair(const RunConfig& with_acts,
                         const RunConfig& without_acts);
AblationReport ablation_run(const RunConfig& with_acts,
                            const RunConfig& without_acts,
                            const Ontology& ontology,
                            std::span<const Dialogue> train_dialogues,
                            std::span<const Dialogue> dev_dialogues,
                            const TrainOptions& options = {});
AblationReport ablation_from_models(Model& with_acts, Model& without_acts,
                                    std::span<const TurnExample> dev_examples,
                                    const Canonicalizer& canon);

struct AttentionExport {
  std::vector<std::string> acts;   // row labels
  std::vector<std::string> slots;  // "domain-slot" column labels
  Matrix weights;                  // |acts| x M, column m is alpha2 of slot m
};

// Act-attention weights for a simulated act sequence. With no context
// tokens, the act names themselves form a one-utterance system context.
// Throws DataError on an unknown act.
AttentionExport export_attention(Model& model,
                                 std::span<const std::string> acts,
                                 std::span<const std::string> context = {});
void write_attention_csv(const AttentionExport& e, std::ostream& out);
void write_attention_svg(const AttentionExport& e, std::ostream& out);

}  // namespace actdst

#endif  // ACTDST_EVALUATION_H_
