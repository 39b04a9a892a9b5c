// Run configuration, optimizer, the training loop and finite-difference
// gradient verification.

#ifndef ACTDST_TRAINING_H_
#define ACTDST_TRAINING_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "actdst/corpus.h"
#include "actdst/encoder.h"
#include "actdst/model.h"
#include "actdst/ontology.h"

namespace actdst {

enum class LossReduction { kSum, kMean };

struct RunConfig {
  double learning_rate = 0.001;
  int batch_size = 24;
  std::string optimizer = "adam";
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int max_epochs = 20;
  int max_steps = 0;  // 0: no step limit
  int patience = 3;   // epochs without dev improvement; 0 disables
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  PartitionPolicy slot_policy = PartitionPolicy::kHybrid;
  bool act_attention = true;
  ProviderKind provider = ProviderKind::kTrainableLookup;
  std::string pretrained_path;
  int word_dim = 512;
  int char_dim = 100;
  int role_dim = 128;
  int char_input_dim = 16;
  std::vector<int> kernel_widths = {2, 3, 4};
  ActTable act_table = ActTable::kShared;
  int context_cap = 512;
  int max_len = 10;
  int precision = 64;
  SpanChoice span_choice = SpanChoice::kLast;
  bool strip_act_domain = true;
  LossReduction loss_reduction = LossReduction::kSum;

  // Optional inputs, resolved against the config file's directory.
  std::string ontology;
  std::string train_data;
  std::string dev_data;
  std::string test_data;

  // Throws ConfigError.
  void validate() const;
  ModelConfig model_config() const;
  CorpusOptions corpus_options() const;
};

// Unknown keys are rejected. Missing keys keep their defaults.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string serialize_run_config(const RunConfig& config);
// Every field except act_attention and the data paths.
bool same_except_ablation(const RunConfig& a, const RunConfig& b);

// Partition by the configured policy, using corpus statistics for the hybrid
// fallback.
Ontology prepare_ontology(const Ontology& ontology, const RunConfig& config,
                          std::span<const Dialogue> train_dialogues);

// Vocabularies from the training examples, then the configured provider.
std::unique_ptr<Model> build_model(const RunConfig& config,
                                   const Ontology& partitioned,
                                   std::span<const TurnExample> train_examples);

class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
      : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

  // Updates every trainable parameter from its grad.
  void step(std::span<Parameter* const> params, double learning_rate);
  long steps() const { return t_; }

 private:
  struct Moments {
    Matrix m;
    Matrix v;
  };
  double beta1_;
  double beta2_;
  double epsilon_;
  long t_ = 0;
  std::unordered_map<const Parameter*, Moments> moments_;
};

// Global L2 norm over trainable gradients before clipping.
double clip_gradients(std::span<Parameter* const> params, double max_norm);
void zero_gradients(std::span<Parameter* const> params);

// Summed loss of one example; backward() has already run when it returns.
double example_loss_and_gradient(Model& model, const TurnExample& example,
                                 Eigen::Index padded_len, double weight);

struct EpochMetrics {
  int epoch = 0;
  long step = 0;
  double train_loss = 0.0;
  std::optional<double> dev_joint;
  std::optional<double> dev_slot;
};

struct TrainOptions {
  std::ostream* metrics_log = nullptr;  // one JSON record per epoch
  std::ostream* progress = nullptr;
};

struct TrainResult {
  std::vector<EpochMetrics> log;
  std::vector<double> step_losses;  // one per optimizer step
  int best_epoch = 0;
  long steps = 0;
};

// Mini-batch training. Leaves `model` holding the parameters of the epoch with
// the best dev joint accuracy (the last epoch without a dev set). Throws
// DivergenceError on a non-finite loss.
TrainResult train(Model& model, const RunConfig& config,
                  std::span<const TurnExample> train_examples,
                  std::span<const TurnExample> dev_examples,
                  const TrainOptions& options = {});

std::string metrics_record(const EpochMetrics& m, bool act_attention);

struct GradCheckEntry {
  std::string name;
  double rel_error = 0.0;
  double analytic_norm = 0.0;
  bool frozen = false;
  std::size_t skipped = 0;  // coordinates whose probes crossed a kink
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
};

// Central differences with step eps against the reverse-mode gradient of
// loss_fn, per parameter tensor. The relative error of a tensor is
// |a - n| / max(|a|, |n|) in the L2 norm. Frozen parameters are not probed;
// their analytic gradient norm is reported.
GradCheckReport gradient_check(const std::function<Var(Tape&)>& loss_fn,
                               std::span<Parameter* const> params,
                               double eps = 1e-3);

struct GradCheckSuite {
  GradCheckReport attention;
  GradCheckReport value_head;
  GradCheckReport span_heads;
  GradCheckReport total_loss;

  double max_rel_error() const;
};

// Random small instances (context <= 6 tokens, <= 3 values, w <= 8) through
// each component, worst error over `instances` draws.
GradCheckSuite run_gradient_checks(int instances, std::uint64_t seed,
                                   double eps = 1e-3);

}  // namespace actdst

#endif  // ACTDST_TRAINING_H_
