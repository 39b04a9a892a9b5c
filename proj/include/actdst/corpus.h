// Dialogue ingestion and per-turn supervision: contexts, act sequences,
// exact-match features, labels and padded batches.

#ifndef ACTDST_CORPUS_H_
#define ACTDST_CORPUS_H_

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "actdst/ontology.h"

namespace actdst {

enum class Role : std::uint8_t { kSys = 0, kUser = 1 };
enum class SpanType : std::uint8_t { kSpan = 0, kNone = 1, kDontCare = 2 };
enum class SpanChoice { kLast, kFirst };

std::string_view to_string(Role role);
std::string_view to_string(SpanType type);

struct Turn {
  std::vector<std::string> system_utterance;
  std::vector<std::string> user_utterance;
  std::vector<std::string> system_acts;
  // "domain-slot" -> canonical value. Absent keys mean "none".
  std::map<std::string, std::string> gold_state;
};

struct Dialogue {
  std::string id;
  std::vector<Turn> turns;
};

struct ActSequence {
  std::vector<std::string> names;
  std::vector<int> turn_index;  // 1-based turn each act belongs to

  std::size_t size() const { return names.size(); }
  bool empty() const { return names.empty(); }
};

struct Label {
  SlotKind kind = SlotKind::kCategorical;
  int value_index = -1;  // categorical: index into the OptionSet
  SpanType span_type = SpanType::kNone;
  int start = -1;  // non-categorical SPAN only, inclusive
  int end = -1;

  bool operator==(const Label&) const = default;
};

struct TurnExample {
  std::string dialogue_id;
  int turn = 0;  // 1-based
  std::vector<std::string> context;
  std::vector<Role> roles;
  ActSequence acts;
  Eigen::MatrixXd exact;  // |context| x M, 0/1
  std::vector<Label> labels;  // aligned with ontology slots
  std::vector<std::string> gold_state;  // aligned with ontology slots
};

struct CorpusOptions {
  std::size_t context_cap = 512;
  SpanChoice span_choice = SpanChoice::kLast;
  // "Train-Request" -> "Request".
  bool strip_act_domain = true;
};

// Line-delimited warning records: {"kind", "dialogue", "turn", "message"}.
class WarningLog {
 public:
  WarningLog() = default;
  explicit WarningLog(std::ostream* sink) : sink_(sink) {}

  void warn(std::string_view kind, std::string_view dialogue, int turn,
            std::string_view message);
  std::size_t count() const { return count_; }
  std::size_t count(std::string_view kind) const;

 private:
  std::ostream* sink_ = nullptr;
  std::size_t count_ = 0;
  std::map<std::string, std::size_t, std::less<>> by_kind_;
};

// Dialogues outside the ontology's domains are dropped with a warning. Act
// names outside the inventory raise DataError.
std::vector<Dialogue> load_dialogues(const std::filesystem::path& path,
                                     const Ontology& ontology,
                                     WarningLog* log = nullptr,
                                     const CorpusOptions& options = {});
std::vector<Dialogue> parse_dialogues(std::string_view text,
                                      const Ontology& ontology,
                                      WarningLog* log = nullptr,
                                      const CorpusOptions& options = {});
void save_dialogues(const std::vector<Dialogue>& dialogues,
                    const std::filesystem::path& path);

// Turn indices are 1-based, 1 <= t <= |turns|.
std::pair<std::vector<std::string>, std::vector<Role>> build_context(
    const Dialogue& dialogue, int t);
ActSequence build_act_sequence(const Dialogue& dialogue, int t);

// Entry (i, m) is 1 iff token i lies inside an occurrence of some value of
// slot m.
Eigen::MatrixXd exact_match_features(std::span<const std::string> context,
                                     const Ontology& ontology);

std::optional<std::pair<int, int>> find_value_span(
    std::span<const std::string> context, std::string_view value,
    SpanChoice choice = SpanChoice::kLast);

std::vector<Label> derive_labels(const Dialogue& dialogue, int t,
                                 const Ontology& ontology,
                                 WarningLog* log = nullptr,
                                 const CorpusOptions& options = {});

// Context, acts, features and labels for one turn, truncated to the most
// recent options.context_cap tokens.
TurnExample build_turn_example(const Dialogue& dialogue, int t,
                               const Ontology& ontology,
                               WarningLog* log = nullptr,
                               const CorpusOptions& options = {});
std::vector<TurnExample> build_examples(std::span<const Dialogue> dialogues,
                                        const Ontology& ontology,
                                        WarningLog* log = nullptr,
                                        const CorpusOptions& options = {});

SlotValueStats slot_value_stats(std::span<const Dialogue> dialogues);

using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct Batch {
  std::vector<std::size_t> indices;  // into the example list
  MaskMatrix context_mask;           // batch x max |C_t|
  MaskMatrix act_mask;               // batch x max |A_t|
  std::vector<int> context_lengths;
  std::vector<int> act_lengths;

  std::size_t size() const { return indices.size(); }
};

// Deterministic shuffle by seed, then consecutive chunks of batch_size.
std::vector<Batch> make_batches(std::span<const TurnExample> examples,
                                std::size_t batch_size, std::uint64_t seed);

// Cached TurnExamples, one JSON record per line.
void write_examples(std::span<const TurnExample> examples, std::ostream& out);
std::vector<TurnExample> read_examples(std::istream& in,
                                       const Ontology& ontology);

}  // namespace actdst

#endif  // ACTDST_CORPUS_H_
