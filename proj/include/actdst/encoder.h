// Context encoding and the embeddings every head queries: X^e from a
// bidirectional GRU over [word; char-CNN; role; exact-match] inputs, act
// embeddings, domain/slot query vectors and categorical option embeddings.

#ifndef ACTDST_ENCODER_H_
#define ACTDST_ENCODER_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "actdst/autodiff.h"
#include "actdst/corpus.h"

namespace actdst {

enum class ProviderKind { kPretrainedContextual, kTrainableLookup };
enum class ActTable { kShared, kDedicated };

std::string_view to_string(ProviderKind kind);
ProviderKind parse_provider_kind(std::string_view name);

class Vocabulary {
 public:
  static constexpr int kUnk = 0;

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> items);

  int add(std::string_view item);
  // kUnk for unseen items.
  int id(std::string_view item) const;
  bool contains(std::string_view item) const;
  std::size_t size() const { return items_.size(); }
  const std::vector<std::string>& items() const { return items_; }

  bool operator==(const Vocabulary& o) const { return items_ == o.items_; }

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, int> index_;
};

// Words from contexts, act names, domain/slot names and every option string;
// characters from all of those words.
std::pair<Vocabulary, Vocabulary> build_vocabularies(
    std::span<const TurnExample> examples, const Ontology& ontology);

struct EmbeddingConfig {
  int word_dim = 512;
  int char_dim = 100;
  int role_dim = 128;
  int exact_dim = 0;  // M, the ontology size
  int char_input_dim = 16;
  std::vector<int> kernel_widths = {2, 3, 4};
  ProviderKind provider = ProviderKind::kTrainableLookup;
  ActTable act_table = ActTable::kShared;

  int w() const { return word_dim + char_dim; }
  int input_dim() const { return w() + role_dim + exact_dim; }
  // Channels per kernel width: char_dim split evenly, remainder to the last.
  std::vector<int> channel_split() const;
};

// Word-embedding source. Given tokens, returns |tokens| x dim().
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual ProviderKind kind() const = 0;
  virtual int dim() const = 0;
  virtual bool trainable() const = 0;
  virtual Var embed(Tape& tape, std::span<const std::string> tokens) = 0;
  virtual std::vector<Parameter*> parameters() = 0;
};

// Table lookup keyed by a vocabulary. Trainable for TRAINABLE_LOOKUP; frozen
// when it holds pretrained vectors.
class LookupProvider final : public EmbeddingProvider {
 public:
  LookupProvider(Vocabulary vocab, Parameter table, ProviderKind kind);

  ProviderKind kind() const override { return kind_; }
  int dim() const override { return static_cast<int>(table_.value.cols()); }
  bool trainable() const override { return table_.trainable; }
  Var embed(Tape& tape, std::span<const std::string> tokens) override;
  std::vector<Parameter*> parameters() override { return {&table_}; }

  const Vocabulary& vocabulary() const { return vocab_; }

 private:
  Vocabulary vocab_;
  Parameter table_;
  ProviderKind kind_;
};

std::unique_ptr<LookupProvider> make_trainable_lookup(const Vocabulary& vocab,
                                                      int dim,
                                                      std::uint64_t seed);
// Reads "word v1 v2 ... vd" lines. Vocabulary words absent from the file
// keep a zero row. The table is frozen.
std::unique_ptr<LookupProvider> load_pretrained_vectors(
    const std::filesystem::path& path, const Vocabulary& vocab, int dim);

struct EncodedContext {
  Var X;     // padded length x w
  Mask mask; // 1 for real tokens
};

struct SlotQuery {
  Var domain;  // q^d, 1 x w
  Var slot;    // q^s, 1 x w
  Var query;   // q^d + q^s
};

// One GRU direction. Gates are laid out [z | r | candidate] in W and b.
struct GruParams {
  Parameter W;    // input_dim x 3H
  Parameter b;    // 1 x 3H
  Parameter Uzr;  // H x 2H
  Parameter Uh;   // H x H

  std::vector<Parameter*> parameters() { return {&W, &b, &Uzr, &Uh}; }
};

GruParams make_gru(const std::string& prefix, int input_dim, int hidden,
                   std::uint64_t seed);
// Hidden states for rows of `input` in order, n x H.
Var run_gru(Tape& tape, GruParams& gru, Var input, bool reverse);

class Encoder {
 public:
  Encoder(const EmbeddingConfig& config, const Vocabulary& words,
          const Vocabulary& chars, std::vector<std::string> acts,
          std::uint64_t seed,
          std::unique_ptr<EmbeddingProvider> provider = nullptr);

  const EmbeddingConfig& config() const { return config_; }
  int w() const { return config_.w(); }

  // 1 x char_dim. Empty token -> zero vector.
  Var char_cnn(Tape& tape, std::string_view token);
  // |tokens| x (w + role_dim + exact_dim).
  Var embed_tokens(Tape& tape, std::span<const std::string> tokens,
                   std::span<const Role> roles, const Matrix& exact);
  // input: |C_t| x input_dim. Output padded with zero rows to padded_len
  // (0 = no padding); mask marks the real rows.
  EncodedContext encode_context(Tape& tape, Var input,
                                Eigen::Index padded_len = 0);
  // |A_t| x w; 0 x w for an empty sequence.
  Var embed_acts(Tape& tape, std::span<const std::string> acts);
  SlotQuery embed_slot_query(Tape& tape, std::string_view domain,
                             std::string_view slot);
  // (N+2) x w, row i = q^d + q^s + w^v_i.
  Var embed_options(Tape& tape, const SlotQuery& query,
                    std::span<const std::string> values);
  // Mean of [word; char] rows over the tokens of `text`, 1 x w.
  Var embed_text(Tape& tape, std::string_view text);

  EmbeddingProvider& provider() { return *provider_; }
  GruParams& forward_gru() { return fwd_; }
  GruParams& backward_gru() { return bwd_; }
  std::vector<Parameter*> parameters();

 private:
  Var word_and_char(Tape& tape, std::span<const std::string> tokens);

  EmbeddingConfig config_;
  Vocabulary chars_;
  std::vector<std::string> acts_;
  std::unique_ptr<EmbeddingProvider> provider_;
  Parameter char_table_;
  std::vector<Parameter> conv_w_;
  std::vector<Parameter> conv_b_;
  Parameter role_table_;
  Parameter act_table_;  // used only with ActTable::kDedicated
  GruParams fwd_;
  GruParams bwd_;
};

}  // namespace actdst

#endif  // ACTDST_ENCODER_H_
