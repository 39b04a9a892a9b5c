#include "actdst/encoder.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "actdst/errors.h"
#include "actdst/text.h"

namespace actdst {

std::string_view to_string(ProviderKind kind) {
  return kind == ProviderKind::kTrainableLookup ? "trainable_lookup"
                                                : "pretrained_contextual";
}

ProviderKind parse_provider_kind(std::string_view name) {
  const std::string n = to_lower(name);
  if (n == "trainable_lookup") return ProviderKind::kTrainableLookup;
  if (n == "pretrained_contextual" || n == "pretrained")
    return ProviderKind::kPretrainedContextual;
  throw ConfigError("unknown embedding provider: " + std::string(name));
}

Vocabulary::Vocabulary() { add("<unk>"); }

Vocabulary::Vocabulary(std::vector<std::string> items) {
  if (items.empty() || items.front() != "<unk>")
    throw DataError("vocabulary must start with <unk>");
  for (auto& item : items) {
    if (!index_.emplace(item, static_cast<int>(items_.size())).second)
      throw DataError("vocabulary: duplicate entry " + item);
    items_.push_back(std::move(item));
  }
}

int Vocabulary::add(std::string_view item) {
  auto it = index_.find(std::string(item));
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(items_.size());
  items_.emplace_back(item);
  index_.emplace(std::string(item), id);
  return id;
}

int Vocabulary::id(std::string_view item) const {
  auto it = index_.find(std::string(item));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view item) const {
  return index_.count(std::string(item)) > 0;
}

std::pair<Vocabulary, Vocabulary> build_vocabularies(
    std::span<const TurnExample> examples, const Ontology& ontology) {
  Vocabulary words;
  auto add_text = [&](std::string_view text) {
    for (const auto& t : tokenize(text)) words.add(t);
  };
  for (const std::string& d : ontology.domains()) add_text(d);
  for (std::size_t m = 0; m < ontology.size(); ++m) {
    add_text(ontology.slot(m).id.slot);
    for (const auto& v : ontology.slot(m).values) add_text(v);
  }
  add_text(kNoneValue);
  add_text(kDontCareValue);
  for (const std::string& a : ontology.acts()) add_text(a);
  for (const TurnExample& ex : examples)
    for (const auto& t : ex.context) words.add(t);

  Vocabulary chars;
  for (const std::string& w : words.items()) {
    if (w == "<unk>") continue;
    for (char c : w) chars.add(std::string(1, c));
  }
  return {std::move(words), std::move(chars)};
}

std::vector<int> EmbeddingConfig::channel_split() const {
  const int k = static_cast<int>(kernel_widths.size());
  std::vector<int> out(static_cast<std::size_t>(k), char_dim / k);
  out.back() += char_dim - (char_dim / k) * k;
  return out;
}

LookupProvider::LookupProvider(Vocabulary vocab, Parameter table,
                               ProviderKind kind)
    : vocab_(std::move(vocab)), table_(std::move(table)), kind_(kind) {
  if (table_.value.rows() != static_cast<Eigen::Index>(vocab_.size()))
    throw DataError("embedding table rows do not match the vocabulary");
}

Var LookupProvider::embed(Tape& tape, std::span<const std::string> tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab_.id(t));
  return tape.lookup(table_, ids);
}

std::unique_ptr<LookupProvider> make_trainable_lookup(const Vocabulary& vocab,
                                                      int dim,
                                                      std::uint64_t seed) {
  Parameter table = fan_in_parameter(
      "encoder.word", static_cast<Eigen::Index>(vocab.size()), dim, dim, seed);
  return std::make_unique<LookupProvider>(vocab, std::move(table),
                                          ProviderKind::kTrainableLookup);
}

std::unique_ptr<LookupProvider> load_pretrained_vectors(
    const std::filesystem::path& path, const Vocabulary& vocab, int dim) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path.string());
  Matrix table = Matrix::Zero(static_cast<Eigen::Index>(vocab.size()), dim);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string word;
    if (!(ss >> word)) continue;
    std::vector<double> v;
    double x;
    while (ss >> x) v.push_back(x);
    // word2vec text files start with a "count dim" header.
    if (lineno == 1 && v.size() == 1) continue;
    if (static_cast<int>(v.size()) != dim)
      throw DataError("pretrained vectors: line " + std::to_string(lineno) +
                      " has " + std::to_string(v.size()) + " values, expected " +
                      std::to_string(dim));
    const std::string key = to_lower(word);
    if (!vocab.contains(key)) continue;
    const int id = vocab.id(key);
    for (int c = 0; c < dim; ++c) table(id, c) = v[static_cast<std::size_t>(c)];
  }
  return std::make_unique<LookupProvider>(
      vocab, Parameter("encoder.word", std::move(table), /*train=*/false),
      ProviderKind::kPretrainedContextual);
}

GruParams make_gru(const std::string& prefix, int input_dim, int hidden,
                   std::uint64_t seed) {
  return GruParams{
      fan_in_parameter(prefix + ".W", input_dim, 3 * hidden, input_dim, seed),
      zero_parameter(prefix + ".b", 1, 3 * hidden),
      fan_in_parameter(prefix + ".Uzr", hidden, 2 * hidden, hidden, seed),
      fan_in_parameter(prefix + ".Uh", hidden, hidden, hidden, seed)};
}

Var run_gru(Tape& tape, GruParams& gru, Var input, bool reverse) {
  const Eigen::Index n = input.rows();
  const Eigen::Index h = gru.Uh.value.rows();
  if (n == 0) return tape.zeros(0, h);
  Var W = tape.param(gru.W);
  Var Uzr = tape.param(gru.Uzr);
  Var Uh = tape.param(gru.Uh);
  Var projected = broadcast_add(matmul(input, W), tape.param(gru.b));
  Var state = tape.zeros(1, h);
  std::vector<Var> states(static_cast<std::size_t>(n));
  for (Eigen::Index step = 0; step < n; ++step) {
    const Eigen::Index t = reverse ? n - 1 - step : step;
    Var x = row(projected, t);
    Var zr = sigmoid(add(slice_cols(x, 0, 2 * h), matmul(state, Uzr)));
    Var z = slice_cols(zr, 0, h);
    Var r = slice_cols(zr, h, h);
    Var candidate =
        tanh(add(slice_cols(x, 2 * h, h), matmul(hadamard(r, state), Uh)));
    // (1 - z) * h + z * candidate
    state = add(state, hadamard(z, sub(candidate, state)));
    states[static_cast<std::size_t>(t)] = state;
  }
  return vconcat(states, h);
}

Encoder::Encoder(const EmbeddingConfig& config, const Vocabulary& words,
                 const Vocabulary& chars, std::vector<std::string> acts,
                 std::uint64_t seed,
                 std::unique_ptr<EmbeddingProvider> provider)
    : config_(config), chars_(chars), acts_(std::move(acts)) {
  if (config_.w() % 2 != 0)
    throw ConfigError("word_dim + char_dim must be even (two GRU directions)");
  if (config_.kernel_widths.empty() ||
      static_cast<int>(config_.kernel_widths.size()) > config_.char_dim)
    throw ConfigError("char CNN needs 1..char_dim kernel widths");
  if (provider == nullptr)
    provider = make_trainable_lookup(words, config_.word_dim, seed);
  if (provider->dim() != config_.word_dim)
    throw ConfigError("embedding provider dimension " +
                      std::to_string(provider->dim()) + " != word_dim " +
                      std::to_string(config_.word_dim));
  config_.provider = provider->kind();
  provider_ = std::move(provider);

  const int ci = config_.char_input_dim;
  char_table_ = fan_in_parameter("encoder.char",
                                 static_cast<Eigen::Index>(chars_.size()), ci,
                                 ci, seed);
  const std::vector<int> channels = config_.channel_split();
  for (std::size_t k = 0; k < config_.kernel_widths.size(); ++k) {
    const int width = config_.kernel_widths[k];
    const std::string name = "encoder.conv" + std::to_string(width);
    conv_w_.push_back(fan_in_parameter(name + ".w", width * ci, channels[k],
                                       width * ci, seed));
    conv_b_.push_back(zero_parameter(name + ".b", 1, channels[k]));
  }
  role_table_ = fan_in_parameter("encoder.role", 2, config_.role_dim,
                                 config_.role_dim, seed);
  if (config_.act_table == ActTable::kDedicated)
    act_table_ = fan_in_parameter("encoder.act",
                                  static_cast<Eigen::Index>(acts_.size()),
                                  config_.w(), config_.w(), seed);
  const int hidden = config_.w() / 2;
  fwd_ = make_gru("encoder.gru_fwd", config_.input_dim(), hidden, seed);
  bwd_ = make_gru("encoder.gru_bwd", config_.input_dim(), hidden, seed);
}

std::vector<Parameter*> Encoder::parameters() {
  std::vector<Parameter*> out = provider_->parameters();
  out.push_back(&char_table_);
  for (std::size_t k = 0; k < conv_w_.size(); ++k) {
    out.push_back(&conv_w_[k]);
    out.push_back(&conv_b_[k]);
  }
  out.push_back(&role_table_);
  if (config_.act_table == ActTable::kDedicated) out.push_back(&act_table_);
  for (Parameter* p : fwd_.parameters()) out.push_back(p);
  for (Parameter* p : bwd_.parameters()) out.push_back(p);
  return out;
}

Var Encoder::char_cnn(Tape& tape, std::string_view token) {
  const std::string key = "char:" + std::string(token);
  auto& memo = tape.memo();
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  Var out;
  if (token.empty()) {
    out = tape.zeros(1, config_.char_dim);
  } else {
    std::vector<int> ids;
    for (char c : token) ids.push_back(chars_.id(std::string(1, c)));
    // Zero rows appended so the widest kernel fits at least once.
    const int widest = *std::max_element(config_.kernel_widths.begin(),
                                         config_.kernel_widths.end());
    Var embedded = tape.lookup(char_table_, ids);
    embedded = pad_rows(embedded, std::max<Eigen::Index>(embedded.rows(), widest));
    std::vector<Var> pooled;
    for (std::size_t k = 0; k < conv_w_.size(); ++k) {
      Var windows = unfold_rows(embedded, config_.kernel_widths[k]);
      Var conv = broadcast_add(matmul(windows, tape.param(conv_w_[k])),
                               tape.param(conv_b_[k]));
      pooled.push_back(max_rows(conv));
    }
    out = hconcat(pooled);
  }
  memo.emplace(key, out);
  return out;
}

Var Encoder::word_and_char(Tape& tape, std::span<const std::string> tokens) {
  Var words = provider_->embed(tape, tokens);
  std::vector<Var> char_rows;
  char_rows.reserve(tokens.size());
  for (const auto& t : tokens) char_rows.push_back(char_cnn(tape, t));
  Var chars = char_rows.empty() ? tape.zeros(0, config_.char_dim)
                                : vconcat(char_rows, config_.char_dim);
  const Var parts[] = {words, chars};
  return hconcat(parts);
}

Var Encoder::embed_tokens(Tape& tape, std::span<const std::string> tokens,
                          std::span<const Role> roles, const Matrix& exact) {
  if (roles.size() != tokens.size() ||
      exact.rows() != static_cast<Eigen::Index>(tokens.size()))
    throw std::invalid_argument("embed_tokens: tokens, roles and exact-match "
                                "rows must have the same length");
  if (exact.cols() != config_.exact_dim)
    throw std::invalid_argument("embed_tokens: exact-match width " +
                                std::to_string(exact.cols()) + " != " +
                                std::to_string(config_.exact_dim));
  if (tokens.empty()) return tape.zeros(0, config_.input_dim());
  std::vector<int> role_ids;
  for (Role r : roles) role_ids.push_back(static_cast<int>(r));
  const Var parts[] = {word_and_char(tape, tokens),
                       tape.lookup(role_table_, role_ids),
                       tape.constant(exact)};
  return hconcat(parts);
}

EncodedContext Encoder::encode_context(Tape& tape, Var input,
                                       Eigen::Index padded_len) {
  const Eigen::Index n = input.rows();
  const Eigen::Index total = std::max(n, padded_len);
  EncodedContext out;
  out.mask.assign(static_cast<std::size_t>(total), 0);
  std::fill(out.mask.begin(), out.mask.begin() + n, 1);
  if (n == 0) {
    out.X = tape.zeros(total, config_.w());
    return out;
  }
  const Var halves[] = {run_gru(tape, fwd_, input, false),
                        run_gru(tape, bwd_, input, true)};
  out.X = pad_rows(hconcat(halves), total);
  return out;
}

Var Encoder::embed_text(Tape& tape, std::string_view text) {
  const std::string key = "text:" + std::string(text);
  auto& memo = tape.memo();
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  std::vector<std::string> tokens = tokenize(text);
  if (tokens.empty()) tokens.emplace_back(text);
  Var out = mean_rows(word_and_char(tape, tokens));
  memo.emplace(key, out);
  return out;
}

Var Encoder::embed_acts(Tape& tape, std::span<const std::string> acts) {
  if (acts.empty()) return tape.zeros(0, config_.w());
  std::vector<Var> rows;
  std::vector<int> ids;
  for (const auto& a : acts) {
    auto it = std::find(acts_.begin(), acts_.end(), a);
    if (it == acts_.end())
      throw DataError("unknown act name: " + std::string(a));
    ids.push_back(static_cast<int>(it - acts_.begin()));
    if (config_.act_table == ActTable::kShared)
      rows.push_back(embed_text(tape, a));
  }
  if (config_.act_table == ActTable::kDedicated)
    return tape.lookup(act_table_, ids);
  return vconcat(rows, config_.w());
}

SlotQuery Encoder::embed_slot_query(Tape& tape, std::string_view domain,
                                    std::string_view slot) {
  SlotQuery q;
  q.domain = embed_text(tape, domain);
  q.slot = embed_text(tape, slot);
  q.query = add(q.domain, q.slot);
  return q;
}

Var Encoder::embed_options(Tape& tape, const SlotQuery& query,
                           std::span<const std::string> values) {
  if (values.empty())
    throw std::invalid_argument("embed_options: empty value list");
  std::vector<Var> rows;
  rows.reserve(values.size());
  for (const auto& v : values) rows.push_back(embed_text(tape, v));
  return broadcast_add(vconcat(rows, config_.w()), query.query);
}

}  // namespace actdst
