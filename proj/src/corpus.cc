#include "actdst/corpus.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "actdst/errors.h"
#include "actdst/text.h"

namespace actdst {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Role role) {
  return role == Role::kSys ? "SYS" : "USER";
}

std::string_view to_string(SpanType type) {
  switch (type) {
    case SpanType::kSpan:
      return "span";
    case SpanType::kNone:
      return "none";
    case SpanType::kDontCare:
      return "dont_care";
  }
  return "none";
}

void WarningLog::warn(std::string_view kind, std::string_view dialogue,
                      int turn, std::string_view message) {
  ++count_;
  ++by_kind_[std::string(kind)];
  if (sink_ == nullptr) return;
  json rec = {{"kind", kind},
              {"dialogue", dialogue},
              {"turn", turn},
              {"message", message}};
  *sink_ << rec.dump() << '\n';
}

std::size_t WarningLog::count(std::string_view kind) const {
  auto it = by_kind_.find(kind);
  return it == by_kind_.end() ? 0 : it->second;
}

namespace {

void check_turn(const Dialogue& d, int t) {
  if (t < 1 || t > static_cast<int>(d.turns.size()))
    throw std::out_of_range("turn " + std::to_string(t) +
                            " outside dialogue " + d.id);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct ActParse {
  std::string act;
  std::string domain;
};

ActParse split_act(std::string_view raw, bool strip_domain) {
  const auto dash = raw.find('-');
  if (strip_domain && dash != std::string_view::npos)
    return {std::string(raw.substr(dash + 1)), to_lower(raw.substr(0, dash))};
  return {std::string(raw), {}};
}

bool is_generic_act_domain(std::string_view d) {
  return d.empty() || d == "general" || d == "booking";
}

}  // namespace

std::vector<Dialogue> parse_dialogues(std::string_view text,
                                      const Ontology& ontology,
                                      WarningLog* log,
                                      const CorpusOptions& options) {
  std::vector<Dialogue> out;
  if (std::all_of(text.begin(), text.end(), [](char c) {
        return std::isspace(static_cast<unsigned char>(c));
      }))
    return out;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw DataError(std::string("dialogues: malformed document: ") + e.what());
  }
  const json* list = &doc;
  if (doc.is_object()) {
    if (!doc.contains("dialogues"))
      throw DataError("dialogues: object without a \"dialogues\" array");
    list = &doc["dialogues"];
  }
  if (!list->is_array()) throw DataError("dialogues: expected an array");

  WarningLog scratch;
  WarningLog& warn = log != nullptr ? *log : scratch;

  for (const json& jd : *list) {
    if (!jd.is_object() || !jd.contains("turns") || !jd["turns"].is_array())
      throw DataError("dialogues: dialogue without a \"turns\" array");
    Dialogue d;
    d.id = jd.value("id", std::string("dialogue-") + std::to_string(out.size()));
    bool drop = false;
    std::string drop_reason;
    int t = 0;
    for (const json& jt : jd["turns"]) {
      ++t;
      if (!jt.is_object()) throw DataError("dialogues: malformed turn in " + d.id);
      Turn turn;
      const json sys = jt.value("system", json(""));
      const json usr = jt.value("user", json(""));
      if (!sys.is_string() || !usr.is_string())
        throw DataError("dialogues: utterances must be strings in " + d.id);
      turn.system_utterance = tokenize(sys.get<std::string>());
      turn.user_utterance = tokenize(usr.get<std::string>());
      if (jt.contains("system_acts")) {
        if (!jt["system_acts"].is_array())
          throw DataError("dialogues: system_acts must be an array in " + d.id);
        for (const json& ja : jt["system_acts"]) {
          if (!ja.is_string())
            throw DataError("dialogues: malformed act in " + d.id);
          const ActParse p =
              split_act(ja.get<std::string>(), options.strip_act_domain);
          if (!is_generic_act_domain(p.domain) &&
              !ontology.has_domain(p.domain)) {
            drop = true;
            drop_reason = "act domain " + p.domain;
            continue;
          }
          const auto act = ontology.find_act(p.act);
          if (!act)
            throw DataError("dialogues: act \"" + ja.get<std::string>() +
                            "\" outside the inventory in " + d.id);
          turn.system_acts.push_back(*act);
        }
      }
      if (jt.contains("state")) {
        if (!jt["state"].is_object())
          throw DataError("dialogues: state must be an object in " + d.id);
        for (const auto& [key, val] : jt["state"].items()) {
          if (!val.is_string())
            throw DataError("dialogues: state value must be a string in " +
                            d.id);
          const auto id = parse_slot_key(key);
          if (!id) throw DataError("dialogues: malformed state key " + key);
          if (!ontology.has_domain(id->domain)) {
            drop = true;
            drop_reason = "state domain " + id->domain;
            continue;
          }
          if (!ontology.index_of(id->domain, id->slot)) {
            warn.warn("unknown_slot", d.id, t, key);
            continue;
          }
          const std::string v = canonical_value(val.get<std::string>());
          if (v == kNoneValue) continue;
          turn.gold_state[id->key()] = v;
        }
      }
      d.turns.push_back(std::move(turn));
    }
    if (drop) {
      warn.warn("unsupported_domain", d.id, 0, drop_reason);
      continue;
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Dialogue> load_dialogues(const std::filesystem::path& path,
                                     const Ontology& ontology,
                                     WarningLog* log,
                                     const CorpusOptions& options) {
  return parse_dialogues(read_file(path), ontology, log, options);
}

void save_dialogues(const std::vector<Dialogue>& dialogues,
                    const std::filesystem::path& path) {
  ordered_json list = ordered_json::array();
  for (const Dialogue& d : dialogues) {
    ordered_json jd;
    jd["id"] = d.id;
    jd["turns"] = ordered_json::array();
    for (const Turn& t : d.turns) {
      ordered_json jt;
      jt["system"] = join_tokens(t.system_utterance);
      jt["user"] = join_tokens(t.user_utterance);
      jt["system_acts"] = t.system_acts;
      jt["state"] = ordered_json::object();
      for (const auto& [k, v] : t.gold_state) jt["state"][k] = v;
      jd["turns"].push_back(std::move(jt));
    }
    list.push_back(std::move(jd));
  }
  std::ofstream out(path);
  if (!out) throw MissingFileError(path.string());
  out << list.dump(1) << '\n';
}

std::pair<std::vector<std::string>, std::vector<Role>> build_context(
    const Dialogue& dialogue, int t) {
  check_turn(dialogue, t);
  std::vector<std::string> tokens;
  std::vector<Role> roles;
  for (int i = 0; i < t; ++i) {
    const Turn& turn = dialogue.turns[static_cast<std::size_t>(i)];
    for (const auto& tok : turn.system_utterance) {
      tokens.push_back(tok);
      roles.push_back(Role::kSys);
    }
    for (const auto& tok : turn.user_utterance) {
      tokens.push_back(tok);
      roles.push_back(Role::kUser);
    }
  }
  return {std::move(tokens), std::move(roles)};
}

ActSequence build_act_sequence(const Dialogue& dialogue, int t) {
  check_turn(dialogue, t);
  ActSequence seq;
  for (int i = 0; i < t; ++i)
    for (const auto& a : dialogue.turns[static_cast<std::size_t>(i)].system_acts) {
      seq.names.push_back(a);
      seq.turn_index.push_back(i + 1);
    }
  return seq;
}

namespace {

bool matches_at(std::span<const std::string> context,
                std::span<const std::string> value, std::size_t start) {
  if (value.empty() || start + value.size() > context.size()) return false;
  for (std::size_t k = 0; k < value.size(); ++k)
    if (context[start + k] != value[k]) return false;
  return true;
}

}  // namespace

Eigen::MatrixXd exact_match_features(std::span<const std::string> context,
                                     const Ontology& ontology) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(context.size()),
      static_cast<Eigen::Index>(ontology.size()));
  for (std::size_t m = 0; m < ontology.size(); ++m) {
    for (const std::string& v : ontology.slot(m).values) {
      const std::vector<std::string> vt = tokenize(v);
      for (std::size_t s = 0; s + vt.size() <= context.size(); ++s) {
        if (!matches_at(context, vt, s)) continue;
        for (std::size_t k = 0; k < vt.size(); ++k)
          out(static_cast<Eigen::Index>(s + k), static_cast<Eigen::Index>(m)) =
              1.0;
      }
    }
  }
  return out;
}

std::optional<std::pair<int, int>> find_value_span(
    std::span<const std::string> context, std::string_view value,
    SpanChoice choice) {
  const std::vector<std::string> vt = tokenize(value);
  if (vt.empty() || vt.size() > context.size()) return std::nullopt;
  const std::size_t last = context.size() - vt.size();
  auto found = [&](std::size_t s) {
    return std::make_pair(static_cast<int>(s),
                          static_cast<int>(s + vt.size() - 1));
  };
  if (choice == SpanChoice::kFirst) {
    for (std::size_t s = 0; s <= last; ++s)
      if (matches_at(context, vt, s)) return found(s);
  } else {
    for (std::size_t s = last + 1; s-- > 0;)
      if (matches_at(context, vt, s)) return found(s);
  }
  return std::nullopt;
}

namespace {

std::vector<Label> labels_for_context(const Dialogue& dialogue, int t,
                                      std::span<const std::string> context,
                                      const Ontology& ontology, WarningLog& log,
                                      const CorpusOptions& options) {
  const Turn& turn = dialogue.turns[static_cast<std::size_t>(t - 1)];
  std::vector<Label> labels;
  labels.reserve(ontology.size());
  for (std::size_t m = 0; m < ontology.size(); ++m) {
    const SlotSpec& spec = ontology.slot(m);
    const OptionSet opts = option_set(ontology, m);
    auto it = turn.gold_state.find(spec.id.key());
    const std::string gold =
        it == turn.gold_state.end() ? std::string(kNoneValue) : it->second;
    Label label;
    label.kind = spec.kind;
    if (spec.kind == SlotKind::kCategorical) {
      auto idx = opts.index_of(gold);
      if (!idx) {
        log.warn("ontology_mismatch", dialogue.id, t,
                 spec.id.key() + "=" + gold);
        idx = opts.index_of(kNoneValue);
      }
      label.value_index = static_cast<int>(*idx);
    } else if (gold == kNoneValue) {
      label.span_type = SpanType::kNone;
    } else if (gold == kDontCareValue) {
      label.span_type = SpanType::kDontCare;
    } else if (auto span = find_value_span(context, gold, options.span_choice)) {
      label.span_type = SpanType::kSpan;
      label.start = span->first;
      label.end = span->second;
    } else {
      log.warn("span_not_found", dialogue.id, t, spec.id.key() + "=" + gold);
      label.span_type = SpanType::kNone;
    }
    labels.push_back(label);
  }
  return labels;
}

}  // namespace

std::vector<Label> derive_labels(const Dialogue& dialogue, int t,
                                 const Ontology& ontology, WarningLog* log,
                                 const CorpusOptions& options) {
  check_turn(dialogue, t);
  WarningLog scratch;
  const auto context = build_context(dialogue, t).first;
  return labels_for_context(dialogue, t, context, ontology,
                            log != nullptr ? *log : scratch, options);
}

TurnExample build_turn_example(const Dialogue& dialogue, int t,
                               const Ontology& ontology, WarningLog* log,
                               const CorpusOptions& options) {
  check_turn(dialogue, t);
  WarningLog scratch;
  WarningLog& warn = log != nullptr ? *log : scratch;
  TurnExample ex;
  ex.dialogue_id = dialogue.id;
  ex.turn = t;
  auto [tokens, roles] = build_context(dialogue, t);
  std::size_t cut = 0;
  if (options.context_cap > 0 && tokens.size() > options.context_cap)
    cut = tokens.size() - options.context_cap;

  // Spans are chosen on the full context, then shifted into the window.
  ex.labels = labels_for_context(dialogue, t, tokens, ontology, warn, options);
  const Turn& turn = dialogue.turns[static_cast<std::size_t>(t - 1)];
  for (std::size_t m = 0; m < ontology.size(); ++m) {
    Label& l = ex.labels[m];
    if (l.span_type != SpanType::kSpan || l.kind != SlotKind::kNonCategorical)
      continue;
    if (static_cast<std::size_t>(l.start) < cut) {
      const std::string key = ontology.slot(m).id.key();
      const auto gold = turn.gold_state.at(key);
      // A later occurrence may still sit inside the window.
      std::span<const std::string> window(tokens.data() + cut,
                                          tokens.size() - cut);
      if (auto span = find_value_span(window, gold, options.span_choice)) {
        l.start = span->first;
        l.end = span->second;
      } else {
        warn.warn("span_truncated", dialogue.id, t, key + "=" + gold);
        l = Label{SlotKind::kNonCategorical, -1, SpanType::kNone, -1, -1};
      }
    } else {
      l.start -= static_cast<int>(cut);
      l.end -= static_cast<int>(cut);
    }
  }
  ex.context.assign(tokens.begin() + static_cast<std::ptrdiff_t>(cut),
                    tokens.end());
  ex.roles.assign(roles.begin() + static_cast<std::ptrdiff_t>(cut),
                  roles.end());
  ex.acts = build_act_sequence(dialogue, t);
  ex.exact = exact_match_features(ex.context, ontology);
  ex.gold_state.reserve(ontology.size());
  for (const SlotSpec& s : ontology.slots()) {
    auto it = turn.gold_state.find(s.id.key());
    ex.gold_state.push_back(it == turn.gold_state.end() ? std::string(kNoneValue)
                                                        : it->second);
  }
  return ex;
}

std::vector<TurnExample> build_examples(std::span<const Dialogue> dialogues,
                                        const Ontology& ontology,
                                        WarningLog* log,
                                        const CorpusOptions& options) {
  std::vector<TurnExample> out;
  for (const Dialogue& d : dialogues)
    for (int t = 1; t <= static_cast<int>(d.turns.size()); ++t)
      out.push_back(build_turn_example(d, t, ontology, log, options));
  return out;
}

SlotValueStats slot_value_stats(std::span<const Dialogue> dialogues) {
  SlotValueStats stats;
  for (const Dialogue& d : dialogues)
    for (const Turn& t : d.turns)
      for (const auto& [key, value] : t.gold_state) {
        if (is_special_value(value)) continue;
        auto& c = stats.counts[key];
        ++c.second;
        if (is_number_or_time(value)) ++c.first;
      }
  return stats;
}

std::vector<Batch> make_batches(std::span<const TurnExample> examples,
                                std::size_t batch_size, std::uint64_t seed) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit index draw keeps the order independent of
  // the standard library's shuffle implementation.
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<Batch> batches;
  for (std::size_t b = 0; b < order.size(); b += batch_size) {
    Batch batch;
    const std::size_t n = std::min(batch_size, order.size() - b);
    batch.indices.assign(order.begin() + static_cast<std::ptrdiff_t>(b),
                         order.begin() + static_cast<std::ptrdiff_t>(b + n));
    int max_ctx = 0, max_act = 0;
    for (std::size_t i : batch.indices) {
      batch.context_lengths.push_back(
          static_cast<int>(examples[i].context.size()));
      batch.act_lengths.push_back(static_cast<int>(examples[i].acts.size()));
      max_ctx = std::max(max_ctx, batch.context_lengths.back());
      max_act = std::max(max_act, batch.act_lengths.back());
    }
    batch.context_mask = MaskMatrix::Zero(static_cast<Eigen::Index>(n), max_ctx);
    batch.act_mask = MaskMatrix::Zero(static_cast<Eigen::Index>(n), max_act);
    for (std::size_t r = 0; r < n; ++r) {
      const auto row = static_cast<Eigen::Index>(r);
      batch.context_mask.row(row).head(batch.context_lengths[r]).setOnes();
      batch.act_mask.row(row).head(batch.act_lengths[r]).setOnes();
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

void write_examples(std::span<const TurnExample> examples, std::ostream& out) {
  for (const TurnExample& ex : examples) {
    ordered_json rec;
    rec["dialogue_id"] = ex.dialogue_id;
    rec["turn"] = ex.turn;
    rec["context"] = ex.context;
    std::vector<std::string> roles;
    for (Role r : ex.roles) roles.emplace_back(to_string(r));
    rec["roles"] = roles;
    rec["acts"] = ex.acts.names;
    rec["act_turns"] = ex.acts.turn_index;
    rec["gold_state"] = ex.gold_state;
    ordered_json labels = ordered_json::array();
    for (const Label& l : ex.labels) {
      if (l.kind == SlotKind::kCategorical) {
        labels.push_back({{"value_index", l.value_index}});
      } else {
        ordered_json jl = {{"span_type", to_string(l.span_type)}};
        if (l.span_type == SpanType::kSpan) {
          jl["start"] = l.start;
          jl["end"] = l.end;
        }
        labels.push_back(std::move(jl));
      }
    }
    rec["labels"] = std::move(labels);
    out << rec.dump() << '\n';
  }
}

std::vector<TurnExample> read_examples(std::istream& in,
                                       const Ontology& ontology) {
  std::vector<TurnExample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
      TurnExample ex;
      ex.dialogue_id = rec.at("dialogue_id").get<std::string>();
      ex.turn = rec.at("turn").get<int>();
      ex.context = rec.at("context").get<std::vector<std::string>>();
      for (const auto& r : rec.at("roles"))
        ex.roles.push_back(r.get<std::string>() == "SYS" ? Role::kSys
                                                         : Role::kUser);
      ex.acts.names = rec.at("acts").get<std::vector<std::string>>();
      ex.acts.turn_index = rec.at("act_turns").get<std::vector<int>>();
      ex.gold_state = rec.at("gold_state").get<std::vector<std::string>>();
      for (const auto& jl : rec.at("labels")) {
        Label l;
        if (jl.contains("value_index")) {
          l.kind = SlotKind::kCategorical;
          l.value_index = jl["value_index"].get<int>();
        } else {
          l.kind = SlotKind::kNonCategorical;
          const std::string t = jl.at("span_type").get<std::string>();
          l.span_type = t == "span"   ? SpanType::kSpan
                        : t == "none" ? SpanType::kNone
                                      : SpanType::kDontCare;
          if (l.span_type == SpanType::kSpan) {
            l.start = jl.at("start").get<int>();
            l.end = jl.at("end").get<int>();
          }
        }
        ex.labels.push_back(l);
      }
      if (ex.labels.size() != ontology.size() ||
          ex.gold_state.size() != ontology.size())
        throw DataError("examples: record does not match the ontology");
      ex.exact = exact_match_features(ex.context, ontology);
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw DataError(std::string("examples: malformed record: ") + e.what());
    }
  }
  return out;
}

}  // namespace actdst
