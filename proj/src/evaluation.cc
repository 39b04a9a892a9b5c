#include "actdst/evaluation.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "actdst/errors.h"
#include "actdst/text.h"

namespace actdst {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

void check_aligned(std::span<const DialogueState> predictions,
                   std::span<const DialogueState> golds) {
  if (predictions.size() != golds.size())
    throw std::invalid_argument("metrics: " +
                                std::to_string(predictions.size()) +
                                " predictions for " +
                                std::to_string(golds.size()) + " gold turns");
  for (std::size_t i = 0; i < golds.size(); ++i)
    if (predictions[i].size() != golds[i].size())
      throw std::invalid_argument("metrics: turn " + std::to_string(i) +
                                  " has " +
                                  std::to_string(predictions[i].size()) +
                                  " predicted slots and " +
                                  std::to_string(golds[i].size()) + " gold");
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Canonicalizer::Canonicalizer(std::map<std::string, std::string> aliases)
    : aliases_(std::move(aliases)) {}

Canonicalizer Canonicalizer::with_defaults() {
  return Canonicalizer({
      {"", "none"},
      {"not mentioned", "none"},
      {"dontcare", "dont_care"},
      {"dont care", "dont_care"},
      {"don t care", "dont_care"},
      {"do n t care", "dont_care"},
      {"any", "dont_care"},
      {"center", "centre"},
      {"guesthouse", "guest house"},
      {"guesthouses", "guest house"},
      {"concert hall", "concerthall"},
      {"night club", "nightclub"},
      {"swimming pool", "swimmingpool"},
  });
}

Canonicalizer Canonicalizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (!j.is_object() || j.value("schema_version", 0) != 1 ||
      !j.contains("aliases") || !j["aliases"].is_object())
    throw DataError(path.string() +
                    ": expected {\"schema_version\": 1, \"aliases\": {...}}");
  Canonicalizer base = with_defaults();
  std::map<std::string, std::string> aliases = base.aliases_;
  Canonicalizer normalize;  // no aliases: normalization only
  for (auto& [from, to] : j["aliases"].items()) {
    if (!to.is_string())
      throw DataError(path.string() + ": alias for \"" + from +
                      "\" is not a string");
    aliases[normalize(from)] = normalize(to.get<std::string>());
  }
  return Canonicalizer(std::move(aliases));
}

std::string Canonicalizer::operator()(std::string_view value) const {
  std::string cleaned;
  cleaned.reserve(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) {
    const char c = static_cast<char>(
        std::tolower(static_cast<unsigned char>(value[i])));
    const bool word = std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    const bool joins_digits = (c == ':' || c == '.') && i > 0 &&
                              i + 1 < value.size() && is_digit(value[i - 1]) &&
                              is_digit(value[i + 1]);
    cleaned += (word || joins_digits) ? c : ' ';
  }
  std::istringstream ss(cleaned);
  std::string token, out;
  while (ss >> token) {
    if (token == "a" || token == "an" || token == "the") continue;
    if (!out.empty()) out += ' ';
    out += token;
  }
  auto it = aliases_.find(out);
  return it == aliases_.end() ? out : it->second;
}

double joint_goal_accuracy(std::span<const DialogueState> predictions,
                           std::span<const DialogueState> golds,
                           const Canonicalizer& canon) {
  check_aligned(predictions, golds);
  if (golds.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t t = 0; t < golds.size(); ++t) {
    bool all = true;
    for (std::size_t m = 0; m < golds[t].size() && all; ++m)
      all = canon(predictions[t][m]) == canon(golds[t][m]);
    correct += all ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(golds.size());
}

double slot_goal_accuracy(std::span<const DialogueState> predictions,
                          std::span<const DialogueState> golds,
                          const Canonicalizer& canon) {
  check_aligned(predictions, golds);
  std::size_t correct = 0, cells = 0;
  for (std::size_t t = 0; t < golds.size(); ++t) {
    for (std::size_t m = 0; m < golds[t].size(); ++m) {
      correct += canon(predictions[t][m]) == canon(golds[t][m]) ? 1 : 0;
      ++cells;
    }
  }
  return cells == 0 ? 0.0
                    : static_cast<double>(correct) / static_cast<double>(cells);
}

std::vector<TurnPrediction> predict_examples(
    Model& model, std::span<const TurnExample> examples) {
  std::vector<TurnPrediction> out;
  out.reserve(examples.size());
  for (const TurnExample& ex : examples) out.push_back(model.predict(ex));
  return out;
}

Metrics score(std::span<const TurnPrediction> predictions,
              std::span<const TurnExample> examples,
              const Canonicalizer& canon) {
  if (predictions.size() != examples.size())
    throw std::invalid_argument("score: predictions and examples differ in "
                                "length");
  std::vector<DialogueState> pred, gold;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    pred.push_back(predictions[i].state);
    gold.push_back(examples[i].gold_state);
  }
  return {joint_goal_accuracy(pred, gold, canon),
          slot_goal_accuracy(pred, gold, canon), examples.size()};
}

Metrics evaluate(Model& model, std::span<const TurnExample> examples,
                 const Canonicalizer& canon) {
  return score(predict_examples(model, examples), examples, canon);
}

DialogueState predict_turn(Model& model, const Dialogue& dialogue, int t,
                           const CorpusOptions& options) {
  TurnExample ex =
      build_turn_example(dialogue, t, model.ontology(), nullptr, options);
  return model.predict(ex).state;
}

void write_predictions(std::ostream& out,
                       std::span<const TurnPrediction> predictions,
                       std::span<const TurnExample> examples,
                       const Ontology& ontology) {
  if (predictions.size() != examples.size())
    throw std::invalid_argument("write_predictions: length mismatch");
  for (std::size_t i = 0; i < examples.size(); ++i) {
    for (std::size_t m = 0; m < ontology.size(); ++m) {
      ordered_json j;
      j["dialogue_id"] = examples[i].dialogue_id;
      j["turn"] = examples[i].turn;
      j["slot"] = ontology.slot(m).id.key();
      j["predicted"] = predictions[i].state.at(m);
      j["gold"] = examples[i].gold_state.at(m);
      out << j.dump() << "\n";
    }
  }
}

std::string metrics_summary(const Metrics& metrics) {
  ordered_json j;
  j["joint"] = metrics.joint;
  j["slot"] = metrics.slot;
  j["n_turns"] = metrics.n_turns;
  return j.dump(2) + "\n";
}

std::string AblationReport::to_json() const {
  ordered_json j;
  j["dev_joint_with"] = with_acts.joint;
  j["dev_joint_without"] = without_acts.joint;
  j["delta_joint"] = delta_joint();
  j["dev_slot_with"] = with_acts.slot;
  j["dev_slot_without"] = without_acts.slot;
  j["delta_slot"] = delta_slot();
  j["n_turns"] = with_acts.n_turns;
  return j.dump(2) + "\n";
}

std::string AblationReport::to_table() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << std::left << std::setw(20) << "model" << std::setw(18) << "joint"
      << "slot\n";
  out << std::setw(20) << "full" << std::setw(18) << 100 * with_acts.joint
      << 100 * with_acts.slot << "\n";
  std::ostringstream joint, slot;
  joint << std::fixed << std::setprecision(2) << 100 * without_acts.joint
        << "(" << std::showpos << 100 * delta_joint() << ")";
  slot << std::fixed << std::setprecision(2) << 100 * without_acts.slot << "("
       << std::showpos << 100 * delta_slot() << ")";
  out << std::setw(20) << "w/o dialogue acts" << std::setw(18) << joint.str()
      << slot.str() << "\n";
  return out.str();
}

void check_ablation_pair(const RunConfig& with_acts,
                         const RunConfig& without_acts) {
  if (!same_except_ablation(with_acts, without_acts))
    throw ConfigError("ablation configs differ in more than act_attention");
  if (!with_acts.act_attention || without_acts.act_attention)
    throw ConfigError("ablation needs act_attention on in the first config "
                      "and off in the second");
}

AblationReport ablation_run(const RunConfig& with_acts,
                            const RunConfig& without_acts,
                            const Ontology& ontology,
                            std::span<const Dialogue> train_dialogues,
                            std::span<const Dialogue> dev_dialogues,
                            const TrainOptions& options) {
  check_ablation_pair(with_acts, without_acts);
  const Ontology partitioned =
      prepare_ontology(ontology, with_acts, train_dialogues);
  const CorpusOptions corpus = with_acts.corpus_options();
  const auto train_examples =
      build_examples(train_dialogues, partitioned, nullptr, corpus);
  const auto dev_examples =
      build_examples(dev_dialogues, partitioned, nullptr, corpus);
  const Canonicalizer canon = Canonicalizer::with_defaults();
  AblationReport report;
  for (const RunConfig* config : {&with_acts, &without_acts}) {
    auto model = build_model(*config, partitioned, train_examples);
    train(*model, *config, train_examples, dev_examples, options);
    const Metrics m = evaluate(*model, dev_examples, canon);
    (config == &with_acts ? report.with_acts : report.without_acts) = m;
  }
  return report;
}

AblationReport ablation_from_models(Model& with_acts, Model& without_acts,
                                    std::span<const TurnExample> dev_examples,
                                    const Canonicalizer& canon) {
  if (!with_acts.attention().act_attention() ||
      without_acts.attention().act_attention())
    throw ConfigError("ablation needs an act-aware model and an ablated one");
  return {evaluate(with_acts, dev_examples, canon),
          evaluate(without_acts, dev_examples, canon)};
}

AttentionExport export_attention(Model& model,
                                 std::span<const std::string> acts,
                                 std::span<const std::string> context) {
  if (!model.attention().act_attention())
    throw ConfigError("export_attention: model has no act attention");
  const Ontology& ontology = model.ontology();
  AttentionExport out;
  for (const std::string& a : acts) {
    auto name = ontology.find_act(a);
    if (!name) throw DataError("unknown act name: " + a);
    out.acts.push_back(*name);
  }
  for (std::size_t m = 0; m < ontology.size(); ++m)
    out.slots.push_back(ontology.slot(m).id.key());
  out.weights = Matrix::Zero(static_cast<Eigen::Index>(out.acts.size()),
                             static_cast<Eigen::Index>(ontology.size()));
  if (out.acts.empty()) return out;

  TurnExample ex;
  ex.dialogue_id = "export";
  ex.turn = 1;
  if (context.empty()) {
    for (const std::string& a : out.acts)
      for (auto& tok : tokenize(a)) ex.context.push_back(tok);
    ex.roles.assign(ex.context.size(), Role::kSys);
  } else {
    ex.context.assign(context.begin(), context.end());
    ex.roles.assign(ex.context.size(), Role::kUser);
  }
  ex.exact = exact_match_features(ex.context, ontology);
  ex.acts.names = out.acts;
  ex.acts.turn_index.assign(out.acts.size(), 1);
  for (std::size_t m = 0; m < ontology.size(); ++m) {
    Label l;
    l.kind = ontology.slot(m).kind;
    l.value_index = l.kind == SlotKind::kCategorical
                        ? static_cast<int>(ontology.slot(m).values.size())
                        : -1;
    ex.labels.push_back(l);
    ex.gold_state.emplace_back(kNoneValue);
  }
  Tape tape;
  ForwardResult f = model.forward(tape, ex);
  for (std::size_t m = 0; m < ontology.size(); ++m)
    out.weights.col(static_cast<Eigen::Index>(m)) =
        f.slots[m].fused.alpha2.value().col(0);
  return out;
}

void write_attention_csv(const AttentionExport& e, std::ostream& out) {
  out << "act";
  for (const auto& s : e.slots) out << "," << csv_field(s);
  out << "\n" << std::setprecision(17);
  for (std::size_t a = 0; a < e.acts.size(); ++a) {
    out << csv_field(e.acts[a]);
    for (std::size_t m = 0; m < e.slots.size(); ++m)
      out << "," << e.weights(static_cast<Eigen::Index>(a),
                              static_cast<Eigen::Index>(m));
    out << "\n";
  }
}

void write_attention_svg(const AttentionExport& e, std::ostream& out) {
  const int cell = 24, left = 110, top = 150;
  const int width = left + cell * static_cast<int>(e.slots.size()) + 10;
  const int height = top + cell * static_cast<int>(e.acts.size()) + 10;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"sans-serif\" "
      << "font-size=\"11\">\n";
  for (std::size_t m = 0; m < e.slots.size(); ++m) {
    const int x = left + cell * static_cast<int>(m) + cell / 2;
    out << "  <text transform=\"translate(" << x << "," << top - 6
        << ") rotate(-60)\">" << xml_escape(e.slots[m]) << "</text>\n";
  }
  for (std::size_t a = 0; a < e.acts.size(); ++a) {
    const int y = top + cell * static_cast<int>(a);
    out << "  <text x=\"" << left - 6 << "\" y=\"" << y + cell / 2 + 4
        << "\" text-anchor=\"end\">" << xml_escape(e.acts[a]) << "</text>\n";
    for (std::size_t m = 0; m < e.slots.size(); ++m) {
      const double v = e.weights(static_cast<Eigen::Index>(a),
                                 static_cast<Eigen::Index>(m));
      const int shade = static_cast<int>(255.0 * (1.0 - std::clamp(v, 0.0, 1.0)));
      out << "  <rect x=\"" << left + cell * static_cast<int>(m) << "\" y=\""
          << y << "\" width=\"" << cell << "\" height=\"" << cell
          << "\" fill=\"rgb(" << shade << "," << shade << ",255)\"><title>"
          << xml_escape(e.acts[a]) << " / " << xml_escape(e.slots[m]) << ": "
          << v << "</title></rect>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace actdst
