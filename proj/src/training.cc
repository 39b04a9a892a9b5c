#include "actdst/training.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "actdst/errors.h"
#include "actdst/evaluation.h"
#include "actdst/text.h"

namespace actdst {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(SpanChoice c) {
  return c == SpanChoice::kLast ? "last" : "first";
}
std::string_view to_string(LossReduction r) {
  return r == LossReduction::kSum ? "sum" : "mean";
}
std::string_view to_string(ActTable t) {
  return t == ActTable::kShared ? "shared" : "dedicated";
}

template <typename T>
T get_field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field \"") + key +
                      "\" has the wrong type: " + e.what());
  }
}

const char* const kConfigKeys[] = {
    "learning_rate", "batch_size",     "optimizer",      "beta1",
    "beta2",         "adam_epsilon",   "max_epochs",     "max_steps",
    "patience",      "clip_norm",      "seed",           "slot_policy",
    "act_attention", "provider",       "pretrained_path", "word_dim",
    "char_dim",      "role_dim",       "char_input_dim", "kernel_widths",
    "act_table",     "context_cap",    "max_len",        "precision",
    "span_choice",   "strip_act_domain", "loss_reduction", "ontology",
    "train_data",    "dev_data",       "test_data"};

double global_norm(std::span<Parameter* const> params) {
  double sq = 0.0;
  for (const Parameter* p : params)
    if (p->trainable) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

}  // namespace

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
  };
  require(learning_rate > 0 && std::isfinite(learning_rate),
          "learning_rate must be positive");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(optimizer == "adam", "optimizer must be \"adam\"");
  require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1,
          "beta1 and beta2 must lie in [0, 1)");
  require(adam_epsilon > 0, "adam_epsilon must be positive");
  require(max_epochs >= 1, "max_epochs must be >= 1");
  require(max_steps >= 0, "max_steps must be >= 0");
  require(patience >= 0, "patience must be >= 0");
  require(clip_norm > 0, "clip_norm must be positive");
  require(word_dim >= 1 && char_dim >= 1 && role_dim >= 1 &&
              char_input_dim >= 1,
          "embedding dimensions must be >= 1");
  require((word_dim + char_dim) % 2 == 0,
          "word_dim + char_dim must be even");
  require(!kernel_widths.empty() &&
              static_cast<int>(kernel_widths.size()) <= char_dim,
          "kernel_widths must be non-empty and no longer than char_dim");
  for (int k : kernel_widths) require(k >= 1, "kernel widths must be >= 1");
  require(context_cap >= 1, "context_cap must be >= 1");
  require(max_len >= 1, "max_len must be >= 1");
  require(precision == 32 || precision == 64, "precision must be 32 or 64");
  require(precision == 64,
          "precision 32 is not supported; computation is 64-bit only");
  require(provider != ProviderKind::kPretrainedContextual ||
              !pretrained_path.empty(),
          "provider pretrained_contextual needs pretrained_path");
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.embedding.word_dim = word_dim;
  m.embedding.char_dim = char_dim;
  m.embedding.role_dim = role_dim;
  m.embedding.char_input_dim = char_input_dim;
  m.embedding.kernel_widths = kernel_widths;
  m.embedding.provider = provider;
  m.embedding.act_table = act_table;
  m.act_attention = act_attention;
  m.max_len = max_len;
  return m;
}

CorpusOptions RunConfig::corpus_options() const {
  CorpusOptions o;
  o.context_cap = static_cast<std::size_t>(context_cap);
  o.span_choice = span_choice;
  o.strip_act_domain = strip_act_domain;
  return o;
}

RunConfig parse_run_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(std::begin(kConfigKeys), std::end(kConfigKeys), it.key()) ==
        std::end(kConfigKeys))
      throw ConfigError("unknown config field \"" + it.key() + "\"");
  }
  RunConfig c;
  auto opt = [&](const char* key, auto& field) {
    if (j.contains(key))
      field = get_field<std::decay_t<decltype(field)>>(j, key);
  };
  opt("learning_rate", c.learning_rate);
  opt("batch_size", c.batch_size);
  opt("optimizer", c.optimizer);
  opt("beta1", c.beta1);
  opt("beta2", c.beta2);
  opt("adam_epsilon", c.adam_epsilon);
  opt("max_epochs", c.max_epochs);
  opt("max_steps", c.max_steps);
  opt("patience", c.patience);
  opt("clip_norm", c.clip_norm);
  opt("seed", c.seed);
  opt("act_attention", c.act_attention);
  opt("pretrained_path", c.pretrained_path);
  opt("word_dim", c.word_dim);
  opt("char_dim", c.char_dim);
  opt("role_dim", c.role_dim);
  opt("char_input_dim", c.char_input_dim);
  opt("kernel_widths", c.kernel_widths);
  opt("context_cap", c.context_cap);
  opt("max_len", c.max_len);
  opt("precision", c.precision);
  opt("strip_act_domain", c.strip_act_domain);
  opt("ontology", c.ontology);
  opt("train_data", c.train_data);
  opt("dev_data", c.dev_data);
  opt("test_data", c.test_data);
  c.optimizer = to_lower(c.optimizer);
  if (j.contains("slot_policy"))
    c.slot_policy =
        parse_partition_policy(get_field<std::string>(j, "slot_policy"));
  if (j.contains("provider"))
    c.provider = parse_provider_kind(get_field<std::string>(j, "provider"));
  if (j.contains("act_table")) {
    const std::string t = to_lower(get_field<std::string>(j, "act_table"));
    if (t != "shared" && t != "dedicated")
      throw ConfigError("act_table must be \"shared\" or \"dedicated\"");
    c.act_table = t == "shared" ? ActTable::kShared : ActTable::kDedicated;
  }
  if (j.contains("span_choice")) {
    const std::string s = to_lower(get_field<std::string>(j, "span_choice"));
    if (s != "last" && s != "first")
      throw ConfigError("span_choice must be \"last\" or \"first\"");
    c.span_choice = s == "last" ? SpanChoice::kLast : SpanChoice::kFirst;
  }
  if (j.contains("loss_reduction")) {
    const std::string r =
        to_lower(get_field<std::string>(j, "loss_reduction"));
    if (r != "sum" && r != "mean")
      throw ConfigError("loss_reduction must be \"sum\" or \"mean\"");
    c.loss_reduction = r == "sum" ? LossReduction::kSum : LossReduction::kMean;
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse_run_config(ss.str());
  const std::filesystem::path base = path.parent_path();
  for (std::string* p : {&c.ontology, &c.train_data, &c.dev_data,
                         &c.test_data, &c.pretrained_path}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative())
      *p = (base / *p).lexically_normal().string();
  }
  return c;
}

std::string serialize_run_config(const RunConfig& c) {
  ordered_json j;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["optimizer"] = c.optimizer;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["adam_epsilon"] = c.adam_epsilon;
  j["max_epochs"] = c.max_epochs;
  j["max_steps"] = c.max_steps;
  j["patience"] = c.patience;
  j["clip_norm"] = c.clip_norm;
  j["seed"] = c.seed;
  j["slot_policy"] = std::string(to_string(c.slot_policy));
  j["act_attention"] = c.act_attention;
  j["provider"] = std::string(to_string(c.provider));
  j["pretrained_path"] = c.pretrained_path;
  j["word_dim"] = c.word_dim;
  j["char_dim"] = c.char_dim;
  j["role_dim"] = c.role_dim;
  j["char_input_dim"] = c.char_input_dim;
  j["kernel_widths"] = c.kernel_widths;
  j["act_table"] = std::string(to_string(c.act_table));
  j["context_cap"] = c.context_cap;
  j["max_len"] = c.max_len;
  j["precision"] = c.precision;
  j["span_choice"] = std::string(to_string(c.span_choice));
  j["strip_act_domain"] = c.strip_act_domain;
  j["loss_reduction"] = std::string(to_string(c.loss_reduction));
  j["ontology"] = c.ontology;
  j["train_data"] = c.train_data;
  j["dev_data"] = c.dev_data;
  j["test_data"] = c.test_data;
  return j.dump(2) + "\n";
}

bool same_except_ablation(const RunConfig& a, const RunConfig& b) {
  RunConfig x = a;
  RunConfig y = b;
  for (RunConfig* c : {&x, &y}) {
    c->act_attention = true;
    c->ontology.clear();
    c->train_data.clear();
    c->dev_data.clear();
    c->test_data.clear();
  }
  return serialize_run_config(x) == serialize_run_config(y);
}

Ontology prepare_ontology(const Ontology& ontology, const RunConfig& config,
                          std::span<const Dialogue> train_dialogues) {
  const SlotValueStats stats = slot_value_stats(train_dialogues);
  return partition_slots(ontology, config.slot_policy, &stats);
}

std::unique_ptr<Model> build_model(const RunConfig& config,
                                   const Ontology& partitioned,
                                   std::span<const TurnExample> train_examples) {
  config.validate();
  auto [words, chars] = build_vocabularies(train_examples, partitioned);
  std::unique_ptr<EmbeddingProvider> provider;
  if (config.provider == ProviderKind::kPretrainedContextual)
    provider = load_pretrained_vectors(config.pretrained_path, words,
                                       config.word_dim);
  return std::make_unique<Model>(config.model_config(), partitioned,
                                 std::move(words), std::move(chars),
                                 config.seed, std::move(provider));
}

void Adam::step(std::span<Parameter* const> params, double learning_rate) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    Moments& s = moments_[p];
    if (s.m.size() == 0) {
      s.m = Matrix::Zero(p->value.rows(), p->value.cols());
      s.v = Matrix::Zero(p->value.rows(), p->value.cols());
    }
    s.m = beta1_ * s.m + (1.0 - beta1_) * p->grad;
    s.v = beta2_ * s.v + (1.0 - beta2_) * p->grad.cwiseProduct(p->grad);
    p->value.array() -= learning_rate * (s.m.array() / c1) /
                        ((s.v.array() / c2).sqrt() + epsilon_);
  }
}

double clip_gradients(std::span<Parameter* const> params, double max_norm) {
  const double norm = global_norm(params);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (Parameter* p : params)
      if (p->trainable) p->grad *= factor;
  }
  return norm;
}

void zero_gradients(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

double example_loss_and_gradient(Model& model, const TurnExample& example,
                                 Eigen::Index padded_len, double weight) {
  Tape tape;
  ForwardResult f = model.forward(tape, example, padded_len);
  const double loss = f.loss.scalar();
  if (!std::isfinite(loss))
    throw DivergenceError("non-finite loss on dialogue " +
                          example.dialogue_id + " turn " +
                          std::to_string(example.turn));
  tape.backward(weight == 1.0 ? f.loss : scale(f.loss, weight));
  return loss;
}

std::string metrics_record(const EpochMetrics& m, bool act_attention) {
  ordered_json j;
  j["epoch"] = m.epoch;
  j["step"] = m.step;
  j["train_loss"] = m.train_loss;
  j["dev_joint"] = m.dev_joint ? json(*m.dev_joint) : json(nullptr);
  j["dev_slot"] = m.dev_slot ? json(*m.dev_slot) : json(nullptr);
  j["act_attention"] = act_attention;
  return j.dump();
}

TrainResult train(Model& model, const RunConfig& config,
                  std::span<const TurnExample> train_examples,
                  std::span<const TurnExample> dev_examples,
                  const TrainOptions& options) {
  config.validate();
  if (train_examples.empty()) throw DataError("no training examples");
  const std::vector<Parameter*> params = model.parameters();
  Adam adam(config.beta1, config.beta2, config.adam_epsilon);
  const Canonicalizer canon = Canonicalizer::with_defaults();

  TrainResult result;
  std::vector<Matrix> best;
  double best_joint = -1.0;
  int since_best = 0;
  long step = 0;
  bool done = false;
  for (int epoch = 1; epoch <= config.max_epochs && !done; ++epoch) {
    const std::uint64_t batch_seed =
        config.seed * 1000003ULL + static_cast<std::uint64_t>(epoch);
    double epoch_loss = 0.0;
    std::size_t epoch_examples = 0;
    for (const Batch& batch :
         make_batches(train_examples,
                      static_cast<std::size_t>(config.batch_size),
                      batch_seed)) {
      zero_gradients(params);
      const Eigen::Index padded = batch.context_mask.cols();
      const double weight = config.loss_reduction == LossReduction::kMean
                                ? 1.0 / static_cast<double>(batch.size())
                                : 1.0;
      double batch_loss = 0.0;
      for (std::size_t i : batch.indices)
        batch_loss += example_loss_and_gradient(model, train_examples[i],
                                                padded, weight);
      clip_gradients(params, config.clip_norm);
      adam.step(params, config.learning_rate);
      ++step;
      result.step_losses.push_back(batch_loss);
      epoch_loss += batch_loss;
      epoch_examples += batch.size();
      if (config.max_steps > 0 && step >= config.max_steps) {
        done = true;
        break;
      }
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.step = step;
    m.train_loss = epoch_loss / static_cast<double>(epoch_examples);
    bool improved = true;
    if (!dev_examples.empty()) {
      const Metrics dev = evaluate(model, dev_examples, canon);
      m.dev_joint = dev.joint;
      m.dev_slot = dev.slot;
      improved = dev.joint > best_joint;
    }
    if (improved) {
      best_joint = m.dev_joint.value_or(best_joint);
      result.best_epoch = epoch;
      best.clear();
      for (const Parameter* p : params) best.push_back(p->value);
      since_best = 0;
    } else {
      ++since_best;
    }
    result.log.push_back(m);
    if (options.metrics_log != nullptr)
      *options.metrics_log << metrics_record(m, model.attention().act_attention())
                           << "\n";
    if (options.progress != nullptr)
      *options.progress << "epoch " << epoch << " step " << step
                        << " train_loss " << m.train_loss
                        << (m.dev_joint ? " dev_joint " +
                                              std::to_string(*m.dev_joint)
                                        : std::string())
                        << "\n";
    if (config.patience > 0 && since_best >= config.patience) done = true;
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  result.steps = step;
  return result;
}

GradCheckReport gradient_check(const std::function<Var(Tape&)>& loss_fn,
                               std::span<Parameter* const> params,
                               double eps) {
  zero_gradients(params);
  Tape base;
  Var loss = loss_fn(base);
  base.backward(loss);
  const std::uint64_t signature = base.branch_signature();

  GradCheckReport report;
  for (Parameter* p : params) {
    GradCheckEntry entry;
    entry.name = p->name;
    entry.frozen = !p->trainable;
    entry.analytic_norm = p->grad.norm();
    if (entry.frozen) {
      report.entries.push_back(entry);
      continue;
    }
    const Matrix analytic = p->grad;
    Matrix numeric = analytic;
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& x = p->value.data()[i];
      const double original = x;
      x = original + eps;
      Tape plus;
      const double f_plus = loss_fn(plus).scalar();
      x = original - eps;
      Tape minus;
      const double f_minus = loss_fn(minus).scalar();
      x = original;
      if (plus.branch_signature() != signature ||
          minus.branch_signature() != signature) {
        ++entry.skipped;
        continue;
      }
      numeric.data()[i] = (f_plus - f_minus) / (2.0 * eps);
    }
    const double scale_norm = std::max(analytic.norm(), numeric.norm());
    entry.rel_error =
        scale_norm < 1e-12 ? 0.0 : (analytic - numeric).norm() / scale_norm;
    report.max_rel_error = std::max(report.max_rel_error, entry.rel_error);
    report.entries.push_back(entry);
  }
  return report;
}

double GradCheckSuite::max_rel_error() const {
  return std::max({attention.max_rel_error, value_head.max_rel_error,
                   span_heads.max_rel_error, total_loss.max_rel_error});
}

namespace {

void merge_worst(GradCheckReport& into, const GradCheckReport& r) {
  if (into.entries.empty() || r.max_rel_error > into.max_rel_error) into = r;
}

Parameter random_parameter(const std::string& name, Eigen::Index rows,
                           Eigen::Index cols, std::mt19937_64& rng) {
  return uniform_parameter(name, rows, cols, 1.0, rng());
}

Mask random_mask(Eigen::Index n, std::mt19937_64& rng) {
  Mask mask(static_cast<std::size_t>(n));
  for (auto& m : mask) m = static_cast<std::uint8_t>(rng() % 4 != 0);
  mask[rng() % mask.size()] = 1;
  return mask;
}

Var weighted_sum(Tape& tape, Var v, const Matrix& weights) {
  return sum(hadamard(v, tape.constant(weights)));
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols,
                     std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

GradCheckReport check_attention(std::mt19937_64& rng, double eps) {
  const int h = 2 + static_cast<int>(rng() % 7);
  const int n = 1 + static_cast<int>(rng() % 6);
  const int acts = 1 + static_cast<int>(rng() % 4);
  Parameter X = random_parameter("X", n, h, rng);
  Parameter qd = random_parameter("q_d", 1, h, rng);
  Parameter qs = random_parameter("q_s", 1, h, rng);
  Parameter k1 = random_parameter("k1", 1, 3 * h, rng);
  Parameter W_act = random_parameter("W_act", acts, h, rng);
  Parameter k2 = random_parameter("k2", 1, 3 * h, rng);
  const Mask mask = random_mask(n, rng);
  const Matrix target = random_matrix(1, h, rng);
  auto loss = [&](Tape& t) {
    SlotQuery q;
    q.domain = t.param(qd);
    q.slot = t.param(qs);
    q.query = add(q.domain, q.slot);
    EncodedContext ctx{t.param(X), mask};
    ContextAttention c = attend_context(ctx, q, t.param(k1));
    ActAttention a = attend_acts(t.param(W_act), c.Q_c, t.param(k2));
    return weighted_sum(t, fuse_slot(c, a, q).Q_o, target);
  };
  Parameter* params[] = {&X, &qd, &qs, &k1, &W_act, &k2};
  return gradient_check(loss, params, eps);
}

GradCheckReport check_value_head(std::mt19937_64& rng, double eps) {
  const int w = 2 + static_cast<int>(rng() % 7);
  const int options = 3 + static_cast<int>(rng() % 3);
  const int gold = static_cast<int>(rng() % static_cast<unsigned>(options));
  Parameter P_e = random_parameter("P_e", options, w, rng);
  Parameter Q_o = random_parameter("Q_o", 1, w, rng);
  Parameter theta_v = random_parameter("theta_v", w, w, rng);
  auto loss = [&](Tape& t) {
    return value_loss(
        value_logits(t.param(P_e), t.param(Q_o), t.param(theta_v)), gold);
  };
  Parameter* params[] = {&P_e, &Q_o, &theta_v};
  return gradient_check(loss, params, eps);
}

GradCheckReport check_span_heads(std::mt19937_64& rng, double eps) {
  const int w = 2 + static_cast<int>(rng() % 7);
  const int n = 1 + static_cast<int>(rng() % 6);
  Parameter X = random_parameter("X", n, w, rng);
  Parameter Q_o = random_parameter("Q_o", 1, w, rng);
  Parameter theta_s = random_parameter("theta_s", w, w, rng);
  Parameter theta_e = random_parameter("theta_e", w, w, rng);
  Parameter c1_W = random_parameter("c1.W", w, w, rng);
  Parameter c1_b = random_parameter("c1.b", 1, w, rng);
  Parameter c2_W = random_parameter("c2.W", w, w, rng);
  Parameter c2_b = random_parameter("c2.b", 1, w, rng);
  Parameter t_W1 = random_parameter("type.W1", w, w, rng);
  Parameter t_b1 = random_parameter("type.b1", 1, w, rng);
  Parameter t_W2 = random_parameter("type.W2", w, kNumSpanTypes, rng);
  Parameter t_b2 = random_parameter("type.b2", 1, kNumSpanTypes, rng);
  const Mask mask = random_mask(n, rng);
  std::vector<int> valid;
  for (int i = 0; i < n; ++i)
    if (mask[static_cast<std::size_t>(i)]) valid.push_back(i);
  int start = valid[rng() % valid.size()];
  int end = valid[rng() % valid.size()];
  if (end < start) std::swap(start, end);
  const auto gold = static_cast<SpanType>(rng() % kNumSpanTypes);
  auto loss = [&](Tape& t) {
    Var q = t.param(Q_o);
    SpanLogits s = span_logits(t.param(X), q, t.param(theta_s),
                               t.param(theta_e), t.param(c1_W), t.param(c1_b),
                               t.param(c2_W), t.param(c2_b));
    Var type = span_type_logits(q, t.param(t_W1), t.param(t_b1),
                                t.param(t_W2), t.param(t_b2));
    return add(span_loss(s, mask, start, end), type_loss(type, gold));
  };
  Parameter* params[] = {&X,    &Q_o,  &theta_s, &theta_e, &c1_W, &c1_b,
                         &c2_W, &c2_b, &t_W1,    &t_b1,    &t_W2, &t_b2};
  return gradient_check(loss, params, eps);
}

GradCheckReport check_total_loss(std::mt19937_64& rng, double eps) {
  const std::vector<std::string> words = {"i",     "need", "a",  "train",
                                          "to",    "cambridge", "at", "20:45",
                                          "free",  "parking", "yes", "no"};
  std::vector<std::string> values = {"yes", "no", "free"};
  values.resize(1 + rng() % 3);
  Ontology ontology(
      {SlotSpec{{"hotel", "parking"}, values, SlotKind::kCategorical},
       SlotSpec{{"train", "arriveby"}, {"20:45"}, SlotKind::kNonCategorical}},
      default_act_inventory(), std::nullopt);

  TurnExample ex;
  ex.dialogue_id = "gradcheck";
  ex.turn = 1;
  const int n = 1 + static_cast<int>(rng() % 6);
  for (int i = 0; i < n; ++i) {
    ex.context.push_back(words[rng() % words.size()]);
    ex.roles.push_back(rng() % 2 ? Role::kUser : Role::kSys);
  }
  ex.exact = exact_match_features(ex.context, ontology);
  const int num_acts = static_cast<int>(rng() % 4);
  for (int i = 0; i < num_acts; ++i) {
    const auto& inventory = ontology.acts();
    ex.acts.names.push_back(inventory[rng() % inventory.size()]);
    ex.acts.turn_index.push_back(1);
  }
  Label cat;
  cat.kind = SlotKind::kCategorical;
  cat.value_index = static_cast<int>(rng() % (values.size() + 2));
  Label span;
  span.kind = SlotKind::kNonCategorical;
  span.span_type = static_cast<SpanType>(rng() % kNumSpanTypes);
  if (span.span_type == SpanType::kSpan) {
    span.start = static_cast<int>(rng() % static_cast<unsigned>(n));
    span.end = std::min(n - 1, span.start + static_cast<int>(rng() % 3));
  }
  ex.labels = {cat, span};
  ex.gold_state = {kNoneValue.data(), kNoneValue.data()};

  ModelConfig config;
  config.embedding.word_dim = 5;
  config.embedding.char_dim = 3;
  config.embedding.role_dim = 2;
  config.embedding.char_input_dim = 2;
  config.embedding.kernel_widths = {2, 3, 4};
  config.act_attention = true;
  const TurnExample examples[] = {ex};
  auto [vocab, chars] = build_vocabularies(examples, ontology);
  Model model(config, ontology, vocab, chars, rng());
  auto loss = [&](Tape& t) { return model.forward(t, ex).loss; };
  const std::vector<Parameter*> params = model.parameters();
  return gradient_check(loss, params, eps);
}

}  // namespace

GradCheckSuite run_gradient_checks(int instances, std::uint64_t seed,
                                   double eps) {
  std::mt19937_64 rng(seed);
  GradCheckSuite suite;
  for (int i = 0; i < instances; ++i) {
    merge_worst(suite.attention, check_attention(rng, eps));
    merge_worst(suite.value_head, check_value_head(rng, eps));
    merge_worst(suite.span_heads, check_span_heads(rng, eps));
    merge_worst(suite.total_loss, check_total_loss(rng, eps));
  }
  return suite;
}

}  // namespace actdst
