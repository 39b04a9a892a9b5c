#include "actdst/cli.h"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "actdst/checkpoint.h"
#include "actdst/convert.h"
#include "actdst/corpus.h"
#include "actdst/errors.h"
#include "actdst/evaluation.h"
#include "actdst/ontology.h"
#include "actdst/text.h"
#include "actdst/training.h"

namespace actdst {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Options {
  std::string config;
  std::string ablated_config;
  std::string data;
  std::string dev;
  std::string ontology;
  std::string checkpoint;
  std::string out;
  std::string policy;
  std::string aliases;
  std::string warnings;
  std::string val_list;
  std::string test_list;
  std::string acts;
  std::string context;
  std::string svg;
  std::optional<std::uint64_t> seed;
  bool no_act_attention = false;
  int instances = 20;
  double eps = 1e-3;
  double tolerance = 1e-4;
};

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

// Flags override the config file; the file's paths are the fallback.
RunConfig resolve_config(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.policy.empty()) c.slot_policy = parse_partition_policy(o.policy);
  if (o.no_act_attention) c.act_attention = false;
  if (!o.ontology.empty()) c.ontology = o.ontology;
  if (!o.data.empty()) c.train_data = o.data;
  if (!o.dev.empty()) c.dev_data = o.dev;
  c.validate();
  return c;
}

std::string require_path(const std::string& path, const char* what) {
  if (path.empty())
    throw ConfigError(std::string("no ") + what +
                      " given (flag or config file)");
  return path;
}

// "train" / "dev" / "test" name a split from the config; anything else is a
// file path.
std::string resolve_split(const std::string& data, const RunConfig& c) {
  if (data == "train") return require_path(c.train_data, "train data");
  if (data == "dev") return require_path(c.dev_data, "dev data");
  if (data == "test") return require_path(c.test_data, "test data");
  return require_path(data, "data file");
}

struct Warnings {
  std::ofstream file;
  WarningLog log;

  explicit Warnings(const std::string& path) {
    if (!path.empty()) {
      file = open_output(path);
      log = WarningLog(&file);
    }
  }
};

std::vector<std::string> split_acts(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) out.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) out.push_back(current);
  return out;
}

int cmd_convert(const Options& o, std::ostream& out) {
  ConvertedCorpus c = convert_multiwoz_files(
      require_path(o.data, "--data (raw data.json)"),
      require_path(o.val_list, "--val-list"),
      require_path(o.test_list, "--test-list"), require_path(o.out, "--out"));
  out << "train " << c.train_count << " dev " << c.dev_count << " test "
      << c.test_count << " dialogues written to " << o.out << "\n";
  return kExitOk;
}

int cmd_prepare(const Options& o, std::ostream& out) {
  const RunConfig c = resolve_config(o);
  const Ontology raw = load_ontology(require_path(c.ontology, "ontology"));
  const fs::path data = resolve_split(o.data.empty() ? "train" : o.data, c);
  std::string dir = o.out;
  if (dir.empty()) {
    const char* env = std::getenv(kCacheDirEnv);
    dir = env != nullptr && *env != '\0' ? env : "cache";
  }
  Warnings w(o.warnings.empty() ? (fs::path(dir) / "warnings.jsonl").string()
                                : o.warnings);
  const auto dialogues =
      load_dialogues(data, raw, &w.log, c.corpus_options());
  const Ontology partitioned = prepare_ontology(raw, c, dialogues);
  const auto examples =
      build_examples(dialogues, partitioned, &w.log, c.corpus_options());
  const fs::path target =
      fs::path(dir) / (data.stem().string() + ".examples.jsonl");
  std::ofstream file = open_output(target);
  write_examples(examples, file);
  ordered_json partition = ordered_json::object();
  for (const auto& [key, kind] : partitioned.partition())
    partition[key] = std::string(to_string(kind));
  std::ofstream part = open_output(fs::path(dir) / "partition.json");
  part << partition.dump(2) << "\n";
  out << examples.size() << " examples from " << dialogues.size()
      << " dialogues written to " << target.string() << " ("
      << w.log.count() << " warnings)\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig c = resolve_config(o);
  const fs::path dir = require_path(o.out, "--out");
  const Ontology raw = load_ontology(require_path(c.ontology, "ontology"));
  Warnings w(o.warnings.empty() ? (dir / "warnings.jsonl").string()
                                : o.warnings);
  const auto train_d = load_dialogues(require_path(c.train_data, "train data"),
                                      raw, &w.log, c.corpus_options());
  std::vector<Dialogue> dev_d;
  if (!c.dev_data.empty())
    dev_d = load_dialogues(c.dev_data, raw, &w.log, c.corpus_options());
  const Ontology partitioned = prepare_ontology(raw, c, train_d);
  const auto train_ex =
      build_examples(train_d, partitioned, &w.log, c.corpus_options());
  const auto dev_ex =
      build_examples(dev_d, partitioned, &w.log, c.corpus_options());
  auto model = build_model(c, partitioned, train_ex);
  std::ofstream metrics = open_output(dir / "metrics.jsonl");
  TrainOptions options;
  options.metrics_log = &metrics;
  options.progress = &err;
  const TrainResult r = train(*model, c, train_ex, dev_ex, options);
  save_checkpoint(*model, c, r.best_epoch, r.steps, dir / "checkpoint.bin");
  std::ofstream cfg = open_output(dir / "config.json");
  cfg << serialize_run_config(c);
  out << "trained " << r.steps << " steps over " << r.log.size()
      << " epochs" << (c.act_attention ? "" : " [act attention ablated]")
      << "; best epoch " << r.best_epoch << "; checkpoint "
      << (dir / "checkpoint.bin").string() << "\n";
  return kExitOk;
}

struct LoadedRun {
  RunConfig config;
  LoadedCheckpoint checkpoint;
};

LoadedRun load_run(const Options& o) {
  const fs::path path = require_path(o.checkpoint, "--checkpoint");
  RunConfig stored = read_checkpoint_config(path);
  const std::string ontology_path =
      o.ontology.empty() ? stored.ontology : o.ontology;
  const Ontology raw = load_ontology(require_path(ontology_path, "ontology"));
  LoadedRun run{stored, load_checkpoint(path, raw)};
  if (o.no_act_attention) run.checkpoint.model->set_act_attention(false);
  return run;
}

std::vector<TurnExample> load_examples(const Options& o, const LoadedRun& run,
                                       WarningLog* log) {
  const std::string data = resolve_split(o.data.empty() ? "dev" : o.data,
                                         run.config);
  const Ontology& ontology = run.checkpoint.model->ontology();
  const auto dialogues =
      load_dialogues(data, ontology, log, run.config.corpus_options());
  return build_examples(dialogues, ontology, log, run.config.corpus_options());
}

Canonicalizer make_canonicalizer(const Options& o) {
  return o.aliases.empty() ? Canonicalizer::with_defaults()
                           : Canonicalizer::load(o.aliases);
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  LoadedRun run = load_run(o);
  Warnings w(o.warnings);
  const auto examples = load_examples(o, run, &w.log);
  Model& model = *run.checkpoint.model;
  const auto predictions = predict_examples(model, examples);
  const Metrics m = score(predictions, examples, make_canonicalizer(o));
  if (!o.out.empty()) {
    const fs::path dir = o.out;
    std::ofstream summary = open_output(dir / "metrics.json");
    summary << metrics_summary(m);
    std::ofstream dump = open_output(dir / "predictions.jsonl");
    write_predictions(dump, predictions, examples, model.ontology());
  }
  out << metrics_summary(m);
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
  LoadedRun run = load_run(o);
  Warnings w(o.warnings);
  const auto examples = load_examples(o, run, &w.log);
  Model& model = *run.checkpoint.model;
  const auto predictions = predict_examples(model, examples);
  if (o.out.empty()) {
    write_predictions(out, predictions, examples, model.ontology());
  } else {
    std::ofstream dump = open_output(o.out);
    write_predictions(dump, predictions, examples, model.ontology());
  }
  return kExitOk;
}

int cmd_ablate(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig with = resolve_config(o);
  RunConfig without = with;
  if (!o.ablated_config.empty()) {
    Options second = o;
    second.config = o.ablated_config;
    without = resolve_config(second);
  } else {
    without.act_attention = false;
  }
  check_ablation_pair(with, without);
  const Ontology raw = load_ontology(require_path(with.ontology, "ontology"));
  Warnings w(o.warnings);
  const auto train_d = load_dialogues(require_path(with.train_data, "train data"),
                                      raw, &w.log, with.corpus_options());
  const auto dev_d = load_dialogues(require_path(with.dev_data, "dev data"),
                                    raw, &w.log, with.corpus_options());
  TrainOptions options;
  options.progress = &err;
  const AblationReport report =
      ablation_run(with, without, raw, train_d, dev_d, options);
  if (!o.out.empty()) {
    std::ofstream file = open_output(o.out);
    file << report.to_json();
  }
  out << report.to_table();
  return kExitOk;
}

int cmd_export_attention(const Options& o, std::ostream& out) {
  LoadedRun run = load_run(o);
  const std::vector<std::string> acts =
      split_acts(require_path(o.acts, "--acts"));
  const std::vector<std::string> context = tokenize(o.context);
  const AttentionExport e =
      export_attention(*run.checkpoint.model, acts, context);
  if (o.out.empty()) {
    write_attention_csv(e, out);
  } else {
    std::ofstream file = open_output(o.out);
    write_attention_csv(e, file);
  }
  if (!o.svg.empty()) {
    std::ofstream file = open_output(o.svg);
    write_attention_svg(e, file);
  }
  return kExitOk;
}

ordered_json report_json(const GradCheckReport& r) {
  ordered_json j;
  j["max_rel_error"] = r.max_rel_error;
  j["tensors"] = ordered_json::array();
  for (const auto& e : r.entries)
    j["tensors"].push_back({{"name", e.name},
                            {"rel_error", e.rel_error},
                            {"analytic_norm", e.analytic_norm},
                            {"frozen", e.frozen},
                            {"skipped", e.skipped}});
  return j;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  const GradCheckSuite s =
      run_gradient_checks(o.instances, o.seed.value_or(1), o.eps);
  ordered_json j;
  j["eps"] = o.eps;
  j["instances"] = o.instances;
  j["attention"] = report_json(s.attention);
  j["value_head"] = report_json(s.value_head);
  j["span_heads"] = report_json(s.span_heads);
  j["total_loss"] = report_json(s.total_loss);
  j["max_rel_error"] = s.max_rel_error();
  if (!o.out.empty()) {
    std::ofstream file = open_output(o.out);
    file << j.dump(2) << "\n";
  }
  out << "attention  " << s.attention.max_rel_error << "\n"
      << "value_head " << s.value_head.max_rel_error << "\n"
      << "span_heads " << s.span_heads.max_rel_error << "\n"
      << "total_loss " << s.total_loss.max_rel_error << "\n";
  return s.max_rel_error() < o.tolerance ? kExitOk : kExitOther;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Act-aware dialogue state tracker", "actdst"};
  app.require_subcommand(1);
  Options o;

  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "Run config file (JSON)");
    cmd->add_option("--ontology", o.ontology, "Ontology file");
    cmd->add_option("--seed", o.seed, "Random seed");
    cmd->add_option("--policy", o.policy, "Slot partition policy")
        ->check(CLI::IsMember({"all_cat", "all_noncat", "hybrid"}));
    cmd->add_flag("--no-act-attention", o.no_act_attention,
                  "Disable act attention (ablation)");
    cmd->add_option("--warnings", o.warnings, "Warning log (JSONL)");
  };
  auto add_checkpoint_flags = [&](CLI::App* cmd) {
    cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file")
        ->required();
    cmd->add_option("--ontology", o.ontology,
                    "Ontology file (default: the one named in the checkpoint)");
    cmd->add_flag("--no-act-attention", o.no_act_attention,
                  "Run the model with act attention disabled");
  };

  CLI::App* convert =
      app.add_subcommand("convert", "Convert raw MultiWOZ 2.1 files");
  convert->add_option("--data", o.data, "Raw data.json")->required();
  convert->add_option("--val-list", o.val_list, "valListFile.txt")->required();
  convert->add_option("--test-list", o.test_list, "testListFile.txt")
      ->required();
  convert->add_option("--out", o.out, "Output directory")->required();

  CLI::App* prepare =
      app.add_subcommand("prepare", "Cache per-turn examples as JSONL");
  add_run_flags(prepare);
  prepare->add_option("--data", o.data,
                      "Dialogue file or train/dev/test (default train)");
  prepare->add_option("--out", o.out,
                      std::string("Output directory (default $") +
                          kCacheDirEnv + " or ./cache)");

  CLI::App* train_cmd = app.add_subcommand("train", "Train a model");
  add_run_flags(train_cmd);
  train_cmd->add_option("--data", o.data, "Training dialogues");
  train_cmd->add_option("--dev", o.dev, "Development dialogues");
  train_cmd->add_option("--out", o.out,
                        "Output directory (checkpoint, metrics, config)")
      ->required();

  CLI::App* evaluate_cmd =
      app.add_subcommand("evaluate", "Joint and slot goal accuracy");
  add_checkpoint_flags(evaluate_cmd);
  evaluate_cmd->add_option("--data", o.data,
                           "Dialogue file or train/dev/test (default dev)");
  evaluate_cmd->add_option("--out", o.out,
                           "Directory for metrics.json and predictions.jsonl");
  evaluate_cmd->add_option("--aliases", o.aliases, "Value alias map (JSON)");
  evaluate_cmd->add_option("--warnings", o.warnings, "Warning log (JSONL)");

  CLI::App* predict_cmd = app.add_subcommand("predict", "Dump predictions");
  add_checkpoint_flags(predict_cmd);
  predict_cmd->add_option("--data", o.data,
                          "Dialogue file or train/dev/test (default dev)");
  predict_cmd->add_option("--out", o.out, "Prediction file (default stdout)");
  predict_cmd->add_option("--warnings", o.warnings, "Warning log (JSONL)");

  CLI::App* ablate =
      app.add_subcommand("ablate", "Train with and without act attention");
  add_run_flags(ablate);
  ablate->add_option("--ablated-config", o.ablated_config,
                     "Config of the ablated run (default: --config with "
                     "act_attention off)");
  ablate->add_option("--data", o.data, "Training dialogues");
  ablate->add_option("--dev", o.dev, "Development dialogues");
  ablate->add_option("--out", o.out, "Report file (JSON)");

  CLI::App* export_cmd = app.add_subcommand(
      "export-attention", "Act-attention weights for a simulated act sequence");
  add_checkpoint_flags(export_cmd);
  export_cmd->add_option("--acts", o.acts,
                         "Act names, comma or space separated")
      ->required();
  export_cmd->add_option("--context", o.context,
                         "Context text (default: the act names)");
  export_cmd->add_option("--out", o.out, "CSV file (default stdout)");
  export_cmd->add_option("--svg", o.svg, "Heat-map image (SVG)");

  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gradcheck->add_option("--instances", o.instances, "Random instances")
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", o.seed, "Random seed");
  gradcheck->add_option("--eps", o.eps, "Finite-difference step");
  gradcheck->add_option("--tolerance", o.tolerance,
                        "Maximum accepted relative error");
  gradcheck->add_option("--out", o.out, "Report file (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*convert) return cmd_convert(o, out);
    if (*prepare) return cmd_prepare(o, out);
    if (*train_cmd) return cmd_train(o, out, err);
    if (*evaluate_cmd) return cmd_evaluate(o, out);
    if (*predict_cmd) return cmd_predict(o, out);
    if (*ablate) return cmd_ablate(o, out, err);
    if (*export_cmd) return cmd_export_attention(o, out);
    if (*gradcheck) return cmd_gradcheck(o, out);
  } catch (const MissingFileError& e) {
    err << "missing file: " << e.path() << "\n";
    return kExitMissingFile;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DivergenceError& e) {
    err << "training diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitUsage;
}

}  // namespace actdst
