// Shared fixture loading and tiny models for the test binaries.

#ifndef ACTDST_TESTS_FIXTURES_H_
#define ACTDST_TESTS_FIXTURES_H_

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "actdst/corpus.h"
#include "actdst/model.h"
#include "actdst/ontology.h"
#include "actdst/training.h"

namespace fixtures {

inline std::filesystem::path data_dir() { return ACTDST_DATA_DIR; }

struct Corpus {
  actdst::RunConfig config;
  actdst::Ontology raw;
  actdst::Ontology ontology;  // partitioned
  std::vector<actdst::Dialogue> train;
  std::vector<actdst::Dialogue> dev;
  std::vector<actdst::TurnExample> train_examples;
  std::vector<actdst::TurnExample> dev_examples;
};

// Loads a shipped config and everything it points at.
inline Corpus load(const std::string& config_file) {
  Corpus c;
  c.config = actdst::load_run_config(data_dir() / config_file);
  c.raw = actdst::load_ontology(c.config.ontology);
  const auto opts = c.config.corpus_options();
  c.train = actdst::load_dialogues(c.config.train_data, c.raw, nullptr, opts);
  if (!c.config.dev_data.empty())
    c.dev = actdst::load_dialogues(c.config.dev_data, c.raw, nullptr, opts);
  c.ontology = actdst::prepare_ontology(c.raw, c.config, c.train);
  c.train_examples =
      actdst::build_examples(c.train, c.ontology, nullptr, opts);
  c.dev_examples = actdst::build_examples(c.dev, c.ontology, nullptr, opts);
  return c;
}

// A small config for fast model-level tests.
inline actdst::RunConfig tiny_config() {
  actdst::RunConfig c;
  c.word_dim = 6;
  c.char_dim = 4;
  c.role_dim = 3;
  c.char_input_dim = 3;
  c.kernel_widths = {2, 3};
  c.seed = 5;
  return c;
}

}  // namespace fixtures

#endif  // ACTDST_TESTS_FIXTURES_H_
