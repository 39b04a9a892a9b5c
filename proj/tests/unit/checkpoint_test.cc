#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "actdst/checkpoint.h"
#include "actdst/errors.h"
#include "fixtures.h"

using namespace actdst;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("actdst_ckpt_" + name);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

}  // namespace

TEST_CASE("checkpoint round-trip reproduces predictions bit for bit") {
  const auto c = fixtures::load("micro/micro.json");
  const RunConfig cfg = fixtures::tiny_config();
  auto model = build_model(cfg, c.ontology, c.train_examples);
  const auto path = temp_file("roundtrip.bin");
  save_checkpoint(*model, cfg, 3, 42, path);
  LoadedCheckpoint loaded = load_checkpoint(path, c.raw);
  CHECK(loaded.epoch == 3);
  CHECK(loaded.step == 42);
  CHECK(loaded.model->ontology().partition() == c.ontology.partition());
  for (const TurnExample& ex : c.train_examples) {
    const TurnPrediction a = model->predict(ex);
    const TurnPrediction b = loaded.model->predict(ex);
    CHECK(a.state == b.state);
    for (std::size_t m = 0; m < a.slots.size(); ++m)
      CHECK(a.slots[m].probs == b.slots[m].probs);
  }
  CHECK(serialize_run_config(read_checkpoint_config(path)) ==
        serialize_run_config(cfg));
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint records the ablation switch") {
  const auto c = fixtures::load("micro/micro.json");
  RunConfig cfg = fixtures::tiny_config();
  auto model = build_model(cfg, c.ontology, c.train_examples);
  model->set_act_attention(false);
  const auto path = temp_file("ablated.bin");
  save_checkpoint(*model, cfg, 0, 0, path);
  LoadedCheckpoint loaded = load_checkpoint(path, c.raw);
  CHECK_FALSE(loaded.config.act_attention);
  CHECK_FALSE(loaded.model->attention().act_attention());
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint guards") {
  const auto c = fixtures::load("micro/micro.json");
  const RunConfig cfg = fixtures::tiny_config();
  auto model = build_model(cfg, c.ontology, c.train_examples);
  const auto path = temp_file("guard.bin");
  save_checkpoint(*model, cfg, 0, 0, path);
  const std::string bytes = slurp(path);

  const Ontology other = parse_ontology(R"({"hotel-parking": ["yes"]})");
  CHECK_THROWS_AS(load_checkpoint(path, other), CheckpointError);

  const auto bad = temp_file("bad.bin");
  spit(bad, "NOTACKPT" + bytes.substr(8));
  CHECK_THROWS_AS(load_checkpoint(bad, c.raw), CheckpointError);

  std::string version = bytes;
  version[8] = 9;
  spit(bad, version);
  CHECK_THROWS_WITH_AS(load_checkpoint(bad, c.raw),
                       doctest::Contains("version 9"), CheckpointError);

  spit(bad, bytes.substr(0, bytes.size() - 100));
  CHECK_THROWS_AS(load_checkpoint(bad, c.raw), CheckpointError);

  std::string flipped = bytes;
  flipped[flipped.size() - 20] ^= 0x40;
  spit(bad, flipped);
  CHECK_THROWS_WITH_AS(load_checkpoint(bad, c.raw), doctest::Contains("checksum"),
                       CheckpointError);

  CHECK_THROWS_AS(load_checkpoint(temp_file("missing.bin"), c.raw),
                  MissingFileError);
  std::filesystem::remove(path);
  std::filesystem::remove(bad);
}
