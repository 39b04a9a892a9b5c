#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "actdst/cli.h"
#include "fixtures.h"

using namespace actdst;

namespace {

namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "actdst");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("actdst_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path tiny_config(const fs::path& dir) {
  const fs::path micro = fixtures::data_dir() / "micro";
  nlohmann::json j = {{"word_dim", 6},        {"char_dim", 4},
                      {"role_dim", 3},        {"char_input_dim", 3},
                      {"kernel_widths", {2, 3}},
                      {"max_steps", 2},       {"batch_size", 8},
                      {"ontology", (micro / "ontology.json").string()},
                      {"train_data", (micro / "dialogues.json").string()},
                      {"dev_data", (micro / "dialogues.json").string()}};
  const fs::path p = dir / "tiny.json";
  std::ofstream(p) << j.dump();
  return p;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"train", "--bogus"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("error categories map to exit codes") {
  const fs::path dir = scratch("errors");
  CHECK(cli({"train", "--config", "/nonexistent.json", "--out", dir.string()}).code ==
        kExitMissingFile);
  std::ofstream(dir / "bad.json") << R"({"precision": 32})";
  CHECK(cli({"train", "--config", (dir / "bad.json").string(), "--out", dir.string()})
            .code == kExitConfig);
  std::ofstream(dir / "junk.bin") << "garbage";
  CHECK(cli({"evaluate", "--checkpoint", (dir / "junk.bin").string()}).code ==
        kExitCheckpoint);
  const fs::path cfg = tiny_config(dir);
  std::ofstream(dir / "broken.json") << "[{\"id\": 1";
  CHECK(cli({"train", "--config", cfg.string(), "--data", (dir / "broken.json").string(),
             "--out", (dir / "o").string()})
            .code == kExitData);
}

TEST_CASE("train, evaluate, predict and export") {
  const fs::path dir = scratch("pipeline");
  const fs::path cfg = tiny_config(dir);
  const fs::path run = dir / "run";
  const Run t = cli({"train", "--config", cfg.string(), "--out", run.string()});
  INFO(t.err);
  REQUIRE(t.code == kExitOk);
  CHECK(fs::exists(run / "checkpoint.bin"));
  CHECK(fs::exists(run / "metrics.jsonl"));
  CHECK(fs::exists(run / "config.json"));

  const fs::path eval = dir / "eval";
  const Run e = cli({"evaluate", "--checkpoint", (run / "checkpoint.bin").string(),
                     "--data", "train", "--out", eval.string()});
  INFO(e.err);
  CHECK(e.code == kExitOk);
  const auto metrics = nlohmann::json::parse(std::ifstream(eval / "metrics.json"));
  CHECK(metrics.contains("joint"));
  CHECK(fs::exists(eval / "predictions.jsonl"));

  const Run p = cli({"predict", "--checkpoint", (run / "checkpoint.bin").string(),
                     "--data", (fixtures::data_dir() / "micro/dialogues.json").string()});
  CHECK(p.code == kExitOk);
  CHECK(p.out.find("\"predicted\"") != std::string::npos);

  const Run x = cli({"export-attention", "--checkpoint", (run / "checkpoint.bin").string(),
                     "--acts", "Inform,Request", "--svg", (dir / "a.svg").string()});
  INFO(x.err);
  CHECK(x.code == kExitOk);
  CHECK(x.out.rfind("act,", 0) == 0);
  CHECK(fs::exists(dir / "a.svg"));

  const Run bad = cli({"export-attention", "--checkpoint",
                       (run / "checkpoint.bin").string(), "--acts", "Chitchat"});
  CHECK(bad.code == kExitData);

  const Run wrong = cli({"evaluate", "--checkpoint", (run / "checkpoint.bin").string(),
                         "--ontology",
                         (fixtures::data_dir() / "walkthrough/ontology.json").string()});
  CHECK(wrong.code == kExitCheckpoint);
}

TEST_CASE("prepare writes cached examples under the cache directory") {
  const fs::path dir = scratch("prepare");
  const fs::path cfg = tiny_config(dir);
  setenv(kCacheDirEnv, (dir / "cache").c_str(), 1);
  const Run r = cli({"prepare", "--config", cfg.string()});
  unsetenv(kCacheDirEnv);
  INFO(r.err);
  CHECK(r.code == kExitOk);
  CHECK(fs::exists(dir / "cache" / "dialogues.examples.jsonl"));
  CHECK(fs::exists(dir / "cache" / "partition.json"));
}

TEST_CASE("gradcheck subcommand") {
  const fs::path dir = scratch("gradcheck");
  const Run r = cli({"gradcheck", "--instances", "1", "--out", (dir / "g.json").string()});
  CHECK(r.code == kExitOk);
  CHECK(fs::exists(dir / "g.json"));
}
