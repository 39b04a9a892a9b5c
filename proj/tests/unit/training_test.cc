#include <doctest.h>

#include <sstream>

#include "actdst/errors.h"
#include "actdst/training.h"
#include "fixtures.h"

using namespace actdst;

TEST_CASE("run config defaults") {
  const RunConfig c = parse_run_config("{}");
  CHECK(c.learning_rate == 0.001);
  CHECK(c.batch_size == 24);
  CHECK(c.optimizer == "adam");
  CHECK(c.word_dim == 512);
  CHECK(c.char_dim == 100);
  CHECK(c.role_dim == 128);
  CHECK(c.precision == 64);
  CHECK(c.act_attention);
}

TEST_CASE("run config validation") {
  CHECK_THROWS_AS(parse_run_config(R"({"learning_rat": 0.1})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"precision": 32})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"batch_size": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"optimizer": "sgd"})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"slot_policy": "half"})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"learning_rate": "fast"})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[1]"), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), MissingFileError);
}

TEST_CASE("run config serialization round-trips") {
  RunConfig c = fixtures::tiny_config();
  c.slot_policy = PartitionPolicy::kAllCategorical;
  c.act_attention = false;
  const RunConfig back = parse_run_config(serialize_run_config(c));
  CHECK(serialize_run_config(back) == serialize_run_config(c));
  CHECK(same_except_ablation(c, back));
  RunConfig d = c;
  d.act_attention = true;
  CHECK(same_except_ablation(c, d));
  d.learning_rate = 0.01;
  CHECK_FALSE(same_except_ablation(c, d));
}

TEST_CASE("shipped configs resolve their paths") {
  const RunConfig c = load_run_config(fixtures::data_dir() / "micro/micro.json");
  CHECK(std::filesystem::exists(c.ontology));
  CHECK(std::filesystem::exists(c.train_data));
}

TEST_CASE("adam matches the bias-corrected update") {
  Parameter p("p", Matrix::Constant(1, 1, 1.0));
  p.grad(0, 0) = 0.5;
  Adam adam;
  std::vector<Parameter*> ps = {&p};
  adam.step(ps, 0.1);
  // First step: m_hat = g, v_hat = g^2.
  CHECK(p.value(0, 0) == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)));
  CHECK(adam.steps() == 1);
}

TEST_CASE("gradient clipping scales to the max norm") {
  Parameter a("a", Matrix::Zero(1, 2));
  Parameter b("b", Matrix::Zero(1, 1));
  a.grad << 3.0, 0.0;
  b.grad << 4.0;
  std::vector<Parameter*> ps = {&a, &b};
  CHECK(clip_gradients(ps, 1.0) == doctest::Approx(5.0));
  CHECK(a.grad(0, 0) == doctest::Approx(0.6));
  CHECK(b.grad(0, 0) == doctest::Approx(0.8));
  CHECK(clip_gradients(ps, 10.0) == doctest::Approx(1.0));
  zero_gradients(ps);
  CHECK(a.grad.isZero());
}

TEST_CASE("gradient check reports frozen parameters without probing") {
  Parameter live("live", Matrix::Constant(2, 1, 0.3));
  Parameter frozen("frozen", Matrix::Constant(2, 1, 0.7), false);
  std::vector<Parameter*> ps = {&live, &frozen};
  const GradCheckReport r = gradient_check(
      [&](Tape& t) { return sum(hadamard(t.param(live), t.param(frozen))); }, ps);
  REQUIRE(r.entries.size() == 2);
  CHECK(r.entries[0].rel_error < 1e-8);
  CHECK(r.entries[1].frozen);
}

TEST_CASE("gradient check suite on a few instances") {
  const GradCheckSuite s = run_gradient_checks(2, 99);
  CHECK(s.max_rel_error() < 1e-4);
  CHECK_FALSE(s.total_loss.entries.empty());
}

TEST_CASE("training is deterministic and lowers the loss") {
  const auto c = fixtures::load("micro/micro.json");
  RunConfig cfg = fixtures::tiny_config();
  cfg.max_steps = 6;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.01;
  auto a = build_model(cfg, c.ontology, c.train_examples);
  auto b = build_model(cfg, c.ontology, c.train_examples);
  std::ostringstream log;
  TrainOptions opts;
  opts.metrics_log = &log;
  const TrainResult ra = train(*a, cfg, c.train_examples, {}, opts);
  const TrainResult rb = train(*b, cfg, c.train_examples, {});
  CHECK(ra.steps == 6);
  CHECK(ra.step_losses == rb.step_losses);
  CHECK(ra.step_losses.back() < ra.step_losses.front());
  CHECK(log.str().find("\"train_loss\"") != std::string::npos);
}

TEST_CASE("patience stops training early") {
  const auto c = fixtures::load("micro/micro.json");
  RunConfig cfg = fixtures::tiny_config();
  cfg.max_epochs = 50;
  cfg.patience = 1;
  cfg.learning_rate = 1e-12;
  auto m = build_model(cfg, c.ontology, c.train_examples);
  const TrainResult r = train(*m, cfg, c.train_examples, c.train_examples);
  CHECK(r.log.size() == 2);
  CHECK(r.best_epoch == 1);
}

TEST_CASE("non-finite loss raises a divergence error") {
  const auto c = fixtures::load("micro/micro.json");
  auto m = build_model(fixtures::tiny_config(), c.ontology, c.train_examples);
  m->heads().theta_v().value(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(example_loss_and_gradient(*m, c.train_examples.at(0), 0, 1.0),
                  DivergenceError);
}
