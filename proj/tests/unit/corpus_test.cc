#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "actdst/corpus.h"
#include "actdst/errors.h"
#include "actdst/text.h"
#include "fixtures.h"
#include "oracles.h"

using namespace actdst;

namespace {

const Ontology& walkthrough_ontology() {
  static const Ontology o =
      load_ontology(fixtures::data_dir() / "walkthrough/ontology.json");
  return o;
}

const Dialogue& walkthrough() {
  static const std::vector<Dialogue> d = load_dialogues(
      fixtures::data_dir() / "walkthrough/dialogue.json", walkthrough_ontology());
  return d.at(0);
}

}  // namespace

TEST_CASE("walkthrough context grows by system then user utterance") {
  const Dialogue& d = walkthrough();
  REQUIRE(d.turns.size() == 4);
  CHECK(d.turns[0].system_utterance.empty());
  const auto [c1, r1] = build_context(d, 1);
  CHECK(c1 == d.turns[0].user_utterance);
  for (Role r : r1) CHECK(r == Role::kUser);
  const auto [c2, r2] = build_context(d, 2);
  CHECK(c2.size() == c1.size() + d.turns[1].system_utterance.size() +
                         d.turns[1].user_utterance.size());
  CHECK(r2[c1.size()] == Role::kSys);
  CHECK(r2.back() == Role::kUser);
  CHECK_THROWS_AS(build_context(d, 0), std::out_of_range);
  CHECK_THROWS_AS(build_context(d, 5), std::out_of_range);
}

TEST_CASE("walkthrough act sequence accumulates system acts") {
  const Dialogue& d = walkthrough();
  CHECK(build_act_sequence(d, 1).empty());
  const ActSequence a2 = build_act_sequence(d, 2);
  CHECK(a2.names == std::vector<std::string>{"Inform", "Request"});
  CHECK(a2.turn_index == std::vector<int>{2, 2});
  const ActSequence a4 = build_act_sequence(d, 4);
  CHECK(a4.names ==
        std::vector<std::string>{"Inform", "Request", "Request", "OfferBooked"});
}

TEST_CASE("walkthrough turn 3 gold state and labels") {
  const Ontology& o = walkthrough_ontology();
  const TurnExample ex = build_turn_example(walkthrough(), 3, o);
  int train_values = 0;
  for (std::size_t m = 0; m < o.size(); ++m)
    if (o.slot(m).id.domain == "train" && ex.gold_state[m] != "none")
      ++train_values;
  CHECK(train_values == 4);

  const std::size_t day = *o.index_of("train-day");
  CHECK(ex.labels[day].kind == SlotKind::kCategorical);
  CHECK(ex.labels[day].value_index == 2);

  const std::size_t arrive = *o.index_of("train-arriveby");
  const Label& l = ex.labels[arrive];
  CHECK(l.kind == SlotKind::kNonCategorical);
  CHECK(l.span_type == SpanType::kSpan);
  CHECK(ex.context[static_cast<std::size_t>(l.start)] == "20:45");
  CHECK(l.start == l.end);

  const std::size_t stars = *o.index_of("hotel-stars");
  CHECK(ex.labels[stars].span_type == SpanType::kNone);
  const std::size_t departure = *o.index_of("train-departure");
  CHECK(ex.gold_state[departure] == "birmingham new street");
}

TEST_CASE("dialogue ingestion rejects unknown acts and warns on foreign domains") {
  const Ontology& o = walkthrough_ontology();
  CHECK_THROWS_AS(parse_dialogues(R"([{"id": "x", "turns": [{"system": "", "user": "hi",
      "system_acts": ["Train-Chitchat"], "state": {}}]}])", o),
                  DataError);
  std::ostringstream sink;
  WarningLog log(&sink);
  const auto kept = parse_dialogues(R"({"dialogues": [{"id": "p", "turns": [{"system": "",
      "user": "police please", "system_acts": [], "state": {"police-name": "x"}}]}]})",
                                    o, &log);
  CHECK(kept.empty());
  CHECK(log.count() >= 1);
  CHECK(sink.str().find("\"dialogue\":\"p\"") != std::string::npos);
  CHECK_THROWS_AS(parse_dialogues("{not json", o), DataError);
}

TEST_CASE("find_value_span prefers the last occurrence by default") {
  const auto c = tokenize("to ely . no , from ely");
  CHECK(find_value_span(c, "ely") == std::make_pair(6, 6));
  CHECK(find_value_span(c, "ely", SpanChoice::kFirst) == std::make_pair(1, 1));
  CHECK_FALSE(find_value_span(c, "cambridge").has_value());
}

TEST_CASE("missing span value falls back to none with a warning") {
  const Ontology o = parse_ontology(R"({"train-arriveby": ["10:00"]})");
  const auto d = parse_dialogues(R"([{"id": "m", "turns": [{"system": "", "user": "a train please",
      "system_acts": [], "state": {"train-arriveby": "10:00"}}]}])", o);
  WarningLog log;
  const auto labels = derive_labels(d[0], 1, o, &log);
  CHECK(labels[0].span_type == SpanType::kNone);
  CHECK(log.count() == 1);
}

TEST_CASE("context cap keeps the most recent tokens and shifts spans") {
  const Ontology& o = walkthrough_ontology();
  CorpusOptions opts;
  opts.context_cap = 12;
  const TurnExample full = build_turn_example(walkthrough(), 4, o);
  const TurnExample cut = build_turn_example(walkthrough(), 4, o, nullptr, opts);
  REQUIRE(cut.context.size() == 12);
  CHECK(std::equal(cut.context.begin(), cut.context.end(),
                   full.context.end() - 12));
  CHECK(cut.exact.rows() == 12);
  const std::size_t stars = *o.index_of("hotel-stars");
  REQUIRE(cut.labels[stars].span_type == SpanType::kSpan);
  CHECK(cut.context[static_cast<std::size_t>(cut.labels[stars].start)] == "4");
}

TEST_CASE("exact-match features agree with the brute-force oracle") {
  std::mt19937_64 rng(17);
  const std::vector<std::string> words = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> pick(0, 3), len(0, 12), vlen(1, 3),
        nvals(1, 3), nslots(1, 4);
    std::vector<std::string> context(static_cast<std::size_t>(len(rng)));
    for (auto& t : context) t = words[pick(rng)];
    std::vector<std::vector<std::string>> values(static_cast<std::size_t>(nslots(rng)));
    std::string doc = "{";
    for (std::size_t m = 0; m < values.size(); ++m) {
      std::set<std::string> seen;
      for (int k = nvals(rng); k > 0; --k) {
        std::string v;
        for (int j = vlen(rng); j > 0; --j) v += (v.empty() ? "" : " ") + words[pick(rng)];
        if (seen.insert(v).second) values[m].push_back(v);
      }
      doc += (m ? "," : "") + std::string("\"d-s") + std::to_string(m) + "\": [";
      for (std::size_t k = 0; k < values[m].size(); ++k)
        doc += (k ? ",\"" : "\"") + values[m][k] + "\"";
      doc += "]";
    }
    doc += "}";
    const Ontology o = parse_ontology(doc);
    const Eigen::MatrixXd got = exact_match_features(context, o);
    const auto want = oracle::exact_match(context, values);
    REQUIRE(got.rows() == static_cast<Eigen::Index>(context.size()));
    for (std::size_t i = 0; i < context.size(); ++i)
      for (std::size_t m = 0; m < values.size(); ++m)
        CHECK(got(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) ==
              want[i][m]);
  }
}

TEST_CASE("make_batches is a deterministic permutation with padded masks") {
  const auto c = fixtures::load("micro/micro.json");
  const auto& ex = c.train_examples;
  const auto a = make_batches(ex, 5, 3);
  const auto b = make_batches(ex, 5, 3);
  std::vector<std::size_t> seen;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].indices == b[i].indices);
    CHECK(a[i].size() <= 5);
    for (std::size_t r = 0; r < a[i].size(); ++r) {
      const auto& e = ex[a[i].indices[r]];
      seen.push_back(a[i].indices[r]);
      CHECK(a[i].context_lengths[r] == static_cast<int>(e.context.size()));
      for (Eigen::Index j = 0; j < a[i].context_mask.cols(); ++j)
        CHECK(a[i].context_mask(static_cast<Eigen::Index>(r), j) ==
              (j < static_cast<Eigen::Index>(e.context.size()) ? 1 : 0));
    }
  }
  std::sort(seen.begin(), seen.end());
  for (std::size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == i);
  CHECK(seen.size() == ex.size());
}

TEST_CASE("cached examples round-trip") {
  const auto c = fixtures::load("micro/micro.json");
  std::stringstream ss;
  write_examples(c.train_examples, ss);
  const auto back = read_examples(ss, c.ontology);
  REQUIRE(back.size() == c.train_examples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].context == c.train_examples[i].context);
    CHECK(back[i].labels == c.train_examples[i].labels);
    CHECK(back[i].acts.names == c.train_examples[i].acts.names);
    CHECK(back[i].exact == c.train_examples[i].exact);
    CHECK(back[i].gold_state == c.train_examples[i].gold_state);
  }
}

TEST_CASE("micro fixture shape") {
  const auto c = fixtures::load("micro/micro.json");
  CHECK(c.train.size() == 8);
  CHECK(c.ontology.domains().size() == 2);
  int cat = 0, non = 0;
  for (const auto& s : c.ontology.slots())
    (s.kind == SlotKind::kCategorical ? cat : non)++;
  CHECK(cat == 2);
  CHECK(non == 2);
}
