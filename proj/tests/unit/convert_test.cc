#include <doctest.h>

#include <json.hpp>

#include "actdst/convert.h"
#include "actdst/errors.h"

using namespace actdst;

namespace {

constexpr const char* kRaw = R"({
  "MUL0001.json": {"log": [
    {"text": "I need a cheap hotel.", "metadata": {}},
    {"text": "Which area?", "dialog_act": {"Hotel-Request": [["Area", "?"]]},
     "metadata": {"hotel": {"book": {"booked": [], "people": ""},
                            "semi": {"pricerange": "cheap", "area": "not mentioned"}},
                  "police": {"semi": {"name": "x"}}}},
    {"text": "North please.", "metadata": {}},
    {"text": "Booked.", "dialog_act": {"Booking-Book": [["Ref", "x"]]},
     "metadata": {"hotel": {"book": {"booked": [], "people": "2"},
                            "semi": {"pricerange": "cheap", "area": "north"}}}}
  ]},
  "PMUL0002.json": {"log": []}
})";

}  // namespace

TEST_CASE("slot names are normalized") {
  CHECK(normalize_slot_name("pricerange", false) == "price range");
  CHECK(normalize_slot_name("people", true) == "book people");
  CHECK(normalize_slot_name("booked", true).empty());
  CHECK(supported_domains().count("police") == 0);
}

TEST_CASE("conversion pairs system turns with the following user turn") {
  const ConvertedCorpus c = convert_multiwoz(kRaw, {"PMUL0002.json"}, {});
  CHECK(c.train_count == 1);
  CHECK(c.dev_count == 1);
  CHECK(c.test_count == 0);
  const auto train = nlohmann::json::parse(c.train);
  const auto& turns = train.at(0).at("turns");
  REQUIRE(turns.size() == 2);
  CHECK(turns[0]["system"] == "");
  CHECK(turns[0]["system_acts"].empty());
  CHECK(turns[0]["state"] == nlohmann::json({{"hotel-price range", "cheap"}}));
  CHECK(turns[1]["system"] == "Which area?");
  CHECK(turns[1]["system_acts"] == nlohmann::json::array({"Hotel-Request"}));
  CHECK(turns[1]["state"]["hotel-area"] == "north");
  CHECK(turns[1]["state"]["hotel-book people"] == "2");
}

TEST_CASE("conversion rejects malformed input") {
  CHECK_THROWS_AS(convert_multiwoz("[]", {}, {}), DataError);
  CHECK_THROWS_AS(convert_multiwoz("{", {}, {}), DataError);
  CHECK_THROWS_AS(convert_multiwoz(R"({"x": {}})", {}, {}), DataError);
}
