#include "actdst/convert.h"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "actdst/errors.h"
#include "actdst/text.h"

namespace actdst {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError(path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::set<std::string> read_id_list(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (!line.empty()) ids.insert(line);
  }
  return ids;
}

std::string text_of(const json& entry) {
  return entry.contains("text") && entry["text"].is_string()
             ? entry["text"].get<std::string>()
             : std::string();
}

ordered_json acts_of(const json& entry) {
  ordered_json acts = ordered_json::array();
  if (!entry.contains("dialog_act") || !entry["dialog_act"].is_object())
    return acts;
  for (auto it = entry["dialog_act"].begin(); it != entry["dialog_act"].end();
       ++it)
    acts.push_back(it.key());
  return acts;
}

void add_value(ordered_json& state, const std::string& domain,
               const std::string& slot, const json& value) {
  if (slot.empty()) return;
  std::string raw;
  if (value.is_string()) {
    raw = value.get<std::string>();
  } else if (value.is_number()) {
    raw = value.dump();
  } else {
    return;
  }
  const std::string canonical = canonical_value(raw);
  if (canonical == kNoneValue) return;
  state[domain + "-" + slot] = canonical;
}

ordered_json state_of(const json& entry) {
  ordered_json state = ordered_json::object();
  if (!entry.contains("metadata") || !entry["metadata"].is_object())
    return state;
  for (auto& [domain, slots] : entry["metadata"].items()) {
    if (supported_domains().count(domain) == 0 || !slots.is_object()) continue;
    if (slots.contains("book") && slots["book"].is_object())
      for (auto& [k, v] : slots["book"].items())
        add_value(state, domain, normalize_slot_name(k, true), v);
    if (slots.contains("semi") && slots["semi"].is_object())
      for (auto& [k, v] : slots["semi"].items())
        add_value(state, domain, normalize_slot_name(k, false), v);
  }
  return state;
}

}  // namespace

const std::set<std::string>& supported_domains() {
  static const std::set<std::string> kDomains = {"attraction", "hotel",
                                                 "restaurant", "taxi", "train"};
  return kDomains;
}

std::string normalize_slot_name(std::string_view name, bool book) {
  std::string n = to_lower(name);
  if (n == "booked" || n == "ticket") return "";
  if (n == "pricerange") n = "price range";
  return book ? "book " + n : n;
}

ConvertedCorpus convert_multiwoz(std::string_view data_json,
                                 const std::set<std::string>& val_ids,
                                 const std::set<std::string>& test_ids) {
  json data;
  try {
    data = json::parse(data_json);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("MultiWOZ data: ") + e.what());
  }
  if (!data.is_object())
    throw DataError("MultiWOZ data: expected an object keyed by dialogue id");
  ordered_json train = ordered_json::array();
  ordered_json dev = ordered_json::array();
  ordered_json test = ordered_json::array();
  for (auto& [id, dialogue] : data.items()) {
    if (!dialogue.contains("log") || !dialogue["log"].is_array())
      throw DataError("MultiWOZ data: dialogue " + id + " has no log");
    const json& log = dialogue["log"];
    ordered_json d;
    d["id"] = id;
    d["turns"] = ordered_json::array();
    // log alternates user, system; the system entry after user turn t holds
    // the state for t.
    for (std::size_t u = 0; u + 1 < log.size(); u += 2) {
      ordered_json turn;
      turn["system"] = u == 0 ? std::string() : text_of(log[u - 1]);
      turn["user"] = text_of(log[u]);
      turn["system_acts"] =
          u == 0 ? ordered_json::array() : acts_of(log[u - 1]);
      turn["state"] = state_of(log[u + 1]);
      d["turns"].push_back(turn);
    }
    if (val_ids.count(id)) {
      dev.push_back(d);
    } else if (test_ids.count(id)) {
      test.push_back(d);
    } else {
      train.push_back(d);
    }
  }
  ConvertedCorpus out;
  out.train_count = train.size();
  out.dev_count = dev.size();
  out.test_count = test.size();
  out.train = train.dump(1) + "\n";
  out.dev = dev.dump(1) + "\n";
  out.test = test.dump(1) + "\n";
  return out;
}

ConvertedCorpus convert_multiwoz_files(const std::filesystem::path& data_json,
                                       const std::filesystem::path& val_list,
                                       const std::filesystem::path& test_list,
                                       const std::filesystem::path& out_dir) {
  ConvertedCorpus c = convert_multiwoz(read_file(data_json),
                                       read_id_list(val_list),
                                       read_id_list(test_list));
  std::filesystem::create_directories(out_dir);
  for (auto [name, text] : {std::pair{"train.json", &c.train},
                            std::pair{"dev.json", &c.dev},
                            std::pair{"test.json", &c.test}}) {
    std::ofstream out(out_dir / name);
    if (!out) throw DataError("cannot write " + (out_dir / name).string());
    out << *text;
  }
  return c;
}

}  // namespace actdst
