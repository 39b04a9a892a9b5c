#include "actdst/ontology.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "actdst/errors.h"
#include "actdst/text.h"

namespace actdst {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kNumericFraction = 0.9;

void fnv_mix(std::uint64_t& h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  h ^= 0xff;
  h *= 1099511628211ULL;
}

bool in_list(const std::vector<std::string>& list, const SlotId& id) {
  return std::any_of(list.begin(), list.end(), [&](const std::string& s) {
    return s == id.slot || s == id.key();
  });
}

}  // namespace

std::string_view to_string(SlotKind kind) {
  return kind == SlotKind::kCategorical ? "categorical" : "non_categorical";
}

std::string_view to_string(PartitionPolicy policy) {
  switch (policy) {
    case PartitionPolicy::kAllCategorical:
      return "all_cat";
    case PartitionPolicy::kAllNonCategorical:
      return "all_noncat";
    case PartitionPolicy::kHybrid:
      return "hybrid";
  }
  return "hybrid";
}

PartitionPolicy parse_partition_policy(std::string_view name) {
  const std::string n = to_lower(name);
  if (n == "all_cat" || n == "all_categorical")
    return PartitionPolicy::kAllCategorical;
  if (n == "all_noncat" || n == "all_non_categorical")
    return PartitionPolicy::kAllNonCategorical;
  if (n == "hybrid") return PartitionPolicy::kHybrid;
  throw ConfigError("unknown slot policy: " + std::string(name));
}

std::optional<SlotId> parse_slot_key(std::string_view key) {
  const auto dash = key.find('-');
  if (dash == std::string_view::npos || dash == 0 || dash + 1 == key.size())
    return std::nullopt;
  return SlotId{to_lower(key.substr(0, dash)), to_lower(key.substr(dash + 1))};
}

const std::vector<std::string>& default_act_inventory() {
  static const std::vector<std::string> kActs = {
      "Inform",  "Request", "Recommend",  "Select",      "NoOffer",
      "Book",    "NoBook",  "OfferBook",  "OfferBooked", "Reqmore",
      "Welcome", "Bye",     "Greet"};
  return kActs;
}

const std::vector<std::string>& number_time_slot_names() {
  static const std::vector<std::string> kNames = {
      "leaveat", "arriveby", "book time", "book people", "book stay", "stars"};
  return kNames;
}

Ontology::Ontology(std::vector<SlotSpec> slots, std::vector<std::string> acts,
                   std::optional<std::vector<std::string>> non_cat)
    : slots_(std::move(slots)),
      acts_(std::move(acts)),
      non_categorical_override_(std::move(non_cat)) {
  for (const SlotSpec& s : slots_)
    if (std::find(domains_.begin(), domains_.end(), s.id.domain) ==
        domains_.end())
      domains_.push_back(s.id.domain);
}

std::optional<std::size_t> Ontology::index_of(std::string_view domain,
                                              std::string_view slot) const {
  for (std::size_t i = 0; i < slots_.size(); ++i)
    if (slots_[i].id.domain == domain && slots_[i].id.slot == slot) return i;
  return std::nullopt;
}

std::optional<std::size_t> Ontology::index_of(std::string_view key) const {
  const auto id = parse_slot_key(key);
  if (!id) return std::nullopt;
  return index_of(id->domain, id->slot);
}

bool Ontology::has_domain(std::string_view domain) const {
  return std::find(domains_.begin(), domains_.end(), domain) != domains_.end();
}

std::optional<std::string> Ontology::find_act(std::string_view name) const {
  const std::string lower = to_lower(name);
  for (const std::string& a : acts_)
    if (to_lower(a) == lower) return a;
  return std::nullopt;
}

std::map<std::string, SlotKind> Ontology::partition() const {
  std::map<std::string, SlotKind> out;
  for (const SlotSpec& s : slots_) out.emplace(s.id.key(), s.kind);
  return out;
}

std::optional<std::size_t> OptionSet::index_of(std::string_view option) const {
  for (std::size_t i = 0; i < options.size(); ++i)
    if (options[i] == option) return i;
  return std::nullopt;
}

Ontology parse_ontology(std::string_view text) {
  // Duplicate top-level keys would otherwise be merged silently.
  std::set<std::string> seen_keys;
  std::string duplicate;
  ordered_json::parser_callback_t detect = [&](int depth,
                                               ordered_json::parse_event_t ev,
                                               ordered_json& parsed) {
    if (ev == ordered_json::parse_event_t::key && depth == 1) {
      const std::string k = parsed.get<std::string>();
      if (!seen_keys.insert(k).second && duplicate.empty()) duplicate = k;
    }
    return true;
  };
  ordered_json doc;
  try {
    doc = ordered_json::parse(text.begin(), text.end(), detect);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("ontology: malformed document: ") + e.what());
  }
  if (!duplicate.empty())
    throw DataError("ontology: duplicate (domain, slot): " + duplicate);
  if (!doc.is_object()) throw DataError("ontology: top level must be an object");

  if (doc.contains("schema_version")) {
    if (!doc["schema_version"].is_number_integer() ||
        doc["schema_version"].get<int>() != kOntologySchemaVersion)
      throw DataError("ontology: unsupported schema_version");
  }

  std::vector<std::string> acts = default_act_inventory();
  if (doc.contains("acts")) {
    if (!doc["acts"].is_array())
      throw DataError("ontology: \"acts\" must be an array of strings");
    acts.clear();
    for (const auto& a : doc["acts"]) {
      if (!a.is_string() || a.get<std::string>().empty())
        throw DataError("ontology: malformed act name");
      acts.push_back(a.get<std::string>());
    }
  }

  std::optional<std::vector<std::string>> non_cat;
  if (doc.contains("non_categorical")) {
    if (!doc["non_categorical"].is_array())
      throw DataError("ontology: \"non_categorical\" must be an array");
    non_cat.emplace();
    for (const auto& s : doc["non_categorical"]) {
      if (!s.is_string()) throw DataError("ontology: malformed non_categorical");
      non_cat->push_back(to_lower(s.get<std::string>()));
    }
  }

  std::vector<SlotSpec> slots;
  std::set<std::string> keys;
  for (const auto& [raw_key, raw_values] : doc.items()) {
    if (raw_key == "schema_version" || raw_key == "acts" ||
        raw_key == "non_categorical")
      continue;
    const auto id = parse_slot_key(raw_key);
    if (!id) throw DataError("ontology: malformed slot key: " + raw_key);
    if (!keys.insert(id->key()).second)
      throw DataError("ontology: duplicate (domain, slot): " + id->key());
    if (!raw_values.is_array())
      throw DataError("ontology: values of " + raw_key + " must be an array");
    SlotSpec spec{*id, {}, SlotKind::kCategorical};
    std::set<std::string> seen;
    for (const auto& v : raw_values) {
      if (!v.is_string())
        throw DataError("ontology: non-string value in " + raw_key);
      const std::string c = canonical_value(v.get<std::string>());
      if (is_special_value(c))
        throw DataError("ontology: reserved value \"" + v.get<std::string>() +
                        "\" in " + raw_key);
      if (!seen.insert(c).second)
        throw DataError("ontology: duplicate value \"" + c + "\" in " +
                        raw_key);
      spec.values.push_back(c);
    }
    if (spec.values.empty())
      throw DataError("ontology: empty value list for " + raw_key);
    slots.push_back(std::move(spec));
  }
  if (slots.empty()) throw DataError("ontology: no slots declared");
  return partition_slots(Ontology(std::move(slots), std::move(acts),
                                  std::move(non_cat)),
                         PartitionPolicy::kHybrid);
}

Ontology load_ontology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_ontology(buf.str());
}

std::string serialize_ontology(const Ontology& ontology) {
  ordered_json doc = ordered_json::object();
  doc["schema_version"] = kOntologySchemaVersion;
  doc["acts"] = ontology.acts();
  if (ontology.non_categorical_override())
    doc["non_categorical"] = *ontology.non_categorical_override();
  for (const SlotSpec& s : ontology.slots()) doc[s.id.key()] = s.values;
  return doc.dump(2) + "\n";
}

void save_ontology(const Ontology& ontology,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw MissingFileError(path.string());
  out << serialize_ontology(ontology);
}

Ontology partition_slots(Ontology ontology, PartitionPolicy policy,
                         const SlotValueStats* stats) {
  for (std::size_t i = 0; i < ontology.size(); ++i) {
    const SlotSpec& s = ontology.slot(i);
    SlotKind kind = SlotKind::kCategorical;
    switch (policy) {
      case PartitionPolicy::kAllCategorical:
        break;
      case PartitionPolicy::kAllNonCategorical:
        kind = SlotKind::kNonCategorical;
        break;
      case PartitionPolicy::kHybrid: {
        bool non_cat = false;
        if (const auto& over = ontology.non_categorical_override()) {
          non_cat = in_list(*over, s.id);
        } else {
          non_cat = in_list(number_time_slot_names(), s.id);
          if (!non_cat && stats != nullptr) {
            auto it = stats->counts.find(s.id.key());
            if (it != stats->counts.end() && it->second.second > 0) {
              const double frac = static_cast<double>(it->second.first) /
                                  static_cast<double>(it->second.second);
              non_cat = frac >= kNumericFraction;
            }
          }
        }
        if (non_cat) kind = SlotKind::kNonCategorical;
        break;
      }
    }
    ontology.set_kind(i, kind);
  }
  return ontology;
}

OptionSet option_set(const Ontology& ontology, std::size_t index) {
  const SlotSpec& s = ontology.slot(index);
  OptionSet out{s.id, s.kind, {}};
  if (s.kind == SlotKind::kCategorical) {
    out.options = s.values;
  } else {
    out.options.emplace_back("span");
  }
  out.options.emplace_back(kNoneValue);
  out.options.emplace_back(kDontCareValue);
  return out;
}

OptionSet option_set(const Ontology& ontology, std::string_view domain,
                     std::string_view slot) {
  const auto i = ontology.index_of(domain, slot);
  if (!i)
    throw DataError("unknown (domain, slot): " + std::string(domain) + "-" +
                    std::string(slot));
  return option_set(ontology, *i);
}

std::uint64_t ontology_hash(const Ontology& ontology) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const SlotSpec& s : ontology.slots()) {
    fnv_mix(h, s.id.key());
    for (const std::string& v : s.values) fnv_mix(h, v);
    fnv_mix(h, "|");
  }
  for (const std::string& a : ontology.acts()) fnv_mix(h, a);
  return h;
}

}  // namespace actdst
