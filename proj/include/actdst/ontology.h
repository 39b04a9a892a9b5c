// Domain ontology: (domain, slot) pairs, their value lists, the
// categorical / non-categorical partition and the system act inventory.

#ifndef ACTDST_ONTOLOGY_H_
#define ACTDST_ONTOLOGY_H_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace actdst {

inline constexpr int kOntologySchemaVersion = 1;

enum class SlotKind { kCategorical, kNonCategorical };
enum class PartitionPolicy { kAllCategorical, kAllNonCategorical, kHybrid };

std::string_view to_string(SlotKind kind);
std::string_view to_string(PartitionPolicy policy);
// Accepts "all_cat" / "all_noncat" / "hybrid" (and the long spellings).
PartitionPolicy parse_partition_policy(std::string_view name);

struct SlotId {
  std::string domain;
  std::string slot;

  // "domain-slot", the key used in files and label maps.
  std::string key() const { return domain + "-" + slot; }
  auto operator<=>(const SlotId&) const = default;
};

// Splits "domain-slot" at the first '-'.
std::optional<SlotId> parse_slot_key(std::string_view key);

struct SlotSpec {
  SlotId id;
  std::vector<std::string> values;  // canonical, file order
  SlotKind kind = SlotKind::kCategorical;

  bool operator==(const SlotSpec&) const = default;
};

// The thirteen MultiWOZ 2.1 system dialogue acts.
const std::vector<std::string>& default_act_inventory();

// Slot names treated as number/time related by the hybrid policy.
const std::vector<std::string>& number_time_slot_names();

class Ontology {
 public:
  Ontology() = default;
  Ontology(std::vector<SlotSpec> slots, std::vector<std::string> acts,
           std::optional<std::vector<std::string>> non_categorical_override);

  const std::vector<SlotSpec>& slots() const { return slots_; }
  const std::vector<std::string>& domains() const { return domains_; }
  const std::vector<std::string>& acts() const { return acts_; }
  const std::optional<std::vector<std::string>>& non_categorical_override()
      const {
    return non_categorical_override_;
  }

  std::size_t size() const { return slots_.size(); }
  const SlotSpec& slot(std::size_t i) const { return slots_.at(i); }
  std::optional<std::size_t> index_of(std::string_view domain,
                                      std::string_view slot) const;
  std::optional<std::size_t> index_of(std::string_view key) const;
  bool has_domain(std::string_view domain) const;
  // Canonical inventory spelling of an act name, matched case-insensitively.
  std::optional<std::string> find_act(std::string_view name) const;

  // Partition map as (key -> kind), for inspection and tests.
  std::map<std::string, SlotKind> partition() const;
  void set_kind(std::size_t i, SlotKind kind) { slots_.at(i).kind = kind; }

  bool operator==(const Ontology&) const = default;

 private:
  std::vector<SlotSpec> slots_;
  std::vector<std::string> domains_;
  std::vector<std::string> acts_;
  std::optional<std::vector<std::string>> non_categorical_override_;
};

struct OptionSet {
  SlotId slot;
  SlotKind kind = SlotKind::kCategorical;
  // Categorical: values, "none", "dont_care". Non-categorical: "span",
  // "none", "dont_care".
  std::vector<std::string> options;

  std::size_t num_values() const { return options.size() - 2; }
  std::optional<std::size_t> index_of(std::string_view option) const;
};

// Per-slot count of non-special gold values, and how many of those parse as
// numbers or HH:MM times. Feeds the hybrid policy's statistical fallback.
struct SlotValueStats {
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // key -> (numeric, total)
};

Ontology load_ontology(const std::filesystem::path& path);
Ontology parse_ontology(std::string_view text);
std::string serialize_ontology(const Ontology& ontology);
void save_ontology(const Ontology& ontology, const std::filesystem::path& path);

// Hybrid: a slot is non-categorical iff its name is in the file's
// "non_categorical" list when one is given, otherwise iff its name is in
// number_time_slot_names() or >= 90% of its training gold values parse as
// numbers/times.
Ontology partition_slots(Ontology ontology, PartitionPolicy policy,
                         const SlotValueStats* stats = nullptr);

OptionSet option_set(const Ontology& ontology, std::string_view domain,
                     std::string_view slot);
OptionSet option_set(const Ontology& ontology, std::size_t index);

// FNV-1a over the slot list, value lists and act inventory. The partition is
// excluded; checkpoints carry their own.
std::uint64_t ontology_hash(const Ontology& ontology);

}  // namespace actdst

#endif  // ACTDST_ONTOLOGY_H_
