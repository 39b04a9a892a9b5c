// Conversion of the raw MultiWOZ 2.1 release (data.json plus the validation
// and test list files) into the dialogue file format read by
// load_dialogues().

#ifndef ACTDST_CONVERT_H_
#define ACTDST_CONVERT_H_

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>

namespace actdst {

// The five domains kept by the converter.
const std::set<std::string>& supported_domains();

// "pricerange" -> "price range", "arriveBy" -> "arriveby", book keys get a
// "book " prefix. Returns "" for keys that are not slots ("booked").
std::string normalize_slot_name(std::string_view name, bool book);

struct ConvertedCorpus {
  std::string train;  // dialogue-file JSON text
  std::string dev;
  std::string test;
  std::size_t train_count = 0;
  std::size_t dev_count = 0;
  std::size_t test_count = 0;
};

// val_ids / test_ids hold dialogue ids as listed in the split files
// ("PMUL0698.json"). Everything else goes to train.
ConvertedCorpus convert_multiwoz(std::string_view data_json,
                                 const std::set<std::string>& val_ids,
                                 const std::set<std::string>& test_ids);

// Writes train.json, dev.json and test.json into out_dir.
ConvertedCorpus convert_multiwoz_files(const std::filesystem::path& data_json,
                                       const std::filesystem::path& val_list,
                                       const std::filesystem::path& test_list,
                                       const std::filesystem::path& out_dir);

}  // namespace actdst

#endif  // ACTDST_CONVERT_H_
