// Tokenization and value canonicalization shared by ingestion, features and
// decoding. Everything downstream assumes tokens produced here.

#ifndef ACTDST_TEXT_H_
#define ACTDST_TEXT_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace actdst {

inline constexpr std::string_view kNoneValue = "none";
inline constexpr std::string_view kDontCareValue = "dont_care";

// Lowercases, splits on whitespace and emits punctuation as separate tokens.
// A ':' or '.' between two digits stays inside the token, so "20:45" and
// "4.5" survive as single tokens. '_' is a word character.
std::vector<std::string> tokenize(std::string_view text);

// Tokens [start, end] joined by single spaces.
std::string detokenize(std::span<const std::string> tokens, std::size_t start,
                       std::size_t end);
std::string join_tokens(std::span<const std::string> tokens);

// Gold/ontology value normalization applied at ingestion: the MultiWOZ
// spellings of the two special values collapse onto "none" / "dont_care",
// everything else becomes join_tokens(tokenize(value)).
std::string canonical_value(std::string_view value);

bool is_special_value(std::string_view canonical);

// True for integers, decimals and HH:MM times.
bool is_number_or_time(std::string_view canonical);

std::string to_lower(std::string_view s);

}  // namespace actdst

#endif  // ACTDST_TEXT_H_
