#include "actdst/text.h"

#include <algorithm>
#include <array>
#include <cctype>

namespace actdst {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)); }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) || c == '_';
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  const std::string lower = to_lower(text);
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < lower.size(); ++i) {
    const char c = lower[i];
    if (is_space(c)) {
      flush();
    } else if (is_word_char(c)) {
      current.push_back(c);
    } else if ((c == ':' || c == '.') && !current.empty() &&
               is_digit(current.back()) && i + 1 < lower.size() &&
               is_digit(lower[i + 1])) {
      current.push_back(c);
    } else {
      flush();
      tokens.emplace_back(1, c);
    }
  }
  flush();
  return tokens;
}

std::string detokenize(std::span<const std::string> tokens, std::size_t start,
                       std::size_t end) {
  std::string out;
  for (std::size_t i = start; i <= end && i < tokens.size(); ++i) {
    if (i > start) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  if (tokens.empty()) return {};
  return detokenize(tokens, 0, tokens.size() - 1);
}

std::string canonical_value(std::string_view value) {
  const std::string t = to_lower(trim(value));
  static constexpr std::array<std::string_view, 4> kNone = {
      "", "none", "not mentioned", "not_mentioned"};
  static constexpr std::array<std::string_view, 7> kDontCare = {
      "dont_care",  "dontcare",    "dont care",  "don't care",
      "do n't care", "do not care", "doesn't care"};
  if (std::find(kNone.begin(), kNone.end(), t) != kNone.end())
    return std::string(kNoneValue);
  if (std::find(kDontCare.begin(), kDontCare.end(), t) != kDontCare.end())
    return std::string(kDontCareValue);
  return join_tokens(tokenize(t));
}

bool is_special_value(std::string_view canonical) {
  return canonical == kNoneValue || canonical == kDontCareValue;
}

bool is_number_or_time(std::string_view s) {
  if (s.empty()) return false;
  // HH:MM
  const auto colon = s.find(':');
  if (colon != std::string_view::npos) {
    const auto hh = s.substr(0, colon);
    const auto mm = s.substr(colon + 1);
    return !hh.empty() && hh.size() <= 2 && mm.size() == 2 &&
           std::all_of(hh.begin(), hh.end(), is_digit) &&
           std::all_of(mm.begin(), mm.end(), is_digit);
  }
  bool seen_digit = false, seen_dot = false;
  for (char c : s) {
    if (is_digit(c)) {
      seen_digit = true;
    } else if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else {
      return false;
    }
  }
  return seen_digit;
}

}  // namespace actdst
