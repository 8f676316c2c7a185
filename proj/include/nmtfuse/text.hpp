#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace nmtfuse {

// Minimal UTF-8 handling; malformed input throws IoError.
std::vector<uint32_t> utf8_decode(const std::string& s);
std::string utf8_encode(const std::vector<uint32_t>& cps);
std::string utf8_encode_one(uint32_t cp);
// One UTF-8 string per codepoint.
std::vector<std::string> utf8_chars(const std::string& s);

struct NormalizeConfig {
  bool lowercase = true;
  bool fold = false;                       // apply the fold map
  std::map<uint32_t, std::string> fold_map;  // codepoint -> replacement (may be empty string)

  // Latin-script accent stripping (decomposition-style table) plus explicit
  // dotless/dotted i entries.
  static std::map<uint32_t, std::string> default_fold_map();
  static std::map<uint32_t, std::string> load_fold_map(const std::string& path);
};

// Lower-cases, splits punctuation into standalone tokens, applies the fold
// map, and collapses whitespace. Output tokens are separated by single
// spaces.
std::string normalize(const std::string& text, const NormalizeConfig& cfg);

}  // namespace nmtfuse
