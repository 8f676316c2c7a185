#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace nmtfuse {

// Byte pair encoding with the end-of-word convention: the final character of
// every word carries a "</w>" suffix, merges are learned over those symbols,
// and segmented *text* marks non-final subwords with "@@". Vocabulary ids are
// assigned to the symbol form (with "</w>"), which maps 1:1 onto marked text
// tokens.

extern const char* kEndOfWord;       // "</w>"
extern const char* kContinuation;    // "@@"

struct BpeCodes {
  // merge order == training order
  std::vector<std::pair<std::string, std::string>> merges;

  void save(const std::string& path) const;
  static BpeCodes load(const std::string& path);
};

// Learns min(num_merges, available) merges over the pooled corpora. At every
// step the most frequent adjacent symbol pair wins; ties break
// lexicographically by (left, right). Throws on an empty corpus.
BpeCodes bpe_train(const std::vector<std::vector<std::string>>& corpora, int num_merges);

class BpeEncoder {
 public:
  explicit BpeEncoder(BpeCodes codes);

  // word -> symbols (last one ends with "</w>")
  std::vector<std::string> encode_word(const std::string& word) const;
  // whitespace-tokenized sentence -> symbols
  std::vector<std::string> encode_sentence(const std::string& sentence) const;
  // symbols -> "@@"-marked text tokens
  static std::vector<std::string> symbols_to_text(const std::vector<std::string>& symbols);
  static std::vector<std::string> text_to_symbols(const std::vector<std::string>& tokens);
  // segmented sentence string, "@@" markers included
  std::string segment(const std::string& sentence) const;

  const BpeCodes& codes() const { return codes_; }

 private:
  BpeCodes codes_;
  std::unordered_map<std::string, int> rank_;  // "left\x01right" -> merge index
  mutable std::unordered_map<std::string, std::vector<std::string>> cache_;
};

// Removes "@@ " joints, restoring the pre-BPE token sequence.
std::string bpe_detokenize(const std::string& segmented);

}  // namespace nmtfuse
