#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace nmtfuse {

// Token-string <-> id bijection with reserved ids 0..3. Tokens are BPE
// symbols (word-final ones carry "</w>").
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocabulary();

  // Counts symbols over segmented sentences; ids are assigned reserved-first,
  // then by (count desc, token asc).
  static Vocabulary build(const std::vector<std::vector<std::string>>& symbol_corpus);

  int size() const { return static_cast<int>(tokens_.size()); }
  int id(const std::string& token) const;          // kUnk when absent
  const std::string& token(int id) const;
  int64_t count(int id) const { return counts_[id]; }

  std::vector<int> to_ids(const std::vector<std::string>& symbols) const;
  std::vector<std::string> to_symbols(const std::vector<int>& ids) const;

  // TSV "token<TAB>count", line order == id order.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);
  std::string serialize() const;
  static Vocabulary deserialize(const std::string& text);

 private:
  std::vector<std::string> tokens_;
  std::vector<int64_t> counts_;
  std::unordered_map<std::string, int> index_;

  void push(const std::string& token, int64_t count);
};

}  // namespace nmtfuse
