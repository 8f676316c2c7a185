#include "nmtfuse/vocab.hpp"

#include <algorithm>
#include <map>

#include "nmtfuse/util.hpp"

namespace nmtfuse {

Vocabulary::Vocabulary() {
  push("<pad>", 0);
  push("<bos>", 0);
  push("<eos>", 0);
  push("<unk>", 0);
}

void Vocabulary::push(const std::string& token, int64_t count) {
  index_[token] = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  counts_.push_back(count);
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& symbol_corpus) {
  std::map<std::string, int64_t> counts;
  for (const auto& sent : symbol_corpus)
    for (const std::string& s : sent) ++counts[s];
  std::vector<std::pair<std::string, int64_t>> ordered(counts.begin(), counts.end());
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (const auto& [tok, c] : ordered) v.push(tok, c);
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw IoError("vocab id out of range: " + std::to_string(id));
  return tokens_[id];
}

std::vector<int> Vocabulary::to_ids(const std::vector<std::string>& symbols) const {
  std::vector<int> out;
  out.reserve(symbols.size());
  for (const std::string& s : symbols) out.push_back(id(s));
  return out;
}

std::vector<std::string> Vocabulary::to_symbols(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (int i = 0; i < size(); ++i)
    out += tokens_[i] + "\t" + std::to_string(counts_[i]) + "\n";
  return out;
}

void Vocabulary::save(const std::string& path) const { write_file_atomic(path, serialize()); }

Vocabulary Vocabulary::deserialize(const std::string& text) {
  Vocabulary v;
  v.tokens_.clear();
  v.counts_.clear();
  v.index_.clear();
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    const size_t tab = line.rfind('\t');
    if (tab == std::string::npos) throw IoError("bad vocab line: " + line);
    v.push(line.substr(0, tab), std::stoll(line.substr(tab + 1)));
  }
  if (v.size() < 4 || v.tokens_[0] != "<pad>" || v.tokens_[1] != "<bos>" ||
      v.tokens_[2] != "<eos>" || v.tokens_[3] != "<unk>")
    throw IoError("vocab file lacks the reserved tokens in order");
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) { return deserialize(read_file(path)); }

}  // namespace nmtfuse
