#include "nmtfuse/bpe.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>

#include "nmtfuse/text.hpp"
#include "nmtfuse/util.hpp"

namespace nmtfuse {

const char* kEndOfWord = "</w>";
const char* kContinuation = "@@";

namespace {

std::string pair_key(const std::string& a, const std::string& b) {
  return a + '\x01' + b;
}

std::vector<std::string> word_to_symbols(const std::string& word) {
  std::vector<std::string> syms = utf8_chars(word);
  if (!syms.empty()) syms.back() += kEndOfWord;
  return syms;
}

}  // namespace

void BpeCodes::save(const std::string& path) const {
  std::string out = "#version: nmtfuse-bpe 1\n";
  for (const auto& [l, r] : merges) out += l + " " + r + "\n";
  write_file_atomic(path, out);
}

BpeCodes BpeCodes::load(const std::string& path) {
  BpeCodes codes;
  bool first = true;
  for (const std::string& line : read_lines(path)) {
    if (first) {
      first = false;
      if (starts_with(line, "#")) continue;
    }
    if (strip(line).empty()) continue;
    const size_t sp = line.find(' ');
    if (sp == std::string::npos) throw IoError("bad BPE code line: " + line);
    codes.merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
  }
  return codes;
}

BpeCodes bpe_train(const std::vector<std::vector<std::string>>& corpora, int num_merges) {
  if (num_merges < 0) throw UsageError("bpe_train: num_merges must be >= 0");
  // pooled word counts (joint BPE over all corpora)
  std::map<std::string, int64_t> word_counts;
  for (const auto& corpus : corpora)
    for (const std::string& sentence : corpus)
      for (const std::string& w : split_ws(sentence)) ++word_counts[w];
  if (word_counts.empty()) throw UsageError("bpe_train: empty corpus");

  struct Word {
    std::vector<std::string> syms;
    int64_t count;
  };
  std::vector<Word> words;
  words.reserve(word_counts.size());
  for (const auto& [w, c] : word_counts) words.push_back({word_to_symbols(w), c});

  // pair -> (count, words containing it); rebuilt incrementally after merges
  std::map<std::pair<std::string, std::string>, int64_t> counts;
  std::map<std::pair<std::string, std::string>, std::set<int>> where;
  auto add_word_pairs = [&](int wi, int64_t sign) {
    const Word& w = words[wi];
    for (size_t i = 0; i + 1 < w.syms.size(); ++i) {
      auto key = std::make_pair(w.syms[i], w.syms[i + 1]);
      counts[key] += sign * w.count;
      if (sign > 0) {
        where[key].insert(wi);
      }
    }
  };
  for (size_t wi = 0; wi < words.size(); ++wi) add_word_pairs(static_cast<int>(wi), +1);

  BpeCodes codes;
  for (int m = 0; m < num_merges; ++m) {
    // best = highest count, ties lexicographic by (left, right); the map is
    // ordered so a plain scan is deterministic
    const std::pair<std::string, std::string>* best = nullptr;
    int64_t best_count = 0;
    for (const auto& [key, c] : counts) {
      if (c > best_count) {
        best_count = c;
        best = &key;
      }
    }
    if (best == nullptr || best_count <= 0) break;
    const auto merged_pair = *best;
    codes.merges.push_back(merged_pair);
    const std::string merged = merged_pair.first + merged_pair.second;

    const std::set<int> affected = where[merged_pair];
    for (int wi : affected) {
      Word& w = words[wi];
      // retract old pairs, rewrite, re-add
      for (size_t i = 0; i + 1 < w.syms.size(); ++i) {
        auto key = std::make_pair(w.syms[i], w.syms[i + 1]);
        counts[key] -= w.count;
        where[key].erase(wi);
      }
      std::vector<std::string> out;
      out.reserve(w.syms.size());
      for (size_t i = 0; i < w.syms.size();) {
        if (i + 1 < w.syms.size() && w.syms[i] == merged_pair.first &&
            w.syms[i + 1] == merged_pair.second) {
          out.push_back(merged);
          i += 2;
        } else {
          out.push_back(w.syms[i]);
          ++i;
        }
      }
      w.syms = std::move(out);
      add_word_pairs(wi, +1);
    }
    // drop exhausted entries so the scan stays tight
    for (auto it = counts.begin(); it != counts.end();) {
      if (it->second <= 0) {
        where.erase(it->first);
        it = counts.erase(it);
      } else {
        ++it;
      }
    }
  }
  return codes;
}

BpeEncoder::BpeEncoder(BpeCodes codes) : codes_(std::move(codes)) {
  for (size_t i = 0; i < codes_.merges.size(); ++i)
    rank_.emplace(pair_key(codes_.merges[i].first, codes_.merges[i].second), static_cast<int>(i));
}

std::vector<std::string> BpeEncoder::encode_word(const std::string& word) const {
  auto cached = cache_.find(word);
  if (cached != cache_.end()) return cached->second;
  std::vector<std::string> syms = word_to_symbols(word);
  while (syms.size() >= 2) {
    // lowest-rank applicable merge
    int best_rank = -1;
    for (size_t i = 0; i + 1 < syms.size(); ++i) {
      auto it = rank_.find(pair_key(syms[i], syms[i + 1]));
      if (it != rank_.end() && (best_rank < 0 || it->second < best_rank)) best_rank = it->second;
    }
    if (best_rank < 0) break;
    const auto& [l, r] = codes_.merges[best_rank];
    std::vector<std::string> out;
    out.reserve(syms.size());
    for (size_t i = 0; i < syms.size();) {
      if (i + 1 < syms.size() && syms[i] == l && syms[i + 1] == r) {
        out.push_back(l + r);
        i += 2;
      } else {
        out.push_back(syms[i]);
        ++i;
      }
    }
    syms = std::move(out);
  }
  cache_.emplace(word, syms);
  return syms;
}

std::vector<std::string> BpeEncoder::encode_sentence(const std::string& sentence) const {
  std::vector<std::string> out;
  for (const std::string& w : split_ws(sentence)) {
    std::vector<std::string> syms = encode_word(w);
    out.insert(out.end(), syms.begin(), syms.end());
  }
  return out;
}

std::vector<std::string> BpeEncoder::symbols_to_text(const std::vector<std::string>& symbols) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (const std::string& s : symbols) {
    if (ends_with(s, kEndOfWord)) {
      out.push_back(s.substr(0, s.size() - 4));
    } else {
      out.push_back(s + kContinuation);
    }
  }
  return out;
}

std::vector<std::string> BpeEncoder::text_to_symbols(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) {
    if (ends_with(t, kContinuation)) {
      out.push_back(t.substr(0, t.size() - 2));
    } else {
      out.push_back(t + kEndOfWord);
    }
  }
  return out;
}

std::string BpeEncoder::segment(const std::string& sentence) const {
  return join(symbols_to_text(encode_sentence(sentence)), " ");
}

std::string bpe_detokenize(const std::string& segmented) {
  std::vector<std::string> words;
  std::string current;
  for (const std::string& tok : split_ws(segmented)) {
    if (ends_with(tok, kContinuation)) {
      current += tok.substr(0, tok.size() - 2);
    } else {
      current += tok;
      words.push_back(current);
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(current);  // dangling continuation
  return join(words, " ");
}

}  // namespace nmtfuse
