#include "nmtfuse/data.hpp"

#include <algorithm>
#include <numeric>

#include "nmtfuse/rng.hpp"
#include "nmtfuse/util.hpp"

namespace nmtfuse {

void ParallelDataset::validate(int src_vocab_size, int tgt_vocab_size) const {
  for (const SentencePair& p : pairs) {
    if (p.source.empty() || p.target.empty()) throw IoError("dataset contains an empty sequence");
    for (int id : p.source)
      if (id < 0 || id >= src_vocab_size) throw IoError("source id out of vocab range");
    for (int id : p.target)
      if (id < 0 || id >= tgt_vocab_size) throw IoError("target id out of vocab range");
  }
}

ParallelDataset encode_parallel(const std::vector<std::string>& src_lines,
                                const std::vector<std::string>& tgt_lines,
                                const BpeEncoder& bpe, const Vocabulary& src_vocab,
                                const Vocabulary& tgt_vocab, Provenance provenance) {
  if (src_lines.size() != tgt_lines.size())
    throw IoError("parallel files differ in length: " + std::to_string(src_lines.size()) + " vs " +
                  std::to_string(tgt_lines.size()));
  ParallelDataset out;
  out.pairs.reserve(src_lines.size());
  for (size_t i = 0; i < src_lines.size(); ++i) {
    SentencePair p;
    p.source = src_vocab.to_ids(bpe.encode_sentence(src_lines[i]));
    p.target = tgt_vocab.to_ids(bpe.encode_sentence(tgt_lines[i]));
    p.provenance = provenance;
    if (p.source.empty() || p.target.empty()) continue;
    out.pairs.push_back(std::move(p));
  }
  return out;
}

std::vector<std::vector<int>> encode_mono(const std::vector<std::string>& lines,
                                          const BpeEncoder& bpe, const Vocabulary& vocab) {
  std::vector<std::vector<int>> out;
  out.reserve(lines.size());
  for (const std::string& line : lines) {
    std::vector<int> ids = vocab.to_ids(bpe.encode_sentence(line));
    if (!ids.empty()) out.push_back(std::move(ids));
  }
  return out;
}

ParallelDataset mix_backtranslation(const ParallelDataset& real, const ParallelDataset& synthetic,
                                    int n, uint64_t seed, bool with_replacement) {
  if (n < 0) throw UsageError("mix_backtranslation: ratio n must be >= 0");
  ParallelDataset out;
  out.pairs = real.pairs;
  const size_t wanted = real.size() * static_cast<size_t>(n);
  Rng rng(Rng::derive(seed, 0xb7));
  if (wanted > 0 && !synthetic.pairs.empty()) {
    if (wanted <= synthetic.size()) {
      // deterministic prefix of a seeded permutation
      std::vector<size_t> idx(synthetic.size());
      std::iota(idx.begin(), idx.end(), size_t{0});
      rng.shuffle(idx);
      for (size_t k = 0; k < wanted; ++k) out.pairs.push_back(synthetic.pairs[idx[k]]);
    } else if (with_replacement) {
      for (size_t k = 0; k < wanted; ++k)
        out.pairs.push_back(synthetic.pairs[rng.next_below(synthetic.size())]);
    } else {
      out.pairs.insert(out.pairs.end(), synthetic.pairs.begin(), synthetic.pairs.end());
    }
  }
  for (size_t i = real.size(); i < out.pairs.size(); ++i)
    out.pairs[i].provenance = Provenance::kSynthetic;
  Rng order_rng(Rng::derive(seed, 0x5e));
  order_rng.shuffle(out.pairs);
  return out;
}

namespace {

std::vector<std::vector<int>> bucket_batches(size_t count, int batch_size, uint64_t seed,
                                             const std::vector<int>& sort_key) {
  std::vector<int> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(Rng::derive(seed, 0x11));
  rng.shuffle(idx);
  std::stable_sort(idx.begin(), idx.end(),
                   [&sort_key](int a, int b) { return sort_key[a] < sort_key[b]; });
  std::vector<std::vector<int>> batches;
  for (size_t i = 0; i < idx.size(); i += batch_size) {
    const size_t end = std::min(idx.size(), i + batch_size);
    batches.emplace_back(idx.begin() + i, idx.begin() + end);
  }
  Rng order_rng(Rng::derive(seed, 0x22));
  order_rng.shuffle(batches);
  return batches;
}

}  // namespace

std::vector<std::vector<int>> make_batches(const ParallelDataset& data, int batch_size,
                                           uint64_t seed) {
  if (batch_size < 1) throw UsageError("batch size must be >= 1");
  std::vector<int> key(data.size());
  for (size_t i = 0; i < data.size(); ++i)
    key[i] = static_cast<int>(data.pairs[i].target.size() * 64 + data.pairs[i].source.size());
  return bucket_batches(data.size(), batch_size, seed, key);
}

std::vector<std::vector<int>> make_mono_batches(const std::vector<std::vector<int>>& sents,
                                                int batch_size, uint64_t seed) {
  if (batch_size < 1) throw UsageError("batch size must be >= 1");
  std::vector<int> key(sents.size());
  for (size_t i = 0; i < sents.size(); ++i) key[i] = static_cast<int>(sents[i].size());
  return bucket_batches(sents.size(), batch_size, seed, key);
}

}  // namespace nmtfuse
