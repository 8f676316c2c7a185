#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nmtfuse/bpe.hpp"
#include "nmtfuse/vocab.hpp"

namespace nmtfuse {

enum class Provenance : uint8_t { kReal = 0, kSynthetic = 1 };

struct SentencePair {
  std::vector<int> source;  // ids, no bos/eos
  std::vector<int> target;
  Provenance provenance = Provenance::kReal;
};

struct ParallelDataset {
  std::vector<SentencePair> pairs;

  size_t size() const { return pairs.size(); }
  void validate(int src_vocab_size, int tgt_vocab_size) const;
};

// Segments both sides with the encoder, maps to ids, and drops pairs where
// either side is empty. Inputs are line-aligned whitespace-tokenized text.
ParallelDataset encode_parallel(const std::vector<std::string>& src_lines,
                                const std::vector<std::string>& tgt_lines,
                                const BpeEncoder& bpe, const Vocabulary& src_vocab,
                                const Vocabulary& tgt_vocab,
                                Provenance provenance = Provenance::kReal);

std::vector<std::vector<int>> encode_mono(const std::vector<std::string>& lines,
                                          const BpeEncoder& bpe, const Vocabulary& vocab);

// All real pairs plus n*|real| synthetic ones (truncated to the pool unless
// with_replacement), shuffled with the given seed. Provenance flags survive.
ParallelDataset mix_backtranslation(const ParallelDataset& real, const ParallelDataset& synthetic,
                                    int n, uint64_t seed, bool with_replacement = false);

// Length-bucketed batching: a seeded shuffle, a stable sort by length bucket,
// fixed-size chunks, then a seeded shuffle of chunk order.
std::vector<std::vector<int>> make_batches(const ParallelDataset& data, int batch_size,
                                           uint64_t seed);
std::vector<std::vector<int>> make_mono_batches(const std::vector<std::vector<int>>& sents,
                                                int batch_size, uint64_t seed);

}  // namespace nmtfuse
