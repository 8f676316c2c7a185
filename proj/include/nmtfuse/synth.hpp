#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nmtfuse {

// Deterministic synthetic language pair for desk-scale experiments. Target
// sentences come from an order-2 Markov grammar over a small word vocabulary
// (strong LM structure); the source side is a deterministic word-level
// transduction of the target: a token remap with deliberate collisions (so
// recovering the target needs target-side context) plus adjacent-pair
// swapping.
struct SynthConfig {
  uint64_t seed = 1;
  int n_parallel = 2000;
  int n_mono = 100000;
  int n_dev = 400;
  int n_test = 400;
  int vocab_words = 80;     // target word types
  int branch = 4;           // successors per (prev2, prev1) context
  int start_branch = 16;    // successors of the sentence-initial context
  double succ_decay = 0.55; // successor weights decay geometrically by this
  int min_len = 4;
  int max_len = 14;
  double eos_prob = 0.16;   // stop chance per step once min_len is reached
  double collision_rate = 0.35;  // fraction of words sharing a source token
};

struct SynthTask {
  // whitespace-tokenized sentences
  std::vector<std::string> train_src, train_tgt;
  std::vector<std::string> mono_tgt;
  std::vector<std::string> dev_src, dev_tgt;
  std::vector<std::string> test_src, test_tgt;
};

SynthTask synth_task_generate(const SynthConfig& cfg);

// train.src/train.tgt/mono.tgt/dev.src/dev.tgt/test.src/test.tgt under dir.
void synth_task_write(const SynthTask& task, const std::string& dir);

}  // namespace nmtfuse
