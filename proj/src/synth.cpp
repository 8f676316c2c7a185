#include "nmtfuse/synth.hpp"

#include <set>
#include <unordered_set>

#include "nmtfuse/rng.hpp"
#include "nmtfuse/util.hpp"

namespace nmtfuse {

namespace {

std::string random_word(Rng& rng, int min_len, int max_len) {
  const int len = rng.next_int(min_len, max_len);
  std::string w;
  for (int i = 0; i < len; ++i) w += static_cast<char>('a' + rng.next_below(26));
  return w;
}

std::vector<std::string> unique_words(uint64_t seed, int count, uint64_t stream) {
  Rng rng(Rng::derive(seed, stream));
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (static_cast<int>(out.size()) < count) {
    std::string w = random_word(rng, 3, 7);
    if (seen.insert(w).second) out.push_back(w);
  }
  return out;
}

class Grammar {
 public:
  Grammar(const SynthConfig& cfg) : cfg_(cfg) {}

  // Successors of a context are derived from a per-context seeded stream, so
  // the grammar is a pure function of (seed, context).
  std::vector<int> successors(int prev2, int prev1) const {
    const int k = (prev2 < 0 && prev1 < 0) ? cfg_.start_branch : cfg_.branch;
    uint64_t s = Rng::derive(cfg_.seed, 0x100000ULL + static_cast<uint64_t>(prev2 + 1) * 131071ULL +
                                            static_cast<uint64_t>(prev1 + 1));
    Rng rng(s);
    std::vector<int> succ;
    std::unordered_set<int> seen;
    while (static_cast<int>(succ.size()) < k) {
      int w = static_cast<int>(rng.next_below(cfg_.vocab_words));
      if (seen.insert(w).second) succ.push_back(w);
    }
    return succ;
  }

  std::vector<double> successor_weights(int k) const {
    std::vector<double> w(k);
    double cur = 1.0;
    for (int i = 0; i < k; ++i) {
      w[i] = cur;
      cur *= cfg_.succ_decay;
    }
    return w;
  }

  std::vector<int> sample_sentence(Rng& rng) const {
    std::vector<int> sent;
    int prev2 = -1, prev1 = -1;
    while (static_cast<int>(sent.size()) < cfg_.max_len) {
      if (static_cast<int>(sent.size()) >= cfg_.min_len && rng.next_double() < cfg_.eos_prob) break;
      const std::vector<int> succ = successors(prev2, prev1);
      const int pick = rng.pick_weighted(successor_weights(static_cast<int>(succ.size())));
      sent.push_back(succ[pick]);
      prev2 = prev1;
      prev1 = sent.back();
    }
    return sent;
  }

 private:
  SynthConfig cfg_;
};

}  // namespace

SynthTask synth_task_generate(const SynthConfig& cfg) {
  if (cfg.n_parallel <= 0 || cfg.n_mono <= 0 || cfg.n_dev <= 0 || cfg.n_test <= 0)
    throw UsageError("synth_task_generate: all split sizes must be positive");

  const std::vector<std::string> tgt_words = unique_words(cfg.seed, cfg.vocab_words, 0xa1);

  // source lexicon: each target word maps to a source token; collision_rate
  // of them reuse an earlier word's source token
  Rng map_rng(Rng::derive(cfg.seed, 0xa2));
  const std::vector<std::string> fresh_src = unique_words(cfg.seed, cfg.vocab_words, 0xa3);
  std::vector<int> src_of(cfg.vocab_words);
  int next_fresh = 0;
  for (int w = 0; w < cfg.vocab_words; ++w) {
    if (w > 0 && map_rng.next_double() < cfg.collision_rate) {
      src_of[w] = src_of[map_rng.next_below(static_cast<uint64_t>(w))];
    } else {
      src_of[w] = next_fresh++;
    }
  }

  Grammar grammar(cfg);
  auto transduce = [&](const std::vector<int>& tgt) {
    std::vector<int> src;
    src.reserve(tgt.size());
    for (int w : tgt) src.push_back(src_of[w]);
    for (size_t i = 0; i + 1 < src.size(); i += 2) std::swap(src[i], src[i + 1]);
    return src;
  };
  auto tgt_text = [&](const std::vector<int>& ws) {
    std::vector<std::string> toks;
    for (int w : ws) toks.push_back(tgt_words[w]);
    return join(toks, " ");
  };
  auto src_text = [&](const std::vector<int>& ws) {
    std::vector<std::string> toks;
    for (int w : ws) toks.push_back(fresh_src[w]);
    return join(toks, " ");
  };

  // fill splits with globally distinct target sentences so they are disjoint
  Rng gen_rng(Rng::derive(cfg.seed, 0xa4));
  std::unordered_set<std::string> seen;
  auto draw_unique = [&]() {
    for (int attempts = 0; attempts < 1000000; ++attempts) {
      std::vector<int> t = grammar.sample_sentence(gen_rng);
      std::string key = tgt_text(t);
      if (seen.insert(key).second) return t;
    }
    throw IoError("synth_task_generate: sentence space exhausted; enlarge the grammar");
  };

  SynthTask task;
  for (int i = 0; i < cfg.n_parallel; ++i) {
    std::vector<int> t = draw_unique();
    task.train_tgt.push_back(tgt_text(t));
    task.train_src.push_back(src_text(transduce(t)));
  }
  for (int i = 0; i < cfg.n_mono; ++i) task.mono_tgt.push_back(tgt_text(draw_unique()));
  for (int i = 0; i < cfg.n_dev; ++i) {
    std::vector<int> t = draw_unique();
    task.dev_tgt.push_back(tgt_text(t));
    task.dev_src.push_back(src_text(transduce(t)));
  }
  for (int i = 0; i < cfg.n_test; ++i) {
    std::vector<int> t = draw_unique();
    task.test_tgt.push_back(tgt_text(t));
    task.test_src.push_back(src_text(transduce(t)));
  }
  return task;
}

void synth_task_write(const SynthTask& task, const std::string& dir) {
  make_dirs(dir);
  write_lines(dir + "/train.src", task.train_src);
  write_lines(dir + "/train.tgt", task.train_tgt);
  write_lines(dir + "/mono.tgt", task.mono_tgt);
  write_lines(dir + "/dev.src", task.dev_src);
  write_lines(dir + "/dev.tgt", task.dev_tgt);
  write_lines(dir + "/test.src", task.test_src);
  write_lines(dir + "/test.tgt", task.test_tgt);
}

}  // namespace nmtfuse
