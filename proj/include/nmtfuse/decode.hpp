#pragma once

#include <memory>
#include <vector>

#include "nmtfuse/fusion.hpp"
#include "nmtfuse/lm.hpp"
#include "nmtfuse/seq2seq.hpp"

namespace nmtfuse {

// Per-hypothesis incremental scoring. start() binds a source sentence;
// step() consumes the previous token (bos first) and returns scores over the
// next one. normalized() says whether scores are log-probabilities.
struct StepScorerState {
  virtual ~StepScorerState() = default;
  virtual std::unique_ptr<StepScorerState> clone() const = 0;
};

class StepScorer {
 public:
  virtual ~StepScorer() = default;
  virtual int vocab_size() const = 0;
  virtual std::unique_ptr<StepScorerState> start(const std::vector<int>& source) const = 0;
  virtual std::vector<double> step(StepScorerState& state, int prev_token) const = 0;
  virtual bool normalized() const { return true; }
};

// TM plus fusion strategy plus 0..2 fixed LMs.
class TmFusionScorer : public StepScorer {
 public:
  TmFusionScorer(const Seq2Seq& tm, FusionConfig cfg,
                 std::vector<const LanguageModel*> lms = {},
                 const ColdFusion* cold = nullptr);
  int vocab_size() const override { return tm_->config().tgt_vocab_size; }
  std::unique_ptr<StepScorerState> start(const std::vector<int>& source) const override;
  std::vector<double> step(StepScorerState& state, int prev_token) const override;
  bool normalized() const override;

 private:
  const Seq2Seq* tm_;
  FusionConfig cfg_;
  std::vector<const LanguageModel*> lms_;
  const ColdFusion* cold_;
};

// Unconditional view of a language model (source is ignored).
class LmScorer : public StepScorer {
 public:
  explicit LmScorer(const LanguageModel& lm) : lm_(&lm) {}
  int vocab_size() const override { return lm_->vocab_size(); }
  std::unique_ptr<StepScorerState> start(const std::vector<int>& source) const override;
  std::vector<double> step(StepScorerState& state, int prev_token) const override;

 private:
  const LanguageModel* lm_;
};

// Arithmetic mean of member log-probabilities, re-normalized. Members with
// unnormalized scores are log-softmaxed before averaging.
class EnsembleScorer : public StepScorer {
 public:
  explicit EnsembleScorer(std::vector<const StepScorer*> members);
  int vocab_size() const override { return members_[0]->vocab_size(); }
  std::unique_ptr<StepScorerState> start(const std::vector<int>& source) const override;
  std::vector<double> step(StepScorerState& state, int prev_token) const override;

 private:
  std::vector<const StepScorer*> members_;
};

struct Hypothesis {
  std::vector<int> tokens;  // emitted tokens, eos included when finished
  double score = 0.0;       // sum of per-step scores
  bool finished = false;
};

struct BeamConfig {
  int beam = 6;
  int max_len = 0;             // 0 = 2*source_len + 10
  double length_penalty = 0.0; // 0 disables; ranking divides by len^penalty
};

// Standard beam search: expand every live hypothesis over the full
// vocabulary, keep the top `beam` candidates, retire those that emit eos, and
// stop once every live hypothesis scores below the worst retired one (or at
// max_len). Results sort by score, best first.
std::vector<Hypothesis> beam_search(const StepScorer& scorer, const std::vector<int>& source,
                                    const BeamConfig& cfg);

std::vector<int> greedy_decode(const StepScorer& scorer, const std::vector<int>& source,
                               int max_len);

}  // namespace nmtfuse
