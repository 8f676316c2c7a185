#pragma once

#include <string>
#include <vector>

#include "nmtfuse/checkpoint.hpp"
#include "nmtfuse/nn.hpp"

namespace nmtfuse {

enum class FusionStrategy { kBaseline, kShallow, kCold, kPreNorm, kPostNorm };

FusionStrategy fusion_strategy_from_string(const std::string& s);
std::string fusion_strategy_name(FusionStrategy s);

struct FusionConfig {
  FusionStrategy strategy = FusionStrategy::kBaseline;
  double lambda = 0.3;               // shallow fusion weight
  bool postnorm_renormalize = true;  // false = literal product form
  bool mixture = false;              // probability-space mixture variant
  int num_lms = 0;

  void validate() const;
};

// ---- per-step score combination (plain vectors, natural log) ----

// log softmax(S + lm_logp): normalize after combining raw scores.
std::vector<double> combine_prenorm(const std::vector<double>& s,
                                    const std::vector<double>& lm_logp);

// renormalize=false: log softmax(S) + lm_logp, the literal product of the two
// distributions (need not sum to 1); renormalize=true applies a final
// log-softmax on top.
std::vector<double> combine_postnorm(const std::vector<double>& s,
                                     const std::vector<double>& lm_logp, bool renormalize);

// tm_logp + lambda * lm_logp; a decoding score, unnormalized by design.
std::vector<double> shallow_fusion_score(const std::vector<double>& tm_logp,
                                         const std::vector<double>& lm_logp, double lambda);

// PostNorm/PreNorm with the sum of the LM log-prob vectors in place of the
// single LM term.
std::vector<double> combine_multi_lm(const std::vector<double>& s,
                                     const std::vector<std::vector<double>>& lm_logps,
                                     FusionStrategy strategy, bool postnorm_renormalize);

// log(0.5 softmax(S) + 0.5 P_LM), the probability-space mixture.
std::vector<double> combine_mixture(const std::vector<double>& s,
                                    const std::vector<double>& lm_logp);

// ---- tape ops (training path); lm_logp rows are constants ----

ag::Tensor combine_prenorm_t(const ag::Tensor& s, const ag::Tensor& lm_logp);
ag::Tensor combine_postnorm_t(const ag::Tensor& s, const ag::Tensor& lm_logp, bool renormalize);
ag::Tensor combine_mixture_t(const ag::Tensor& s, const ag::Tensor& lm_logp);

// ---- cold fusion ----

// Gating head trained jointly with the TM while the LM stays fixed: the LM
// log-scores project to a feature, a sigmoid gate over (decoder feature |
// LM feature) scales that feature elementwise, and the concatenation goes
// through the output projection.
class ColdFusion {
 public:
  ColdFusion(int feature_dim, int lm_vocab, int out_vocab, uint64_t seed);

  // feature: [B,H] decoder feature, lm_logp: [B,V] constant -> [B,V] log-probs
  ag::Tensor step_t(const ag::Tensor& feature, const ag::Tensor& lm_logp) const;
  std::vector<double> step(const std::vector<double>& feature,
                           const std::vector<double>& lm_logp) const;

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  int feature_dim() const { return feature_dim_; }
  int lm_vocab() const { return lm_vocab_; }

 private:
  int feature_dim_, lm_vocab_, out_vocab_;
  nn::ParamStore params_;
  ag::Tensor lm_proj_w_, lm_proj_b_;  // [V,H]
  ag::Tensor gate_w_, gate_b_;        // [2H,H]
  ag::Tensor out_w_, out_b_;          // [2H,V]
};

}  // namespace nmtfuse
