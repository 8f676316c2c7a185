#include "nmtfuse/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "nmtfuse/util.hpp"

namespace nmtfuse {

FusionStrategy fusion_strategy_from_string(const std::string& s) {
  if (s == "baseline") return FusionStrategy::kBaseline;
  if (s == "shallow") return FusionStrategy::kShallow;
  if (s == "cold") return FusionStrategy::kCold;
  if (s == "prenorm") return FusionStrategy::kPreNorm;
  if (s == "postnorm") return FusionStrategy::kPostNorm;
  throw UsageError("unknown fusion strategy '" + s + "'");
}

std::string fusion_strategy_name(FusionStrategy s) {
  switch (s) {
    case FusionStrategy::kBaseline: return "baseline";
    case FusionStrategy::kShallow: return "shallow";
    case FusionStrategy::kCold: return "cold";
    case FusionStrategy::kPreNorm: return "prenorm";
    case FusionStrategy::kPostNorm: return "postnorm";
  }
  return "?";
}

void FusionConfig::validate() const {
  if (lambda < 0) throw UsageError("fusion: lambda must be >= 0");
  if (strategy == FusionStrategy::kBaseline && num_lms != 0)
    throw UsageError("fusion: baseline takes no LM");
  if (strategy == FusionStrategy::kCold && num_lms != 1)
    throw UsageError("fusion: cold fusion requires exactly one LM");
  if (strategy == FusionStrategy::kShallow && num_lms != 1)
    throw UsageError("fusion: shallow fusion requires exactly one LM");
  if ((strategy == FusionStrategy::kPreNorm || strategy == FusionStrategy::kPostNorm) &&
      (num_lms < 1 || num_lms > 2))
    throw UsageError("fusion: prenorm/postnorm take one or two LMs");
  if (mixture && strategy != FusionStrategy::kPostNorm)
    throw UsageError("fusion: the probability-space mixture is a postnorm variant");
}

namespace {

void check_same_length(const std::vector<double>& a, const std::vector<double>& b,
                       const char* op) {
  if (a.size() != b.size())
    throw UsageError(std::string(op) + ": length mismatch " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  if (a.empty()) throw UsageError(std::string(op) + ": empty input");
}

std::vector<double> log_softmax_vec(const std::vector<double>& x) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lse;
  return out;
}

}  // namespace

std::vector<double> combine_prenorm(const std::vector<double>& s,
                                    const std::vector<double>& lm_logp) {
  check_same_length(s, lm_logp, "combine_prenorm");
  std::vector<double> sum(s.size());
  for (size_t i = 0; i < s.size(); ++i) sum[i] = s[i] + lm_logp[i];
  return log_softmax_vec(sum);
}

std::vector<double> combine_postnorm(const std::vector<double>& s,
                                     const std::vector<double>& lm_logp, bool renormalize) {
  check_same_length(s, lm_logp, "combine_postnorm");
  std::vector<double> out = log_softmax_vec(s);
  for (size_t i = 0; i < s.size(); ++i) out[i] += lm_logp[i];
  return renormalize ? log_softmax_vec(out) : out;
}

std::vector<double> shallow_fusion_score(const std::vector<double>& tm_logp,
                                         const std::vector<double>& lm_logp, double lambda) {
  check_same_length(tm_logp, lm_logp, "shallow_fusion_score");
  if (lambda < 0) throw UsageError("shallow_fusion_score: lambda must be >= 0");
  std::vector<double> out(tm_logp.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = tm_logp[i] + lambda * lm_logp[i];
  return out;
}

std::vector<double> combine_multi_lm(const std::vector<double>& s,
                                     const std::vector<std::vector<double>>& lm_logps,
                                     FusionStrategy strategy, bool postnorm_renormalize) {
  if (lm_logps.empty()) throw UsageError("combine_multi_lm: empty LM list");
  std::vector<double> total = lm_logps[0];
  for (size_t k = 1; k < lm_logps.size(); ++k) {
    check_same_length(total, lm_logps[k], "combine_multi_lm");
    for (size_t i = 0; i < total.size(); ++i) total[i] += lm_logps[k][i];
  }
  if (strategy == FusionStrategy::kPreNorm) return combine_prenorm(s, total);
  if (strategy == FusionStrategy::kPostNorm)
    return combine_postnorm(s, total, postnorm_renormalize);
  throw UsageError("combine_multi_lm: only prenorm/postnorm combine multiple LMs");
}

std::vector<double> combine_mixture(const std::vector<double>& s,
                                    const std::vector<double>& lm_logp) {
  check_same_length(s, lm_logp, "combine_mixture");
  std::vector<double> tm = log_softmax_vec(s);
  std::vector<double> out(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    const double p = 0.5 * std::exp(tm[i]) + 0.5 * std::exp(lm_logp[i]);
    out[i] = std::log(std::max(p, 1e-300));
  }
  return out;
}

// ---- tape versions ----

ag::Tensor combine_prenorm_t(const ag::Tensor& s, const ag::Tensor& lm_logp) {
  return ag::log_softmax(ag::add(s, lm_logp));
}

ag::Tensor combine_postnorm_t(const ag::Tensor& s, const ag::Tensor& lm_logp, bool renormalize) {
  ag::Tensor combined = ag::add(ag::log_softmax(s), lm_logp);
  return renormalize ? ag::log_softmax(combined) : combined;
}

ag::Tensor combine_mixture_t(const ag::Tensor& s, const ag::Tensor& lm_logp) {
  ag::Tensor p = ag::add(ag::scale(ag::softmax(s), 0.5), ag::scale(ag::exp(lm_logp), 0.5));
  // tiny floor keeps log() finite when both terms underflow
  return ag::log(ag::add_scalar(p, 1e-300));
}

// ---- cold fusion ----

ColdFusion::ColdFusion(int feature_dim, int lm_vocab, int out_vocab, uint64_t seed)
    : feature_dim_(feature_dim), lm_vocab_(lm_vocab), out_vocab_(out_vocab) {
  Rng rng(Rng::derive(seed, 0xc01d));
  lm_proj_w_ = params_.uniform_init("cold.lm_proj.w", {lm_vocab, feature_dim}, rng);
  lm_proj_b_ = params_.zeros_init("cold.lm_proj.b", {feature_dim});
  gate_w_ = params_.uniform_init("cold.gate.w", {2 * feature_dim, feature_dim}, rng);
  gate_b_ = params_.zeros_init("cold.gate.b", {feature_dim});
  out_w_ = params_.uniform_init("cold.out.w", {2 * feature_dim, out_vocab}, rng);
  out_b_ = params_.zeros_init("cold.out.b", {out_vocab});
}

ag::Tensor ColdFusion::step_t(const ag::Tensor& feature, const ag::Tensor& lm_logp) const {
  if (feature.cols() != feature_dim_ || lm_logp.cols() != lm_vocab_)
    throw UsageError("cold_fusion_step: shape mismatch");
  ag::Tensor lm_feat = ag::tanh(nn::affine(lm_logp, lm_proj_w_, lm_proj_b_));
  ag::Tensor gate = ag::sigmoid(nn::affine(ag::concat_cols(feature, lm_feat), gate_w_, gate_b_));
  ag::Tensor fused = ag::concat_cols(feature, ag::mul(gate, lm_feat));
  return ag::log_softmax(nn::affine(fused, out_w_, out_b_));
}

std::vector<double> ColdFusion::step(const std::vector<double>& feature,
                                     const std::vector<double>& lm_logp) const {
  ag::NoGradGuard guard;
  ag::Tensor f = ag::Tensor::constant({1, static_cast<int>(feature.size())}, feature);
  ag::Tensor l = ag::Tensor::constant({1, static_cast<int>(lm_logp.size())}, lm_logp);
  return step_t(f, l).data();
}

}  // namespace nmtfuse
