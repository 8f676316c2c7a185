#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nmtfuse/checkpoint.hpp"
#include "nmtfuse/nn.hpp"
#include "nmtfuse/vocab.hpp"

namespace nmtfuse {

// Incremental-scoring contract shared by every LM:
//   state = start();                      // encodes the bos context
//   (logp, state') = step(state, token);  // consume token, distribute over
//                                         // the next position
// Scoring y_1..y_m therefore feeds [bos, y_1, ..., y_{m-1}].
struct LmState {
  virtual ~LmState() = default;
  virtual std::unique_ptr<LmState> clone() const = 0;
};

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual int vocab_size() const = 0;
  virtual std::string kind() const = 0;
  virtual std::unique_ptr<LmState> start() const = 0;
  // Natural-log probabilities; exp sums to 1.
  virtual std::vector<double> step(LmState& state, int token) const = 0;

  // Teacher-forced log-prob tensors, one [B,V] constant per position of the
  // padded batch (never recorded on a tape). Position t covers targets[:,t].
  std::vector<ag::Tensor> batch_logps(const std::vector<std::vector<int>>& targets) const;

  double sequence_logp(const std::vector<int>& tokens) const;  // includes eos
};

// exp( mean per-token negative log-likelihood ), eos included.
double perplexity(const LanguageModel& model, const std::vector<std::vector<int>>& corpus);

// Diagnostic LM: every token gets probability 1/V.
class UniformLm : public LanguageModel {
 public:
  explicit UniformLm(int vocab_size);
  int vocab_size() const override { return vocab_size_; }
  std::string kind() const override { return "uniform"; }
  std::unique_ptr<LmState> start() const override;
  std::vector<double> step(LmState& state, int token) const override;

 private:
  int vocab_size_;
};

struct RnnLmConfig {
  int vocab_size = 0;
  int embed_dim = 64;
  int hidden_dim = 128;
  int layers = 2;
};

// LSTM LM with the same shape as the translation decoder, minus attention
// and source conditioning.
class RnnLm : public LanguageModel {
 public:
  RnnLm(RnnLmConfig cfg, uint64_t seed);
  int vocab_size() const override { return cfg_.vocab_size; }
  std::string kind() const override { return "rnn"; }
  std::unique_ptr<LmState> start() const override;
  std::vector<double> step(LmState& state, int token) const override;

  // Training-path forward: per-position [B,V] log-prob tensors over the tape.
  std::vector<ag::Tensor> forward_train(const std::vector<std::vector<int>>& targets) const;

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  const RnnLmConfig& config() const { return cfg_; }

 private:
  RnnLmConfig cfg_;
  nn::ParamStore params_;
  ag::Tensor embedding_;
  std::vector<nn::LstmCell> cells_;
  ag::Tensor w_out_, b_out_;

  std::vector<ag::Tensor> forward_steps(const std::vector<std::vector<int>>& targets) const;
};

struct FfnLmConfig {
  int vocab_size = 0;
  int context = 3;  // tokens of history (4-gram model)
  int embed_dim = 64;
  int hidden_dim = 128;
  int hidden_layers = 2;
};

// n-gram LM parameterized by a feedforward network: the embeddings of the
// last `context` tokens feed tanh hidden layers and an output projection.
class FfnLm : public LanguageModel {
 public:
  FfnLm(FfnLmConfig cfg, uint64_t seed);
  int vocab_size() const override { return cfg_.vocab_size; }
  std::string kind() const override { return "ffn"; }
  std::unique_ptr<LmState> start() const override;
  std::vector<double> step(LmState& state, int token) const override;

  std::vector<ag::Tensor> forward_train(const std::vector<std::vector<int>>& targets) const;

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  const FfnLmConfig& config() const { return cfg_; }

 private:
  FfnLmConfig cfg_;
  nn::ParamStore params_;
  ag::Tensor embedding_;
  std::vector<std::pair<ag::Tensor, ag::Tensor>> hidden_;  // (w, b)
  ag::Tensor w_out_, b_out_;

  ag::Tensor logits_for_contexts(const std::vector<std::vector<int>>& ctx) const;
};

// Checkpoint round-trips. The vocabulary rides along in metadata so an LM
// checkpoint is self-contained.
Checkpoint lm_to_checkpoint(const RnnLm& lm, const Vocabulary& vocab,
                            const std::string& extra_meta = "");
Checkpoint lm_to_checkpoint(const FfnLm& lm, const Vocabulary& vocab,
                            const std::string& extra_meta = "");
std::unique_ptr<LanguageModel> lm_from_checkpoint(const Checkpoint& ck, Vocabulary* vocab_out);

}  // namespace nmtfuse
