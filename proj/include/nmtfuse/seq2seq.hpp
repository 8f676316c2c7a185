#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nmtfuse/checkpoint.hpp"
#include "nmtfuse/nn.hpp"
#include "nmtfuse/vocab.hpp"

namespace nmtfuse {

struct Seq2SeqConfig {
  int src_vocab_size = 0;
  int tgt_vocab_size = 0;
  int embed_dim = 64;
  int hidden_dim = 128;
};

// Annotations from the encoder plus the state that initializes the decoder.
// The first encoder layer is bidirectional (directions concatenated, then
// projected back to hidden size); the second layer runs right to left over
// those projections and provides both the attention annotations and the
// decoder's initial state.
struct EncoderOutput {
  ag::Tensor annotations;          // [B,L,H]
  std::vector<int> lengths;        // true source lengths
  ag::Tensor dec_h1, dec_c1;       // [B,H] initial decoder states
  ag::Tensor dec_h2, dec_c2;
  int batch() const { return annotations.dim(0); }
  int max_len() const { return annotations.dim(1); }
};

// Per-hypothesis decoder state; cloning is semantically transparent.
struct DecoderState {
  nn::LstmCell::State l1;
  nn::LstmCell::State l2;

  DecoderState clone() const;
};

class Seq2Seq {
 public:
  Seq2Seq(Seq2SeqConfig cfg, uint64_t seed);

  const Seq2SeqConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // Batched encode; sources are id sequences without bos/eos.
  EncoderOutput encode(const std::vector<std::vector<int>>& sources) const;
  EncoderOutput encode(const std::vector<int>& source) const;

  DecoderState initial_state(const EncoderOutput& enc) const;

  struct StepOut {
    ag::Tensor feature;  // [B,H] pre-projection decoder feature
    ag::Tensor logits;   // [B,V] raw S_TM scores, no softmax
    ag::Tensor attention;  // [B,L] weights (constant)
  };
  // One decoder step for the whole batch; prev_tokens[b] is the previous
  // target token (bos first).
  StepOut decoder_step(DecoderState& state, const std::vector<int>& prev_tokens,
                       const EncoderOutput& enc) const;

  // Teacher-forced pass: features/logits for each position of the padded
  // batch (targets without bos; position t predicts targets[:,t]).
  std::vector<StepOut> teacher_forced(const EncoderOutput& enc,
                                      const std::vector<std::vector<int>>& targets) const;

 private:
  Seq2SeqConfig cfg_;
  nn::ParamStore params_;
  ag::Tensor src_embed_, tgt_embed_;
  nn::LstmCell enc_fwd_, enc_bwd_, enc_l2_;
  ag::Tensor enc_proj_w_, enc_proj_b_;   // [2H,H]
  ag::Tensor init_h_w_, init_h_b_;       // [H,2H] -> (h1 | h2)
  ag::Tensor init_c_w_, init_c_b_;
  nn::LstmCell dec_l1_, dec_l2_;
  ag::Tensor comb_w_, comb_b_;           // [2H,H] over (h2 | context)
  ag::Tensor out_w_, out_b_;             // [H,V]
};

Checkpoint tm_to_checkpoint(const Seq2Seq& model, const std::string& extra_meta);
std::unique_ptr<Seq2Seq> tm_from_checkpoint(const Checkpoint& ck);

}  // namespace nmtfuse
