#include "nmtfuse/seq2seq.hpp"

#include <algorithm>

#include "nmtfuse/util.hpp"

namespace nmtfuse {

DecoderState DecoderState::clone() const {
  auto copy = [](const nn::LstmCell::State& s) {
    return nn::LstmCell::State{ag::Tensor::constant(s.h.shape(), s.h.data()),
                               ag::Tensor::constant(s.c.shape(), s.c.data())};
  };
  return {copy(l1), copy(l2)};
}

Seq2Seq::Seq2Seq(Seq2SeqConfig cfg, uint64_t seed) : cfg_(cfg) {
  if (cfg_.src_vocab_size < 5 || cfg_.tgt_vocab_size < 5)
    throw UsageError("Seq2Seq: vocabularies too small");
  Rng rng(Rng::derive(seed, 0x535));
  const int e = cfg_.embed_dim, h = cfg_.hidden_dim;
  src_embed_ = params_.uniform_init("src_embed", {cfg_.src_vocab_size, e}, rng);
  tgt_embed_ = params_.uniform_init("tgt_embed", {cfg_.tgt_vocab_size, e}, rng);
  enc_fwd_.init(params_, "enc.fwd", e, h, rng);
  enc_bwd_.init(params_, "enc.bwd", e, h, rng);
  enc_proj_w_ = params_.uniform_init("enc.proj.w", {2 * h, h}, rng);
  enc_proj_b_ = params_.zeros_init("enc.proj.b", {h});
  enc_l2_.init(params_, "enc.l2", h, h, rng);
  init_h_w_ = params_.uniform_init("dec.init_h.w", {h, 2 * h}, rng);
  init_h_b_ = params_.zeros_init("dec.init_h.b", {2 * h});
  init_c_w_ = params_.uniform_init("dec.init_c.w", {h, 2 * h}, rng);
  init_c_b_ = params_.zeros_init("dec.init_c.b", {2 * h});
  dec_l1_.init(params_, "dec.l1", e, h, rng);
  dec_l2_.init(params_, "dec.l2", h, h, rng);
  comb_w_ = params_.uniform_init("dec.comb.w", {2 * h, h}, rng);
  comb_b_ = params_.zeros_init("dec.comb.b", {h});
  out_w_ = params_.uniform_init("dec.out.w", {h, cfg_.tgt_vocab_size}, rng);
  out_b_ = params_.zeros_init("dec.out.b", {cfg_.tgt_vocab_size});
}

EncoderOutput Seq2Seq::encode(const std::vector<int>& source) const {
  return encode(std::vector<std::vector<int>>{source});
}

EncoderOutput Seq2Seq::encode(const std::vector<std::vector<int>>& sources) const {
  const int b = static_cast<int>(sources.size());
  if (b == 0) throw UsageError("encode: empty batch");
  int l_max = 0;
  std::vector<int> lengths(b);
  for (int i = 0; i < b; ++i) {
    if (sources[i].empty()) throw UsageError("encode: empty source sentence");
    for (int id : sources[i])
      if (id < 0 || id >= cfg_.src_vocab_size) throw UsageError("encode: source id out of range");
    lengths[i] = static_cast<int>(sources[i].size());
    l_max = std::max(l_max, lengths[i]);
  }

  auto token_col = [&](int t) {
    std::vector<int> ids(b, Vocabulary::kPad);
    for (int i = 0; i < b; ++i)
      if (t < lengths[i]) ids[i] = sources[i][t];
    return ids;
  };
  auto keep_col = [&](int t) {
    std::vector<double> keep(b, 0.0);
    for (int i = 0; i < b; ++i) keep[i] = t < lengths[i] ? 1.0 : 0.0;
    return keep;
  };

  // layer 1, both directions; padded steps keep their previous state
  std::vector<ag::Tensor> fwd_h(l_max), bwd_h(l_max), embeds(l_max);
  for (int t = 0; t < l_max; ++t) embeds[t] = ag::gather_rows(src_embed_, token_col(t));
  nn::LstmCell::State s = enc_fwd_.zero_state(b);
  for (int t = 0; t < l_max; ++t) {
    s = enc_fwd_.step_masked(s, embeds[t], keep_col(t));
    fwd_h[t] = s.h;
  }
  s = enc_bwd_.zero_state(b);
  for (int t = l_max - 1; t >= 0; --t) {
    s = enc_bwd_.step_masked(s, embeds[t], keep_col(t));
    bwd_h[t] = s.h;
  }
  // combine directions, then the second layer right to left
  std::vector<ag::Tensor> ann(l_max);
  nn::LstmCell::State s2 = enc_l2_.zero_state(b);
  for (int t = l_max - 1; t >= 0; --t) {
    ag::Tensor merged = nn::affine(ag::concat_cols(fwd_h[t], bwd_h[t]), enc_proj_w_, enc_proj_b_);
    s2 = enc_l2_.step_masked(s2, merged, keep_col(t));
    ann[t] = s2.h;
  }

  EncoderOutput out;
  out.annotations = ag::stack_time(ann);
  out.lengths = lengths;
  // position 0 is never padding, so the layer-2 final state is valid batchwide
  ag::Tensor h_init = nn::affine(s2.h, init_h_w_, init_h_b_);
  ag::Tensor c_init = nn::affine(s2.c, init_c_w_, init_c_b_);
  const int h = cfg_.hidden_dim;
  out.dec_h1 = ag::slice_cols(h_init, 0, h);
  out.dec_h2 = ag::slice_cols(h_init, h, 2 * h);
  out.dec_c1 = ag::slice_cols(c_init, 0, h);
  out.dec_c2 = ag::slice_cols(c_init, h, 2 * h);
  return out;
}

DecoderState Seq2Seq::initial_state(const EncoderOutput& enc) const {
  return {{enc.dec_h1, enc.dec_c1}, {enc.dec_h2, enc.dec_c2}};
}

Seq2Seq::StepOut Seq2Seq::decoder_step(DecoderState& state, const std::vector<int>& prev_tokens,
                                       const EncoderOutput& enc) const {
  for (int id : prev_tokens)
    if (id < 0 || id >= cfg_.tgt_vocab_size)
      throw UsageError("decoder_step: token id out of range");
  ag::Tensor x = ag::gather_rows(tgt_embed_, prev_tokens);
  state.l1 = dec_l1_.step(state.l1, x);
  state.l2 = dec_l2_.step(state.l2, state.l1.h);
  ag::Tensor alpha;
  ag::Tensor ctx =
      ag::dot_attention(state.l2.h, enc.annotations, enc.annotations, enc.lengths, &alpha);
  ag::Tensor feature = ag::tanh(nn::affine(ag::concat_cols(state.l2.h, ctx), comb_w_, comb_b_));
  ag::Tensor logits = nn::affine(feature, out_w_, out_b_);
  return {feature, logits, alpha};
}

std::vector<Seq2Seq::StepOut> Seq2Seq::teacher_forced(
    const EncoderOutput& enc, const std::vector<std::vector<int>>& targets) const {
  const int b = enc.batch();
  if (static_cast<int>(targets.size()) != b)
    throw UsageError("teacher_forced: batch size mismatch");
  int t_max = 0;
  for (const auto& t : targets) t_max = std::max(t_max, static_cast<int>(t.size()));
  DecoderState state = initial_state(enc);
  std::vector<StepOut> out;
  out.reserve(t_max);
  std::vector<int> prev(b, Vocabulary::kBos);
  for (int t = 0; t < t_max; ++t) {
    out.push_back(decoder_step(state, prev, enc));
    for (int i = 0; i < b; ++i)
      prev[i] = (t < static_cast<int>(targets[i].size())) ? targets[i][t] : Vocabulary::kPad;
  }
  return out;
}

Checkpoint tm_to_checkpoint(const Seq2Seq& model, const std::string& extra_meta) {
  const auto& c = model.config();
  std::string meta = meta_block("model", {{"type", "seq2seq"},
                                          {"src_vocab_size", std::to_string(c.src_vocab_size)},
                                          {"tgt_vocab_size", std::to_string(c.tgt_vocab_size)},
                                          {"embed_dim", std::to_string(c.embed_dim)},
                                          {"hidden_dim", std::to_string(c.hidden_dim)}});
  meta += extra_meta;
  return Checkpoint::from_params(model.params(), meta);
}

std::unique_ptr<Seq2Seq> tm_from_checkpoint(const Checkpoint& ck) {
  if (ck.meta_value("model", "type") != "seq2seq")
    throw IoError("checkpoint is not a translation model");
  Seq2SeqConfig cfg;
  cfg.src_vocab_size = std::stoi(ck.meta_value("model", "src_vocab_size"));
  cfg.tgt_vocab_size = std::stoi(ck.meta_value("model", "tgt_vocab_size"));
  cfg.embed_dim = std::stoi(ck.meta_value("model", "embed_dim"));
  cfg.hidden_dim = std::stoi(ck.meta_value("model", "hidden_dim"));
  auto model = std::make_unique<Seq2Seq>(cfg, 0);
  // the checkpoint may carry extra (cold fusion) tensors on top of the core
  if (ck.entries.size() == model->params().size()) {
    ck.restore_into(model->params());
  } else {
    for (const auto& e : ck.entries) {
      if (!model->params().has(e.name)) continue;
      ag::Tensor t = model->params().get(e.name);
      if (t.shape() != e.shape) throw IoError("shape mismatch restoring " + e.name);
      t.mutable_data() = e.data;
    }
  }
  return model;
}

}  // namespace nmtfuse
