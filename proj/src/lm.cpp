#include "nmtfuse/lm.hpp"

#include <cmath>

#include "nmtfuse/util.hpp"

namespace nmtfuse {

namespace {

void check_token(int token, int vocab) {
  if (token < 0 || token >= vocab)
    throw UsageError("lm_step: token id " + std::to_string(token) + " outside vocab of " +
                     std::to_string(vocab));
}

// Pads ragged batches: position t inputs are [bos, y_1, ... ] shifted right.
std::vector<std::vector<int>> shift_right(const std::vector<std::vector<int>>& targets, int t_max) {
  std::vector<std::vector<int>> in(t_max, std::vector<int>(targets.size(), Vocabulary::kPad));
  for (size_t b = 0; b < targets.size(); ++b) {
    in[0][b] = Vocabulary::kBos;
    for (int t = 1; t < t_max; ++t)
      in[t][b] = (t - 1 < static_cast<int>(targets[b].size())) ? targets[b][t - 1]
                                                               : Vocabulary::kPad;
  }
  return in;
}

}  // namespace

std::vector<ag::Tensor> LanguageModel::batch_logps(
    const std::vector<std::vector<int>>& targets) const {
  ag::NoGradGuard guard;
  // generic fallback: run the incremental scorer per sentence
  int t_max = 0;
  for (const auto& t : targets) t_max = std::max(t_max, static_cast<int>(t.size()));
  const int b = static_cast<int>(targets.size());
  const int v = vocab_size();
  std::vector<std::vector<double>> rows(t_max, std::vector<double>(static_cast<size_t>(b) * v, 0.0));
  for (int i = 0; i < b; ++i) {
    auto state = start();
    int prev = Vocabulary::kBos;
    for (size_t t = 0; t < targets[i].size(); ++t) {
      std::vector<double> lp = step(*state, prev);
      std::copy(lp.begin(), lp.end(), rows[t].begin() + static_cast<size_t>(i) * v);
      prev = targets[i][t];
    }
  }
  std::vector<ag::Tensor> out;
  out.reserve(t_max);
  for (int t = 0; t < t_max; ++t) out.push_back(ag::Tensor::constant({b, v}, std::move(rows[t])));
  return out;
}

double LanguageModel::sequence_logp(const std::vector<int>& tokens) const {
  ag::NoGradGuard guard;
  auto state = start();
  int prev = Vocabulary::kBos;
  double total = 0.0;
  for (int tok : tokens) {
    std::vector<double> lp = step(*state, prev);
    total += lp[tok];
    prev = tok;
  }
  // close with eos
  std::vector<double> lp = step(*state, prev);
  return total + lp[Vocabulary::kEos];
}

double perplexity(const LanguageModel& model, const std::vector<std::vector<int>>& corpus) {
  if (corpus.empty()) throw UsageError("perplexity: empty corpus");
  double nll = 0.0;
  int64_t tokens = 0;
  for (const auto& sent : corpus) {
    nll -= model.sequence_logp(sent);
    tokens += static_cast<int64_t>(sent.size()) + 1;  // + eos
  }
  return std::exp(nll / static_cast<double>(tokens));
}

// ---- uniform ----

namespace {
struct EmptyState : LmState {
  std::unique_ptr<LmState> clone() const override { return std::make_unique<EmptyState>(); }
};
}  // namespace

UniformLm::UniformLm(int vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size < 1) throw UsageError("UniformLm: vocab must be non-empty");
}

std::unique_ptr<LmState> UniformLm::start() const { return std::make_unique<EmptyState>(); }

std::vector<double> UniformLm::step(LmState&, int token) const {
  check_token(token, vocab_size_);
  return std::vector<double>(vocab_size_, -std::log(static_cast<double>(vocab_size_)));
}

// ---- recurrent ----

namespace {

struct RnnState : LmState {
  std::vector<nn::LstmCell::State> layers;  // [1,H] tensors
  std::unique_ptr<LmState> clone() const override {
    auto s = std::make_unique<RnnState>();
    for (const auto& l : layers) {
      s->layers.push_back({ag::Tensor::constant(l.h.shape(), l.h.data()),
                           ag::Tensor::constant(l.c.shape(), l.c.data())});
    }
    return s;
  }
};

}  // namespace

RnnLm::RnnLm(RnnLmConfig cfg, uint64_t seed) : cfg_(cfg) {
  if (cfg_.vocab_size < 5) throw UsageError("RnnLm: vocab too small");
  Rng rng(Rng::derive(seed, 0x717));
  embedding_ = params_.uniform_init("lm.embed", {cfg_.vocab_size, cfg_.embed_dim}, rng);
  cells_.resize(cfg_.layers);
  for (int l = 0; l < cfg_.layers; ++l) {
    const int in = (l == 0) ? cfg_.embed_dim : cfg_.hidden_dim;
    cells_[l].init(params_, "lm.l" + std::to_string(l), in, cfg_.hidden_dim, rng);
  }
  w_out_ = params_.uniform_init("lm.out.w", {cfg_.hidden_dim, cfg_.vocab_size}, rng);
  b_out_ = params_.zeros_init("lm.out.b", {cfg_.vocab_size});
}

std::unique_ptr<LmState> RnnLm::start() const {
  auto s = std::make_unique<RnnState>();
  for (const auto& cell : cells_) s->layers.push_back(cell.zero_state(1));
  return s;
}

std::vector<double> RnnLm::step(LmState& state, int token) const {
  check_token(token, cfg_.vocab_size);
  ag::NoGradGuard guard;
  auto& s = dynamic_cast<RnnState&>(state);
  ag::Tensor x = ag::gather_rows(embedding_, {token});
  for (size_t l = 0; l < cells_.size(); ++l) {
    s.layers[l] = cells_[l].step(s.layers[l], x);
    x = s.layers[l].h;
  }
  ag::Tensor lp = ag::log_softmax(nn::affine(x, w_out_, b_out_));
  return lp.data();
}

std::vector<ag::Tensor> RnnLm::forward_steps(const std::vector<std::vector<int>>& targets) const {
  int t_max = 0;
  for (const auto& t : targets) t_max = std::max(t_max, static_cast<int>(t.size()));
  const int b = static_cast<int>(targets.size());
  const auto inputs = shift_right(targets, t_max);
  std::vector<nn::LstmCell::State> states;
  for (const auto& cell : cells_) states.push_back(cell.zero_state(b));
  std::vector<ag::Tensor> out;
  out.reserve(t_max);
  for (int t = 0; t < t_max; ++t) {
    ag::Tensor x = ag::gather_rows(embedding_, inputs[t]);
    for (size_t l = 0; l < cells_.size(); ++l) {
      states[l] = cells_[l].step(states[l], x);
      x = states[l].h;
    }
    out.push_back(ag::log_softmax(nn::affine(x, w_out_, b_out_)));
  }
  return out;
}

std::vector<ag::Tensor> RnnLm::forward_train(const std::vector<std::vector<int>>& targets) const {
  return forward_steps(targets);
}

// ---- feedforward n-gram ----

namespace {

struct NgramState : LmState {
  std::vector<int> context;  // most recent last
  std::unique_ptr<LmState> clone() const override {
    auto s = std::make_unique<NgramState>();
    s->context = context;
    return s;
  }
};

}  // namespace

FfnLm::FfnLm(FfnLmConfig cfg, uint64_t seed) : cfg_(cfg) {
  if (cfg_.vocab_size < 5) throw UsageError("FfnLm: vocab too small");
  if (cfg_.context < 1) throw UsageError("FfnLm: context must be >= 1");
  Rng rng(Rng::derive(seed, 0x919));
  embedding_ = params_.uniform_init("lm.embed", {cfg_.vocab_size, cfg_.embed_dim}, rng);
  int in = cfg_.context * cfg_.embed_dim;
  for (int l = 0; l < cfg_.hidden_layers; ++l) {
    hidden_.emplace_back(
        params_.uniform_init("lm.h" + std::to_string(l) + ".w", {in, cfg_.hidden_dim}, rng),
        params_.zeros_init("lm.h" + std::to_string(l) + ".b", {cfg_.hidden_dim}));
    in = cfg_.hidden_dim;
  }
  w_out_ = params_.uniform_init("lm.out.w", {in, cfg_.vocab_size}, rng);
  b_out_ = params_.zeros_init("lm.out.b", {cfg_.vocab_size});
}

std::unique_ptr<LmState> FfnLm::start() const {
  auto s = std::make_unique<NgramState>();
  s->context.assign(cfg_.context, Vocabulary::kBos);
  return s;
}

ag::Tensor FfnLm::logits_for_contexts(const std::vector<std::vector<int>>& ctx) const {
  // one gather per context slot, concatenated oldest..newest
  ag::Tensor x;
  for (int k = 0; k < cfg_.context; ++k) {
    std::vector<int> ids(ctx.size());
    for (size_t i = 0; i < ctx.size(); ++i) ids[i] = ctx[i][k];
    ag::Tensor e = ag::gather_rows(embedding_, ids);
    x = k == 0 ? e : ag::concat_cols(x, e);
  }
  for (const auto& [w, b] : hidden_) x = ag::tanh(nn::affine(x, w, b));
  return nn::affine(x, w_out_, b_out_);
}

std::vector<double> FfnLm::step(LmState& state, int token) const {
  check_token(token, cfg_.vocab_size);
  ag::NoGradGuard guard;
  auto& s = dynamic_cast<NgramState&>(state);
  s.context.erase(s.context.begin());
  s.context.push_back(token);
  ag::Tensor lp = ag::log_softmax(logits_for_contexts({s.context}));
  return lp.data();
}

std::vector<ag::Tensor> FfnLm::forward_train(const std::vector<std::vector<int>>& targets) const {
  int t_max = 0;
  for (const auto& t : targets) t_max = std::max(t_max, static_cast<int>(t.size()));
  const int b = static_cast<int>(targets.size());
  std::vector<ag::Tensor> out;
  out.reserve(t_max);
  std::vector<std::vector<int>> ctx(b, std::vector<int>(cfg_.context, Vocabulary::kBos));
  for (int t = 0; t < t_max; ++t) {
    for (int i = 0; i < b; ++i) {
      ctx[i].erase(ctx[i].begin());
      const int prev = (t == 0) ? Vocabulary::kBos
                                : (t - 1 < static_cast<int>(targets[i].size()) ? targets[i][t - 1]
                                                                               : Vocabulary::kPad);
      ctx[i].push_back(prev);
    }
    out.push_back(ag::log_softmax(logits_for_contexts(ctx)));
  }
  return out;
}

// ---- checkpoints ----

namespace {

std::vector<std::string> split_lines(const std::string& blob) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos < blob.size()) {
    size_t end = blob.find('\n', pos);
    if (end == std::string::npos) end = blob.size();
    out.push_back(blob.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

std::string lm_meta(const std::vector<std::pair<std::string, std::string>>& arch,
                    const Vocabulary& vocab, const std::string& extra) {
  std::string meta = meta_block("model", arch);
  meta += meta_raw_block("tgt_vocab", split_lines(vocab.serialize()));
  meta += extra;
  return meta;
}

}  // namespace

Checkpoint lm_to_checkpoint(const RnnLm& lm, const Vocabulary& vocab, const std::string& extra) {
  const auto& c = lm.config();
  if (vocab.size() != c.vocab_size) throw UsageError("lm_to_checkpoint: vocab size mismatch");
  return Checkpoint::from_params(
      lm.params(), lm_meta(
                           {{"type", "rnn_lm"},
                            {"vocab_size", std::to_string(c.vocab_size)},
                            {"embed_dim", std::to_string(c.embed_dim)},
                            {"hidden_dim", std::to_string(c.hidden_dim)},
                            {"layers", std::to_string(c.layers)}},
                           vocab, extra));
}

Checkpoint lm_to_checkpoint(const FfnLm& lm, const Vocabulary& vocab, const std::string& extra) {
  const auto& c = lm.config();
  if (vocab.size() != c.vocab_size) throw UsageError("lm_to_checkpoint: vocab size mismatch");
  return Checkpoint::from_params(
      lm.params(), lm_meta(
                           {{"type", "ffn_lm"},
                            {"vocab_size", std::to_string(c.vocab_size)},
                            {"context", std::to_string(c.context)},
                            {"embed_dim", std::to_string(c.embed_dim)},
                            {"hidden_dim", std::to_string(c.hidden_dim)},
                            {"hidden_layers", std::to_string(c.hidden_layers)}},
                           vocab, extra));
}

std::unique_ptr<LanguageModel> lm_from_checkpoint(const Checkpoint& ck, Vocabulary* vocab_out) {
  const std::string type = ck.meta_value("model", "type");
  if (vocab_out != nullptr) {
    const auto lines = ck.meta_section_lines("tgt_vocab");
    std::string blob;
    for (const auto& l : lines) blob += l + "\n";
    *vocab_out = Vocabulary::deserialize(blob);
  }
  if (type == "rnn_lm") {
    RnnLmConfig cfg;
    cfg.vocab_size = std::stoi(ck.meta_value("model", "vocab_size"));
    cfg.embed_dim = std::stoi(ck.meta_value("model", "embed_dim"));
    cfg.hidden_dim = std::stoi(ck.meta_value("model", "hidden_dim"));
    cfg.layers = std::stoi(ck.meta_value("model", "layers"));
    auto lm = std::make_unique<RnnLm>(cfg, 0);
    ck.restore_into(lm->params());
    return lm;
  }
  if (type == "ffn_lm") {
    FfnLmConfig cfg;
    cfg.vocab_size = std::stoi(ck.meta_value("model", "vocab_size"));
    cfg.context = std::stoi(ck.meta_value("model", "context"));
    cfg.embed_dim = std::stoi(ck.meta_value("model", "embed_dim"));
    cfg.hidden_dim = std::stoi(ck.meta_value("model", "hidden_dim"));
    cfg.hidden_layers = std::stoi(ck.meta_value("model", "hidden_layers"));
    auto lm = std::make_unique<FfnLm>(cfg, 0);
    ck.restore_into(lm->params());
    return lm;
  }
  throw IoError("checkpoint is not a language model (type '" + type + "')");
}

}  // namespace nmtfuse
