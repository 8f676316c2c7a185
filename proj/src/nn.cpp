#include "nmtfuse/nn.hpp"

namespace nmtfuse::nn {

ag::Tensor ParamStore::add(const std::string& name, ag::Shape shape, std::vector<double> data) {
  if (index_.count(name)) throw ag::AutogradError("duplicate parameter name: " + name);
  ag::Tensor t = ag::Tensor::parameter(std::move(shape), std::move(data), name);
  index_[name] = params_.size();
  params_.emplace_back(name, t);
  return t;
}

ag::Tensor ParamStore::uniform_init(const std::string& name, ag::Shape shape, Rng& rng,
                                    double lo, double hi) {
  std::vector<double> data(ag::shape_size(shape));
  for (double& v : data) v = rng.uniform(lo, hi);
  return add(name, std::move(shape), std::move(data));
}

ag::Tensor ParamStore::zeros_init(const std::string& name, ag::Shape shape) {
  return add(name, std::move(shape), std::vector<double>(ag::shape_size(shape), 0.0));
}

ag::Tensor ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ag::AutogradError("no such parameter: " + name);
  return params_[it->second].second;
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : params_) {
    (void)name;
    t.zero_grad();
  }
}

int64_t ParamStore::num_values() const {
  int64_t n = 0;
  for (const auto& [name, t] : params_) {
    (void)name;
    n += t.size();
  }
  return n;
}

uint64_t ParamStore::value_hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const unsigned char* p, size_t n) {
    for (size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [name, t] : params_) {
    mix(reinterpret_cast<const unsigned char*>(name.data()), name.size());
    mix(reinterpret_cast<const unsigned char*>(t.data().data()), t.data().size() * sizeof(double));
  }
  return h;
}

void LstmCell::init(ParamStore& ps, const std::string& prefix, int input, int hidden, Rng& rng) {
  input_dim = input;
  hidden_dim = hidden;
  w = ps.uniform_init(prefix + ".w", {input + hidden, 4 * hidden}, rng);
  std::vector<double> bias(4 * hidden, 0.0);
  for (int j = hidden; j < 2 * hidden; ++j) bias[j] = 1.0;  // forget gate
  b = ps.add(prefix + ".b", {4 * hidden}, std::move(bias));
}

LstmCell::State LstmCell::zero_state(int batch) const {
  return {ag::Tensor::zeros({batch, hidden_dim}), ag::Tensor::zeros({batch, hidden_dim})};
}

LstmCell::State LstmCell::step(const State& s, const ag::Tensor& x) const {
  if (x.ndim() != 2 || x.cols() != input_dim)
    throw ag::AutogradError("lstm_step: input shape " + ag::shape_str(x.shape()) +
                            " does not match input_dim " + std::to_string(input_dim));
  const int hd = hidden_dim;
  ag::Tensor z = affine(ag::concat_cols(x, s.h), w, b);
  ag::Tensor i = ag::sigmoid(ag::slice_cols(z, 0, hd));
  ag::Tensor f = ag::sigmoid(ag::slice_cols(z, hd, 2 * hd));
  ag::Tensor g = ag::tanh(ag::slice_cols(z, 2 * hd, 3 * hd));
  ag::Tensor o = ag::sigmoid(ag::slice_cols(z, 3 * hd, 4 * hd));
  ag::Tensor c = ag::add(ag::mul(f, s.c), ag::mul(i, g));
  ag::Tensor h = ag::mul(o, ag::tanh(c));
  return {h, c};
}

LstmCell::State LstmCell::step_masked(const State& s, const ag::Tensor& x,
                                      const std::vector<double>& keep) const {
  State nxt = step(s, x);
  bool all = true;
  for (double k : keep) all = all && k == 1.0;
  if (all) return nxt;
  ag::Tensor m = ag::Tensor::constant({static_cast<int>(keep.size()), 1}, keep);
  std::vector<double> inv(keep.size());
  for (size_t i = 0; i < keep.size(); ++i) inv[i] = 1.0 - keep[i];
  ag::Tensor im = ag::Tensor::constant({static_cast<int>(keep.size()), 1}, inv);
  return {ag::add(ag::scale_rows(nxt.h, m), ag::scale_rows(s.h, im)),
          ag::add(ag::scale_rows(nxt.c, m), ag::scale_rows(s.c, im))};
}

}  // namespace nmtfuse::nn
