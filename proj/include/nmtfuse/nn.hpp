#pragma once

#include <map>
#include <string>
#include <vector>

#include "nmtfuse/ag.hpp"
#include "nmtfuse/rng.hpp"

namespace nmtfuse::nn {

// Ordered registry of named trainable tensors; the unit the optimizer and
// checkpoints operate on. Names are unique.
class ParamStore {
 public:
  ag::Tensor add(const std::string& name, ag::Shape shape, std::vector<double> data);
  ag::Tensor uniform_init(const std::string& name, ag::Shape shape, Rng& rng,
                          double lo = -0.1, double hi = 0.1);
  ag::Tensor zeros_init(const std::string& name, ag::Shape shape);

  bool has(const std::string& name) const { return index_.count(name) > 0; }
  ag::Tensor get(const std::string& name) const;
  const std::vector<std::pair<std::string, ag::Tensor>>& items() const { return params_; }
  size_t size() const { return params_.size(); }

  void zero_grads();
  int64_t num_values() const;
  // FNV-1a over the raw value bytes, in registration order; used by the
  // frozen-LM tests.
  uint64_t value_hash() const;

 private:
  std::vector<std::pair<std::string, ag::Tensor>> params_;
  std::map<std::string, size_t> index_;
};

inline ag::Tensor affine(const ag::Tensor& x, const ag::Tensor& w, const ag::Tensor& b) {
  return ag::add_rowvec(ag::matmul(x, w), b);
}

// Standard LSTM cell. Gate layout along the 4H axis is [i f g o]; the
// forget-gate bias is initialized to 1.
struct LstmCell {
  int input_dim = 0;
  int hidden_dim = 0;
  ag::Tensor w;  // [input_dim + hidden_dim, 4*hidden_dim]
  ag::Tensor b;  // [4*hidden_dim]

  void init(ParamStore& ps, const std::string& prefix, int input, int hidden, Rng& rng);

  struct State {
    ag::Tensor h;  // [B,H]
    ag::Tensor c;  // [B,H]
  };

  State zero_state(int batch) const;
  State step(const State& s, const ag::Tensor& x) const;
  // Rows where keep[b]==0 retain the previous state (used for padding).
  State step_masked(const State& s, const ag::Tensor& x, const std::vector<double>& keep) const;
};

}  // namespace nmtfuse::nn
