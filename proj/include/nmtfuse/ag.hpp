#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

// Reverse-mode autodiff over dense row-major double tensors.
//
// Ops are recorded onto the innermost live Tape of the current thread; with
// no tape open (or under NoGradGuard) they evaluate values only. Gradients
// accumulate additively at fan-out. Every op checks its output for NaN/Inf
// and throws AutogradError naming the op.

namespace nmtfuse::ag {

class AutogradError : public std::runtime_error {
 public:
  explicit AutogradError(const std::string& what) : std::runtime_error(what) {}
};

using Shape = std::vector<int>;

int64_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily, same size as value
  bool requires_grad = false;
  const char* op = "leaf";
  std::string name;  // non-empty for named parameters
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;  // pushes this->grad into inputs' grads

  int64_t size() const { return shape_size(shape); }
  void ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);
  // Constant (no gradient slot).
  static Tensor constant(Shape shape, std::vector<double> data);
  // Trainable leaf.
  static Tensor parameter(Shape shape, std::vector<double> data, std::string name);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[i]; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  int64_t size() const { return node_->size(); }
  int rows() const { return node_->shape[0]; }
  int cols() const { return node_->shape[1]; }

  const std::vector<double>& data() const { return node_->value; }
  std::vector<double>& mutable_data() { return node_->value; }
  double item() const;
  double at(int64_t i) const { return node_->value[i]; }

  bool requires_grad() const { return node_->requires_grad; }
  std::vector<double>& grad() { node_->ensure_grad(); return node_->grad; }
  const std::vector<double>& grad() const;
  void zero_grad();

  const std::string& name() const { return node_->name; }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Records ops for one forward pass; backward() replays them in exact reverse
// order. Construction pushes this tape as the thread's current one.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // loss must be scalar (size 1). Seeds d(loss)/d(loss)=1 and accumulates
  // gradients into every recorded input, including parameters.
  void backward(const Tensor& loss);
  size_t num_ops() const { return nodes_.size(); }

  static Tape* current();
  void record(const std::shared_ptr<Node>& n) { nodes_.push_back(n); }

 private:
  std::vector<std::shared_ptr<Node>> nodes_;
};

// While alive, ops on the current thread are never recorded (used to keep a
// fixed LM out of the TM's graph, and for plain inference).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
  static bool active();
};

// ---- ops ----
// Elementwise ops accept any shape; binary ones require identical shapes.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);

// a: [m,k] x b: [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// x: [m,n] + v: [n] broadcast over rows
Tensor add_rowvec(const Tensor& x, const Tensor& v);
// x: [m,n] * s: [m,1] broadcast over columns
Tensor scale_rows(const Tensor& x, const Tensor& s);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& x, int lo, int hi);

// Stable (max-subtracted) softmax over the last dimension of a 1-D or 2-D
// tensor; rows sum to 1.
Tensor softmax(const Tensor& x);
Tensor log_softmax(const Tensor& x);

// table: [V,E], ids in [0,V) -> [n,E]; backward scatter-adds rows.
Tensor gather_rows(const Tensor& table, const std::vector<int>& ids);
// x: [m,n], out[i] = x[i, ids[i]] -> [m,1]
Tensor pick_per_row(const Tensor& x, const std::vector<int>& ids);
// x: [m,n] -> [m,1]
Tensor row_sum(const Tensor& x);
// any shape -> scalar [1]
Tensor total_sum(const Tensor& x);

// steps: L tensors of [B,H] -> [B,L,H]
Tensor stack_time(const std::vector<Tensor>& steps);

// Dot-product attention. query [B,H], keys/values [B,L,H]; positions at or
// beyond lengths[b] are masked out of the softmax. Returns the context
// [B,H]; *alpha_out (optional) receives the weights [B,L] as a constant.
Tensor dot_attention(const Tensor& query, const Tensor& keys, const Tensor& values,
                     const std::vector<int>& lengths, Tensor* alpha_out = nullptr);

}  // namespace nmtfuse::ag
