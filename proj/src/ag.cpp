#include "nmtfuse/ag.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace nmtfuse::ag {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

thread_local std::vector<Tape*> g_tapes;
thread_local int g_no_grad = 0;

void check_finite(const Node& n) {
  for (double v : n.value) {
    if (!std::isfinite(v)) {
      throw AutogradError(std::string("op '") + n.op + "' produced a non-finite value");
    }
  }
}

bool tracing(std::initializer_list<const Tensor*> ins) {
  if (g_no_grad > 0 || Tape::current() == nullptr) return false;
  for (const Tensor* t : ins) {
    if (t->requires_grad()) return true;
  }
  return false;
}

// Creates the output node; hooks it onto the tape when any input is traced.
Tensor make_node(const char* op, Shape shape, std::vector<double> value,
                 std::initializer_list<const Tensor*> ins,
                 std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->op = op;
  check_finite(*n);
  if (tracing(ins)) {
    n->requires_grad = true;
    for (const Tensor* t : ins) n->inputs.push_back(t->node());
    n->backward = std::move(backward);
    Tape::current()->record(n);
  }
  return Tensor(n);
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw AutogradError(msg);
}

}  // namespace

int64_t shape_size(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

void Node::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
}

Tensor Tensor::zeros(Shape shape) {
  return constant(std::move(shape), {});
}

Tensor Tensor::full(Shape shape, double v) {
  std::vector<double> data(shape_size(shape), v);
  return constant(std::move(shape), std::move(data));
}

Tensor Tensor::constant(Shape shape, std::vector<double> data) {
  auto n = std::make_shared<Node>();
  if (data.empty()) data.assign(shape_size(shape), 0.0);
  require(static_cast<int64_t>(data.size()) == shape_size(shape),
          "constant: data length does not match shape " + shape_str(shape));
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->op = "constant";
  check_finite(*n);
  return Tensor(n);
}

Tensor Tensor::parameter(Shape shape, std::vector<double> data, std::string name) {
  Tensor t = constant(std::move(shape), std::move(data));
  t.node()->requires_grad = true;
  t.node()->op = "parameter";
  t.node()->name = std::move(name);
  return t;
}

double Tensor::item() const {
  require(size() == 1, "item: tensor is not scalar, shape " + shape_str(shape()));
  return node_->value[0];
}

const std::vector<double>& Tensor::grad() const {
  const_cast<Node*>(node_.get())->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tape::Tape() { g_tapes.push_back(this); }

Tape::~Tape() { g_tapes.pop_back(); }

Tape* Tape::current() { return g_tapes.empty() ? nullptr : g_tapes.back(); }

void Tape::backward(const Tensor& loss) {
  require(loss.size() == 1, "backward: loss must be scalar, got shape " + shape_str(loss.shape()));
  loss.node()->ensure_grad();
  loss.node()->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (n.grad.empty()) continue;  // does not influence the loss
    if (n.backward) n.backward(n);
  }
}

NoGradGuard::NoGradGuard() { ++g_no_grad; }
NoGradGuard::~NoGradGuard() { --g_no_grad; }
bool NoGradGuard::active() { return g_no_grad > 0; }

// ---- elementwise ----

namespace {

Tensor ew_binary(const char* op, const Tensor& a, const Tensor& b,
                 double (*f)(double, double),
                 void (*push)(const Node&, Node&, Node&)) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " +
                                      shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<double> out(a.size());
  const auto& av = a.data();
  const auto& bv = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
  auto an = a.node(); auto bn = b.node();
  return make_node(op, a.shape(), std::move(out), {&a, &b}, [an, bn, push](Node& self) {
    push(self, *an, *bn);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return ew_binary("add", a, b, [](double x, double y) { return x + y; },
                   [](const Node& self, Node& an, Node& bn) {
                     if (an.requires_grad) {
                       an.ensure_grad();
                       for (size_t i = 0; i < self.grad.size(); ++i) an.grad[i] += self.grad[i];
                     }
                     if (bn.requires_grad) {
                       bn.ensure_grad();
                       for (size_t i = 0; i < self.grad.size(); ++i) bn.grad[i] += self.grad[i];
                     }
                   });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return ew_binary("sub", a, b, [](double x, double y) { return x - y; },
                   [](const Node& self, Node& an, Node& bn) {
                     if (an.requires_grad) {
                       an.ensure_grad();
                       for (size_t i = 0; i < self.grad.size(); ++i) an.grad[i] += self.grad[i];
                     }
                     if (bn.requires_grad) {
                       bn.ensure_grad();
                       for (size_t i = 0; i < self.grad.size(); ++i) bn.grad[i] -= self.grad[i];
                     }
                   });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "mul: shape mismatch " + shape_str(a.shape()) + " vs " +
                                      shape_str(b.shape()));
  std::vector<double> out(a.size());
  const auto& av = a.data();
  const auto& bv = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  auto an = a.node(); auto bn = b.node();
  return make_node("mul", a.shape(), std::move(out), {&a, &b}, [an, bn](Node& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * bn->value[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i] * an->value[i];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  const auto& av = a.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
  auto an = a.node();
  return make_node("scale", a.shape(), std::move(out), {&a}, [an, c](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * c;
  });
}

Tensor add_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  const auto& av = a.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] + c;
  auto an = a.node();
  return make_node("add_scalar", a.shape(), std::move(out), {&a}, [an](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
  });
}

namespace {

Tensor ew_unary(const char* op, const Tensor& a, double (*f)(double),
                double (*dfdy)(double y, double x)) {
  std::vector<double> out(a.size());
  const auto& av = a.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
  auto an = a.node();
  return make_node(op, a.shape(), std::move(out), {&a}, [an, dfdy](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      an->grad[i] += self.grad[i] * dfdy(self.value[i], an->value[i]);
  });
}

}  // namespace

Tensor sigmoid(const Tensor& a) {
  return ew_unary("sigmoid", a,
                  [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                  [](double y, double) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return ew_unary("tanh", a, [](double x) { return std::tanh(x); },
                  [](double y, double) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& a) {
  return ew_unary("exp", a, [](double x) { return std::exp(x); },
                  [](double y, double) { return y; });
}

Tensor log(const Tensor& a) {
  return ew_unary("log", a, [](double x) { return std::log(x); },
                  [](double, double x) { return 1.0 / x; });
}

// ---- matrix ops ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.ndim() == 2 && b.ndim() == 2 && a.cols() == b.rows(),
          "matmul: incompatible shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const int m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(static_cast<size_t>(m) * n);
  {
    CMap A(a.data().data(), m, k), B(b.data().data(), k, n);
    Map C(out.data(), m, n);
    C.noalias() = A * B;
  }
  auto an = a.node(); auto bn = b.node();
  return make_node("matmul", {m, n}, std::move(out), {&a, &b}, [an, bn, m, k, n](Node& self) {
    CMap G(self.grad.data(), m, n);
    if (an->requires_grad) {
      an->ensure_grad();
      CMap B(bn->value.data(), k, n);
      Map GA(an->grad.data(), m, k);
      GA.noalias() += G * B.transpose();
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      CMap A(an->value.data(), m, k);
      Map GB(bn->grad.data(), k, n);
      GB.noalias() += A.transpose() * G;
    }
  });
}

Tensor add_rowvec(const Tensor& x, const Tensor& v) {
  require(x.ndim() == 2 && v.size() == x.cols(),
          "add_rowvec: shapes " + shape_str(x.shape()) + " + " + shape_str(v.shape()));
  const int m = x.rows(), n = x.cols();
  std::vector<double> out(x.data());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[static_cast<size_t>(i) * n + j] += v.data()[j];
  auto xn = x.node(); auto vn = v.node();
  return make_node("add_rowvec", x.shape(), std::move(out), {&x, &v}, [xn, vn, m, n](Node& self) {
    if (xn->requires_grad) {
      xn->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += self.grad[i];
    }
    if (vn->requires_grad) {
      vn->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) vn->grad[j] += self.grad[static_cast<size_t>(i) * n + j];
    }
  });
}

Tensor scale_rows(const Tensor& x, const Tensor& s) {
  require(x.ndim() == 2 && s.ndim() == 2 && s.rows() == x.rows() && s.cols() == 1,
          "scale_rows: shapes " + shape_str(x.shape()) + " * " + shape_str(s.shape()));
  const int m = x.rows(), n = x.cols();
  std::vector<double> out(x.data());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[static_cast<size_t>(i) * n + j] *= s.data()[i];
  auto xn = x.node(); auto sn = s.node();
  return make_node("scale_rows", x.shape(), std::move(out), {&x, &s}, [xn, sn, m, n](Node& self) {
    if (xn->requires_grad) {
      xn->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          xn->grad[static_cast<size_t>(i) * n + j] +=
              self.grad[static_cast<size_t>(i) * n + j] * sn->value[i];
    }
    if (sn->requires_grad) {
      sn->ensure_grad();
      for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j)
          acc += self.grad[static_cast<size_t>(i) * n + j] * xn->value[static_cast<size_t>(i) * n + j];
        sn->grad[i] += acc;
      }
    }
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require(a.ndim() == 2 && b.ndim() == 2 && a.rows() == b.rows(),
          "concat_cols: shapes " + shape_str(a.shape()) + " | " + shape_str(b.shape()));
  const int m = a.rows(), na = a.cols(), nb = b.cols();
  std::vector<double> out(static_cast<size_t>(m) * (na + nb));
  for (int i = 0; i < m; ++i) {
    std::copy_n(a.data().data() + static_cast<size_t>(i) * na, na,
                out.data() + static_cast<size_t>(i) * (na + nb));
    std::copy_n(b.data().data() + static_cast<size_t>(i) * nb, nb,
                out.data() + static_cast<size_t>(i) * (na + nb) + na);
  }
  auto an = a.node(); auto bn = b.node();
  return make_node("concat_cols", {m, na + nb}, std::move(out), {&a, &b},
                   [an, bn, m, na, nb](Node& self) {
    const int n = na + nb;
    if (an->requires_grad) {
      an->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < na; ++j)
          an->grad[static_cast<size_t>(i) * na + j] += self.grad[static_cast<size_t>(i) * n + j];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < nb; ++j)
          bn->grad[static_cast<size_t>(i) * nb + j] +=
              self.grad[static_cast<size_t>(i) * n + na + j];
    }
  });
}

Tensor slice_cols(const Tensor& x, int lo, int hi) {
  require(x.ndim() == 2 && 0 <= lo && lo < hi && hi <= x.cols(),
          "slice_cols: bad range [" + std::to_string(lo) + "," + std::to_string(hi) + ") for " +
              shape_str(x.shape()));
  const int m = x.rows(), n = x.cols(), w = hi - lo;
  std::vector<double> out(static_cast<size_t>(m) * w);
  for (int i = 0; i < m; ++i)
    std::copy_n(x.data().data() + static_cast<size_t>(i) * n + lo, w,
                out.data() + static_cast<size_t>(i) * w);
  auto xn = x.node();
  return make_node("slice_cols", {m, w}, std::move(out), {&x}, [xn, m, n, lo, w](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < w; ++j)
        xn->grad[static_cast<size_t>(i) * n + lo + j] += self.grad[static_cast<size_t>(i) * w + j];
  });
}

// ---- softmax family ----

namespace {

struct RowsView {
  int rows, cols;
};

RowsView as_rows(const Tensor& x, const char* op) {
  if (x.ndim() == 1) return {1, x.dim(0)};
  require(x.ndim() == 2, std::string(op) + ": expects 1-D or 2-D input, got " + shape_str(x.shape()));
  return {x.rows(), x.cols()};
}

}  // namespace

Tensor softmax(const Tensor& x) {
  RowsView rv = as_rows(x, "softmax");
  require(rv.cols > 0, "softmax: empty input");
  std::vector<double> out(x.size());
  const auto& xv = x.data();
  for (int i = 0; i < rv.rows; ++i) {
    const double* row = xv.data() + static_cast<size_t>(i) * rv.cols;
    double* orow = out.data() + static_cast<size_t>(i) * rv.cols;
    double mx = row[0];
    for (int j = 1; j < rv.cols; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < rv.cols; ++j) { orow[j] = std::exp(row[j] - mx); sum += orow[j]; }
    for (int j = 0; j < rv.cols; ++j) orow[j] /= sum;
  }
  auto xn = x.node();
  return make_node("softmax", x.shape(), std::move(out), {&x}, [xn, rv](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int i = 0; i < rv.rows; ++i) {
      const double* y = self.value.data() + static_cast<size_t>(i) * rv.cols;
      const double* g = self.grad.data() + static_cast<size_t>(i) * rv.cols;
      double dot = 0.0;
      for (int j = 0; j < rv.cols; ++j) dot += y[j] * g[j];
      double* gx = xn->grad.data() + static_cast<size_t>(i) * rv.cols;
      for (int j = 0; j < rv.cols; ++j) gx[j] += y[j] * (g[j] - dot);
    }
  });
}

Tensor log_softmax(const Tensor& x) {
  RowsView rv = as_rows(x, "log_softmax");
  require(rv.cols > 0, "log_softmax: empty input");
  std::vector<double> out(x.size());
  const auto& xv = x.data();
  for (int i = 0; i < rv.rows; ++i) {
    const double* row = xv.data() + static_cast<size_t>(i) * rv.cols;
    double* orow = out.data() + static_cast<size_t>(i) * rv.cols;
    double mx = row[0];
    for (int j = 1; j < rv.cols; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < rv.cols; ++j) sum += std::exp(row[j] - mx);
    const double lse = mx + std::log(sum);
    for (int j = 0; j < rv.cols; ++j) orow[j] = row[j] - lse;
  }
  auto xn = x.node();
  return make_node("log_softmax", x.shape(), std::move(out), {&x}, [xn, rv](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int i = 0; i < rv.rows; ++i) {
      const double* y = self.value.data() + static_cast<size_t>(i) * rv.cols;
      const double* g = self.grad.data() + static_cast<size_t>(i) * rv.cols;
      double gsum = 0.0;
      for (int j = 0; j < rv.cols; ++j) gsum += g[j];
      double* gx = xn->grad.data() + static_cast<size_t>(i) * rv.cols;
      for (int j = 0; j < rv.cols; ++j) gx[j] += g[j] - std::exp(y[j]) * gsum;
    }
  });
}

// ---- indexing / reductions ----

Tensor gather_rows(const Tensor& table, const std::vector<int>& ids) {
  require(table.ndim() == 2, "gather_rows: table must be 2-D");
  const int v = table.rows(), e = table.cols();
  const int n = static_cast<int>(ids.size());
  std::vector<double> out(static_cast<size_t>(n) * e);
  for (int i = 0; i < n; ++i) {
    require(ids[i] >= 0 && ids[i] < v,
            "gather_rows: id " + std::to_string(ids[i]) + " out of range [0," + std::to_string(v) + ")");
    std::copy_n(table.data().data() + static_cast<size_t>(ids[i]) * e, e,
                out.data() + static_cast<size_t>(i) * e);
  }
  auto tn = table.node();
  return make_node("gather_rows", {n, e}, std::move(out), {&table}, [tn, ids, e](Node& self) {
    if (!tn->requires_grad) return;
    tn->ensure_grad();
    for (size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < e; ++j)
        tn->grad[static_cast<size_t>(ids[i]) * e + j] += self.grad[i * e + j];
  });
}

Tensor pick_per_row(const Tensor& x, const std::vector<int>& ids) {
  require(x.ndim() == 2 && static_cast<int>(ids.size()) == x.rows(),
          "pick_per_row: need one id per row");
  const int m = x.rows(), n = x.cols();
  std::vector<double> out(m);
  for (int i = 0; i < m; ++i) {
    require(ids[i] >= 0 && ids[i] < n, "pick_per_row: id out of range");
    out[i] = x.data()[static_cast<size_t>(i) * n + ids[i]];
  }
  auto xn = x.node();
  return make_node("pick_per_row", {m, 1}, std::move(out), {&x}, [xn, ids, n](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (size_t i = 0; i < ids.size(); ++i)
      xn->grad[i * n + ids[i]] += self.grad[i];
  });
}

Tensor row_sum(const Tensor& x) {
  require(x.ndim() == 2, "row_sum: expects 2-D input");
  const int m = x.rows(), n = x.cols();
  std::vector<double> out(m, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[i] += x.data()[static_cast<size_t>(i) * n + j];
  auto xn = x.node();
  return make_node("row_sum", {m, 1}, std::move(out), {&x}, [xn, m, n](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) xn->grad[static_cast<size_t>(i) * n + j] += self.grad[i];
  });
}

Tensor total_sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  auto xn = x.node();
  return make_node("total_sum", {1}, {acc}, {&x}, [xn](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (double& g : xn->grad) g += self.grad[0];
  });
}

// ---- sequence ops ----

Tensor stack_time(const std::vector<Tensor>& steps) {
  require(!steps.empty(), "stack_time: empty step list");
  const int b = steps[0].rows(), h = steps[0].cols();
  const int l = static_cast<int>(steps.size());
  for (const Tensor& t : steps)
    require(t.ndim() == 2 && t.rows() == b && t.cols() == h, "stack_time: inconsistent step shapes");
  std::vector<double> out(static_cast<size_t>(b) * l * h);
  for (int t = 0; t < l; ++t)
    for (int i = 0; i < b; ++i)
      std::copy_n(steps[t].data().data() + static_cast<size_t>(i) * h, h,
                  out.data() + (static_cast<size_t>(i) * l + t) * h);
  // make_node takes an initializer_list; wire inputs by hand instead.
  auto n = std::make_shared<Node>();
  n->shape = {b, l, h};
  n->value = std::move(out);
  n->op = "stack_time";
  check_finite(*n);
  bool traced = false;
  if (g_no_grad == 0 && Tape::current() != nullptr) {
    for (const Tensor& t : steps) traced = traced || t.requires_grad();
  }
  if (traced) {
    n->requires_grad = true;
    std::vector<std::shared_ptr<Node>> ins;
    for (const Tensor& t : steps) ins.push_back(t.node());
    n->inputs = ins;
    n->backward = [ins, b, l, h](Node& self) {
      for (int t = 0; t < l; ++t) {
        Node& sn = *ins[t];
        if (!sn.requires_grad) continue;
        sn.ensure_grad();
        for (int i = 0; i < b; ++i)
          for (int j = 0; j < h; ++j)
            sn.grad[static_cast<size_t>(i) * h + j] +=
                self.grad[(static_cast<size_t>(i) * l + t) * h + j];
      }
    };
    Tape::current()->record(n);
  }
  return Tensor(n);
}

Tensor dot_attention(const Tensor& query, const Tensor& keys, const Tensor& values,
                     const std::vector<int>& lengths, Tensor* alpha_out) {
  require(query.ndim() == 2 && keys.ndim() == 3 && values.ndim() == 3,
          "dot_attention: query [B,H], keys/values [B,L,H]");
  const int b = query.rows(), h = query.cols();
  const int l = keys.dim(1);
  require(keys.dim(0) == b && keys.dim(2) == h && values.shape() == keys.shape(),
          "dot_attention: inconsistent shapes");
  require(l >= 1, "dot_attention: empty key list");
  require(static_cast<int>(lengths.size()) == b, "dot_attention: one length per batch row");
  for (int i = 0; i < b; ++i)
    require(lengths[i] >= 1 && lengths[i] <= l, "dot_attention: length out of range");

  // alpha[b,l] = softmax over valid positions of q.k; ctx[b,:] = sum alpha*v
  std::vector<double> alpha(static_cast<size_t>(b) * l, 0.0);
  std::vector<double> ctx(static_cast<size_t>(b) * h, 0.0);
  const double* q = query.data().data();
  const double* k = keys.data().data();
  const double* v = values.data().data();
  for (int i = 0; i < b; ++i) {
    const int len = lengths[i];
    double* a = alpha.data() + static_cast<size_t>(i) * l;
    double mx = -1e300;
    for (int t = 0; t < len; ++t) {
      double s = 0.0;
      const double* kr = k + (static_cast<size_t>(i) * l + t) * h;
      const double* qr = q + static_cast<size_t>(i) * h;
      for (int j = 0; j < h; ++j) s += qr[j] * kr[j];
      a[t] = s;
      mx = std::max(mx, s);
    }
    double sum = 0.0;
    for (int t = 0; t < len; ++t) { a[t] = std::exp(a[t] - mx); sum += a[t]; }
    for (int t = 0; t < len; ++t) a[t] /= sum;
    double* c = ctx.data() + static_cast<size_t>(i) * h;
    for (int t = 0; t < len; ++t) {
      const double* vr = v + (static_cast<size_t>(i) * l + t) * h;
      for (int j = 0; j < h; ++j) c[j] += a[t] * vr[j];
    }
  }
  if (alpha_out != nullptr) *alpha_out = Tensor::constant({b, l}, alpha);

  auto qn = query.node(); auto kn = keys.node(); auto vn = values.node();
  auto n = std::make_shared<Node>();
  n->shape = {b, h};
  n->value = std::move(ctx);
  n->op = "dot_attention";
  check_finite(*n);
  if (g_no_grad == 0 && Tape::current() != nullptr &&
      (query.requires_grad() || keys.requires_grad() || values.requires_grad())) {
    n->requires_grad = true;
    n->inputs = {qn, kn, vn};
    std::vector<int> lens = lengths;
    std::vector<double> alphas = alpha;
    n->backward = [qn, kn, vn, lens, alphas, b, l, h](Node& self) {
      qn->ensure_grad(); kn->ensure_grad(); vn->ensure_grad();
      std::vector<double> ga(l);  // dL/d alpha, per row
      std::vector<double> gs(l);  // dL/d score, per row
      for (int i = 0; i < b; ++i) {
        const int len = lens[i];
        const double* gc = self.grad.data() + static_cast<size_t>(i) * h;
        const double* a = alphas.data() + static_cast<size_t>(i) * l;
        for (int t = 0; t < len; ++t) {
          const double* vr = vn->value.data() + (static_cast<size_t>(i) * l + t) * h;
          double acc = 0.0;
          for (int j = 0; j < h; ++j) acc += gc[j] * vr[j];
          ga[t] = acc;
          if (vn->requires_grad) {
            double* gv = vn->grad.data() + (static_cast<size_t>(i) * l + t) * h;
            for (int j = 0; j < h; ++j) gv[j] += a[t] * gc[j];
          }
        }
        double dot = 0.0;
        for (int t = 0; t < len; ++t) dot += a[t] * ga[t];
        for (int t = 0; t < len; ++t) gs[t] = a[t] * (ga[t] - dot);
        const double* qr = qn->value.data() + static_cast<size_t>(i) * h;
        double* gq = qn->grad.data() + static_cast<size_t>(i) * h;
        for (int t = 0; t < len; ++t) {
          const double* kr = kn->value.data() + (static_cast<size_t>(i) * l + t) * h;
          if (qn->requires_grad)
            for (int j = 0; j < h; ++j) gq[j] += gs[t] * kr[j];
          if (kn->requires_grad) {
            double* gk = kn->grad.data() + (static_cast<size_t>(i) * l + t) * h;
            for (int j = 0; j < h; ++j) gk[j] += gs[t] * qr[j];
          }
        }
      }
    };
    Tape::current()->record(n);
  }
  return Tensor(n);
}

}  // namespace nmtfuse::ag
