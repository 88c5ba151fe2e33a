#include "kdfshot/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "kdfshot/errors.hpp"

namespace kdfshot::diff {

struct Node {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> val;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // pushes this->grad into parents
  uint64_t id = 0;

  size_t size() const { return rows * cols; }
  void ensure_grad() {
    if (grad.size() != val.size()) grad.assign(val.size(), 0.0);
  }
};

namespace {

uint64_t next_node_id() {
  static uint64_t counter = 0;
  return ++counter;
}

std::shared_ptr<Node> make_node(size_t rows, size_t cols, std::vector<double> val) {
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->val = std::move(val);
  n->id = next_node_id();
  if (n->val.size() != rows * cols) throw ConfigError("tensor value size does not match shape");
  return n;
}

std::shared_ptr<Node> make_op(size_t rows, size_t cols, std::vector<double> val,
                              std::vector<std::shared_ptr<Node>> parents,
                              std::function<void(Node&)> backprop) {
  auto n = make_node(rows, cols, std::move(val));
  bool rg = false;
  for (const auto& p : parents) rg = rg || p->requires_grad;
  n->requires_grad = rg;
  if (rg) {
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return n;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ConfigError(std::string(op) + ": shape mismatch");
}

// c[m x n] += a[m x k] * b[k x n]
void matmul_acc(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (size_t p = 0; p < k; ++p) {
      double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// c[m x n] += a[m x k] * b[n x k]^T
void matmul_bt_acc(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s = 0.0;
      for (size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] += s;
    }
  }
}

// c[k x n] += a[m x k]^T * b[m x n]
void matmul_at_acc(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * n;
    for (size_t p = 0; p < k; ++p) {
      double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + p * n;
      for (size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

}  // namespace

// --- Tensor ---

Tensor Tensor::from(size_t rows, size_t cols, std::vector<double> values, bool requires_grad) {
  auto n = make_node(rows, cols, std::move(values));
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::zeros(size_t rows, size_t cols, bool requires_grad) {
  return from(rows, cols, std::vector<double>(rows * cols, 0.0), requires_grad);
}

Tensor Tensor::scalar(double v) { return from(1, 1, {v}); }

size_t Tensor::rows() const { return node_->rows; }
size_t Tensor::cols() const { return node_->cols; }
size_t Tensor::size() const { return node_->size(); }
std::vector<double>& Tensor::value() { return node_->val; }
const std::vector<double>& Tensor::value() const { return node_->val; }

double Tensor::item() const {
  if (node_->size() != 1) throw ConfigError("item() on non-scalar tensor");
  return node_->val[0];
}

const std::vector<double>& Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

bool Tensor::requires_grad() const { return node_->requires_grad; }
void Tensor::set_requires_grad(bool rg) { node_->requires_grad = rg; }

void Tensor::zero_grad() { node_->grad.assign(node_->val.size(), 0.0); }

Tensor Tensor::detach() const {
  auto n = make_node(node_->rows, node_->cols, node_->val);
  n->requires_grad = false;
  return Tensor(std::move(n));
}

// --- primitives ---

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw ConfigError("matmul: inner dimensions differ");
  size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  matmul_acc(a.value().data(), b.value().data(), out.data(), m, k, n);
  auto pa = a.node(), pb = b.node();
  return Tensor(make_op(m, n, std::move(out), {pa, pb}, [m, k, n](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad) {
      pa->ensure_grad();
      matmul_bt_acc(self.grad.data(), pb->val.data(), pa->grad.data(), m, n, k);
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      matmul_at_acc(pa->val.data(), self.grad.data(), pb->grad.data(), m, k, n);
    }
  }));
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return Tensor(make_op(a.rows(), a.cols(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      p->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
  }));
}

Tensor add_bias(const Tensor& a, const Tensor& b) {
  if (b.rows() != 1 || b.cols() != a.cols()) throw ConfigError("add_bias: bias must be 1 x cols");
  size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) out[i * n + j] = a.value()[i * n + j] + b.value()[j];
  return Tensor(make_op(m, n, std::move(out), {a.node(), b.node()}, [m, n](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (size_t i = 0; i < m * n; ++i) pa->grad[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) pb->grad[j] += self.grad[i * n + j];
    }
  }));
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return Tensor(make_op(a.rows(), a.cols(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] -= self.grad[i];
    }
  }));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return Tensor(make_op(a.rows(), a.cols(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * pb->val[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i] * pa->val[i];
    }
  }));
}

Tensor scale(const Tensor& a, double c) { return affine(a, c, 0.0); }

Tensor affine(const Tensor& a, double m, double b) {
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = m * a.value()[i] + b;
  return Tensor(make_op(a.rows(), a.cols(), std::move(out), {a.node()}, [m](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += m * self.grad[i];
  }));
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-a.value()[i]));
  return Tensor(make_op(a.rows(), a.cols(), std::move(out), {a.node()}, [](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      double y = self.val[i];
      p->grad[i] += self.grad[i] * y * (1.0 - y);
    }
  }));
}

Tensor gelu(const Tensor& a) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) {
    double x = a.value()[i];
    out[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  }
  return Tensor(make_op(a.rows(), a.cols(), std::move(out), {a.node()}, [=](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      double x = p->val[i];
      double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
      double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      p->grad[i] += self.grad[i] * (cdf + x * pdf);
    }
  }));
}

Tensor log_clamped(const Tensor& a, double floor) {
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::log(std::max(a.value()[i], floor));
  return Tensor(make_op(a.rows(), a.cols(), std::move(out), {a.node()}, [floor](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      double x = p->val[i];
      if (x > floor) p->grad[i] += self.grad[i] / x;  // clamped region has zero slope
    }
  }));
}

Tensor softmax_rows(const Tensor& a) {
  size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  for (size_t i = 0; i < m; ++i) {
    const double* xi = a.value().data() + i * n;
    double hi = *std::max_element(xi, xi + n);
    double z = 0.0;
    for (size_t j = 0; j < n; ++j) {
      out[i * n + j] = std::exp(xi[j] - hi);
      z += out[i * n + j];
    }
    for (size_t j = 0; j < n; ++j) out[i * n + j] /= z;
  }
  return Tensor(make_op(m, n, std::move(out), {a.node()}, [m, n](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (size_t i = 0; i < m; ++i) {
      const double* y = self.val.data() + i * n;
      const double* dy = self.grad.data() + i * n;
      double dot = 0.0;
      for (size_t j = 0; j < n; ++j) dot += dy[j] * y[j];
      for (size_t j = 0; j < n; ++j) p->grad[i * n + j] += y[j] * (dy[j] - dot);
    }
  }));
}

Tensor transpose(const Tensor& a) {
  size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) out[j * m + i] = a.value()[i * n + j];
  return Tensor(make_op(n, m, std::move(out), {a.node()}, [m, n](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (size_t i = 0; i < m; ++i)
      for (size_t j = 0; j < n; ++j) p->grad[i * n + j] += self.grad[j * m + i];
  }));
}

Tensor mean_all(const Tensor& a) {
  double s = 0.0;
  for (double v : a.value()) s += v;
  size_t count = a.size();
  return Tensor(make_op(1, 1, {s / static_cast<double>(count)}, {a.node()}, [count](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    double g = self.grad[0] / static_cast<double>(count);
    for (size_t i = 0; i < p->grad.size(); ++i) p->grad[i] += g;
  }));
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double v : a.value()) s += v;
  return Tensor(make_op(1, 1, {s}, {a.node()}, [](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (size_t i = 0; i < p->grad.size(); ++i) p->grad[i] += self.grad[0];
  }));
}

Tensor mean_rows(const Tensor& a) {
  size_t m = a.rows(), n = a.cols();
  std::vector<double> out(n, 0.0);
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) out[j] += a.value()[i * n + j];
  for (size_t j = 0; j < n; ++j) out[j] /= static_cast<double>(m);
  return Tensor(make_op(1, n, std::move(out), {a.node()}, [m, n](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (size_t i = 0; i < m; ++i)
      for (size_t j = 0; j < n; ++j) p->grad[i * n + j] += self.grad[j] / static_cast<double>(m);
  }));
}

Tensor sum_cols(const Tensor& a) {
  size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m, 0.0);
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) out[i] += a.value()[i * n + j];
  return Tensor(make_op(m, 1, std::move(out), {a.node()}, [m, n](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (size_t i = 0; i < m; ++i)
      for (size_t j = 0; j < n; ++j) p->grad[i * n + j] += self.grad[i];
  }));
}

Tensor slice_cols(const Tensor& a, size_t c0, size_t c1) {
  if (c0 >= c1 || c1 > a.cols()) throw ConfigError("slice_cols: bad range");
  size_t m = a.rows(), n = a.cols(), w = c1 - c0;
  std::vector<double> out(m * w);
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < w; ++j) out[i * w + j] = a.value()[i * n + c0 + j];
  return Tensor(make_op(m, w, std::move(out), {a.node()}, [m, n, w, c0](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (size_t i = 0; i < m; ++i)
      for (size_t j = 0; j < w; ++j) p->grad[i * n + c0 + j] += self.grad[i * w + j];
  }));
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ConfigError("concat_cols: empty");
  size_t m = parts[0].rows(), n = 0;
  for (const auto& t : parts) {
    if (t.rows() != m) throw ConfigError("concat_cols: row mismatch");
    n += t.cols();
  }
  std::vector<double> out(m * n);
  std::vector<std::shared_ptr<Node>> ps;
  std::vector<size_t> offs;
  size_t off = 0;
  for (const auto& t : parts) {
    size_t w = t.cols();
    for (size_t i = 0; i < m; ++i)
      for (size_t j = 0; j < w; ++j) out[i * n + off + j] = t.value()[i * w + j];
    ps.push_back(t.node());
    offs.push_back(off);
    off += w;
  }
  return Tensor(make_op(m, n, std::move(out), std::move(ps), [m, n, offs](Node& self) {
    for (size_t k = 0; k < self.parents.size(); ++k) {
      auto& p = self.parents[k];
      if (!p->requires_grad) continue;
      p->ensure_grad();
      size_t w = p->cols;
      for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < w; ++j) p->grad[i * w + j] += self.grad[i * n + offs[k] + j];
    }
  }));
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ConfigError("concat_rows: empty");
  size_t n = parts[0].cols(), m = 0;
  for (const auto& t : parts) {
    if (t.cols() != n) throw ConfigError("concat_rows: col mismatch");
    m += t.rows();
  }
  std::vector<double> out;
  out.reserve(m * n);
  std::vector<std::shared_ptr<Node>> ps;
  std::vector<size_t> row0;
  size_t at = 0;
  for (const auto& t : parts) {
    out.insert(out.end(), t.value().begin(), t.value().end());
    ps.push_back(t.node());
    row0.push_back(at);
    at += t.rows();
  }
  return Tensor(make_op(m, n, std::move(out), std::move(ps), [n, row0](Node& self) {
    for (size_t k = 0; k < self.parents.size(); ++k) {
      auto& p = self.parents[k];
      if (!p->requires_grad) continue;
      p->ensure_grad();
      size_t cells = p->rows * n;
      const double* src = self.grad.data() + row0[k] * n;
      for (size_t i = 0; i < cells; ++i) p->grad[i] += src[i];
    }
  }));
}

Tensor pick_class(const Tensor& probs, const std::vector<int>& classes) {
  size_t m = probs.rows(), n = probs.cols();
  if (classes.size() != m) throw ConfigError("pick_class: one class index per row required");
  std::vector<double> out(m);
  for (size_t i = 0; i < m; ++i) {
    int y = classes[i];
    if (y < 0 || static_cast<size_t>(y) >= n) throw ConfigError("pick_class: class out of range");
    out[i] = probs.value()[i * n + y];
  }
  return Tensor(make_op(1, m, std::move(out), {probs.node()}, [m, n, classes](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (size_t i = 0; i < m; ++i) p->grad[i * n + classes[i]] += self.grad[i];
  }));
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  size_t m = x.rows(), n = x.cols();
  if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 || bias.cols() != n)
    throw ConfigError("layer_norm: gain/bias must be 1 x cols");
  std::vector<double> out(m * n), mu(m), inv_sd(m);
  for (size_t i = 0; i < m; ++i) {
    const double* xi = x.value().data() + i * n;
    double s = 0.0;
    for (size_t j = 0; j < n; ++j) s += xi[j];
    mu[i] = s / static_cast<double>(n);
    double v = 0.0;
    for (size_t j = 0; j < n; ++j) v += (xi[j] - mu[i]) * (xi[j] - mu[i]);
    v /= static_cast<double>(n);
    inv_sd[i] = 1.0 / std::sqrt(v + eps);
    for (size_t j = 0; j < n; ++j)
      out[i * n + j] = (xi[j] - mu[i]) * inv_sd[i] * gain.value()[j] + bias.value()[j];
  }
  return Tensor(make_op(m, n, std::move(out), {x.node(), gain.node(), bias.node()},
                        [m, n, mu, inv_sd](Node& self) {
    auto& px = self.parents[0];
    auto& pg = self.parents[1];
    auto& pb = self.parents[2];
    for (size_t i = 0; i < m; ++i) {
      const double* xi = px->val.data() + i * n;
      const double* dy = self.grad.data() + i * n;
      if (pg->requires_grad) {
        pg->ensure_grad();
        for (size_t j = 0; j < n; ++j)
          pg->grad[j] += dy[j] * (xi[j] - mu[i]) * inv_sd[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (size_t j = 0; j < n; ++j) pb->grad[j] += dy[j];
      }
      if (px->requires_grad) {
        px->ensure_grad();
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (size_t j = 0; j < n; ++j) {
          double xhat = (xi[j] - mu[i]) * inv_sd[i];
          double dxhat = dy[j] * pg->val[j];
          sum_dxhat += dxhat;
          sum_dxhat_xhat += dxhat * xhat;
        }
        double inv_n = 1.0 / static_cast<double>(n);
        for (size_t j = 0; j < n; ++j) {
          double xhat = (xi[j] - mu[i]) * inv_sd[i];
          double dxhat = dy[j] * pg->val[j];
          px->grad[i * n + j] +=
              inv_sd[i] * (dxhat - inv_n * sum_dxhat - xhat * inv_n * sum_dxhat_xhat);
        }
      }
    }
  }));
}

Tensor dropout(const Tensor& a) {
  std::vector<double> out = a.value();
  return Tensor(make_op(a.rows(), a.cols(), std::move(out), {a.node()}, [](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
  }));
}

Tensor cross_entropy(const Tensor& probs, const std::vector<int>& classes) {
  return scale(mean_all(log_clamped(pick_class(probs, classes))), -1.0);
}

void backward(const Tensor& loss) {
  if (loss.size() != 1) throw ConfigError("backward: loss must be scalar");
  auto root = loss.node();
  // Collect the reachable subgraph; creation ids give a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.get()};
  seen.insert(root.get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (auto& p : n->parents)
      if (seen.insert(p.get()).second) stack.push_back(p.get());
  }
  std::sort(order.begin(), order.end(), [](Node* a, Node* b) { return a->id > b->id; });
  for (Node* n : order) n->grad.assign(n->val.size(), 0.0);
  root->grad[0] = 1.0;
  for (Node* n : order)
    if (n->backprop && n->requires_grad) n->backprop(*n);
}

double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& x0, const std::vector<double>& analytic_grad,
                  double h) {
  if (h <= 0.0) throw ConfigError("grad_check: h must be positive");
  if (x0.size() != analytic_grad.size()) throw ConfigError("grad_check: size mismatch");
  if (!std::isfinite(f(x0))) throw NumericError("grad_check: f(x0) not finite");
  std::vector<double> x = x0;
  double worst = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    double xi = x[i];
    x[i] = xi + h;
    double fp = f(x);
    x[i] = xi - h;
    double fm = f(x);
    x[i] = xi;
    double fd = (fp - fm) / (2.0 * h);
    double err = std::abs(analytic_grad[i] - fd) / std::max(1.0, std::abs(analytic_grad[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace kdfshot::diff
