#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace kdfshot::diff {

// Probability floor applied inside log/KL computations so degenerate one-hot
// distributions never produce infinities.
inline constexpr double kProbFloor = 1e-8;

struct Node;

// Value-semantic handle to a node of the reverse-mode graph. All tensors are
// row-major matrices; scalars are 1x1. Double precision throughout.
class Tensor {
 public:
  Tensor() = default;

  static Tensor from(size_t rows, size_t cols, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor zeros(size_t rows, size_t cols, bool requires_grad = false);
  static Tensor scalar(double v);

  size_t rows() const;
  size_t cols() const;
  size_t size() const;

  std::vector<double>& value();
  const std::vector<double>& value() const;
  double item() const;  // scalar tensors only

  // Gradient of the last backward() target w.r.t. this tensor. Empty until
  // backward touches the node.
  const std::vector<double>& grad() const;

  bool requires_grad() const;
  void set_requires_grad(bool rg);
  void zero_grad();

  // New leaf sharing this tensor's current values; gradients stop here.
  Tensor detach() const;

  bool defined() const { return node_ != nullptr; }
  std::shared_ptr<Node> node() const { return node_; }

  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<Node> node_;
};

// --- primitives (each records an exact analytic backward) ---

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);        // same shape
Tensor add_bias(const Tensor& a, const Tensor& b);   // b is 1 x cols, broadcast over rows
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);        // elementwise
Tensor scale(const Tensor& a, double c);
Tensor affine(const Tensor& a, double mul, double add);  // mul*a + add elementwise
Tensor sigmoid(const Tensor& a);
Tensor gelu(const Tensor& a);                        // exact erf form
Tensor log_clamped(const Tensor& a, double floor = kProbFloor);
Tensor softmax_rows(const Tensor& a);
Tensor transpose(const Tensor& a);
Tensor mean_all(const Tensor& a);                    // 1x1
Tensor sum_all(const Tensor& a);                     // 1x1
Tensor mean_rows(const Tensor& a);                   // column means, 1 x cols
Tensor sum_cols(const Tensor& a);                    // row sums, rows x 1
Tensor slice_cols(const Tensor& a, size_t c0, size_t c1);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor pick_class(const Tensor& probs, const std::vector<int>& classes);  // 1 x rows
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
Tensor dropout(const Tensor& a);  // test-mode passthrough

// Mean cross-entropy -log p[y] over the batch; probs are epsilon-clamped
// inside the log.
Tensor cross_entropy(const Tensor& probs, const std::vector<int>& classes);

// Reverse-mode pass from a scalar loss. Zeroes reachable gradients first, so
// each call yields gradients of exactly this loss.
void backward(const Tensor& loss);

// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& x0, const std::vector<double>& analytic_grad,
                  double h = 1e-5);

}  // namespace kdfshot::diff
