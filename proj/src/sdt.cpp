#include "kdfshot/sdt.hpp"

#include <algorithm>
#include <cmath>

#include "kdfshot/errors.hpp"
#include "kdfshot/rng.hpp"

namespace kdfshot {

using diff::Tensor;

std::vector<Tensor> SdtParams::all_params() const { return {inner_w, inner_b, leaf_logits}; }
std::vector<Tensor> SdtParams::encoder_params() const { return {inner_w, inner_b}; }
std::vector<Tensor> SdtParams::classifier_params() const { return {leaf_logits}; }

SdtParams sdt_init(int depth, int in_dim, int n_classes, double beta, uint64_t seed) {
  if (depth < 1 || depth > 10) throw ConfigError("sdt depth must be in 1..10");
  if (in_dim < 1 || n_classes < 2) throw ConfigError("bad sdt dimensions");
  SdtParams p;
  p.depth = depth;
  p.in_dim = in_dim;
  p.n_classes = n_classes;
  p.beta = beta;
  Rng rng(derive_seed(seed, "sdt-init"));
  double sigma = 1.0 / std::sqrt(static_cast<double>(in_dim));
  std::vector<double> w(static_cast<size_t>(in_dim) * p.n_inner());
  for (double& v : w) v = sigma * rng.normal();
  p.inner_w = Tensor::from(in_dim, p.n_inner(), std::move(w), true);
  p.inner_b = Tensor::zeros(1, p.n_inner(), true);
  p.leaf_logits = Tensor::zeros(p.n_leaves(), n_classes, true);
  return p;
}

SdtForward sdt_forward(const SdtParams& p, const Tensor& X) {
  if (X.cols() != static_cast<size_t>(p.in_dim))
    throw ConfigError("sdt input width does not match in_dim");
  SdtForward f;
  f.gates = diff::sigmoid(
      diff::affine(diff::add_bias(diff::matmul(X, p.inner_w), p.inner_b), p.beta, 0.0));
  // Heap-order sweep: the gate is the probability of the right branch.
  size_t B = X.rows();
  std::vector<Tensor> node_prob(static_cast<size_t>(p.n_inner()) + p.n_leaves());
  node_prob[0] = Tensor::from(B, 1, std::vector<double>(B, 1.0));
  // Root's path probability feeds two subtrees per inner node.
  for (int i = 0; i < p.n_inner(); ++i) {
    Tensor g = diff::slice_cols(f.gates, static_cast<size_t>(i), static_cast<size_t>(i) + 1);
    node_prob[2 * i + 1] = diff::mul(node_prob[i], diff::affine(g, -1.0, 1.0));
    node_prob[2 * i + 2] = diff::mul(node_prob[i], g);
  }
  std::vector<Tensor> leaves(node_prob.begin() + p.n_inner(), node_prob.end());
  f.leaf_paths = diff::concat_cols(leaves);
  f.probs = diff::matmul(f.leaf_paths, diff::softmax_rows(p.leaf_logits));
  return f;
}

diff::Tensor sdt_loss(const SdtParams& p, const Tensor& X, const std::vector<int>& y,
                      double balance_penalty) {
  SdtForward f = sdt_forward(p, X);
  Tensor loss = diff::cross_entropy(f.probs, y);
  if (balance_penalty != 0.0) {
    // Pushes batch-mean gate activations toward 0.5 at every inner node.
    Tensor m = diff::mean_rows(f.gates);
    Tensor pen = diff::scale(
        diff::sum_all(diff::add(diff::log_clamped(m), diff::log_clamped(diff::affine(m, -1.0, 1.0)))),
        -0.5);
    loss = diff::add(loss, diff::scale(pen, balance_penalty));
  }
  return loss;
}

std::vector<int> sdt_predict(const SdtParams& p, const Tensor& X, bool max_path) {
  size_t B = X.rows();
  std::vector<int> out(B);
  if (!max_path) {
    SdtForward f = sdt_forward(p, X);
    const auto& v = f.probs.value();
    for (size_t i = 0; i < B; ++i) {
      const double* row = v.data() + i * p.n_classes;
      out[i] = static_cast<int>(std::max_element(row, row + p.n_classes) - row);
    }
    return out;
  }
  // Harden every gate and read the single reached leaf.
  SdtForward f = sdt_forward(p, X);
  const auto& g = f.gates.value();
  const auto& logits = p.leaf_logits.value();
  for (size_t i = 0; i < B; ++i) {
    int node = 0;
    while (node < p.n_inner())
      node = 2 * node + (g[i * p.n_inner() + node] >= 0.5 ? 2 : 1);
    const double* row = logits.data() + static_cast<size_t>(node - p.n_inner()) * p.n_classes;
    out[i] = static_cast<int>(std::max_element(row, row + p.n_classes) - row);
  }
  return out;
}

}  // namespace kdfshot
