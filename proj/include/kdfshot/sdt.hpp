#pragma once

#include <cstdint>
#include <vector>

#include "kdfshot/tensor.hpp"

namespace kdfshot {

// Soft decision tree: a perfect binary tree of sigmoid gates over the input
// features with a learned class distribution at every leaf. Inner nodes are
// heap-ordered (root 0, children of i at 2i+1, 2i+2); the gate value is the
// probability of taking the right branch.
struct SdtParams {
  int depth = 4;     // inner-node levels; 2^depth leaves
  int in_dim = 0;
  int n_classes = 0;
  double beta = 1.0;  // gating inverse temperature

  diff::Tensor inner_w;     // in_dim x n_inner
  diff::Tensor inner_b;     // 1 x n_inner
  diff::Tensor leaf_logits; // n_leaves x n_classes

  int n_inner() const { return (1 << depth) - 1; }
  int n_leaves() const { return 1 << depth; }

  std::vector<diff::Tensor> all_params() const;
  std::vector<diff::Tensor> encoder_params() const;     // gating parameters
  std::vector<diff::Tensor> classifier_params() const;  // leaf logits
};

// Zero-mean normal gate weights with sigma = 1/sqrt(in_dim); zero biases and
// leaf logits, so the initial mixture is uniform for every input.
SdtParams sdt_init(int depth, int in_dim, int n_classes, double beta, uint64_t seed);

struct SdtForward {
  diff::Tensor probs;       // B x K mixture output
  diff::Tensor gates;       // B x n_inner, the tree's internal representation
  diff::Tensor leaf_paths;  // B x n_leaves root-to-leaf path probabilities
};

// X is B x in_dim. Output rows are valid probability distributions and the
// leaf path probabilities sum to 1 per row.
SdtForward sdt_forward(const SdtParams& p, const diff::Tensor& X);

// Mean cross-entropy of the mixture output, plus an optional gate balance
// penalty -0.5*sum_i(log m_i + log(1-m_i)) over batch-mean gate activations
// (off by default).
diff::Tensor sdt_loss(const SdtParams& p, const diff::Tensor& X, const std::vector<int>& y,
                      double balance_penalty = 0.0);

// Argmax of the mixture (ties to the smallest class). max_path instead walks
// the hardened tree and reads the single reached leaf.
std::vector<int> sdt_predict(const SdtParams& p, const diff::Tensor& X, bool max_path = false);

}  // namespace kdfshot
