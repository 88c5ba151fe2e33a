#pragma once

#include <cstdint>
#include <vector>

#include "kdfshot/dataset.hpp"
#include "kdfshot/tensor.hpp"

namespace kdfshot {

struct VitConfig {
  int patch_len = 32;
  int d_model = 64;
  int n_layers = 4;
  int n_heads = 4;
  int d_ff = 128;
};

struct VitEncoderLayer {
  diff::Tensor ln1_g, ln1_b;          // 1 x d_model
  diff::Tensor wq, wk, wv, wo;        // d_model x d_model
  diff::Tensor bq, bk, bv, bo;        // 1 x d_model
  diff::Tensor ln2_g, ln2_b;          // 1 x d_model
  diff::Tensor ff_w1, ff_b1;          // d_model x d_ff, 1 x d_ff
  diff::Tensor ff_w2, ff_b2;          // d_ff x d_model, 1 x d_model
};

// Patch-sequence transformer over raw windows: time-axis patches spanning all
// channels, learned positional embeddings, pre-norm encoder blocks, mean
// pooling over tokens, then a linear head with softmax. No class token.
struct VitParams {
  VitConfig cfg;
  int n_channels = 0;
  int n_samples = 0;   // window length N
  int n_classes = 0;
  int n_tokens() const { return n_samples / cfg.patch_len; }

  diff::Tensor patch_w;   // (C*patch_len) x d_model
  diff::Tensor patch_b;   // 1 x d_model
  diff::Tensor pos;       // n_tokens x d_model
  std::vector<VitEncoderLayer> layers;
  diff::Tensor head_w;    // d_model x K
  diff::Tensor head_b;    // 1 x K

  std::vector<diff::Tensor> all_params() const;
  std::vector<diff::Tensor> encoder_params() const;     // everything but the head
  std::vector<diff::Tensor> classifier_params() const;  // head_w, head_b
};

VitParams vit_init(const VitConfig& cfg, int n_channels, int n_samples, int n_classes,
                   uint64_t seed);

// Splits the window into N/patch_len time patches; patch j holds columns
// [j*patch_len, (j+1)*patch_len) of every channel, flattened channel-major.
// Returns a n_tokens x (C*patch_len) matrix.
diff::Tensor patchify(const EegWindow& w, uint32_t C, uint32_t N, int patch_len);

struct VitForward {
  diff::Tensor probs;   // B x K
  diff::Tensor pooled;  // B x d_model mean-pooled pre-head representation
};

// Runs every window of `batch_indices` through the encoder stack.
VitForward vit_forward(const VitParams& p, const Dataset& ds,
                       const std::vector<size_t>& batch_indices);

// Per-layer, per-head attention matrices for one window (rows sum to 1).
std::vector<std::vector<diff::Tensor>> vit_attention(const VitParams& p, const Dataset& ds,
                                                     size_t window_index);

diff::Tensor vit_loss(const VitParams& p, const Dataset& ds,
                      const std::vector<size_t>& batch_indices, const std::vector<int>& y);

std::vector<int> vit_predict(const VitParams& p, const Dataset& ds,
                             const std::vector<size_t>& batch_indices);

}  // namespace kdfshot
