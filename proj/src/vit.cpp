#include "kdfshot/vit.hpp"

#include <algorithm>
#include <cmath>

#include "kdfshot/errors.hpp"
#include "kdfshot/rng.hpp"

namespace kdfshot {

using diff::Tensor;

namespace {

Tensor normal_tensor(Rng& rng, size_t rows, size_t cols, double sigma) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = sigma * rng.normal();
  return Tensor::from(rows, cols, std::move(v), true);
}

Tensor const_tensor(size_t rows, size_t cols, double fill, bool rg) {
  return Tensor::from(rows, cols, std::vector<double>(rows * cols, fill), rg);
}

}  // namespace

std::vector<Tensor> VitParams::all_params() const {
  std::vector<Tensor> out = encoder_params();
  out.push_back(head_w);
  out.push_back(head_b);
  return out;
}

std::vector<Tensor> VitParams::encoder_params() const {
  std::vector<Tensor> out = {patch_w, patch_b, pos};
  for (const auto& l : layers) {
    for (const auto& t : {l.ln1_g, l.ln1_b, l.wq, l.bq, l.wk, l.bk, l.wv, l.bv, l.wo, l.bo,
                          l.ln2_g, l.ln2_b, l.ff_w1, l.ff_b1, l.ff_w2, l.ff_b2})
      out.push_back(t);
  }
  return out;
}

std::vector<Tensor> VitParams::classifier_params() const { return {head_w, head_b}; }

VitParams vit_init(const VitConfig& cfg, int n_channels, int n_samples, int n_classes,
                   uint64_t seed) {
  if (cfg.patch_len < 1 || n_samples % cfg.patch_len != 0)
    throw ConfigError("window length must be divisible by patch_len");
  if (cfg.d_model % cfg.n_heads != 0) throw ConfigError("d_model must be divisible by n_heads");
  if (cfg.n_layers < 1 || n_classes < 2 || n_channels < 1) throw ConfigError("bad vit config");
  VitParams p;
  p.cfg = cfg;
  p.n_channels = n_channels;
  p.n_samples = n_samples;
  p.n_classes = n_classes;
  Rng rng(derive_seed(seed, "vit-init"));
  int pdim = n_channels * cfg.patch_len;
  int d = cfg.d_model;
  p.patch_w = normal_tensor(rng, pdim, d, 1.0 / std::sqrt(static_cast<double>(pdim)));
  p.patch_b = const_tensor(1, d, 0.0, true);
  p.pos = normal_tensor(rng, static_cast<size_t>(p.n_tokens()), d, 0.02);
  double sd = 1.0 / std::sqrt(static_cast<double>(d));
  for (int l = 0; l < cfg.n_layers; ++l) {
    VitEncoderLayer layer;
    layer.ln1_g = const_tensor(1, d, 1.0, true);
    layer.ln1_b = const_tensor(1, d, 0.0, true);
    layer.wq = normal_tensor(rng, d, d, sd);
    layer.wk = normal_tensor(rng, d, d, sd);
    layer.wv = normal_tensor(rng, d, d, sd);
    layer.wo = normal_tensor(rng, d, d, sd);
    layer.bq = const_tensor(1, d, 0.0, true);
    layer.bk = const_tensor(1, d, 0.0, true);
    layer.bv = const_tensor(1, d, 0.0, true);
    layer.bo = const_tensor(1, d, 0.0, true);
    layer.ln2_g = const_tensor(1, d, 1.0, true);
    layer.ln2_b = const_tensor(1, d, 0.0, true);
    layer.ff_w1 = normal_tensor(rng, d, cfg.d_ff, sd);
    layer.ff_b1 = const_tensor(1, cfg.d_ff, 0.0, true);
    layer.ff_w2 = normal_tensor(rng, cfg.d_ff, d, 1.0 / std::sqrt(static_cast<double>(cfg.d_ff)));
    layer.ff_b2 = const_tensor(1, d, 0.0, true);
    p.layers.push_back(std::move(layer));
  }
  // Zero head: the initial output is uniform, mirroring the SDT's zero leaves.
  p.head_w = const_tensor(d, n_classes, 0.0, true);
  p.head_b = const_tensor(1, n_classes, 0.0, true);
  return p;
}

Tensor patchify(const EegWindow& w, uint32_t C, uint32_t N, int patch_len) {
  if (patch_len < 1 || N % static_cast<uint32_t>(patch_len) != 0)
    throw ConfigError("window length must be divisible by patch_len");
  if (w.samples.size() != static_cast<size_t>(C) * N)
    throw ConfigError("window sample count does not match C*N");
  size_t T = N / static_cast<uint32_t>(patch_len);
  size_t P = static_cast<size_t>(C) * patch_len;
  std::vector<double> vals(T * P);
  for (size_t j = 0; j < T; ++j)
    for (uint32_t c = 0; c < C; ++c)
      for (int t = 0; t < patch_len; ++t)
        vals[j * P + static_cast<size_t>(c) * patch_len + t] =
            w.samples[static_cast<size_t>(c) * N + j * patch_len + t];
  return Tensor::from(T, P, std::move(vals));
}

namespace {

// One pre-norm encoder block on a T x d token matrix; optionally captures the
// per-head attention matrices.
Tensor encoder_block(const VitEncoderLayer& l, const Tensor& X, int n_heads,
                     std::vector<Tensor>* attn_out) {
  int d = static_cast<int>(X.cols());
  int dh = d / n_heads;
  Tensor h = diff::layer_norm(X, l.ln1_g, l.ln1_b);
  Tensor Q = diff::add_bias(diff::matmul(h, l.wq), l.bq);
  Tensor K = diff::add_bias(diff::matmul(h, l.wk), l.bk);
  Tensor V = diff::add_bias(diff::matmul(h, l.wv), l.bv);
  std::vector<Tensor> heads;
  double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int hh = 0; hh < n_heads; ++hh) {
    size_t c0 = static_cast<size_t>(hh) * dh, c1 = c0 + dh;
    Tensor Qh = diff::slice_cols(Q, c0, c1);
    Tensor Kh = diff::slice_cols(K, c0, c1);
    Tensor Vh = diff::slice_cols(V, c0, c1);
    Tensor A = diff::softmax_rows(diff::scale(diff::matmul(Qh, diff::transpose(Kh)), inv_scale));
    if (attn_out) attn_out->push_back(A);
    heads.push_back(diff::matmul(A, Vh));
  }
  Tensor O = diff::add_bias(diff::matmul(diff::concat_cols(heads), l.wo), l.bo);
  Tensor X1 = diff::add(X, O);
  Tensor h2 = diff::layer_norm(X1, l.ln2_g, l.ln2_b);
  Tensor F = diff::add_bias(
      diff::matmul(diff::gelu(diff::add_bias(diff::matmul(h2, l.ff_w1), l.ff_b1)), l.ff_w2),
      l.ff_b2);
  return diff::add(X1, F);
}

Tensor encode_window(const VitParams& p, const Dataset& ds, size_t idx,
                     std::vector<std::vector<Tensor>>* attn) {
  Tensor patches = patchify(ds.windows[idx], ds.C, ds.N, p.cfg.patch_len);
  Tensor X = diff::add(diff::add_bias(diff::matmul(patches, p.patch_w), p.patch_b), p.pos);
  for (const auto& l : p.layers) {
    std::vector<Tensor> layer_attn;
    X = encoder_block(l, X, p.cfg.n_heads, attn ? &layer_attn : nullptr);
    if (attn) attn->push_back(std::move(layer_attn));
  }
  return diff::mean_rows(X);  // 1 x d_model token average
}

}  // namespace

VitForward vit_forward(const VitParams& p, const Dataset& ds,
                       const std::vector<size_t>& batch_indices) {
  if (batch_indices.empty()) throw ConfigError("empty batch");
  if (ds.C != static_cast<uint32_t>(p.n_channels) || ds.N != static_cast<uint32_t>(p.n_samples))
    throw ConfigError("dataset geometry does not match the model");
  std::vector<Tensor> pooled_rows;
  pooled_rows.reserve(batch_indices.size());
  for (size_t idx : batch_indices) pooled_rows.push_back(encode_window(p, ds, idx, nullptr));
  VitForward f;
  f.pooled = diff::concat_rows(pooled_rows);
  f.probs = diff::softmax_rows(diff::add_bias(diff::matmul(f.pooled, p.head_w), p.head_b));
  return f;
}

std::vector<std::vector<Tensor>> vit_attention(const VitParams& p, const Dataset& ds,
                                               size_t window_index) {
  std::vector<std::vector<Tensor>> attn;
  encode_window(p, ds, window_index, &attn);
  return attn;
}

Tensor vit_loss(const VitParams& p, const Dataset& ds, const std::vector<size_t>& batch_indices,
                const std::vector<int>& y) {
  VitForward f = vit_forward(p, ds, batch_indices);
  return diff::cross_entropy(f.probs, y);
}

std::vector<int> vit_predict(const VitParams& p, const Dataset& ds,
                             const std::vector<size_t>& batch_indices) {
  VitForward f = vit_forward(p, ds, batch_indices);
  const auto& v = f.probs.value();
  std::vector<int> out(batch_indices.size());
  for (size_t i = 0; i < out.size(); ++i) {
    const double* row = v.data() + i * p.n_classes;
    out[i] = static_cast<int>(std::max_element(row, row + p.n_classes) - row);
  }
  return out;
}

}  // namespace kdfshot
