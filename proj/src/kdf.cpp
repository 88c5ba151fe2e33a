#include "kdfshot/kdf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "kdfshot/errors.hpp"
#include "kdfshot/metrics.hpp"
#include "kdfshot/optim.hpp"
#include "kdfshot/rng.hpp"

namespace kdfshot {

using diff::Tensor;

ModelBundle init_bundle(const Dataset& train, const KdfModelConfig& cfg) {
  if (train.size() == 0) throw ConfigError("empty training dataset");
  std::vector<long> support(train.K, 0);
  for (const auto& w : train.windows) {
    if (w.label < 0 || w.label >= static_cast<int>(train.K))
      throw ConfigError("pre-training requires labels in 0..K-1");
    ++support[w.label];
  }
  for (uint32_t k = 0; k < train.K; ++k)
    if (support[k] == 0)
      throw ConfigError("class " + std::to_string(k) + " has no training samples");

  ModelBundle b;
  b.K = train.K;
  b.C = train.C;
  b.N = train.N;
  b.fs = train.fs;
  b.alpha = cfg.alpha;
  b.class_names = train.class_names;
  FeatureMatrix fm = extract_features_all(train);
  b.norm = fit_feature_norm(fm);
  int in_dim = static_cast<int>(fm.n_cols);
  b.sdt = sdt_init(cfg.sdt_depth, in_dim, static_cast<int>(train.K), cfg.sdt_beta,
                   derive_seed(cfg.seed, "sdt"));
  b.vit = vit_init(cfg.vit, static_cast<int>(train.C), static_cast<int>(train.N),
                   static_cast<int>(train.K), derive_seed(cfg.seed, "vit"));
  return b;
}

Tensor jsd(const Tensor& p, const Tensor& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) throw ConfigError("jsd shape mismatch");
  Tensor log_p = diff::log_clamped(p);
  Tensor log_q = diff::log_clamped(q);
  Tensor kl_pq = diff::sum_all(diff::mul(p, diff::sub(log_p, log_q)));
  Tensor kl_qp = diff::sum_all(diff::mul(q, diff::sub(log_q, log_p)));
  return diff::scale(diff::add(kl_pq, kl_qp), 0.5 / static_cast<double>(p.rows()));
}

KdfLosses kdf_losses(const SdtParams& sdt, const VitParams& vit, const Tensor& Xf,
                     const Dataset& ds, const std::vector<size_t>& idx, const std::vector<int>& y,
                     double alpha, bool joint_grad, double balance_penalty) {
  if (idx.empty() || idx.size() != y.size()) throw ConfigError("bad batch");
  for (int label : y)
    if (label < 0) throw ConfigError("mutual-learning losses need labeled samples");
  SdtForward fs = sdt_forward(sdt, Xf);
  VitForward fv = vit_forward(vit, ds, idx);
  KdfLosses out;
  Tensor ce_s = diff::cross_entropy(fs.probs, y);
  Tensor ce_v = diff::cross_entropy(fv.probs, y);
  if (balance_penalty != 0.0) {
    Tensor m = diff::mean_rows(fs.gates);
    Tensor pen = diff::scale(
        diff::sum_all(
            diff::add(diff::log_clamped(m), diff::log_clamped(diff::affine(m, -1.0, 1.0)))),
        -0.5);
    ce_s = diff::add(ce_s, diff::scale(pen, balance_penalty));
  }
  out.ce_sdt = ce_s.item();
  out.ce_vit = ce_v.item();
  if (alpha == 0.0) {
    out.loss_sdt = ce_s;
    out.loss_vit = ce_v;
    return out;
  }
  if (joint_grad) {
    Tensor j = jsd(fs.probs, fv.probs);
    out.jsd_value = j.item();
    out.loss_sdt = diff::add(ce_s, diff::scale(j, alpha));
    out.loss_vit = diff::add(ce_v, diff::scale(j, alpha));
  } else {
    // Mutual-learning convention: each model sees the peer as a constant.
    Tensor j_s = jsd(fs.probs, fv.probs.detach());
    Tensor j_v = jsd(fs.probs.detach(), fv.probs);
    out.jsd_value = j_s.item();
    out.loss_sdt = diff::add(ce_s, diff::scale(j_s, alpha));
    out.loss_vit = diff::add(ce_v, diff::scale(j_v, alpha));
  }
  return out;
}

std::vector<std::vector<size_t>> epoch_batches(size_t n, size_t batch_size, uint64_t seed,
                                               int epoch) {
  if (n == 0 || batch_size == 0) throw ConfigError("bad batch schedule request");
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, "epoch", static_cast<uint64_t>(epoch)));
  rng.shuffle(order);
  std::vector<std::vector<size_t>> batches;
  for (size_t at = 0; at < n; at += batch_size) {
    size_t hi = std::min(n, at + batch_size);
    batches.emplace_back(order.begin() + at, order.begin() + hi);
  }
  return batches;
}

Tensor features_tensor(const FeatureMatrix& fm, const std::vector<size_t>& idx) {
  std::vector<double> vals(idx.size() * fm.n_cols);
  for (size_t i = 0; i < idx.size(); ++i)
    std::copy(fm.row(idx[i]), fm.row(idx[i]) + fm.n_cols, vals.begin() + i * fm.n_cols);
  return Tensor::from(idx.size(), fm.n_cols, std::move(vals));
}

namespace {

std::vector<double> snapshot(const std::vector<Tensor>& params) {
  std::vector<double> out;
  for (const auto& p : params) out.insert(out.end(), p.value().begin(), p.value().end());
  return out;
}

void restore(std::vector<Tensor>& params, const std::vector<double>& snap) {
  size_t at = 0;
  for (auto& p : params) {
    std::copy(snap.begin() + at, snap.begin() + at + p.size(), p.value().begin());
    at += p.size();
  }
}

}  // namespace

std::vector<KdfEpochRow> kdf_train(ModelBundle& bundle, const Dataset& train, const Dataset& val,
                                   const KdfTrainConfig& cfg) {
  if (cfg.epochs < 1 || cfg.batch_size < 1) throw ConfigError("bad training configuration");
  FeatureMatrix fm_train = extract_features_all(train);
  apply_feature_norm(bundle.norm, fm_train);
  FeatureMatrix fm_val = extract_features_all(val);
  apply_feature_norm(bundle.norm, fm_val);

  std::vector<int> labels(train.size());
  for (size_t i = 0; i < train.size(); ++i) labels[i] = train.windows[i].label;
  std::vector<int> val_labels(val.size());
  for (size_t i = 0; i < val.size(); ++i) val_labels[i] = val.windows[i].label;
  std::vector<size_t> val_idx(val.size());
  for (size_t i = 0; i < val.size(); ++i) val_idx[i] = i;

  AdamW opt_sdt(bundle.sdt.all_params(), cfg.lr_sdt, cfg.weight_decay);
  AdamW opt_vit(bundle.vit.all_params(), cfg.lr_vit, cfg.weight_decay);
  uint64_t batch_seed = derive_seed(cfg.seed, "pretrain-batches");

  std::vector<KdfEpochRow> log;
  double best_bca = -1.0;
  double best_ce = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<Tensor> sdt_all = bundle.sdt.all_params();
  std::vector<Tensor> vit_all = bundle.vit.all_params();
  std::vector<double> best_sdt = snapshot(sdt_all);
  std::vector<double> best_vit = snapshot(vit_all);

  for (int e = 0; e < cfg.epochs; ++e) {
    double sum_s = 0.0, sum_v = 0.0;
    size_t seen = 0;
    for (const auto& batch : epoch_batches(train.size(), cfg.batch_size, batch_seed, e)) {
      Tensor Xf = features_tensor(fm_train, batch);
      std::vector<int> y(batch.size());
      for (size_t i = 0; i < batch.size(); ++i) y[i] = labels[batch[i]];
      KdfLosses l = kdf_losses(bundle.sdt, bundle.vit, Xf, train, batch, y, cfg.alpha,
                               cfg.joint_grad, cfg.balance_penalty);
      double lv_s = l.loss_sdt.item(), lv_v = l.loss_vit.item();
      if (!std::isfinite(lv_s) || !std::isfinite(lv_v))
        throw NumericError("non-finite pre-training loss");
      diff::backward(l.loss_sdt);
      opt_sdt.step();
      diff::backward(l.loss_vit);
      opt_vit.step();
      sum_s += lv_s * static_cast<double>(batch.size());
      sum_v += lv_v * static_cast<double>(batch.size());
      seen += batch.size();
    }

    KdfEpochRow row;
    row.epoch = e;
    row.l_sdt = sum_s / static_cast<double>(seen);
    row.l_vit = sum_v / static_cast<double>(seen);
    Tensor Xval = features_tensor(fm_val, val_idx);
    MetricsReport ms = compute_metrics(val_labels, sdt_predict(bundle.sdt, Xval),
                                       static_cast<int>(bundle.K));
    MetricsReport mv =
        compute_metrics(val_labels, vit_predict(bundle.vit, val, val_idx),
                        static_cast<int>(bundle.K));
    row.val_acc_sdt = ms.acc;
    row.val_bca_sdt = ms.bca;
    row.val_f1_sdt = ms.f1_weighted;
    row.val_acc_vit = mv.acc;
    row.val_bca_vit = mv.bca;
    row.val_f1_vit = mv.f1_weighted;
    log.push_back(row);

    double mean_bca = 0.5 * (ms.bca + mv.bca);
    // Balanced accuracy saturates quickly on an in-domain validation set, so
    // ties go to the epoch with the lower mean validation cross-entropy.
    double mean_ce = 0.5 * (diff::cross_entropy(sdt_forward(bundle.sdt, Xval).probs,
                                                val_labels).item() +
                            diff::cross_entropy(vit_forward(bundle.vit, val, val_idx).probs,
                                                val_labels).item());
    if (mean_bca > best_bca || (mean_bca == best_bca && mean_ce < best_ce)) {
      best_bca = mean_bca;
      best_ce = mean_ce;
      since_best = 0;
      best_sdt = snapshot(sdt_all);
      best_vit = snapshot(vit_all);
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  restore(sdt_all, best_sdt);
  restore(vit_all, best_vit);
  return log;
}

void save_kdf_log(const std::string& path, const std::vector<KdfEpochRow>& rows,
                  const std::string& config_json) {
  std::ofstream out(path);
  if (!out) throw DataFormatError("cannot open for writing: " + path);
  if (!config_json.empty()) out << "# " << config_json << "\n";
  out << "epoch,L_vit,L_sdt,val_acc_sdt,val_bca_sdt,val_f1_sdt,"
         "val_acc_vit,val_bca_vit,val_f1_vit\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.epoch,
                  r.l_vit, r.l_sdt, r.val_acc_sdt, r.val_bca_sdt, r.val_f1_sdt, r.val_acc_vit,
                  r.val_bca_vit, r.val_f1_vit);
    out << buf;
  }
  if (!out) throw DataFormatError("write failed: " + path);
}

// --- bundle file ---
// "KDFB" u16 version=1, geometry, alpha, registry string, class names,
// normalization vectors, SDT block, ViT block; all doubles little-endian,
// then the same reversed CFG0 trailer as dataset files.

namespace {

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(const char*& p, const char* end) {
  if (p + sizeof(T) > end) throw DataFormatError("truncated bundle");
  T v;
  std::memcpy(&v, p, sizeof(T));
  p += sizeof(T);
  return v;
}

void put_string(std::ofstream& out, const std::string& s) {
  put<uint16_t>(out, static_cast<uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string take_string(const char*& p, const char* end) {
  uint16_t len = take<uint16_t>(p, end);
  if (p + len > end) throw DataFormatError("truncated bundle");
  std::string s(p, len);
  p += len;
  return s;
}

void put_tensor(std::ofstream& out, const Tensor& t) {
  put<uint32_t>(out, static_cast<uint32_t>(t.rows()));
  put<uint32_t>(out, static_cast<uint32_t>(t.cols()));
  for (double v : t.value()) put<double>(out, v);
}

Tensor take_tensor(const char*& p, const char* end) {
  uint32_t rows = take<uint32_t>(p, end);
  uint32_t cols = take<uint32_t>(p, end);
  std::vector<double> vals(static_cast<size_t>(rows) * cols);
  for (double& v : vals) v = take<double>(p, end);
  return Tensor::from(rows, cols, std::move(vals), true);
}

void put_vector(std::ofstream& out, const std::vector<double>& v) {
  put<uint32_t>(out, static_cast<uint32_t>(v.size()));
  for (double x : v) put<double>(out, x);
}

std::vector<double> take_vector(const char*& p, const char* end) {
  uint32_t n = take<uint32_t>(p, end);
  std::vector<double> v(n);
  for (double& x : v) x = take<double>(p, end);
  return v;
}

}  // namespace

void save_bundle(const std::string& path, const ModelBundle& b, const std::string& config_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataFormatError("cannot open for writing: " + path);
  out.write("KDFB", 4);
  put<uint16_t>(out, 1);
  put<uint16_t>(out, static_cast<uint16_t>(b.K));
  put<uint16_t>(out, static_cast<uint16_t>(b.C));
  put<uint32_t>(out, b.N);
  put<double>(out, b.fs);
  put<double>(out, b.alpha);
  put_string(out, b.registry_version);
  put<uint16_t>(out, static_cast<uint16_t>(b.class_names.size()));
  for (const auto& n : b.class_names) put_string(out, n);
  put_vector(out, b.norm.mean);
  put_vector(out, b.norm.stdev);

  put<int32_t>(out, b.sdt.depth);
  put<int32_t>(out, b.sdt.in_dim);
  put<int32_t>(out, b.sdt.n_classes);
  put<double>(out, b.sdt.beta);
  put_tensor(out, b.sdt.inner_w);
  put_tensor(out, b.sdt.inner_b);
  put_tensor(out, b.sdt.leaf_logits);

  put<int32_t>(out, b.vit.cfg.patch_len);
  put<int32_t>(out, b.vit.cfg.d_model);
  put<int32_t>(out, b.vit.cfg.n_layers);
  put<int32_t>(out, b.vit.cfg.n_heads);
  put<int32_t>(out, b.vit.cfg.d_ff);
  put<int32_t>(out, b.vit.n_channels);
  put<int32_t>(out, b.vit.n_samples);
  put<int32_t>(out, b.vit.n_classes);
  put_tensor(out, b.vit.patch_w);
  put_tensor(out, b.vit.patch_b);
  put_tensor(out, b.vit.pos);
  for (const auto& l : b.vit.layers) {
    for (const auto& t : {l.ln1_g, l.ln1_b, l.wq, l.bq, l.wk, l.bk, l.wv, l.bv, l.wo, l.bo,
                          l.ln2_g, l.ln2_b, l.ff_w1, l.ff_b1, l.ff_w2, l.ff_b2})
      put_tensor(out, t);
  }
  put_tensor(out, b.vit.head_w);
  put_tensor(out, b.vit.head_b);

  if (!config_json.empty()) {
    out.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
    put<uint32_t>(out, static_cast<uint32_t>(config_json.size()));
    out.write("CFG0", 4);
  }
  if (!out) throw DataFormatError("write failed: " + path);
}

ModelBundle load_bundle(const std::string& path, std::string* config_json) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataFormatError("cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const char* p = bytes.data();
  const char* end = p + bytes.size();
  if (bytes.size() < 4 || std::memcmp(p, "KDFB", 4) != 0)
    throw DataFormatError("not a bundle file: " + path);
  p += 4;
  if (static_cast<size_t>(end - p) >= 8 && std::memcmp(end - 4, "CFG0", 4) == 0) {
    uint32_t len;
    std::memcpy(&len, end - 8, 4);
    if (static_cast<size_t>(end - p) >= 8 + static_cast<size_t>(len)) {
      if (config_json) config_json->assign(end - 8 - len, len);
      end -= 8 + len;
    }
  }
  uint16_t version = take<uint16_t>(p, end);
  if (version != 1) throw DataFormatError("unsupported bundle version");
  ModelBundle b;
  b.K = take<uint16_t>(p, end);
  b.C = take<uint16_t>(p, end);
  b.N = take<uint32_t>(p, end);
  b.fs = take<double>(p, end);
  b.alpha = take<double>(p, end);
  b.registry_version = take_string(p, end);
  if (b.registry_version != kFeatureRegistryVersion)
    throw DataFormatError("bundle built with a different feature registry: " +
                          b.registry_version);
  uint16_t names = take<uint16_t>(p, end);
  b.class_names.clear();
  for (uint16_t i = 0; i < names; ++i) b.class_names.push_back(take_string(p, end));
  b.norm.mean = take_vector(p, end);
  b.norm.stdev = take_vector(p, end);

  b.sdt.depth = take<int32_t>(p, end);
  b.sdt.in_dim = take<int32_t>(p, end);
  b.sdt.n_classes = take<int32_t>(p, end);
  b.sdt.beta = take<double>(p, end);
  b.sdt.inner_w = take_tensor(p, end);
  b.sdt.inner_b = take_tensor(p, end);
  b.sdt.leaf_logits = take_tensor(p, end);

  b.vit.cfg.patch_len = take<int32_t>(p, end);
  b.vit.cfg.d_model = take<int32_t>(p, end);
  b.vit.cfg.n_layers = take<int32_t>(p, end);
  b.vit.cfg.n_heads = take<int32_t>(p, end);
  b.vit.cfg.d_ff = take<int32_t>(p, end);
  b.vit.n_channels = take<int32_t>(p, end);
  b.vit.n_samples = take<int32_t>(p, end);
  b.vit.n_classes = take<int32_t>(p, end);
  b.vit.patch_w = take_tensor(p, end);
  b.vit.patch_b = take_tensor(p, end);
  b.vit.pos = take_tensor(p, end);
  b.vit.layers.resize(b.vit.cfg.n_layers);
  for (auto& l : b.vit.layers) {
    for (Tensor* t : {&l.ln1_g, &l.ln1_b, &l.wq, &l.bq, &l.wk, &l.bk, &l.wv, &l.bv, &l.wo, &l.bo,
                      &l.ln2_g, &l.ln2_b, &l.ff_w1, &l.ff_b1, &l.ff_w2, &l.ff_b2})
      *t = take_tensor(p, end);
  }
  b.vit.head_w = take_tensor(p, end);
  b.vit.head_b = take_tensor(p, end);
  if (p != end) throw DataFormatError("trailing bytes in bundle: " + path);
  return b;
}

}  // namespace kdfshot
