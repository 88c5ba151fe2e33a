#include "kdfshot/kdf.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <vector>

#include "kdfshot/errors.hpp"
#include "kdfshot/metrics.hpp"
#include "kdfshot/optim.hpp"
#include "kdfshot/rng.hpp"

#define CHECK(cond)                                                          \
  do {                                                                       \
    if (!(cond)) {                                                           \
      std::fprintf(stderr, "FAILED %s:%d: %s\n", __FILE__, __LINE__, #cond); \
      std::exit(1);                                                          \
    }                                                                        \
  } while (0)

using namespace kdfshot;
using diff::Tensor;

namespace {

bool near(double a, double b, double tol = 1e-12) { return std::fabs(a - b) <= tol; }

SynthConfig tiny_synth() {
  SynthConfig sc;
  sc.K = 2;
  sc.C = 1;
  sc.N = 64;
  sc.fs = 64.0;
  sc.n_per_class = 8;
  sc.n_subjects = 2;
  return sc;
}

KdfModelConfig tiny_model() {
  KdfModelConfig mc;
  mc.sdt_depth = 2;
  mc.vit.patch_len = 16;
  mc.vit.d_model = 8;
  mc.vit.n_layers = 1;
  mc.vit.n_heads = 2;
  mc.vit.d_ff = 16;
  mc.seed = 3;
  return mc;
}

std::vector<double> snapshot(const std::vector<Tensor>& params) {
  std::vector<double> out;
  for (const auto& p : params) out.insert(out.end(), p.value().begin(), p.value().end());
  return out;
}

}  // namespace

int main() {
  // JSD analytic oracles.
  {
    Tensor p = Tensor::from(2, 2, {0.3, 0.7, 0.5, 0.5});
    CHECK(near(jsd(p, p).item(), 0.0));

    Tensor a = Tensor::from(1, 2, {0.8, 0.2});
    Tensor b = Tensor::from(1, 2, {0.2, 0.8});
    double want = 0.6 * std::log(4.0);  // 0.5*(KL(a||b)+KL(b||a))
    CHECK(near(jsd(a, b).item(), want, 1e-9));
    CHECK(near(jsd(a, b).item(), jsd(b, a).item()));

    // Nonnegative on random distribution pairs, zero only at equality.
    Rng rng(5);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> v(8);
      for (auto& x : v) x = rng.uniform(0.05, 1.0);
      for (int r = 0; r < 2; ++r) {
        double z = v[r * 4] + v[r * 4 + 1] + v[r * 4 + 2] + v[r * 4 + 3];
        for (int k = 0; k < 4; ++k) v[r * 4 + k] /= z;
      }
      Tensor x = Tensor::from(1, 4, {v[0], v[1], v[2], v[3]});
      Tensor y = Tensor::from(1, 4, {v[4], v[5], v[6], v[7]});
      CHECK(jsd(x, y).item() >= 0.0);
    }

    // Mean over rows: a batch pairing the two cases above.
    Tensor pa = Tensor::from(2, 2, {0.8, 0.2, 0.5, 0.5});
    Tensor pb = Tensor::from(2, 2, {0.2, 0.8, 0.5, 0.5});
    CHECK(near(jsd(pa, pb).item(), 0.5 * want, 1e-9));
  }

  // Batch schedule: covers every index once, deterministic, epoch-dependent.
  {
    auto b0 = epoch_batches(10, 4, 9, 0);
    auto b0b = epoch_batches(10, 4, 9, 0);
    auto b1 = epoch_batches(10, 4, 9, 1);
    CHECK(b0.size() == 3 && b0[0].size() == 4 && b0[2].size() == 2);
    CHECK(b0 == b0b && b0 != b1);
    std::vector<int> seen(10, 0);
    for (const auto& batch : b0)
      for (size_t i : batch) ++seen[i];
    for (int s : seen) CHECK(s == 1);
  }

  Dataset train = generate_synthetic(tiny_synth(), ShiftSpec{}, 21);
  SynthConfig vc = tiny_synth();
  vc.n_per_class = 4;
  Dataset val = generate_synthetic(vc, ShiftSpec{}, 22);

  // init_bundle wiring: normalization fitted, geometry copied, uniform start.
  {
    ModelBundle b = init_bundle(train, tiny_model());
    CHECK(b.K == 2 && b.C == 1 && b.N == 64);
    CHECK(b.norm.mean.size() == 41);
    CHECK(b.class_names == train.class_names);
    FeatureMatrix fm = extract_features_all(train);
    apply_feature_norm(b.norm, fm);
    std::vector<size_t> all(train.size());
    std::iota(all.begin(), all.end(), 0);
    SdtForward f = sdt_forward(b.sdt, features_tensor(fm, all));
    for (double v : f.probs.value()) CHECK(near(v, 0.5, 1e-12));
  }

  // kdf_losses: alpha=0 reduces to plain cross-entropies; detached mode
  // reports the same scalar loss as joint mode; jsd adds alpha * J.
  {
    ModelBundle b = init_bundle(train, tiny_model());
    FeatureMatrix fm = extract_features_all(train);
    apply_feature_norm(b.norm, fm);
    std::vector<size_t> idx = {0, 3, 9, 12};
    std::vector<int> y;
    for (size_t i : idx) y.push_back(train.windows[i].label);
    Tensor Xf = features_tensor(fm, idx);

    KdfLosses l0 = kdf_losses(b.sdt, b.vit, Xf, train, idx, y, 0.0);
    CHECK(l0.loss_sdt.item() == l0.ce_sdt);
    CHECK(l0.loss_vit.item() == l0.ce_vit);
    CHECK(l0.jsd_value == 0.0);

    KdfLosses l1 = kdf_losses(b.sdt, b.vit, Xf, train, idx, y, 0.7);
    CHECK(near(l1.loss_sdt.item(), l1.ce_sdt + 0.7 * l1.jsd_value, 1e-12));
    KdfLosses lj = kdf_losses(b.sdt, b.vit, Xf, train, idx, y, 0.7, true);
    CHECK(near(lj.loss_sdt.item(), l1.loss_sdt.item(), 1e-12));

    bool threw = false;
    try {
      kdf_losses(b.sdt, b.vit, Xf, train, idx, {0, 1, -1, 0}, 1.0);
    } catch (const ConfigError&) {
      threw = true;
    }
    CHECK(threw);
  }

  // Determinism: two identical runs give identical logs and parameters.
  {
    KdfTrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 8;
    tc.seed = 5;
    ModelBundle a = init_bundle(train, tiny_model());
    ModelBundle b = init_bundle(train, tiny_model());
    auto la = kdf_train(a, train, val, tc);
    auto lb = kdf_train(b, train, val, tc);
    CHECK(la.size() == lb.size());
    for (size_t i = 0; i < la.size(); ++i) {
      CHECK(la[i].l_sdt == lb[i].l_sdt && la[i].l_vit == lb[i].l_vit);
      CHECK(la[i].val_bca_sdt == lb[i].val_bca_sdt && la[i].val_bca_vit == lb[i].val_bca_vit);
    }
    CHECK(snapshot(a.sdt.all_params()) == snapshot(b.sdt.all_params()));
    CHECK(snapshot(a.vit.all_params()) == snapshot(b.vit.all_params()));
  }

  // alpha = 0 decouples the models exactly: kdf_train equals a hand-written
  // loop training each model on its own cross-entropy with shared batching,
  // bit for bit.
  {
    KdfTrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 8;
    tc.alpha = 0.0;
    tc.seed = 11;

    ModelBundle lib = init_bundle(train, tiny_model());
    auto lib_log = kdf_train(lib, train, val, tc);

    ModelBundle man = init_bundle(train, tiny_model());
    FeatureMatrix fm = extract_features_all(train);
    apply_feature_norm(man.norm, fm);
    FeatureMatrix fv = extract_features_all(val);
    apply_feature_norm(man.norm, fv);
    std::vector<int> labels(train.size());
    for (size_t i = 0; i < train.size(); ++i) labels[i] = train.windows[i].label;
    std::vector<int> vlabels(val.size());
    for (size_t i = 0; i < val.size(); ++i) vlabels[i] = val.windows[i].label;
    std::vector<size_t> vidx(val.size());
    std::iota(vidx.begin(), vidx.end(), 0);

    AdamW os(man.sdt.all_params(), tc.lr_sdt, tc.weight_decay);
    AdamW ov(man.vit.all_params(), tc.lr_vit, tc.weight_decay);
    uint64_t bs = derive_seed(tc.seed, "pretrain-batches");
    std::vector<Tensor> sp = man.sdt.all_params(), vp = man.vit.all_params();
    double best = -1.0;
    double best_ce = std::numeric_limits<double>::infinity();
    std::vector<double> best_s = snapshot(sp), best_v = snapshot(vp);
    std::vector<double> man_ls, man_lv;
    for (int e = 0; e < tc.epochs; ++e) {
      double sum_s = 0.0, sum_v = 0.0;
      size_t seen = 0;
      for (const auto& batch : epoch_batches(train.size(), tc.batch_size, bs, e)) {
        std::vector<int> y(batch.size());
        for (size_t i = 0; i < batch.size(); ++i) y[i] = labels[batch[i]];
        Tensor ls = sdt_loss(man.sdt, features_tensor(fm, batch), y);
        Tensor lv = vit_loss(man.vit, train, batch, y);
        diff::backward(ls);
        os.step();
        diff::backward(lv);
        ov.step();
        sum_s += ls.item() * static_cast<double>(batch.size());
        sum_v += lv.item() * static_cast<double>(batch.size());
        seen += batch.size();
      }
      man_ls.push_back(sum_s / static_cast<double>(seen));
      man_lv.push_back(sum_v / static_cast<double>(seen));
      MetricsReport ms =
          compute_metrics(vlabels, sdt_predict(man.sdt, features_tensor(fv, vidx)), 2);
      MetricsReport mv = compute_metrics(vlabels, vit_predict(man.vit, val, vidx), 2);
      double mean_bca = 0.5 * (ms.bca + mv.bca);
      double mean_ce =
          0.5 * (diff::cross_entropy(sdt_forward(man.sdt, features_tensor(fv, vidx)).probs,
                                     vlabels).item() +
                 diff::cross_entropy(vit_forward(man.vit, val, vidx).probs, vlabels).item());
      if (mean_bca > best || (mean_bca == best && mean_ce < best_ce)) {
        best = mean_bca;
        best_ce = mean_ce;
        best_s = snapshot(sp);
        best_v = snapshot(vp);
      }
    }

    CHECK(lib_log.size() == man_ls.size());
    for (size_t e = 0; e < man_ls.size(); ++e) {
      CHECK(lib_log[e].l_sdt == man_ls[e]);
      CHECK(lib_log[e].l_vit == man_lv[e]);
    }
    CHECK(snapshot(lib.sdt.all_params()) == best_s);
    CHECK(snapshot(lib.vit.all_params()) == best_v);
  }

  // A few epochs of mutual learning drive the tree loss down; with the
  // coupling off, the transformer's own cross-entropy also falls.
  {
    KdfTrainConfig tc;
    tc.epochs = 5;
    tc.batch_size = 8;
    tc.patience = 0;
    tc.seed = 7;
    ModelBundle b = init_bundle(train, tiny_model());
    auto log = kdf_train(b, train, val, tc);
    CHECK(log.size() == 5);
    CHECK(log.back().l_sdt < log.front().l_sdt);
    for (const auto& r : log) {
      CHECK(std::isfinite(r.l_sdt) && std::isfinite(r.l_vit));
      CHECK(r.val_bca_sdt >= 0.0 && r.val_bca_sdt <= 1.0);
    }

    KdfTrainConfig ce_only = tc;
    ce_only.alpha = 0.0;
    ce_only.lr_vit = 5e-3;
    ModelBundle b2 = init_bundle(train, tiny_model());
    auto log2 = kdf_train(b2, train, val, ce_only);
    CHECK(log2.back().l_vit < log2.front().l_vit);
  }

  // Bundle file round trip: params, normalization, metadata, config footer,
  // and byte-for-byte re-save determinism.
  {
    ModelBundle b = init_bundle(train, tiny_model());
    KdfTrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 8;
    kdf_train(b, train, val, tc);

    const char* path = "/tmp/kdfshot_bundle_test.kdfb";
    save_bundle(path, b, "{\"stage\":\"test\"}");
    std::string cfg;
    ModelBundle r = load_bundle(path, &cfg);
    CHECK(cfg == "{\"stage\":\"test\"}");
    CHECK(r.K == b.K && r.C == b.C && r.N == b.N && r.fs == b.fs);
    CHECK(r.alpha == b.alpha);
    CHECK(r.class_names == b.class_names);
    CHECK(r.registry_version == b.registry_version);
    CHECK(r.norm.mean == b.norm.mean && r.norm.stdev == b.norm.stdev);
    CHECK(r.sdt.depth == b.sdt.depth && r.sdt.beta == b.sdt.beta);
    CHECK(snapshot(r.sdt.all_params()) == snapshot(b.sdt.all_params()));
    CHECK(r.vit.cfg.d_model == b.vit.cfg.d_model && r.vit.cfg.n_layers == b.vit.cfg.n_layers);
    CHECK(snapshot(r.vit.all_params()) == snapshot(b.vit.all_params()));

    save_bundle("/tmp/kdfshot_bundle_test2.kdfb", b, "{\"stage\":\"test\"}");
    std::ifstream f1(path, std::ios::binary);
    std::ifstream f2("/tmp/kdfshot_bundle_test2.kdfb", std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(!b1.empty() && b1 == b2);

    // A reloaded bundle scores windows identically.
    FeatureMatrix fm = extract_features_all(val);
    apply_feature_norm(b.norm, fm);
    std::vector<size_t> idx(val.size());
    std::iota(idx.begin(), idx.end(), 0);
    CHECK(sdt_predict(b.sdt, features_tensor(fm, idx)) ==
          sdt_predict(r.sdt, features_tensor(fm, idx)));
    CHECK(vit_predict(b.vit, val, idx) == vit_predict(r.vit, val, idx));

    // Registry mismatch is refused.
    ModelBundle bad = b;
    bad.registry_version = "bogus-registry";
    save_bundle("/tmp/kdfshot_bundle_bad.kdfb", bad, "");
    bool threw = false;
    try {
      load_bundle("/tmp/kdfshot_bundle_bad.kdfb");
    } catch (const DataFormatError&) {
      threw = true;
    }
    CHECK(threw);
  }

  // Log file format.
  {
    std::vector<KdfEpochRow> rows(2);
    rows[0].epoch = 0;
    rows[0].l_vit = 1.5;
    rows[1].epoch = 1;
    rows[1].l_vit = 1.25;
    save_kdf_log("/tmp/kdfshot_log_test.csv", rows, "{\"k\":1}");
    std::ifstream in("/tmp/kdfshot_log_test.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "# {\"k\":1}");
    std::getline(in, line);
    CHECK(line ==
          "epoch,L_vit,L_sdt,val_acc_sdt,val_bca_sdt,val_f1_sdt,val_acc_vit,val_bca_vit,"
          "val_f1_vit");
    int n = 0;
    while (std::getline(in, line))
      if (!line.empty()) ++n;
    CHECK(n == 2);
  }

  std::printf("test_kdf: all passed\n");
  return 0;
}
