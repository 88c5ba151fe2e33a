#include "kdfshot/metrics.hpp"

#include <cmath>

#include "kdfshot/errors.hpp"
#include "kdfshot/rng.hpp"

namespace kdfshot {

MetricsReport compute_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                              int n_classes) {
  if (y_true.empty() || y_true.size() != y_pred.size())
    throw ConfigError("metrics need equal-length nonempty label arrays");
  MetricsReport r;
  r.n = y_true.size();
  r.confusion.assign(n_classes, std::vector<long>(n_classes, 0));
  for (size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_true[i] >= n_classes || y_pred[i] < 0 || y_pred[i] >= n_classes)
      throw ConfigError("label outside 0..K-1");
    ++r.confusion[y_true[i]][y_pred[i]];
  }
  long correct = 0;
  double recall_sum = 0.0;
  int supported = 0;
  double f1_weighted = 0.0;
  for (int k = 0; k < n_classes; ++k) {
    long support = 0, predicted = 0;
    for (int j = 0; j < n_classes; ++j) {
      support += r.confusion[k][j];
      predicted += r.confusion[j][k];
    }
    long tp = r.confusion[k][k];
    correct += tp;
    if (support > 0) {
      ++supported;
      double recall = static_cast<double>(tp) / static_cast<double>(support);
      recall_sum += recall;
      double precision =
          predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
      double f1 =
          (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
      f1_weighted += f1 * static_cast<double>(support) / static_cast<double>(r.n);
    }
  }
  r.acc = static_cast<double>(correct) / static_cast<double>(r.n);
  r.bca = supported > 0 ? recall_sum / static_cast<double>(supported) : 0.0;
  r.f1_weighted = f1_weighted;
  return r;
}

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m.mean) * (x - m.mean);
  m.stdev = std::sqrt(s / static_cast<double>(v.size()));
  return m;
}

BundleEval evaluate_bundle(const ModelBundle& bundle, const Dataset& ds) {
  if (ds.C != bundle.C || ds.N != bundle.N)
    throw ConfigError("dataset geometry does not match the bundle");
  if (ds.size() == 0) throw ConfigError("empty evaluation dataset");
  FeatureMatrix fm = extract_features_all(ds);
  apply_feature_norm(bundle.norm, fm);
  std::vector<int> labels(ds.size());
  std::vector<size_t> idx(ds.size());
  for (size_t i = 0; i < ds.size(); ++i) {
    labels[i] = ds.windows[i].label;
    idx[i] = i;
  }
  BundleEval ev;
  diff::Tensor Xf = features_tensor(fm, idx);
  ev.sdt = compute_metrics(labels, sdt_predict(bundle.sdt, Xf), static_cast<int>(bundle.K));
  std::vector<int> vp;
  for (size_t at = 0; at < idx.size(); at += 64) {
    std::vector<size_t> chunk(idx.begin() + at, idx.begin() + std::min(idx.size(), at + 64));
    std::vector<int> part = vit_predict(bundle.vit, ds, chunk);
    vp.insert(vp.end(), part.begin(), part.end());
  }
  ev.vit = compute_metrics(labels, vp, static_cast<int>(bundle.K));
  return ev;
}

std::vector<CvCell> cv_run(const Dataset& ds, const CvConfig& cfg, uint64_t seed) {
  if (cfg.folds < 2 || cfg.repeats < 1) throw ConfigError("bad cross-validation configuration");
  std::vector<uint32_t> subjects = ds.subjects();
  std::vector<CvCell> cells;
  for (int r = 0; r < cfg.repeats; ++r) {
    uint64_t rep_seed = seed + static_cast<uint64_t>(r);
    std::vector<int> folds = make_folds(subjects, cfg.folds, rep_seed);
    for (int f = 0; f < cfg.folds; ++f) {
      Dataset train = filter_by_fold(ds, subjects, folds, f, false);
      Dataset heldout = filter_by_fold(ds, subjects, folds, f, true);
      KdfModelConfig mc = cfg.model;
      mc.seed = derive_seed(rep_seed, "cv-cell", static_cast<uint64_t>(f));
      ModelBundle bundle = init_bundle(train, mc);
      KdfTrainConfig tc = cfg.train;
      tc.seed = mc.seed;
      kdf_train(bundle, train, heldout, tc);
      BundleEval ev = evaluate_bundle(bundle, heldout);
      CvCell cell;
      cell.repeat = r;
      cell.fold = f;
      cell.sdt = ev.sdt;
      cell.vit = ev.vit;
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace kdfshot
