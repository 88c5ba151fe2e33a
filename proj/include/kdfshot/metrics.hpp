#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kdfshot/dataset.hpp"
#include "kdfshot/kdf.hpp"

namespace kdfshot {

struct MetricsReport {
  double acc = 0.0;
  double bca = 0.0;          // mean per-class recall over classes with support
  double f1_weighted = 0.0;  // support-weighted; per-class F1 is 0 when prec+rec=0
  std::vector<std::vector<long>> confusion;  // [true][pred] counts
  size_t n = 0;
};

MetricsReport compute_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                              int n_classes);

struct MeanStd {
  double mean = 0.0;
  double stdev = 0.0;  // population
};

MeanStd mean_std(const std::vector<double>& v);

// Both models scored on a dataset with the bundle's normalization.
struct BundleEval {
  MetricsReport sdt;
  MetricsReport vit;
};

BundleEval evaluate_bundle(const ModelBundle& bundle, const Dataset& ds);

// Subject-wise k-fold cross-validation with repeats. Each cell pre-trains a
// fresh bundle on the out-of-fold windows and scores the in-fold windows.
// Fold assignment and model seeds derive from seed + repeat index.
struct CvConfig {
  int folds = 3;
  int repeats = 2;
  KdfModelConfig model;
  KdfTrainConfig train;
};

struct CvCell {
  int repeat = 0;
  int fold = 0;
  MetricsReport sdt;
  MetricsReport vit;
};

std::vector<CvCell> cv_run(const Dataset& ds, const CvConfig& cfg, uint64_t seed);

}  // namespace kdfshot
