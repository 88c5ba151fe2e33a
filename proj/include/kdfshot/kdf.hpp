#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kdfshot/dataset.hpp"
#include "kdfshot/features.hpp"
#include "kdfshot/sdt.hpp"
#include "kdfshot/tensor.hpp"
#include "kdfshot/vit.hpp"

namespace kdfshot {

// Everything needed to score new windows: both models, the feature
// normalization fitted on the pre-training data, and the coupling weight.
struct ModelBundle {
  uint32_t K = 0;
  uint32_t C = 0;
  uint32_t N = 0;
  double fs = 0.0;
  double alpha = 1.0;
  std::string registry_version = kFeatureRegistryVersion;
  std::vector<std::string> class_names;
  FeatureNorm norm;
  SdtParams sdt;
  VitParams vit;
};

struct KdfModelConfig {
  int sdt_depth = 4;
  double sdt_beta = 1.0;
  VitConfig vit;
  double alpha = 1.0;
  uint64_t seed = 1;
};

// Fits the feature normalization on `train` and initializes both models with
// seeds derived from cfg.seed.
ModelBundle init_bundle(const Dataset& train, const KdfModelConfig& cfg);

// Mean over rows of the symmetrized KL divergence 0.5*(KL(p||q)+KL(q||p)),
// in nats, with probabilities clamped at kProbFloor inside the logs.
diff::Tensor jsd(const diff::Tensor& p, const diff::Tensor& q);

struct KdfLosses {
  diff::Tensor loss_sdt;  // CE_sdt + alpha * JSD
  diff::Tensor loss_vit;  // CE_vit + alpha * JSD
  double ce_sdt = 0.0;
  double ce_vit = 0.0;
  double jsd_value = 0.0;
};

// Joint mutual-learning losses for one labeled batch. Xf holds the normalized
// feature rows for `idx`. By default each model's JSD term treats the peer
// output as a constant (the peer is detached); joint_grad couples them.
KdfLosses kdf_losses(const SdtParams& sdt, const VitParams& vit, const diff::Tensor& Xf,
                     const Dataset& ds, const std::vector<size_t>& idx, const std::vector<int>& y,
                     double alpha, bool joint_grad = false, double balance_penalty = 0.0);

struct KdfTrainConfig {
  int epochs = 50;
  int batch_size = 32;
  double lr_sdt = 1e-2;
  double lr_vit = 1e-3;
  double weight_decay = 1e-4;
  double alpha = 1.0;
  bool joint_grad = false;
  double balance_penalty = 0.0;
  int patience = 10;  // early stop on mean validation BCA; <= 0 disables
  uint64_t seed = 1;
};

struct KdfEpochRow {
  int epoch = 0;
  double l_vit = 0.0, l_sdt = 0.0;
  double val_acc_sdt = 0.0, val_bca_sdt = 0.0, val_f1_sdt = 0.0;
  double val_acc_vit = 0.0, val_bca_vit = 0.0, val_f1_vit = 0.0;
};

// Shuffled index batches for one epoch; the schedule is a pure function of
// (n, batch_size, seed, epoch) shared by pre-training and adaptation.
std::vector<std::vector<size_t>> epoch_batches(size_t n, size_t batch_size, uint64_t seed,
                                               int epoch);

// Rows of `fm` selected by idx as a B x D tensor (no gradient).
diff::Tensor features_tensor(const FeatureMatrix& fm, const std::vector<size_t>& idx);

// Source-domain mutual-learning pre-training. The bundle must come from
// init_bundle on `train`. Keeps the parameters of the best mean validation
// BCA epoch. Deterministic given cfg.seed.
std::vector<KdfEpochRow> kdf_train(ModelBundle& bundle, const Dataset& train, const Dataset& val,
                                   const KdfTrainConfig& cfg);

// Training log CSV: epoch,L_vit,L_sdt,val_acc_sdt,val_bca_sdt,val_f1_sdt,
// val_acc_vit,val_bca_vit,val_f1_vit. Optional leading # config comment.
void save_kdf_log(const std::string& path, const std::vector<KdfEpochRow>& rows,
                  const std::string& config_json = "");

// Bundle file ("KDFB"), doubles little-endian, with the same trailing config
// footer convention as dataset files.
void save_bundle(const std::string& path, const ModelBundle& b,
                 const std::string& config_json = "");
ModelBundle load_bundle(const std::string& path, std::string* config_json = nullptr);

}  // namespace kdfshot
