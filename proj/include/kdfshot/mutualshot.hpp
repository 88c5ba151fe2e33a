#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kdfshot/dataset.hpp"
#include "kdfshot/kdf.hpp"
#include "kdfshot/tensor.hpp"

namespace kdfshot {

// Adaptation's view of the target data. label_of is the only path by which
// adapt may read a label, so tests can wrap it with an access counter.
struct TargetData {
  const Dataset* ds = nullptr;
  std::function<int(size_t)> label_of;
};

TargetData make_target(const Dataset& ds);

// Information maximization: mean prediction entropy minus the entropy of the
// batch-mean distribution. Bounded below by -ln K; zero for uniform outputs.
diff::Tensor im_loss(const diff::Tensor& probs);

using Matrix = std::vector<std::vector<double>>;

// Class centroids in representation space. Round 0 weighs every sample by its
// soft output delta; later rounds average over hard pseudo-label groups, and
// a class with no members keeps its previous centroid.
Matrix compute_centroids(const Matrix& reps, const Matrix& soft, const std::vector<int>& hard,
                         int t, const Matrix& prev, int n_classes);

// Nearest centroid by cosine distance 1 - cos(rep, c_k); ties and zero-norm
// representations resolve to the smallest class index. zero_norm_count, when
// given, receives the number of zero-norm representations seen.
std::vector<int> assign_pseudo_labels(const Matrix& reps, const Matrix& centroids,
                                      size_t* zero_norm_count = nullptr);

// Indices whose two pseudo-labels agree, ascending.
std::vector<size_t> select_consistent(const std::vector<int>& a, const std::vector<int>& b);

struct AdaptConfig {
  int epochs = 30;
  int batch_size = 32;
  // One tenth of the pre-training rates.
  double lr_sdt = 1e-3;
  double lr_vit = 1e-4;
  double weight_decay = 1e-4;
  double alpha = 1.0;
  int shots = 1;
  bool no_pseudo = false;       // drop the consistent-pseudo-label CE term
  bool no_consistency = false;  // keep every sample with its own model's pseudo-label
  bool no_ssl = false;          // drop the few-shot supervised terms
  bool joint_grad = false;
  std::string sdt_rep = "gates";  // SDT representation: gates | paths | input
  uint64_t seed = 1;
};

struct AdaptLogRow {
  int epoch = 0;
  int t = 0;
  double l_im_sdt = 0.0, l_im_vit = 0.0;
  double l_ce_plus = 0.0, l_ce_labeled = 0.0, l_jsd_labeled = 0.0;
  size_t n_splus = 0;
  double agreement_rate = 0.0;
  double val_bca_sdt = 0.0, val_bca_vit = 0.0;
};

// Source-free adaptation of a pre-trained bundle on target data only. Leaf
// logits and the head stay frozen; gating parameters and the encoder update.
// Per epoch: representations, centroids, pseudo-labels and the agreement set
// are refreshed, then batches minimize IM + consistent-pseudo-label CE +
// few-shot CE + alpha*JSD per model. With shots=0 and no_ssl the run never
// calls target.label_of and the val columns are NaN.
std::vector<AdaptLogRow> adapt(ModelBundle& bundle, const TargetData& target,
                               const AdaptConfig& cfg);

// Adaptation log CSV: epoch,t,L_im_sdt,L_im_vit,L_ce_plus,L_ce_labeled,
// L_jsd_labeled,n_splus,agreement_rate,val_bca_sdt,val_bca_vit.
void save_adapt_log(const std::string& path, const std::vector<AdaptLogRow>& rows,
                    const std::string& config_json = "");

}  // namespace kdfshot
