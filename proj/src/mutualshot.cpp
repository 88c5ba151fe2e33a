#include "kdfshot/mutualshot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "kdfshot/errors.hpp"
#include "kdfshot/metrics.hpp"
#include "kdfshot/optim.hpp"
#include "kdfshot/rng.hpp"

namespace kdfshot {

using diff::Tensor;

TargetData make_target(const Dataset& ds) {
  TargetData t;
  t.ds = &ds;
  t.label_of = [&ds](size_t i) { return static_cast<int>(ds.windows[i].label); };
  return t;
}

Tensor im_loss(const Tensor& probs) {
  if (probs.rows() == 0) throw ConfigError("im_loss needs a nonempty batch");
  double inv_b = 1.0 / static_cast<double>(probs.rows());
  // Mean prediction entropy minus marginal entropy, both in nats.
  Tensor ent = diff::scale(diff::sum_all(diff::mul(probs, diff::log_clamped(probs))), -inv_b);
  Tensor marginal = diff::mean_rows(probs);
  Tensor neg_marg_ent = diff::sum_all(diff::mul(marginal, diff::log_clamped(marginal)));
  return diff::add(ent, neg_marg_ent);
}

Matrix compute_centroids(const Matrix& reps, const Matrix& soft, const std::vector<int>& hard,
                         int t, const Matrix& prev, int n_classes) {
  if (reps.empty()) throw ConfigError("compute_centroids needs samples");
  size_t dim = reps[0].size();
  Matrix cent(n_classes, std::vector<double>(dim, 0.0));
  if (t == 0) {
    if (soft.size() != reps.size()) throw ConfigError("soft outputs must match reps");
    std::vector<double> wsum(n_classes, 0.0);
    for (size_t i = 0; i < reps.size(); ++i) {
      if (soft[i].size() != static_cast<size_t>(n_classes))
        throw ConfigError("soft output width mismatch");
      for (int k = 0; k < n_classes; ++k) {
        wsum[k] += soft[i][k];
        for (size_t j = 0; j < dim; ++j) cent[k][j] += soft[i][k] * reps[i][j];
      }
    }
    for (int k = 0; k < n_classes; ++k) {
      if (wsum[k] > 0.0)
        for (size_t j = 0; j < dim; ++j) cent[k][j] /= wsum[k];
      else if (!prev.empty())
        cent[k] = prev[k];
    }
    return cent;
  }
  if (hard.size() != reps.size()) throw ConfigError("pseudo-labels must match reps");
  std::vector<long> count(n_classes, 0);
  for (size_t i = 0; i < reps.size(); ++i) {
    int k = hard[i];
    if (k < 0 || k >= n_classes) throw ConfigError("pseudo-label out of range");
    ++count[k];
    for (size_t j = 0; j < dim; ++j) cent[k][j] += reps[i][j];
  }
  for (int k = 0; k < n_classes; ++k) {
    if (count[k] > 0)
      for (size_t j = 0; j < dim; ++j) cent[k][j] /= static_cast<double>(count[k]);
    else if (!prev.empty())
      cent[k] = prev[k];  // empty class keeps its previous centroid
  }
  return cent;
}

std::vector<int> assign_pseudo_labels(const Matrix& reps, const Matrix& centroids,
                                      size_t* zero_norm_count) {
  if (centroids.empty()) throw ConfigError("assign_pseudo_labels needs centroids");
  size_t dim = centroids[0].size();
  std::vector<double> cnorm(centroids.size());
  for (size_t k = 0; k < centroids.size(); ++k) {
    double s = 0.0;
    for (double v : centroids[k]) s += v * v;
    cnorm[k] = std::sqrt(s);
  }
  if (zero_norm_count) *zero_norm_count = 0;
  std::vector<int> out(reps.size(), 0);
  for (size_t i = 0; i < reps.size(); ++i) {
    if (reps[i].size() != dim) throw ConfigError("representation width mismatch");
    double rnorm = 0.0;
    for (double v : reps[i]) rnorm += v * v;
    rnorm = std::sqrt(rnorm);
    if (rnorm <= 0.0) {
      if (zero_norm_count) ++*zero_norm_count;
      out[i] = 0;  // tie rule
      continue;
    }
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < centroids.size(); ++k) {
      double dot = 0.0;
      for (size_t j = 0; j < dim; ++j) dot += reps[i][j] * centroids[k][j];
      double cosv = cnorm[k] > 0.0 ? dot / (rnorm * cnorm[k]) : 0.0;
      double d = 1.0 - cosv;
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(k);
      }
    }
    out[i] = best;
  }
  return out;
}

std::vector<size_t> select_consistent(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw ConfigError("pseudo-label arrays differ in length");
  std::vector<size_t> out;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] == b[i]) out.push_back(i);
  return out;
}

namespace {

Matrix rows_to_matrix(const std::vector<double>& flat, size_t n, size_t dim) {
  Matrix m(n, std::vector<double>(dim));
  for (size_t i = 0; i < n; ++i)
    std::copy(flat.begin() + i * dim, flat.begin() + (i + 1) * dim, m[i].begin());
  return m;
}

// Masked mean cross-entropy -mean log p[y] over the rows with mask 1.
Tensor masked_ce(const Tensor& probs, const std::vector<int>& labels,
                 const std::vector<double>& mask, double n_active) {
  Tensor picked = diff::log_clamped(diff::pick_class(probs, labels));
  Tensor m = Tensor::from(1, mask.size(), mask);
  return diff::scale(diff::sum_all(diff::mul(m, picked)), -1.0 / n_active);
}

}  // namespace

std::vector<AdaptLogRow> adapt(ModelBundle& bundle, const TargetData& target,
                               const AdaptConfig& cfg) {
  if (!target.ds || !target.label_of) throw ConfigError("adapt needs target data");
  const Dataset& ds = *target.ds;
  if (ds.size() == 0) throw ConfigError("empty target dataset");
  if (cfg.epochs < 1 || cfg.batch_size < 1) throw ConfigError("bad adaptation configuration");
  if (cfg.sdt_rep != "gates" && cfg.sdt_rep != "paths" && cfg.sdt_rep != "input")
    throw ConfigError("sdt_rep must be gates, paths or input");

  FeatureMatrix fm = extract_features_all(ds);
  apply_feature_norm(bundle.norm, fm);

  // Few-shot labeling; skipped entirely in unsupervised modes so those runs
  // never touch a target label.
  bool supervised = !cfg.no_ssl && cfg.shots > 0;
  std::vector<int> all_labels;
  std::vector<size_t> labeled_idx;
  std::vector<int> labeled_y;
  if (supervised) {
    all_labels.resize(ds.size());
    for (size_t i = 0; i < ds.size(); ++i) all_labels[i] = target.label_of(i);
    labeled_idx = sample_few_shot(all_labels, static_cast<int>(bundle.K), cfg.shots,
                                  derive_seed(cfg.seed, "adapt-shots"));
    for (size_t i : labeled_idx) labeled_y.push_back(all_labels[i]);
  }
  std::set<size_t> labeled_set(labeled_idx.begin(), labeled_idx.end());
  std::vector<size_t> unlabeled;
  for (size_t i = 0; i < ds.size(); ++i)
    if (!labeled_set.count(i)) unlabeled.push_back(i);
  if (unlabeled.empty()) throw ConfigError("no unlabeled target samples left");

  // Frozen classifiers: the hypothesis stays, only the encoders move.
  bundle.sdt.leaf_logits.set_requires_grad(false);
  bundle.vit.head_w.set_requires_grad(false);
  bundle.vit.head_b.set_requires_grad(false);
  AdamW opt_sdt(bundle.sdt.encoder_params(), cfg.lr_sdt, cfg.weight_decay);
  AdamW opt_vit(bundle.vit.encoder_params(), cfg.lr_vit, cfg.weight_decay);
  uint64_t batch_seed = derive_seed(cfg.seed, "adapt-batches");

  int K = static_cast<int>(bundle.K);
  int t = 0;
  Matrix cent_sdt, cent_vit;
  std::vector<int> ps_sdt, ps_vit;
  std::vector<AdaptLogRow> log;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (int e = 0; e < cfg.epochs; ++e) {
    AdaptLogRow row;
    row.epoch = e;
    row.t = t;

    // Per-sample pseudo-label of each unlabeled sample for this epoch, by
    // unlabeled-pool position.
    std::vector<int> ce_label_sdt, ce_label_vit;
    std::vector<char> in_splus(unlabeled.size(), 0);
    if (!cfg.no_pseudo) {
      // Refresh representations, centroids and pseudo-labels (no gradients).
      Matrix reps_s, soft_s;
      {
        Tensor Xf = features_tensor(fm, unlabeled);
        SdtForward f = sdt_forward(bundle.sdt, Xf);
        const Tensor& rep = cfg.sdt_rep == "gates"  ? f.gates
                            : cfg.sdt_rep == "paths" ? f.leaf_paths
                                                     : Xf;
        reps_s = rows_to_matrix(rep.value(), unlabeled.size(), rep.cols());
        soft_s = rows_to_matrix(f.probs.value(), unlabeled.size(), K);
      }
      Matrix reps_v, soft_v;
      {
        reps_v.reserve(unlabeled.size());
        soft_v.reserve(unlabeled.size());
        for (size_t at = 0; at < unlabeled.size(); at += 64) {
          std::vector<size_t> chunk(
              unlabeled.begin() + at,
              unlabeled.begin() + std::min(unlabeled.size(), at + 64));
          VitForward f = vit_forward(bundle.vit, ds, chunk);
          Matrix r = rows_to_matrix(f.pooled.value(), chunk.size(), f.pooled.cols());
          Matrix s = rows_to_matrix(f.probs.value(), chunk.size(), K);
          reps_v.insert(reps_v.end(), r.begin(), r.end());
          soft_v.insert(soft_v.end(), s.begin(), s.end());
        }
      }
      cent_sdt = compute_centroids(reps_s, soft_s, ps_sdt, t, cent_sdt, K);
      cent_vit = compute_centroids(reps_v, soft_v, ps_vit, t, cent_vit, K);
      ps_sdt = assign_pseudo_labels(reps_s, cent_sdt);
      ps_vit = assign_pseudo_labels(reps_v, cent_vit);
      ++t;

      ce_label_sdt.assign(unlabeled.size(), 0);
      ce_label_vit.assign(unlabeled.size(), 0);
      if (cfg.no_consistency) {
        // Every sample kept, each model trusting its own pseudo-labels.
        std::fill(in_splus.begin(), in_splus.end(), 1);
        ce_label_sdt = ps_sdt;
        ce_label_vit = ps_vit;
        row.n_splus = unlabeled.size();
        row.agreement_rate = 1.0;
      } else {
        std::vector<size_t> splus = select_consistent(ps_sdt, ps_vit);
        for (size_t pos : splus) {
          in_splus[pos] = 1;
          ce_label_sdt[pos] = ps_sdt[pos];
          ce_label_vit[pos] = ps_sdt[pos];
        }
        row.n_splus = splus.size();
        row.agreement_rate =
            static_cast<double>(splus.size()) / static_cast<double>(unlabeled.size());
      }
    }

    double im_s_sum = 0.0, im_v_sum = 0.0, cep_sum = 0.0, cel_sum = 0.0, jsd_sum = 0.0;
    size_t nb = 0, cep_batches = 0;
    for (const auto& batch : epoch_batches(unlabeled.size(), cfg.batch_size, batch_seed, e)) {
      std::vector<size_t> gidx(batch.size());
      for (size_t i = 0; i < batch.size(); ++i) gidx[i] = unlabeled[batch[i]];

      Tensor Xf = features_tensor(fm, gidx);
      SdtForward fs = sdt_forward(bundle.sdt, Xf);
      VitForward fv = vit_forward(bundle.vit, ds, gidx);

      Tensor im_s = im_loss(fs.probs);
      Tensor im_v = im_loss(fv.probs);
      Tensor loss_s = im_s;
      Tensor loss_v = im_v;

      if (!cfg.no_pseudo) {
        std::vector<double> mask(batch.size(), 0.0);
        std::vector<int> ys(batch.size(), 0), yv(batch.size(), 0);
        double n_active = 0.0;
        for (size_t i = 0; i < batch.size(); ++i) {
          if (in_splus[batch[i]]) {
            mask[i] = 1.0;
            ys[i] = ce_label_sdt[batch[i]];
            yv[i] = ce_label_vit[batch[i]];
            n_active += 1.0;
          }
        }
        if (n_active > 0.0) {  // an empty agreement set skips the term
          Tensor ce_s = masked_ce(fs.probs, ys, mask, n_active);
          Tensor ce_v = masked_ce(fv.probs, yv, mask, n_active);
          cep_sum += 0.5 * (ce_s.item() + ce_v.item());
          ++cep_batches;
          loss_s = diff::add(loss_s, ce_s);
          loss_v = diff::add(loss_v, ce_v);
        }
      }

      if (supervised) {
        Tensor Xf_lab = features_tensor(fm, labeled_idx);
        SdtForward ls = sdt_forward(bundle.sdt, Xf_lab);
        VitForward lv = vit_forward(bundle.vit, ds, labeled_idx);
        Tensor ce_s = diff::cross_entropy(ls.probs, labeled_y);
        Tensor ce_v = diff::cross_entropy(lv.probs, labeled_y);
        cel_sum += 0.5 * (ce_s.item() + ce_v.item());
        Tensor j_s, j_v;
        if (cfg.joint_grad) {
          j_s = jsd(ls.probs, lv.probs);
          j_v = j_s;
        } else {
          j_s = jsd(ls.probs, lv.probs.detach());
          j_v = jsd(ls.probs.detach(), lv.probs);
        }
        jsd_sum += j_s.item();
        loss_s = diff::add(loss_s, diff::add(ce_s, diff::scale(j_s, cfg.alpha)));
        loss_v = diff::add(loss_v, diff::add(ce_v, diff::scale(j_v, cfg.alpha)));
      }

      double lv_s = loss_s.item(), lv_v = loss_v.item();
      if (!std::isfinite(lv_s) || !std::isfinite(lv_v))
        throw NumericError("non-finite adaptation loss");
      diff::backward(loss_s);
      opt_sdt.step();
      diff::backward(loss_v);
      opt_vit.step();

      im_s_sum += im_s.item();
      im_v_sum += im_v.item();
      ++nb;
    }

    row.l_im_sdt = im_s_sum / static_cast<double>(nb);
    row.l_im_vit = im_v_sum / static_cast<double>(nb);
    row.l_ce_plus = cep_batches ? cep_sum / static_cast<double>(cep_batches) : 0.0;
    row.l_ce_labeled = supervised ? cel_sum / static_cast<double>(nb) : 0.0;
    row.l_jsd_labeled = supervised ? jsd_sum / static_cast<double>(nb) : 0.0;

    if (supervised) {
      std::vector<size_t> all_idx(ds.size());
      for (size_t i = 0; i < ds.size(); ++i) all_idx[i] = i;
      Tensor Xall = features_tensor(fm, all_idx);
      row.val_bca_sdt =
          compute_metrics(all_labels, sdt_predict(bundle.sdt, Xall), K).bca;
      row.val_bca_vit = compute_metrics(all_labels, vit_predict(bundle.vit, ds, all_idx), K).bca;
    } else {
      row.val_bca_sdt = nan;
      row.val_bca_vit = nan;
    }
    log.push_back(row);
  }
  return log;
}

void save_adapt_log(const std::string& path, const std::vector<AdaptLogRow>& rows,
                    const std::string& config_json) {
  std::ofstream out(path);
  if (!out) throw DataFormatError("cannot open for writing: " + path);
  if (!config_json.empty()) out << "# " << config_json << "\n";
  out << "epoch,t,L_im_sdt,L_im_vit,L_ce_plus,L_ce_labeled,L_jsd_labeled,"
         "n_splus,agreement_rate,val_bca_sdt,val_bca_vit\n";
  char buf[320];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%zu,%.9g,%.9g,%.9g\n",
                  r.epoch, r.t, r.l_im_sdt, r.l_im_vit, r.l_ce_plus, r.l_ce_labeled,
                  r.l_jsd_labeled, r.n_splus, r.agreement_rate, r.val_bca_sdt, r.val_bca_vit);
    out << buf;
  }
  if (!out) throw DataFormatError("write failed: " + path);
}

}  // namespace kdfshot
