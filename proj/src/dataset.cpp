#include "kdfshot/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include "kdfshot/errors.hpp"
#include "kdfshot/rng.hpp"

namespace kdfshot {

std::vector<uint32_t> Dataset::subjects() const {
  std::set<uint32_t> s;
  for (const auto& w : windows) s.insert(w.subject);
  return {s.begin(), s.end()};
}

ShiftSpec default_shift() {
  // Calibrated so the shift hurts both models without collapsing either: the
  // tree is most sensitive to the amplitude/noise terms (every z-scored
  // feature moves), the transformer to the frequency jitter and dropped
  // channels.
  ShiftSpec s;
  s.amplitude_scale = 1.6;
  s.noise_sigma = 0.5;
  s.freq_jitter_hz = 2.0;
  s.channel_drop_p = 0.12;
  return s;
}

namespace {
double f32(double v) { return static_cast<double>(static_cast<float>(v)); }
}  // namespace

Dataset generate_synthetic(const SynthConfig& cfg, const ShiftSpec& shift, uint64_t seed) {
  if (cfg.K < 2 || cfg.C < 1 || cfg.N < 64 || cfg.fs <= 0 || cfg.n_per_class < 1 ||
      cfg.n_subjects < 1)
    throw ConfigError("bad synthetic dataset configuration");
  Dataset ds;
  ds.K = cfg.K;
  ds.C = cfg.C;
  ds.N = cfg.N;
  ds.fs = cfg.fs;
  for (uint32_t k = 0; k < cfg.K; ++k) ds.class_names.push_back("class" + std::to_string(k));

  // Class signatures: base frequency and per-channel amplitude topography.
  Rng topo(derive_seed(seed, "topography"));
  std::vector<double> base_freq(cfg.K);
  std::vector<std::vector<double>> weight(cfg.K, std::vector<double>(cfg.C));
  for (uint32_t k = 0; k < cfg.K; ++k) {
    base_freq[k] = 4.0 + 3.0 * static_cast<double>(k);
    for (uint32_t c = 0; c < cfg.C; ++c) weight[k][c] = 0.3 + 0.7 * topo.uniform();
  }

  // Per-subject recording variability.
  Rng subj(derive_seed(seed, "subjects"));
  std::vector<double> gain(cfg.n_subjects), fshift(cfg.n_subjects);
  for (uint32_t s = 0; s < cfg.n_subjects; ++s) {
    gain[s] = 1.0 + 0.15 * subj.normal();
    fshift[s] = 0.3 * subj.normal();
  }

  const double two_pi = 6.283185307179586476925286766559;
  size_t widx = 0;
  for (uint32_t k = 0; k < cfg.K; ++k) {
    for (uint32_t i = 0; i < cfg.n_per_class; ++i, ++widx) {
      EegWindow w;
      w.subject = static_cast<uint32_t>(widx % cfg.n_subjects);
      w.label = static_cast<int16_t>(k);
      w.samples.resize(static_cast<size_t>(cfg.C) * cfg.N);

      // The clean stream never sees the shift parameters, so the clean part
      // of a window is identical across shift settings for the same seed.
      Rng clean(derive_seed(seed, "clean", widx));
      Rng shifted(derive_seed(seed, "shift", widx));

      double f0 = base_freq[k] + fshift[w.subject] + shift.freq_jitter_hz;
      double phase = clean.uniform(0.0, two_pi);
      double g = gain[w.subject];
      for (uint32_t c = 0; c < cfg.C; ++c) {
        double amp = g * weight[k][c];
        bool dropped = shift.channel_drop_p > 0.0 && shifted.uniform() < shift.channel_drop_p;
        double colored = 0.0;
        for (uint32_t t = 0; t < cfg.N; ++t) {
          double tau = static_cast<double>(t) / cfg.fs;
          double sig = amp * (std::sin(two_pi * f0 * tau + phase) +
                              0.35 * std::sin(two_pi * 2.0 * f0 * tau + 1.7 * phase));
          colored = 0.9 * colored + clean.normal();  // low-frequency background
          double v = sig + 0.25 * 0.4359 * colored + 0.2 * clean.normal();
          v *= shift.amplitude_scale;
          if (shift.noise_sigma > 0.0) v += shift.noise_sigma * shifted.normal();
          if (dropped) v = 0.0;
          w.samples[static_cast<size_t>(c) * cfg.N + t] = f32(v);
        }
      }
      ds.windows.push_back(std::move(w));
    }
  }
  return ds;
}

std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, uint32_t n_holdout_per_class) {
  if (n_holdout_per_class < 1) throw ConfigError("holdout size must be >= 1");
  std::map<int16_t, uint32_t> seen, total;
  for (const auto& w : ds.windows) ++total[w.label];
  for (const auto& [label, n] : total)
    if (n <= n_holdout_per_class)
      throw ConfigError("class " + std::to_string(label) + " cannot spare " +
                        std::to_string(n_holdout_per_class) + " holdout windows");
  Dataset main = ds, holdout = ds;
  main.windows.clear();
  holdout.windows.clear();
  for (const auto& w : ds.windows) {
    uint32_t keep_in_main = total[w.label] - n_holdout_per_class;
    (seen[w.label]++ < keep_in_main ? main : holdout).windows.push_back(w);
  }
  return {std::move(main), std::move(holdout)};
}

std::vector<int> make_folds(const std::vector<uint32_t>& subjects, int k_folds, uint64_t seed) {
  if (k_folds < 2 || subjects.size() < static_cast<size_t>(k_folds))
    throw ConfigError("fold count must be >= 2 and <= subject count");
  std::vector<size_t> order(subjects.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "folds"));
  rng.shuffle(order);
  std::vector<int> folds(subjects.size());
  for (size_t pos = 0; pos < order.size(); ++pos)
    folds[order[pos]] = static_cast<int>(pos % static_cast<size_t>(k_folds));
  return folds;
}

Dataset filter_by_fold(const Dataset& ds, const std::vector<uint32_t>& subjects,
                       const std::vector<int>& folds, int fold, bool keep) {
  if (subjects.size() != folds.size()) throw ConfigError("subjects/folds size mismatch");
  std::map<uint32_t, int> fold_of;
  for (size_t i = 0; i < subjects.size(); ++i) fold_of[subjects[i]] = folds[i];
  Dataset out;
  out.K = ds.K;
  out.C = ds.C;
  out.N = ds.N;
  out.fs = ds.fs;
  out.class_names = ds.class_names;
  for (const auto& w : ds.windows) {
    auto it = fold_of.find(w.subject);
    if (it == fold_of.end()) throw ConfigError("window subject missing from fold table");
    if ((it->second == fold) == keep) out.windows.push_back(w);
  }
  return out;
}

std::vector<size_t> sample_few_shot(const std::vector<int>& labels, int n_classes, int shots,
                                    uint64_t seed) {
  if (shots < 1) throw ConfigError("shots must be >= 1");
  std::vector<std::vector<size_t>> per_class(n_classes);
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) throw ConfigError("label out of range");
    per_class[labels[i]].push_back(i);
  }
  Rng rng(derive_seed(seed, "few-shot"));
  std::vector<size_t> out;
  for (int k = 0; k < n_classes; ++k) {
    if (per_class[k].size() < static_cast<size_t>(shots))
      throw ConfigError("class " + std::to_string(k) + " has fewer samples than shots");
    rng.shuffle(per_class[k]);
    for (int s = 0; s < shots; ++s) out.push_back(per_class[k][s]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// --- binary dataset file ---
// Layout: "EEGW" u16 version=1, u16 K, u16 C, u32 N, f64 fs, u16 name count,
// names as (u16 len, bytes), then records of (u32 subject, i16 label,
// C*N f32). Record count is inferred from the byte length. An optional
// reversed trailer (json bytes, u32 len, "CFG0") carries the config.

namespace {

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(const char*& p, const char* end) {
  if (p + sizeof(T) > end) throw DataFormatError("truncated file");
  T v;
  std::memcpy(&v, p, sizeof(T));
  p += sizeof(T);
  return v;
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& ds, const std::string& config_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataFormatError("cannot open for writing: " + path);
  out.write("EEGW", 4);
  put<uint16_t>(out, 1);
  put<uint16_t>(out, static_cast<uint16_t>(ds.K));
  put<uint16_t>(out, static_cast<uint16_t>(ds.C));
  put<uint32_t>(out, ds.N);
  put<double>(out, ds.fs);
  put<uint16_t>(out, static_cast<uint16_t>(ds.class_names.size()));
  for (const auto& n : ds.class_names) {
    put<uint16_t>(out, static_cast<uint16_t>(n.size()));
    out.write(n.data(), static_cast<std::streamsize>(n.size()));
  }
  for (const auto& w : ds.windows) {
    put<uint32_t>(out, w.subject);
    put<int16_t>(out, w.label);
    for (double v : w.samples) put<float>(out, static_cast<float>(v));
  }
  if (!config_json.empty()) {
    out.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
    put<uint32_t>(out, static_cast<uint32_t>(config_json.size()));
    out.write("CFG0", 4);
  }
  if (!out) throw DataFormatError("write failed: " + path);
}

Dataset load_dataset(const std::string& path, std::string* config_json) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataFormatError("cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const char* p = bytes.data();
  const char* end = p + bytes.size();
  if (bytes.size() < 4 || std::memcmp(p, "EEGW", 4) != 0)
    throw DataFormatError("not a dataset file: " + path);
  p += 4;
  uint16_t version = take<uint16_t>(p, end);
  if (version != 1) throw DataFormatError("unsupported dataset version");
  Dataset ds;
  ds.K = take<uint16_t>(p, end);
  ds.C = take<uint16_t>(p, end);
  ds.N = take<uint32_t>(p, end);
  ds.fs = take<double>(p, end);
  uint16_t names = take<uint16_t>(p, end);
  for (uint16_t i = 0; i < names; ++i) {
    uint16_t len = take<uint16_t>(p, end);
    if (p + len > end) throw DataFormatError("truncated file");
    ds.class_names.emplace_back(p, len);
    p += len;
  }
  // Peel off the config trailer when present and consistent.
  const char* rec_end = end;
  size_t record = 4 + 2 + static_cast<size_t>(ds.C) * ds.N * 4;
  if (static_cast<size_t>(end - p) >= 8 && std::memcmp(end - 4, "CFG0", 4) == 0) {
    uint32_t len;
    std::memcpy(&len, end - 8, 4);
    if (static_cast<size_t>(end - p) >= 8 + static_cast<size_t>(len)) {
      const char* body_end = end - 8 - len;
      if (static_cast<size_t>(body_end - p) % record == 0) {
        if (config_json) config_json->assign(body_end, len);
        rec_end = body_end;
      }
    }
  }
  if (static_cast<size_t>(rec_end - p) % record != 0)
    throw DataFormatError("dataset record region has a partial record: " + path);
  size_t n = static_cast<size_t>(rec_end - p) / record;
  ds.windows.resize(n);
  for (size_t i = 0; i < n; ++i) {
    EegWindow& w = ds.windows[i];
    w.subject = take<uint32_t>(p, rec_end);
    w.label = take<int16_t>(p, rec_end);
    w.samples.resize(static_cast<size_t>(ds.C) * ds.N);
    for (double& v : w.samples) v = static_cast<double>(take<float>(p, rec_end));
  }
  return ds;
}

}  // namespace kdfshot
