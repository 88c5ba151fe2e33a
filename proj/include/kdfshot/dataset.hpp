#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace kdfshot {

// One fixed-length multichannel window. `samples` is channel-major: row c
// holds samples [c*N, (c+1)*N). Label -1 means unlabeled.
struct EegWindow {
  uint32_t subject = 0;
  int16_t label = -1;
  std::vector<double> samples;
};

struct Dataset {
  uint32_t K = 0;  // number of classes
  uint32_t C = 0;  // channels
  uint32_t N = 0;  // samples per channel
  double fs = 0.0;
  std::vector<std::string> class_names;
  std::vector<EegWindow> windows;

  size_t size() const { return windows.size(); }
  const double* channel(size_t w, size_t c) const { return windows[w].samples.data() + c * N; }
  std::vector<uint32_t> subjects() const;  // distinct subject ids, ascending
};

// Controllable synthetic domain shift, applied on top of the clean generator.
// freq_jitter_hz shifts every class signature frequency by that amount in the
// shifted domain; channel_drop_p zeroes each channel independently.
struct ShiftSpec {
  double amplitude_scale = 1.0;
  double noise_sigma = 0.0;
  double freq_jitter_hz = 0.0;
  double channel_drop_p = 0.0;

  bool is_identity() const {
    return amplitude_scale == 1.0 && noise_sigma == 0.0 && freq_jitter_hz == 0.0 &&
           channel_drop_p == 0.0;
  }
};

// Desk-scale defaults for the synthetic EEG-like corpus.
struct SynthConfig {
  uint32_t K = 4;
  uint32_t C = 8;
  uint32_t N = 256;
  double fs = 256.0;
  uint32_t n_per_class = 60;
  uint32_t n_subjects = 12;
};

// Default shift used for the transfer experiment.
ShiftSpec default_shift();

// Deterministic pure function of (config, shift, seed). Class k windows are a
// class-signature oscillation with per-class channel topography plus pink and
// white noise, transformed by `shift`. Subjects are assigned round-robin.
Dataset generate_synthetic(const SynthConfig& cfg, const ShiftSpec& shift, uint64_t seed);

// Stratified split of one dataset into {main, holdout}: the last
// `n_holdout_per_class` windows of each class (in dataset order) form the
// holdout. Both parts keep the full domain (topographies, subject pool);
// use this to carve train/eval splits out of a single generator draw.
// Throws ConfigError when a class cannot spare n_holdout windows.
std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, uint32_t n_holdout_per_class);

// Subject-wise fold assignment: returns fold index per entry of `subjects`.
// Folds partition subjects; no subject straddles folds.
std::vector<int> make_folds(const std::vector<uint32_t>& subjects, int k_folds, uint64_t seed);

// Windows whose subject's fold matches (keep=true) or differs (keep=false).
Dataset filter_by_fold(const Dataset& ds, const std::vector<uint32_t>& subjects,
                       const std::vector<int>& folds, int fold, bool keep);

// Draws exactly `shots` indices per class from `labels` (stratified, seeded).
// Throws ConfigError when a class has fewer than `shots` samples.
std::vector<size_t> sample_few_shot(const std::vector<int>& labels, int n_classes, int shots,
                                    uint64_t seed);

// Binary dataset file ("EEGW"). `config_json`, when nonempty, is embedded as a
// trailing reproducibility footer and returned verbatim on load.
void save_dataset(const std::string& path, const Dataset& ds, const std::string& config_json = "");
Dataset load_dataset(const std::string& path, std::string* config_json = nullptr);

}  // namespace kdfshot
