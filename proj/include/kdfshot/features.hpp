#pragma once

#include <string>
#include <vector>

#include "kdfshot/dataset.hpp"

namespace kdfshot {

// Identifies the feature ordering below; bump when the registry changes.
inline constexpr const char* kFeatureRegistryVersion = "kdfshot-41-v1";
inline constexpr int kFeaturesPerChannel = 41;

struct TemporalStats {
  double rms = 0.0;
  double n_extrema = 0.0;
  double zcr = 0.0;
  double kurtosis = 0.0;  // m4/m2^2, no excess subtraction; 0 on zero variance
  double skewness = 0.0;  // m3/m2^1.5; 0 on zero variance
};

struct HjorthParams {
  double activity = 0.0;
  double mobility = 0.0;
  double complexity = 0.0;
};

struct SpectralFeats {
  double mean_pf = 0.0;
  double max_pf = 0.0;
  double min_pf = 0.0;  // frequency of the smallest PSD bin, DC excluded
  double total_power = 0.0;
};

struct NonlinearFeats {
  double apen = 0.0;
  double sampen = 0.0;
  double hurst = 0.5;
};

// Sum of absolute first differences. Requires length >= 2.
double curve_length(const std::vector<double>& x);

// Mean Teager energy magnitude |x[i]^2 - x[i-1]*x[i+1]| over interior samples,
// so the value is nonnegative for every input. Length >= 3.
double avg_nonlinear_energy(const std::vector<double>& x);

// rms, local-extrema count (strict sign changes of the first difference),
// zero-crossing count, kurtosis, skewness. Requires length >= 4.
TemporalStats temporal_stats(const std::vector<double>& x);

// Hjorth activity/mobility/complexity with population variances. Length >= 3.
// Zero-variance denominators give 0 instead of dividing.
HjorthParams hjorth(const std::vector<double>& x);

// Single-segment rectangular periodogram over [0, fs/2]. Length must be a
// power of two >= 64. All-zero input maps every feature to 0.
SpectralFeats spectral_features(const std::vector<double>& x, double fs);

// Mean, standard deviation (population) and kurtosis of the former and later
// half of each of A3,D3,D2,D1, in that fixed order (24 values). The former
// half takes the ceiling when a coefficient vector has odd length.
// Requires length divisible by 8 and >= 16.
std::vector<double> timefreq_features(const std::vector<double>& x);

// ApEn(m=2, r=0.2*sigma) and SampEn(m=2, r=0.2*sigma) with Chebyshev template
// distance; Hurst exponent via rescaled-range regression over dyadic block
// sizes >= 8. Length >= 64. sigma=0 maps to (0, 0, 0.5).
NonlinearFeats nonlinear_features(const std::vector<double>& x);

// Per channel, 41 features in registry order: 10 temporal, 4 spectral,
// 24 time-frequency, 3 nonlinear; channels concatenated channel-major.
// N must be a power of two >= 64. Output is always finite.
std::vector<double> extract_features(const EegWindow& w, uint32_t C, uint32_t N, double fs);
std::vector<double> extract_features(const Dataset& ds, size_t window_index);

// Feature names for one channel, registry order (41 entries).
const std::vector<std::string>& feature_names();

// Feature matrix for a whole dataset, one row per window.
struct FeatureMatrix {
  size_t n_rows = 0;
  size_t n_cols = 0;
  std::vector<double> values;  // row-major

  double* row(size_t r) { return values.data() + r * n_cols; }
  const double* row(size_t r) const { return values.data() + r * n_cols; }
};

FeatureMatrix extract_features_all(const Dataset& ds);

// Feature cache CSV: header `subject,label,f000..f(41C-1)`, 9 significant
// digits. `config_json`, when nonempty, is written as a leading `#` comment.
void save_feature_csv(const std::string& path, const Dataset& ds, const FeatureMatrix& fm,
                      const std::string& config_json = "");
FeatureMatrix load_feature_csv(const std::string& path, std::vector<uint32_t>* subjects = nullptr,
                               std::vector<int>* labels = nullptr);

// Per-feature z-score statistics; zero-variance features store std 1.
struct FeatureNorm {
  std::vector<double> mean;
  std::vector<double> stdev;
};

FeatureNorm fit_feature_norm(const FeatureMatrix& fm);
void apply_feature_norm(const FeatureNorm& norm, FeatureMatrix& fm);

}  // namespace kdfshot
