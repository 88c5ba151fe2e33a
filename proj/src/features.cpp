#include "kdfshot/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "kdfshot/errors.hpp"
#include "kdfshot/wavelet.hpp"

namespace kdfshot {

namespace {

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Population central moments 2..4.
void central_moments(const std::vector<double>& x, double& m2, double& m3, double& m4) {
  double mu = mean_of(x);
  m2 = m3 = m4 = 0.0;
  for (double v : x) {
    double d = v - mu;
    double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  double n = static_cast<double>(x.size());
  m2 /= n;
  m3 /= n;
  m4 /= n;
}

double pop_var(const std::vector<double>& x) {
  double mu = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - mu) * (v - mu);
  return s / static_cast<double>(x.size());
}

std::vector<double> first_diff(const std::vector<double>& x) {
  std::vector<double> d(x.size() - 1);
  for (size_t i = 1; i < x.size(); ++i) d[i - 1] = x[i] - x[i - 1];
  return d;
}

// In-place radix-2 DIT FFT; sizes are powers of two.
void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
  size_t n = re.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * 3.14159265358979323846 / static_cast<double>(len);
    double wr = std::cos(ang), wi = std::sin(ang);
    for (size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (size_t k = 0; k < len / 2; ++k) {
        size_t a = i + k, b = i + k + len / 2;
        double tr = re[b] * cr - im[b] * ci;
        double ti = re[b] * ci + im[b] * cr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
        double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

// mean, population std, kurtosis (m4/m2^2, 0 on zero variance) of a slice.
void half_stats(const std::vector<double>& x, size_t lo, size_t hi, std::vector<double>& out) {
  std::vector<double> part(x.begin() + lo, x.begin() + hi);
  double m2, m3, m4;
  central_moments(part, m2, m3, m4);
  out.push_back(mean_of(part));
  out.push_back(std::sqrt(m2));
  out.push_back(m2 > 0.0 ? m4 / (m2 * m2) : 0.0);
}

double chebyshev(const double* a, const double* b, int m) {
  double d = 0.0;
  for (int k = 0; k < m; ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

// Mean log template-match fraction for ApEn (self-match included).
double apen_phi(const std::vector<double>& x, int m, double r) {
  int n = static_cast<int>(x.size());
  int count = n - m + 1;
  double phi = 0.0;
  for (int i = 0; i < count; ++i) {
    int matches = 0;
    for (int j = 0; j < count; ++j)
      if (chebyshev(&x[i], &x[j], m) <= r) ++matches;
    phi += std::log(static_cast<double>(matches) / static_cast<double>(count));
  }
  return phi / static_cast<double>(count);
}

}  // namespace

double curve_length(const std::vector<double>& x) {
  if (x.size() < 2) throw ConfigError("curve_length needs length >= 2");
  double s = 0.0;
  for (size_t i = 1; i < x.size(); ++i) s += std::abs(x[i] - x[i - 1]);
  return s;
}

double avg_nonlinear_energy(const std::vector<double>& x) {
  if (x.size() < 3) throw ConfigError("avg_nonlinear_energy needs length >= 3");
  double s = 0.0;
  for (size_t i = 1; i + 1 < x.size(); ++i)
    s += std::abs(x[i] * x[i] - x[i - 1] * x[i + 1]);
  return s / static_cast<double>(x.size() - 2);
}

TemporalStats temporal_stats(const std::vector<double>& x) {
  if (x.size() < 4) throw ConfigError("temporal_stats needs length >= 4");
  TemporalStats t;
  double sq = 0.0;
  for (double v : x) sq += v * v;
  t.rms = std::sqrt(sq / static_cast<double>(x.size()));
  for (size_t i = 1; i + 1 < x.size(); ++i) {
    double d1 = x[i] - x[i - 1];
    double d2 = x[i + 1] - x[i];
    if (d1 * d2 < 0.0) t.n_extrema += 1.0;
  }
  for (size_t i = 0; i + 1 < x.size(); ++i)
    if (x[i] * x[i + 1] < 0.0) t.zcr += 1.0;
  double m2, m3, m4;
  central_moments(x, m2, m3, m4);
  if (m2 > 0.0) {
    t.kurtosis = m4 / (m2 * m2);
    t.skewness = m3 / std::pow(m2, 1.5);
  }
  return t;
}

HjorthParams hjorth(const std::vector<double>& x) {
  if (x.size() < 3) throw ConfigError("hjorth needs length >= 3");
  HjorthParams h;
  double v0 = pop_var(x);
  h.activity = v0;
  if (v0 <= 0.0) return h;
  std::vector<double> d1 = first_diff(x);
  double v1 = pop_var(d1);
  h.mobility = std::sqrt(v1 / v0);
  if (v1 <= 0.0) return h;
  double v2 = pop_var(first_diff(d1));
  h.complexity = std::sqrt(v2 / v1) / h.mobility;
  return h;
}

SpectralFeats spectral_features(const std::vector<double>& x, double fs) {
  size_t n = x.size();
  if (n < 64 || (n & (n - 1)) != 0)
    throw ConfigError("spectral_features needs a power-of-two length >= 64");
  if (fs <= 0.0) throw ConfigError("spectral_features needs fs > 0");
  std::vector<double> re = x, im(n, 0.0);
  fft_radix2(re, im);
  // One-sided PSD: interior bins doubled; P integrates to mean power.
  size_t half = n / 2;
  std::vector<double> psd(half + 1);
  for (size_t k = 0; k <= half; ++k) {
    double c = (k == 0 || k == half) ? 1.0 : 2.0;
    psd[k] = c * (re[k] * re[k] + im[k] * im[k]) / (fs * static_cast<double>(n));
  }
  SpectralFeats sf;
  double total = 0.0, weighted = 0.0;
  double df = fs / static_cast<double>(n);
  for (size_t k = 0; k <= half; ++k) {
    total += psd[k];
    weighted += static_cast<double>(k) * df * psd[k];
  }
  if (total <= 0.0) return sf;
  sf.mean_pf = weighted / total;
  size_t kmax = 1, kmin = 1;
  for (size_t k = 2; k <= half; ++k) {
    if (psd[k] > psd[kmax]) kmax = k;
    if (psd[k] < psd[kmin]) kmin = k;
  }
  sf.max_pf = static_cast<double>(kmax) * df;
  sf.min_pf = static_cast<double>(kmin) * df;
  sf.total_power = total * df;
  return sf;
}

std::vector<double> timefreq_features(const std::vector<double>& x) {
  if (x.size() < 16 || x.size() % 8 != 0)
    throw ConfigError("timefreq_features needs length divisible by 8 and >= 16");
  DwtLevels lv = dwt_db5(x);
  std::vector<double> out;
  out.reserve(24);
  for (const auto* band : {&lv.a3, &lv.d3, &lv.d2, &lv.d1}) {
    size_t cut = (band->size() + 1) / 2;  // former half takes the ceiling
    half_stats(*band, 0, cut, out);
    half_stats(*band, cut, band->size(), out);
  }
  return out;
}

NonlinearFeats nonlinear_features(const std::vector<double>& x) {
  int n = static_cast<int>(x.size());
  if (n < 64) throw ConfigError("nonlinear_features needs length >= 64");
  NonlinearFeats nf;
  double sigma = std::sqrt(pop_var(x));
  if (sigma <= 0.0) return nf;  // apen 0, sampen 0, hurst 0.5
  double r = 0.2 * sigma;

  nf.apen = apen_phi(x, 2, r) - apen_phi(x, 3, r);

  // Richman-Moorman counting: both template lengths share the index range.
  long a = 0, b = 0;
  int m = 2;
  for (int i = 0; i < n - m; ++i) {
    for (int j = i + 1; j < n - m; ++j) {
      if (chebyshev(&x[i], &x[j], m) <= r) {
        ++b;
        if (std::abs(x[i + m] - x[j + m]) <= r) ++a;
      }
    }
  }
  nf.sampen = (a > 0 && b > 0) ? -std::log(static_cast<double>(a) / static_cast<double>(b)) : 0.0;

  // Rescaled-range slope over dyadic block sizes.
  std::vector<double> logn, logrs;
  for (int bs = 8; bs <= n / 2; bs *= 2) {
    int nblocks = n / bs;
    double rs_sum = 0.0;
    int rs_cnt = 0;
    for (int blk = 0; blk < nblocks; ++blk) {
      const double* seg = &x[blk * bs];
      double mu = 0.0;
      for (int i = 0; i < bs; ++i) mu += seg[i];
      mu /= bs;
      double cum = 0.0, lo = 0.0, hi = 0.0, ss = 0.0;
      for (int i = 0; i < bs; ++i) {
        cum += seg[i] - mu;
        lo = std::min(lo, cum);
        hi = std::max(hi, cum);
        ss += (seg[i] - mu) * (seg[i] - mu);
      }
      double sd = std::sqrt(ss / bs);
      if (sd > 0.0) {
        rs_sum += (hi - lo) / sd;
        ++rs_cnt;
      }
    }
    if (rs_cnt > 0 && rs_sum > 0.0) {
      logn.push_back(std::log(static_cast<double>(bs)));
      logrs.push_back(std::log(rs_sum / rs_cnt));
    }
  }
  if (logn.size() >= 2) {
    double mx = mean_of(logn), my = mean_of(logrs);
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < logn.size(); ++i) {
      sxx += (logn[i] - mx) * (logn[i] - mx);
      sxy += (logn[i] - mx) * (logrs[i] - my);
    }
    nf.hurst = sxy / sxx;
  }
  return nf;
}

std::vector<double> extract_features(const EegWindow& w, uint32_t C, uint32_t N, double fs) {
  if (w.samples.size() != static_cast<size_t>(C) * N)
    throw ConfigError("window sample count does not match C*N");
  std::vector<double> out;
  out.reserve(static_cast<size_t>(kFeaturesPerChannel) * C);
  for (uint32_t c = 0; c < C; ++c) {
    std::vector<double> x(w.samples.begin() + static_cast<size_t>(c) * N,
                          w.samples.begin() + static_cast<size_t>(c + 1) * N);
    out.push_back(curve_length(x));
    out.push_back(avg_nonlinear_energy(x));
    TemporalStats t = temporal_stats(x);
    out.push_back(t.rms);
    out.push_back(t.n_extrema);
    out.push_back(t.zcr);
    out.push_back(t.kurtosis);
    out.push_back(t.skewness);
    HjorthParams h = hjorth(x);
    out.push_back(h.activity);
    out.push_back(h.mobility);
    out.push_back(h.complexity);
    SpectralFeats s = spectral_features(x, fs);
    out.push_back(s.mean_pf);
    out.push_back(s.max_pf);
    out.push_back(s.min_pf);
    out.push_back(s.total_power);
    std::vector<double> tf = timefreq_features(x);
    out.insert(out.end(), tf.begin(), tf.end());
    NonlinearFeats nl = nonlinear_features(x);
    out.push_back(nl.apen);
    out.push_back(nl.sampen);
    out.push_back(nl.hurst);
  }
  for (double v : out)
    if (!std::isfinite(v)) throw NumericError("non-finite feature value");
  return out;
}

std::vector<double> extract_features(const Dataset& ds, size_t window_index) {
  return extract_features(ds.windows[window_index], ds.C, ds.N, ds.fs);
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v = {
        "curve_length", "avg_nonlinear_energy", "rms", "n_extrema", "zero_crossings",
        "kurtosis", "skewness", "hjorth_activity", "hjorth_mobility", "hjorth_complexity",
        "mean_power_freq", "max_power_freq", "min_power_freq", "total_power"};
    for (const char* band : {"a3", "d3", "d2", "d1"})
      for (const char* half : {"former", "later"})
        for (const char* stat : {"mean", "std", "kurt"})
          v.push_back(std::string(band) + "_" + half + "_" + stat);
    v.push_back("apen");
    v.push_back("sampen");
    v.push_back("hurst");
    return v;
  }();
  return names;
}

FeatureMatrix extract_features_all(const Dataset& ds) {
  FeatureMatrix fm;
  fm.n_rows = ds.size();
  fm.n_cols = static_cast<size_t>(kFeaturesPerChannel) * ds.C;
  fm.values.resize(fm.n_rows * fm.n_cols);
  for (size_t i = 0; i < fm.n_rows; ++i) {
    std::vector<double> f = extract_features(ds, i);
    std::copy(f.begin(), f.end(), fm.row(i));
  }
  return fm;
}

void save_feature_csv(const std::string& path, const Dataset& ds, const FeatureMatrix& fm,
                      const std::string& config_json) {
  if (fm.n_rows != ds.size()) throw ConfigError("feature rows do not match dataset");
  std::ofstream out(path);
  if (!out) throw DataFormatError("cannot open for writing: " + path);
  if (!config_json.empty()) out << "# " << config_json << "\n";
  out << "subject,label";
  char buf[40];
  for (size_t j = 0; j < fm.n_cols; ++j) {
    std::snprintf(buf, sizeof(buf), ",f%03zu", j);
    out << buf;
  }
  out << "\n";
  for (size_t i = 0; i < fm.n_rows; ++i) {
    out << ds.windows[i].subject << "," << ds.windows[i].label;
    for (size_t j = 0; j < fm.n_cols; ++j) {
      std::snprintf(buf, sizeof(buf), ",%.9g", fm.row(i)[j]);
      out << buf;
    }
    out << "\n";
  }
  if (!out) throw DataFormatError("write failed: " + path);
}

FeatureMatrix load_feature_csv(const std::string& path, std::vector<uint32_t>* subjects,
                               std::vector<int>* labels) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("cannot open: " + path);
  std::string line;
  // Skip comment lines, then require the header.
  do {
    if (!std::getline(in, line)) throw DataFormatError("missing header: " + path);
  } while (!line.empty() && line[0] == '#');
  if (line.rfind("subject,label", 0) != 0) throw DataFormatError("bad feature header: " + path);
  size_t n_cols = 0;
  for (char c : line)
    if (c == ',') ++n_cols;
  n_cols -= 1;  // subject,label columns
  FeatureMatrix fm;
  fm.n_cols = n_cols;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (!std::getline(ss, cell, ',')) throw DataFormatError("bad row: " + path);
    uint32_t subj = static_cast<uint32_t>(std::stoul(cell));
    if (!std::getline(ss, cell, ',')) throw DataFormatError("bad row: " + path);
    int lab = std::stoi(cell);
    size_t got = 0;
    while (std::getline(ss, cell, ',')) {
      fm.values.push_back(std::strtod(cell.c_str(), nullptr));
      ++got;
    }
    if (got != n_cols) throw DataFormatError("row width mismatch: " + path);
    if (subjects) subjects->push_back(subj);
    if (labels) labels->push_back(lab);
    ++fm.n_rows;
  }
  return fm;
}

FeatureNorm fit_feature_norm(const FeatureMatrix& fm) {
  if (fm.n_rows == 0) throw ConfigError("cannot fit normalization on an empty matrix");
  FeatureNorm norm;
  norm.mean.assign(fm.n_cols, 0.0);
  norm.stdev.assign(fm.n_cols, 0.0);
  for (size_t i = 0; i < fm.n_rows; ++i)
    for (size_t j = 0; j < fm.n_cols; ++j) norm.mean[j] += fm.row(i)[j];
  for (size_t j = 0; j < fm.n_cols; ++j) norm.mean[j] /= static_cast<double>(fm.n_rows);
  for (size_t i = 0; i < fm.n_rows; ++i)
    for (size_t j = 0; j < fm.n_cols; ++j) {
      double d = fm.row(i)[j] - norm.mean[j];
      norm.stdev[j] += d * d;
    }
  for (size_t j = 0; j < fm.n_cols; ++j) {
    norm.stdev[j] = std::sqrt(norm.stdev[j] / static_cast<double>(fm.n_rows));
    if (norm.stdev[j] <= 0.0) norm.stdev[j] = 1.0;
  }
  return norm;
}

void apply_feature_norm(const FeatureNorm& norm, FeatureMatrix& fm) {
  if (norm.mean.size() != fm.n_cols) throw ConfigError("normalization width mismatch");
  for (size_t i = 0; i < fm.n_rows; ++i)
    for (size_t j = 0; j < fm.n_cols; ++j)
      fm.row(i)[j] = (fm.row(i)[j] - norm.mean[j]) / norm.stdev[j];
}

}  // namespace kdfshot
