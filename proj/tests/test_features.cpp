#include "kdfshot/features.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "kdfshot/dataset.hpp"
#include "kdfshot/errors.hpp"

#define CHECK(cond)                                                          \
  do {                                                                       \
    if (!(cond)) {                                                           \
      std::fprintf(stderr, "FAILED %s:%d: %s\n", __FILE__, __LINE__, #cond); \
      std::exit(1);                                                          \
    }                                                                        \
  } while (0)

using namespace kdfshot;

namespace {

bool near(double a, double b, double tol = 1e-12) { return std::fabs(a - b) <= tol; }

bool rel_near(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max(1.0, std::fabs(b));
}

std::vector<double> sine(double freq, double amp, double fs, size_t n, double phase = 0.0) {
  std::vector<double> x(n);
  for (size_t t = 0; t < n; ++t)
    x[t] = amp * std::sin(2.0 * 3.14159265358979323846 * freq * t / fs + phase);
  return x;
}

}  // namespace

int main() {
  // Closed-form examples.
  CHECK(near(curve_length({5, 5, 5, 5}), 0.0));
  CHECK(near(curve_length({0, 1, 2, 3}), 3.0));
  CHECK(near(curve_length({0, 1, 0, 1}), 3.0));

  CHECK(near(avg_nonlinear_energy({2, 2, 2, 2}), 0.0));
  CHECK(near(avg_nonlinear_energy({0, 1, 0, 1, 0}), 1.0));
  CHECK(avg_nonlinear_energy({2, 1, 2, 1, 2}) >= 0.0);  // magnitude form

  {
    TemporalStats t = temporal_stats({1, -1, 1, -1});
    CHECK(near(t.rms, 1.0) && near(t.zcr, 3.0));
    TemporalStats flat = temporal_stats({3, 3, 3, 3});
    CHECK(near(flat.rms, 3.0) && near(flat.n_extrema, 0.0) && near(flat.zcr, 0.0));
    CHECK(near(flat.kurtosis, 0.0) && near(flat.skewness, 0.0));
    TemporalStats alt = temporal_stats({1, -1, 1, -1, 1, -1});
    CHECK(near(alt.kurtosis, 1.0));  // two-point symmetric distribution
    CHECK(near(alt.skewness, 0.0));
    CHECK(near(alt.n_extrema, 4.0));
  }

  {
    HjorthParams flat = hjorth({2, 2, 2, 2});
    CHECK(near(flat.activity, 0.0) && near(flat.mobility, 0.0) && near(flat.complexity, 0.0));
    std::vector<double> x = {0.1, 0.9, -0.4, 0.7, -1.2, 0.3, 0.8, -0.5};
    HjorthParams h = hjorth(x);
    std::vector<double> x3 = x;
    for (auto& v : x3) v *= 3.0;
    HjorthParams h3 = hjorth(x3);
    CHECK(rel_near(h3.activity, 9.0 * h.activity, 1e-12));
    CHECK(rel_near(h3.mobility, h.mobility, 1e-12));
    CHECK(rel_near(h3.complexity, h.complexity, 1e-12));
    CHECK(near(h.activity, 0.47859375, 1e-12));  // population variance
  }

  // Spectral: bin-aligned sine lands in one bin; Parseval ties the PSD
  // integral to time-domain power.
  {
    std::vector<double> x = sine(8.0, 1.0, 256.0, 256);
    SpectralFeats s = spectral_features(x, 256.0);
    CHECK(near(s.max_pf, 8.0));
    CHECK(near(s.mean_pf, 8.0, 1e-9));
    CHECK(rel_near(s.total_power, 0.5, 1e-9));  // A^2/2, A=1
    double mp = 0.0;
    for (double v : x) mp += v * v / x.size();
    CHECK(rel_near(s.total_power, mp, 1e-9));

    // Two tones: the stronger one wins max_pf.
    std::vector<double> two = sine(8.0, 1.0, 256.0, 256);
    std::vector<double> hi = sine(32.0, 2.0, 256.0, 256);
    for (size_t i = 0; i < two.size(); ++i) two[i] += hi[i];
    SpectralFeats s2 = spectral_features(two, 256.0);
    CHECK(near(s2.max_pf, 32.0));

    SpectralFeats z = spectral_features(std::vector<double>(256, 0.0), 256.0);
    CHECK(near(z.mean_pf, 0.0) && near(z.total_power, 0.0));
  }

  // Time-frequency block: 24 values; constants kill all detail features.
  {
    std::vector<double> flat(128, 1.5);
    std::vector<double> tf = timefreq_features(flat);
    CHECK(tf.size() == 24);
    for (size_t i = 6; i < 24; ++i) CHECK(near(tf[i], 0.0, 1e-10));
    CHECK(near(tf[0], 1.5 * std::sqrt(8.0), 1e-10));  // A3 mean carries 2^{3/2}
    CHECK(near(tf[1], 0.0, 1e-10) && near(tf[2], 0.0));
  }

  // Nonlinear: constants hit the degenerate rule; regular signals score as
  // more predictable than noisy ones.
  {
    NonlinearFeats flat = nonlinear_features(std::vector<double>(64, 1.0));
    CHECK(near(flat.apen, 0.0) && near(flat.sampen, 0.0) && near(flat.hurst, 0.5));

    std::vector<double> reg = sine(4.0, 1.0, 256.0, 256);
    std::vector<double> noisy = reg;
    unsigned long long s = 99;
    for (auto& v : noisy) {
      s = s * 6364136223846793005ULL + 1442695040888963407ULL;
      v += 0.8 * (static_cast<double>(s >> 11) * 0x1p-53 - 0.5);
    }
    NonlinearFeats a = nonlinear_features(reg);
    NonlinearFeats b = nonlinear_features(noisy);
    CHECK(a.apen < b.apen);
    CHECK(a.sampen < b.sampen);
    CHECK(std::isfinite(a.hurst) && std::isfinite(b.hurst));
  }

  // Registry shape and naming.
  {
    const auto& names = feature_names();
    CHECK(names.size() == static_cast<size_t>(kFeaturesPerChannel));
    CHECK(names[0] == "curve_length" && names[40] == "hurst");
    for (size_t i = 0; i < names.size(); ++i)
      for (size_t j = i + 1; j < names.size(); ++j) CHECK(names[i] != names[j]);
  }

  // Golden-file comparison against the independent Python oracle. The window
  // itself is read back from disk so both sides start from identical bits.
  {
    std::ifstream win("tests/data/golden_window.csv");
    CHECK(win.good());
    std::string line;
    std::getline(win, line);  // # config
    CHECK(line.rfind("# {", 0) == 0);
    std::getline(win, line);  // header
    EegWindow w;
    w.samples.assign(2 * 256, std::numeric_limits<double>::quiet_NaN());
    size_t rows = 0;
    while (std::getline(win, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      std::getline(ss, cell, ',');
      size_t c = std::stoul(cell);
      std::getline(ss, cell, ',');
      size_t t = std::stoul(cell);
      std::getline(ss, cell, ',');
      w.samples[c * 256 + t] = std::strtod(cell.c_str(), nullptr);
      ++rows;
    }
    CHECK(rows == 512);

    std::vector<double> got = extract_features(w, 2, 256, 256.0);
    CHECK(got.size() == 82);

    std::ifstream gf("tests/data/golden_features.csv");
    CHECK(gf.good());
    std::getline(gf, line);
    std::getline(gf, line);
    size_t checked = 0;
    double worst = 0.0;
    while (std::getline(gf, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell, name;
      std::getline(ss, cell, ',');
      size_t idx = std::stoul(cell);
      std::getline(ss, name, ',');
      std::getline(ss, cell, ',');
      double want = std::strtod(cell.c_str(), nullptr);
      CHECK(name == feature_names()[idx % 41]);
      double rel = std::fabs(got[idx] - want) / std::max(1.0, std::fabs(want));
      worst = std::max(worst, rel);
      CHECK(rel <= 1e-6);
      ++checked;
    }
    CHECK(checked == 82);
    std::printf("golden features: worst relative error %.3g\n", worst);
  }

  // Channel independence: permuting channels permutes the 41-blocks.
  {
    EegWindow w;
    w.samples.resize(2 * 128);
    for (size_t t = 0; t < 128; ++t) {
      w.samples[t] = std::sin(0.21 * t) + 0.01 * t;
      w.samples[128 + t] = std::cos(0.13 * t);
    }
    EegWindow swapped;
    swapped.samples.resize(2 * 128);
    std::copy(w.samples.begin() + 128, w.samples.end(), swapped.samples.begin());
    std::copy(w.samples.begin(), w.samples.begin() + 128, swapped.samples.begin() + 128);
    std::vector<double> f1 = extract_features(w, 2, 128, 128.0);
    std::vector<double> f2 = extract_features(swapped, 2, 128, 128.0);
    for (size_t i = 0; i < 41; ++i) {
      CHECK(f1[i] == f2[41 + i]);
      CHECK(f1[41 + i] == f2[i]);
    }
  }

  // Non-finite input is rejected.
  {
    EegWindow w;
    w.samples.assign(128, 0.5);
    w.samples[3] = std::numeric_limits<double>::quiet_NaN();
    bool threw = false;
    try {
      extract_features(w, 1, 128, 128.0);
    } catch (const NumericError&) {
      threw = true;
    }
    CHECK(threw);
  }

  // Normalization round trip: fitted stats standardize the matrix.
  {
    FeatureMatrix fm;
    fm.n_rows = 3;
    fm.n_cols = 2;
    fm.values = {1.0, 10.0, 2.0, 20.0, 3.0, 30.0};
    FeatureNorm norm = fit_feature_norm(fm);
    CHECK(near(norm.mean[0], 2.0) && near(norm.mean[1], 20.0));
    apply_feature_norm(norm, fm);
    CHECK(near(fm.row(0)[0] + fm.row(2)[0], 0.0));
    CHECK(near(fm.row(1)[0], 0.0) && near(fm.row(1)[1], 0.0));
  }

  // CSV round trip preserves values at %.9g resolution and metadata exactly.
  {
    Dataset ds;
    ds.K = 2;
    ds.C = 1;
    ds.N = 128;
    ds.fs = 128.0;
    ds.class_names = {"a", "b"};
    for (int i = 0; i < 3; ++i) {
      EegWindow w;
      w.subject = static_cast<uint32_t>(10 + i);
      w.label = static_cast<int16_t>(i % 2);
      w.samples.resize(128);
      for (size_t t = 0; t < 128; ++t) w.samples[t] = std::sin(0.1 * (t + 1) * (i + 1));
      ds.windows.push_back(w);
    }
    FeatureMatrix fm = extract_features_all(ds);
    CHECK(fm.n_rows == 3 && fm.n_cols == 41);
    save_feature_csv("/tmp/kdfshot_feat_test.csv", ds, fm, "{\"note\":\"test\"}");
    std::vector<uint32_t> subjects;
    std::vector<int> labels;
    FeatureMatrix back = load_feature_csv("/tmp/kdfshot_feat_test.csv", &subjects, &labels);
    CHECK(back.n_rows == 3 && back.n_cols == 41);
    CHECK(subjects[0] == 10 && subjects[2] == 12);
    CHECK(labels[0] == 0 && labels[1] == 1);
    for (size_t i = 0; i < fm.values.size(); ++i)
      CHECK(rel_near(back.values[i], fm.values[i], 1e-8));
  }

  std::printf("test_features: all passed\n");
  return 0;
}
