#include "kdfshot/wavelet.hpp"

#include "kdfshot/errors.hpp"

namespace kdfshot {

// Daubechies-5 scaling filter, sqrt(2)-normalized (sum = sqrt 2, energy = 1).
const std::array<double, 10> kDb5Lowpass = {
    0.160102397974125,     0.6038292697974729,   0.7243085284385744,
    0.13842814590110342,   -0.24229488706619015, -0.03224486958502952,
    0.07757149384006515,   -0.006241490213011705, -0.012580751999015526,
    0.0033357252850015492};

namespace {
std::array<double, 10> qmf(const std::array<double, 10>& h) {
  std::array<double, 10> g{};
  for (size_t m = 0; m < h.size(); ++m)
    g[m] = ((m & 1) ? -1.0 : 1.0) * h[h.size() - 1 - m];
  return g;
}
}  // namespace

const std::array<double, 10> kDb5Highpass = qmf(kDb5Lowpass);

void dwt_db5_step(const std::vector<double>& x, std::vector<double>& approx,
                  std::vector<double>& detail) {
  size_t n = x.size();
  if (n < 2 || (n & 1)) throw ConfigError("dwt step needs even input length");
  size_t half = n / 2;
  approx.assign(half, 0.0);
  detail.assign(half, 0.0);
  for (size_t k = 0; k < half; ++k) {
    double a = 0.0, d = 0.0;
    for (size_t m = 0; m < kDb5Lowpass.size(); ++m) {
      double xv = x[(2 * k + m) % n];
      a += kDb5Lowpass[m] * xv;
      d += kDb5Highpass[m] * xv;
    }
    approx[k] = a;
    detail[k] = d;
  }
}

std::vector<double> idwt_db5_step(const std::vector<double>& approx,
                                  const std::vector<double>& detail) {
  if (approx.size() != detail.size() || approx.empty())
    throw ConfigError("idwt step needs equal nonempty halves");
  size_t half = approx.size();
  size_t n = 2 * half;
  std::vector<double> x(n, 0.0);
  for (size_t k = 0; k < half; ++k) {
    for (size_t m = 0; m < kDb5Lowpass.size(); ++m) {
      size_t i = (2 * k + m) % n;
      x[i] += kDb5Lowpass[m] * approx[k] + kDb5Highpass[m] * detail[k];
    }
  }
  return x;
}

DwtLevels dwt_db5(const std::vector<double>& x) {
  if (x.size() < 8 || x.size() % 8 != 0)
    throw ConfigError("3-level dwt needs length divisible by 8");
  DwtLevels out;
  std::vector<double> a1, a2;
  dwt_db5_step(x, a1, out.d1);
  dwt_db5_step(a1, a2, out.d2);
  dwt_db5_step(a2, out.a3, out.d3);
  return out;
}

std::vector<double> idwt_db5(const DwtLevels& levels) {
  std::vector<double> a2 = idwt_db5_step(levels.a3, levels.d3);
  std::vector<double> a1 = idwt_db5_step(a2, levels.d2);
  return idwt_db5_step(a1, levels.d1);
}

}  // namespace kdfshot
