#pragma once

#include <array>
#include <vector>

namespace kdfshot {

// Orthonormal Daubechies-5 filter pair (10 taps). Analysis uses circular
// (periodic) extension, which keeps the transform exactly orthogonal for any
// even input length, so coefficient energy equals signal energy.
extern const std::array<double, 10> kDb5Lowpass;
extern const std::array<double, 10> kDb5Highpass;

struct DwtLevels {
  std::vector<double> a3, d3, d2, d1;
};

// One periodized analysis step: x (even length) -> approx, detail (length n/2).
void dwt_db5_step(const std::vector<double>& x, std::vector<double>& approx,
                  std::vector<double>& detail);

// Inverse of dwt_db5_step (adjoint of the orthonormal analysis).
std::vector<double> idwt_db5_step(const std::vector<double>& approx,
                                  const std::vector<double>& detail);

// 3-level periodized db5 decomposition. Length must be divisible by 8.
DwtLevels dwt_db5(const std::vector<double>& x);

// Full 3-level reconstruction; used by tests as a round-trip oracle.
std::vector<double> idwt_db5(const DwtLevels& levels);

}  // namespace kdfshot
