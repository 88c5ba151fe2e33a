#!/usr/bin/env python3
"""Independent oracle for the 41-per-channel feature registry.

Generates a fixed two-channel window, computes every feature with plain
Python/numpy reimplementations of the published formulas, self-checks a few
analytic invariants, and freezes both the window and the expected feature
vector as CSV golden files. The C++ test reads the window file (never
regenerates it), so cross-language math library differences cannot leak in.

Run from the repository root:  python3 tests/oracles/feature_oracle.py
"""

import math
import struct

C = 2
N = 256
FS = 256.0
SEED = 7

# Frozen db5 analysis lowpass (pywt rec_lo convention), same constants the
# library pins; the transform code below is an independent implementation.
DB5_H = [
    0.160102397974125,
    0.6038292697974729,
    0.7243085284385744,
    0.13842814590110342,
    -0.24229488706619015,
    -0.03224486958502952,
    0.07757149384006515,
    -0.006241490213011705,
    -0.012580751999015526,
    0.0033357252850015492,
]
DB5_G = [((-1.0) ** m) * DB5_H[len(DB5_H) - 1 - m] for m in range(len(DB5_H))]


class SplitMix:
    """splitmix64 with the library's uniform/normal mappings."""

    def __init__(self, seed):
        self.state = seed & 0xFFFFFFFFFFFFFFFF
        self.spare = None

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        return z ^ (z >> 31)

    def uniform(self):
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def normal(self):
        if self.spare is not None:
            v, self.spare = self.spare, None
            return v
        u1 = self.uniform()
        u2 = self.uniform()
        while u1 <= 0.0:
            u1 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        a = 2.0 * math.pi * u2
        self.spare = r * math.sin(a)
        return r * math.cos(a)


def f32(v):
    return struct.unpack("f", struct.pack("f", v))[0]


def make_window():
    rng = SplitMix(SEED)
    chans = []
    two_pi = 2.0 * math.pi
    ch0 = []
    for t in range(N):
        tau = t / FS
        v = 1.2 * math.sin(two_pi * 7.3 * tau + 0.5) + 0.4 * math.sin(two_pi * 19.0 * tau)
        v += 0.3 * rng.normal()
        ch0.append(f32(v))
    chans.append(ch0)
    ch1 = []
    for t in range(N):
        tau = t / FS
        v = 0.8 * math.sin(two_pi * 11.0 * tau) * (1.0 + 0.3 * math.sin(two_pi * 0.7 * tau))
        g = rng.normal()
        v += 0.25 * g * g - 0.25 + 0.002 * t  # skewed noise plus a slow trend
        ch1.append(f32(v))
    chans.append(ch1)
    return chans


# ---- feature formulas, written directly from the definitions ----

def seq_sum(xs):
    s = 0.0
    for v in xs:
        s += v
    return s


def mean(xs):
    return seq_sum(xs) / len(xs)


def pop_var(xs):
    mu = mean(xs)
    return seq_sum([(v - mu) * (v - mu) for v in xs]) / len(xs)


def central_moments(xs):
    mu = mean(xs)
    m2 = seq_sum([(v - mu) ** 2 for v in xs]) / len(xs)
    m3 = seq_sum([(v - mu) ** 3 for v in xs]) / len(xs)
    m4 = seq_sum([(v - mu) ** 4 for v in xs]) / len(xs)
    return m2, m3, m4


def curve_length(x):
    return seq_sum([abs(x[i] - x[i - 1]) for i in range(1, len(x))])


def avg_nonlinear_energy(x):
    terms = [abs(x[i] * x[i] - x[i - 1] * x[i + 1]) for i in range(1, len(x) - 1)]
    return seq_sum(terms) / len(terms)


def temporal_stats(x):
    rms = math.sqrt(seq_sum([v * v for v in x]) / len(x))
    n_extrema = 0
    for i in range(1, len(x) - 1):
        if (x[i] - x[i - 1]) * (x[i + 1] - x[i]) < 0.0:
            n_extrema += 1
    zcr = sum(1 for i in range(len(x) - 1) if x[i] * x[i + 1] < 0.0)
    m2, m3, m4 = central_moments(x)
    kurt = m4 / (m2 * m2) if m2 > 0.0 else 0.0
    skew = m3 / m2 ** 1.5 if m2 > 0.0 else 0.0
    return rms, float(n_extrema), float(zcr), kurt, skew


def hjorth(x):
    v0 = pop_var(x)
    if v0 <= 0.0:
        return 0.0, 0.0, 0.0
    d1 = [x[i] - x[i - 1] for i in range(1, len(x))]
    v1 = pop_var(d1)
    mob = math.sqrt(v1 / v0)
    if v1 <= 0.0:
        return v0, mob, 0.0
    d2 = [d1[i] - d1[i - 1] for i in range(1, len(d1))]
    v2 = pop_var(d2)
    return v0, mob, math.sqrt(v2 / v1) / mob


def spectral(x, fs):
    n = len(x)
    # Direct DFT (O(n^2)) keeps this oracle free of FFT implementation details.
    half = n // 2
    psd = []
    for k in range(half + 1):
        re = 0.0
        im = 0.0
        for t in range(n):
            ang = -2.0 * math.pi * k * t / n
            re += x[t] * math.cos(ang)
            im += x[t] * math.sin(ang)
        c = 1.0 if (k == 0 or k == half) else 2.0
        psd.append(c * (re * re + im * im) / (fs * n))
    df = fs / n
    total = seq_sum(psd)
    if total <= 0.0:
        return 0.0, 0.0, 0.0, 0.0
    mean_pf = seq_sum([k * df * psd[k] for k in range(half + 1)]) / total
    kmax = 1
    kmin = 1
    for k in range(2, half + 1):
        if psd[k] > psd[kmax]:
            kmax = k
        if psd[k] < psd[kmin]:
            kmin = k
    return mean_pf, kmax * df, kmin * df, total * df


def dwt_step(x):
    n = len(x)
    a = [seq_sum([DB5_H[m] * x[(2 * k + m) % n] for m in range(10)]) for k in range(n // 2)]
    d = [seq_sum([DB5_G[m] * x[(2 * k + m) % n] for m in range(10)]) for k in range(n // 2)]
    return a, d


def timefreq(x):
    a1, d1 = dwt_step(x)
    a2, d2 = dwt_step(a1)
    a3, d3 = dwt_step(a2)
    out = []
    for band in (a3, d3, d2, d1):
        cut = (len(band) + 1) // 2
        for part in (band[:cut], band[cut:]):
            m2, _, m4 = central_moments(part)
            out.append(mean(part))
            out.append(math.sqrt(m2))
            out.append(m4 / (m2 * m2) if m2 > 0.0 else 0.0)
    return out


def chebyshev(x, i, j, m):
    return max(abs(x[i + k] - x[j + k]) for k in range(m))


def apen_phi(x, m, r):
    n = len(x)
    count = n - m + 1
    phi = 0.0
    for i in range(count):
        matches = 0
        for j in range(count):
            if chebyshev(x, i, j, m) <= r:
                matches += 1
        phi += math.log(matches / count)
    return phi / count


def nonlinear(x):
    n = len(x)
    sigma = math.sqrt(pop_var(x))
    if sigma <= 0.0:
        return 0.0, 0.0, 0.5
    r = 0.2 * sigma
    apen = apen_phi(x, 2, r) - apen_phi(x, 3, r)

    a = 0
    b = 0
    m = 2
    for i in range(n - m):
        for j in range(i + 1, n - m):
            if chebyshev(x, i, j, m) <= r:
                b += 1
                if abs(x[i + m] - x[j + m]) <= r:
                    a += 1
    sampen = -math.log(a / b) if (a > 0 and b > 0) else 0.0

    logn = []
    logrs = []
    bs = 8
    while bs <= n // 2:
        rs_sum = 0.0
        rs_cnt = 0
        for blk in range(n // bs):
            seg = x[blk * bs:(blk + 1) * bs]
            mu = mean(seg)
            cum = 0.0
            lo = 0.0
            hi = 0.0
            ss = 0.0
            for v in seg:
                cum += v - mu
                lo = min(lo, cum)
                hi = max(hi, cum)
                ss += (v - mu) * (v - mu)
            sd = math.sqrt(ss / bs)
            if sd > 0.0:
                rs_sum += (hi - lo) / sd
                rs_cnt += 1
        if rs_cnt > 0 and rs_sum > 0.0:
            logn.append(math.log(bs))
            logrs.append(math.log(rs_sum / rs_cnt))
        bs *= 2
    hurst = 0.5
    if len(logn) >= 2:
        mx = mean(logn)
        my = mean(logrs)
        sxx = seq_sum([(v - mx) ** 2 for v in logn])
        sxy = seq_sum([(logn[i] - mx) * (logrs[i] - my) for i in range(len(logn))])
        hurst = sxy / sxx
    return apen, sampen, hurst


def channel_features(x, fs):
    out = [curve_length(x), avg_nonlinear_energy(x)]
    out.extend(temporal_stats(x))
    out.extend(hjorth(x))
    out.extend(spectral(x, fs))
    out.extend(timefreq(x))
    out.extend(nonlinear(x))
    return out


FEATURE_NAMES = (
    ["curve_length", "avg_nonlinear_energy", "rms", "n_extrema", "zero_crossings",
     "kurtosis", "skewness", "hjorth_activity", "hjorth_mobility", "hjorth_complexity",
     "mean_power_freq", "max_power_freq", "min_power_freq", "total_power"]
    + [f"{band}_{half}_{stat}"
       for band in ("a3", "d3", "d2", "d1")
       for half in ("former", "later")
       for stat in ("mean", "std", "kurt")]
    + ["apen", "sampen", "hurst"]
)


def self_check():
    assert curve_length([0, 1, 0, 1]) == 3.0
    assert avg_nonlinear_energy([0, 1, 0, 1, 0]) == 1.0
    rms, _, zcr, _, _ = temporal_stats([1, -1, 1, -1])
    assert rms == 1.0 and zcr == 3.0

    # Parseval: integrated PSD equals time-domain mean power.
    sine = [2.0 * math.sin(2.0 * math.pi * 8.0 * t / 256.0) for t in range(256)]
    mean_pf, max_pf, _, total = spectral(sine, 256.0)
    assert abs(max_pf - 8.0) < 1e-12
    assert abs(mean_pf - 8.0) < 1e-9
    assert abs(total - 2.0) < 1e-9  # A^2/2 with A=2

    # DWT preserves energy and annihilates constants.
    probe = [math.sin(0.37 * t) + 0.1 * t % 3 for t in range(64)]
    a, d = dwt_step(probe)
    e0 = seq_sum([v * v for v in probe])
    e1 = seq_sum([v * v for v in a]) + seq_sum([v * v for v in d])
    assert abs(e0 - e1) < 1e-9 * e0
    _, dflat = dwt_step([5.0] * 32)
    assert max(abs(v) for v in dflat) < 1e-10

    assert len(FEATURE_NAMES) == 41


def main():
    self_check()
    window = make_window()
    meta = '{"channels": %d, "samples": %d, "fs": %g, "seed": %d}' % (C, N, FS, SEED)

    with open("tests/data/golden_window.csv", "w") as f:
        f.write("# " + meta + "\n")
        f.write("channel,index,value\n")
        for c in range(C):
            for t in range(N):
                f.write("%d,%d,%s\n" % (c, t, format(window[c][t], ".17g")))

    with open("tests/data/golden_features.csv", "w") as f:
        f.write("# " + meta + "\n")
        f.write("index,name,value\n")
        idx = 0
        for c in range(C):
            feats = channel_features(window[c], FS)
            assert len(feats) == 41
            for k, v in enumerate(feats):
                assert math.isfinite(v)
                f.write("%d,%s,%s\n" % (idx, FEATURE_NAMES[k], format(v, ".17g")))
                idx += 1

    print("wrote tests/data/golden_window.csv and tests/data/golden_features.csv")


if __name__ == "__main__":
    main()
