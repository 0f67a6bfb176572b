#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "edacam/errors.hpp"

namespace edacam {

// A uniformly sampled scalar signal.
struct Series {
  std::vector<double> values;
  double fs = 0.0;           // Hz
  std::string units;

  double duration_s() const {
    return values.empty() ? 0.0 : static_cast<double>(values.size()) / fs;
  }
};

inline void validate_series(const Series& s, const std::string& name) {
  if (s.fs <= 0.0) throw IntegrityError(name + ": sampling rate must be > 0");
  if (s.values.size() < 2) throw IntegrityError(name + ": needs at least 2 samples");
  for (double v : s.values)
    if (!std::isfinite(v)) throw IntegrityError(name + ": non-finite sample");
}

// Value at time t (seconds) by linear interpolation; clamps outside the range.
inline double sample_at(const Series& s, double t) {
  const double x = t * s.fs;
  if (x <= 0.0) return s.values.front();
  const double last = static_cast<double>(s.values.size() - 1);
  if (x >= last) return s.values.back();
  const std::size_t i = static_cast<std::size_t>(x);
  const double frac = x - static_cast<double>(i);
  return s.values[i] * (1.0 - frac) + s.values[i + 1] * frac;
}

// Resample to a new rate by linear interpolation over the common duration.
inline Series resample_linear(const Series& s, double new_fs) {
  if (new_fs <= 0.0) throw ConfigError("resample_linear: target rate must be > 0");
  Series out;
  out.fs = new_fs;
  out.units = s.units;
  const std::size_t n = static_cast<std::size_t>(
      std::floor((static_cast<double>(s.values.size() - 1) / s.fs) * new_fs)) + 1;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.values[i] = sample_at(s, static_cast<double>(i) / new_fs);
  return out;
}

inline std::vector<double> cumulative_sum(const std::vector<double>& x) {
  std::vector<double> out(x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += x[i];
    out[i] = acc;
  }
  return out;
}

inline std::vector<double> diff(const std::vector<double>& x) {
  if (x.size() < 2) return {};
  std::vector<double> out(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) out[i] = x[i + 1] - x[i];
  return out;
}

// ---------------------------------------------------------------------------
// Order-1 Butterworth band-pass (a single biquad), bilinear transform with
// frequency pre-warping.
struct Biquad {
  double b0, b1, b2, a1, a2;  // a0 normalized to 1
};

inline Biquad butter_bandpass(double f_lo, double f_hi, double fs) {
  if (!(0.0 < f_lo && f_lo < f_hi && f_hi < fs / 2.0))
    throw ConfigError("butter_bandpass: need 0 < lo < hi < fs/2");
  const double k = 2.0 * fs;
  const double w1 = k * std::tan(M_PI * f_lo / fs);
  const double w2 = k * std::tan(M_PI * f_hi / fs);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;
  const double a0 = k * k + bw * k + w0sq;
  Biquad q;
  q.b0 = bw * k / a0;
  q.b1 = 0.0;
  q.b2 = -bw * k / a0;
  q.a1 = 2.0 * (w0sq - k * k) / a0;
  q.a2 = (k * k - bw * k + w0sq) / a0;
  return q;
}

inline std::vector<double> biquad_filter(const Biquad& q, const std::vector<double>& x) {
  std::vector<double> y(x.size());
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double yi = q.b0 * x[i] + q.b1 * x1 + q.b2 * x2 - q.a1 * y1 - q.a2 * y2;
    x2 = x1; x1 = x[i];
    y2 = y1; y1 = yi;
    y[i] = yi;
  }
  return y;
}

// Zero-phase filtering: odd-reflection padding, forward pass, backward pass.
inline std::vector<double> filtfilt(const Biquad& q, const std::vector<double>& x) {
  if (x.size() < 4) return biquad_filter(q, x);
  const std::size_t pad = std::min<std::size_t>(x.size() - 1, 100);
  std::vector<double> ext;
  ext.reserve(x.size() + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 2; i <= pad + 1; ++i)
    ext.push_back(2.0 * x.back() - x[x.size() - i]);
  auto y = biquad_filter(q, ext);
  std::reverse(y.begin(), y.end());
  y = biquad_filter(q, y);
  std::reverse(y.begin(), y.end());
  return std::vector<double>(y.begin() + pad, y.begin() + pad + x.size());
}

// ---------------------------------------------------------------------------
// Direct-DFT helpers. Signals here are short enough that O(N*bins) is fine
// and it keeps the spectral tests free of padding artifacts.

// Least-squares amplitude of a sinusoid of known frequency.
inline double sinusoid_amplitude(const std::vector<double>& x, double fs, double f) {
  double c = 0.0, s = 0.0;
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ph = 2.0 * M_PI * f * static_cast<double>(i) / fs;
    c += (x[i] - mean) * std::cos(ph);
    s += (x[i] - mean) * std::sin(ph);
  }
  return 2.0 * std::sqrt(c * c + s * s) / static_cast<double>(n);
}

// Fraction of (mean-removed, Hann-windowed) spectral energy inside [lo, hi].
inline double band_energy_fraction(const std::vector<double>& x, double fs,
                                   double lo, double hi) {
  const std::size_t n = x.size();
  if (n < 8) throw InsufficientDataError("band_energy_fraction: signal too short");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                             static_cast<double>(n - 1));
    w[i] = (x[i] - mean) * hann;
  }
  const std::size_t half = n / 2;
  double total = 0.0, inband = 0.0;
  for (std::size_t j = 1; j <= half; ++j) {
    double c = 0.0, s = 0.0;
    const double step = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double ph = step * static_cast<double>(i);
      c += w[i] * std::cos(ph);
      s += w[i] * std::sin(ph);
    }
    const double p = c * c + s * s;
    const double f = static_cast<double>(j) * fs / static_cast<double>(n);
    total += p;
    if (f >= lo && f <= hi) inband += p;
  }
  if (total <= 0.0) throw UndefinedCorrelationError("band_energy_fraction: zero energy");
  return inband / total;
}

// Projection of x onto the Fourier modes whose frequency lies in [lo, hi].
// The modes are orthogonal on the uniform grid, so this equals zeroing all
// out-of-band DFT bins.
inline std::vector<double> project_onto_band(const std::vector<double>& x, double fs,
                                             double lo, double hi) {
  const std::size_t n = x.size();
  const double df = fs / static_cast<double>(n);
  std::vector<double> out(n, 0.0);
  const std::size_t j_lo = static_cast<std::size_t>(std::ceil(lo / df));
  const std::size_t j_hi = std::min<std::size_t>(
      static_cast<std::size_t>(std::floor(hi / df)), n / 2 - 1);
  for (std::size_t j = j_lo; j <= j_hi; ++j) {
    double c = 0.0, s = 0.0;
    const double step = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double ph = step * static_cast<double>(i);
      c += x[i] * std::cos(ph);
      s += x[i] * std::sin(ph);
    }
    const double ac = 2.0 * c / static_cast<double>(n);
    const double as = 2.0 * s / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double ph = step * static_cast<double>(i);
      out[i] += ac * std::cos(ph) + as * std::sin(ph);
    }
  }
  return out;
}

}  // namespace edacam
