#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "gaitkit/core.hpp"

namespace gaitkit {

// Second-order Butterworth low-pass biquad (bilinear transform).
struct Biquad {
  double b0, b1, b2, a1, a2;

  static Biquad lowpass(double cutoff_hz, double sample_rate_hz) {
    if (cutoff_hz <= 0.0 || cutoff_hz >= sample_rate_hz / 2.0)
      throw Error("cutoff must be in (0, nyquist)");
    double k = std::tan(M_PI * cutoff_hz / sample_rate_hz);
    double q = 1.0 / std::sqrt(2.0);
    double norm = 1.0 / (1.0 + k / q + k * k);
    Biquad f{};
    f.b0 = k * k * norm;
    f.b1 = 2.0 * f.b0;
    f.b2 = f.b0;
    f.a1 = 2.0 * (k * k - 1.0) * norm;
    f.a2 = (1.0 - k / q + k * k) * norm;
    return f;
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> y(x.size());
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    if (!x.empty()) {
      // start from steady state at x[0] (DC gain of the lowpass is 1)
      x1 = x2 = x[0];
      y1 = y2 = x[0];
    }
    for (size_t i = 0; i < x.size(); ++i) {
      double yi = b0 * x[i] + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = x[i];
      y2 = y1;
      y1 = yi;
      y[i] = yi;
    }
    return y;
  }
};

inline constexpr int kButterworthOrder = 2;

// Forward-backward zero-phase filtering with reflective padding of
// 3x the filter order on each side. Signals shorter than the padding
// are returned unchanged (warm-up not possible).
inline std::vector<double> filtfilt_lowpass(const std::vector<double>& x,
                                            double cutoff_hz,
                                            double sample_rate_hz,
                                            bool* skipped = nullptr) {
  const size_t pad = 3 * kButterworthOrder;
  if (skipped) *skipped = false;
  if (x.size() <= pad + 1) {
    if (skipped) *skipped = true;
    return x;
  }
  Biquad f = Biquad::lowpass(cutoff_hz, sample_rate_hz);
  std::vector<double> ext;
  ext.reserve(x.size() + 2 * pad);
  for (size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (size_t i = 1; i <= pad; ++i)
    ext.push_back(2.0 * x.back() - x[x.size() - 1 - i]);
  ext = f.apply(ext);
  std::reverse(ext.begin(), ext.end());
  ext = f.apply(ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + pad, ext.begin() + pad + x.size()};
}

// Central differences scaled by the sample rate; one-sided at the ends.
inline std::vector<double> derivative(const std::vector<double>& x,
                                      double sample_rate_hz) {
  std::vector<double> d(x.size(), 0.0);
  if (x.size() < 2) return d;
  const size_t n = x.size();
  d[0] = (x[1] - x[0]) * sample_rate_hz;
  d[n - 1] = (x[n - 1] - x[n - 2]) * sample_rate_hz;
  for (size_t i = 1; i + 1 < n; ++i)
    d[i] = (x[i + 1] - x[i - 1]) * 0.5 * sample_rate_hz;
  return d;
}

// Linear-interpolation percentile (q in [0,100]).
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) throw Error("percentile of empty vector");
  std::sort(v.begin(), v.end());
  double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(pos));
  size_t hi = std::min(lo + 1, v.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

struct Peak {
  size_t index;
  double value;
  double prominence;
};

// Local maxima with a minimum prominence. Plateaus report their first sample.
inline std::vector<Peak> find_peaks(const std::vector<double>& x,
                                    double min_prominence) {
  std::vector<Peak> peaks;
  const size_t n = x.size();
  if (n < 3) return peaks;
  for (size_t i = 1; i + 1 < n; ++i) {
    if (!(x[i] > x[i - 1])) continue;
    // walk over a possible plateau
    size_t j = i;
    while (j + 1 < n && x[j + 1] == x[i]) ++j;
    if (j + 1 >= n || !(x[j + 1] < x[i])) continue;
    // prominence: lowest point to the nearest higher ground on each side
    double left_min = x[i], right_min = x[i];
    for (size_t k = i; k-- > 0;) {
      if (x[k] > x[i]) break;
      left_min = std::min(left_min, x[k]);
    }
    for (size_t k = j + 1; k < n; ++k) {
      if (x[k] > x[i]) break;
      right_min = std::min(right_min, x[k]);
    }
    double prom = x[i] - std::max(left_min, right_min);
    if (prom >= min_prominence) peaks.push_back({i, x[i], prom});
    i = j;
  }
  return peaks;
}

inline std::vector<Peak> find_troughs(const std::vector<double>& x,
                                      double min_prominence) {
  std::vector<double> neg(x.size());
  for (size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
  std::vector<Peak> p = find_peaks(neg, min_prominence);
  for (Peak& pk : p) pk.value = -pk.value;
  return p;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Sample standard deviation (n-1 denominator); NaN for n < 2.
inline double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Coefficient of variation in percent; NaN when undefined.
inline double coeff_variation(const std::vector<double>& v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double m = mean(v);
  if (m == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * sample_sd(v) / std::abs(m);
}

// Unwraps an angle series (radians) to remove +/- pi jumps.
inline std::vector<double> unwrap(const std::vector<double>& x) {
  std::vector<double> out(x.size());
  if (x.empty()) return out;
  out[0] = x[0];
  double offset = 0.0;
  for (size_t i = 1; i < x.size(); ++i) {
    double d = x[i] - x[i - 1];
    if (d > M_PI) offset -= 2.0 * M_PI;
    else if (d < -M_PI) offset += 2.0 * M_PI;
    out[i] = x[i] + offset;
  }
  return out;
}

}  // namespace gaitkit
