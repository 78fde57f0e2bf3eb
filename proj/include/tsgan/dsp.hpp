#pragma once

// Radix-2 FFT spectra and windowed-sinc low-pass filtering.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "tsgan/error.hpp"

namespace tsgan::dsp {

struct Spectrum {
  std::vector<double> magnitudes;  // |Y_k|, k = 0..N/2
  double bin_hz = 0.0;             // rate / N
  std::size_t length = 0;          // N

  double frequency(std::size_t bin) const { return bin_hz * static_cast<double>(bin); }
};

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place iterative Cooley-Tukey, forward transform, no scaling.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n)) throw ParameterError("fft: length " + std::to_string(n) + " is not a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    // Twiddles computed directly rather than by recurrence to bound error at N = 4096.
    std::vector<std::complex<double>> w(half);
    for (std::size_t k = 0; k < half; ++k) w[k] = std::polar(1.0, angle * static_cast<double>(k));
    for (std::size_t start = 0; start < n; start += len)
      for (std::size_t k = 0; k < half; ++k) {
        const auto u = a[start + k];
        const auto v = a[start + k + half] * w[k];
        a[start + k] = u + v;
        a[start + k + half] = u - v;
      }
  }
}

inline std::vector<std::complex<double>> fft(std::span<const double> x) {
  std::vector<std::complex<double>> a(x.begin(), x.end());
  fft_inplace(a);
  return a;
}

inline Spectrum fft_magnitude(std::span<const double> window, double rate_hz) {
  if (!(rate_hz > 0.0)) throw ParameterError("fft_magnitude: rate_hz must be positive");
  const auto coeffs = fft(window);
  const std::size_t n = window.size();
  Spectrum s;
  s.length = n;
  s.bin_hz = rate_hz / static_cast<double>(n);
  s.magnitudes.resize(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) s.magnitudes[k] = std::abs(coeffs[k]);
  return s;
}

/// Frequency of the largest non-DC bin; the lowest bin wins ties.
inline double dominant_frequency(const Spectrum& s) {
  if (s.magnitudes.size() < 2) throw ParameterError("dominant_frequency: spectrum has no non-DC bins");
  std::size_t best = 1;
  for (std::size_t k = 2; k < s.magnitudes.size(); ++k)
    if (s.magnitudes[k] > s.magnitudes[best]) best = k;
  return s.frequency(best);
}

/// Windowed-sinc (Hamming) low-pass taps normalised to unit DC gain.
inline std::vector<double> design_lowpass(double cutoff_hz, double rate_hz, std::size_t taps) {
  if (!(rate_hz > 0.0) || !(cutoff_hz > 0.0)) throw ParameterError("lowpass: rates must be positive");
  if (cutoff_hz >= rate_hz / 2.0) throw ParameterError("lowpass: cutoff at or above Nyquist");
  if (taps % 2 == 0) throw ParameterError("lowpass: taps must be odd");

  const double fc = cutoff_hz / rate_hz;
  const auto mid = static_cast<double>(taps - 1) / 2.0;
  std::vector<double> h(taps);
  double total = 0.0;
  for (std::size_t n = 0; n < taps; ++n) {
    const double m = static_cast<double>(n) - mid;
    const double sinc = m == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
    const double window =
        taps == 1 ? 1.0 : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / (taps - 1.0));
    h[n] = sinc * window;
    total += h[n];
  }
  for (double& v : h) v /= total;
  return h;
}

/// |H(f)| of an FIR filter.
inline double frequency_response(std::span<const double> h, double freq_hz, double rate_hz) {
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t n = 0; n < h.size(); ++n)
    acc += h[n] * std::polar(1.0, -2.0 * std::numbers::pi * freq_hz * static_cast<double>(n) / rate_hz);
  return std::abs(acc);
}

/// Zero-phase FIR filtering: output i is centred on input i, with samples
/// beyond either end replaced by the nearest edge sample.
inline std::vector<double> apply_fir(std::span<const double> x, std::span<const double> h) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const auto half = static_cast<std::ptrdiff_t>(h.size() / 2);
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
      std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i) + half - static_cast<std::ptrdiff_t>(k);
      src = std::clamp<std::ptrdiff_t>(src, 0, static_cast<std::ptrdiff_t>(n) - 1);
      acc += h[k] * x[static_cast<std::size_t>(src)];
    }
    y[i] = acc;
  }
  return y;
}

inline std::vector<double> lowpass_fir(std::span<const double> window, double cutoff_hz, double rate_hz,
                                       std::size_t taps = 101) {
  return apply_fir(window, design_lowpass(cutoff_hz, rate_hz, taps));
}

}  // namespace tsgan::dsp
