#pragma once

// Signal sources and windowing: synthetic sinusoids, single-column CSV
// ingestion, linear resampling and fixed-length segmentation.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "tsgan/error.hpp"

namespace tsgan {

struct TimeSeries {
  std::vector<double> samples;
  double rate_hz = 1.0;
  std::string label;
};

struct WindowSet {
  std::vector<std::vector<double>> windows;
  std::size_t window_len = 0;
  double rate_hz = 1.0;
  std::string provenance;

  std::size_t size() const noexcept { return windows.size(); }
};

/// Closed real interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

/// Parses the whole of `s` as a finite double.
inline bool parse_real(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace detail

/// Draws `count` windows A*sin(2*pi*f*n/rate + phase) with A, f uniform over
/// their ranges and phase uniform over [0, 2*pi). Window i uses its own
/// generator seeded with seed + i, so windows can be produced in any order.
inline WindowSet generate_sinusoids(std::size_t count, std::size_t window_len,
                                    Interval amp_range, Interval freq_range_hz,
                                    double rate_hz, std::uint64_t seed) {
  if (count == 0 || window_len == 0)
    throw ParameterError("generate_sinusoids: count and window_len must be positive");
  if (!(rate_hz > 0.0)) throw ParameterError("generate_sinusoids: rate_hz must be positive");
  if (amp_range.lo > amp_range.hi || freq_range_hz.lo > freq_range_hz.hi)
    throw ParameterError("generate_sinusoids: interval with lo > hi");
  if (!(amp_range.lo > 0.0) || !(freq_range_hz.lo > 0.0))
    throw ParameterError("generate_sinusoids: interval bounds must be positive");
  if (freq_range_hz.hi >= rate_hz / 2.0)
    throw ParameterError("generate_sinusoids: frequency at or above Nyquist (" +
                         std::to_string(rate_hz / 2.0) + " Hz)");

  WindowSet out;
  out.window_len = window_len;
  out.rate_hz = rate_hz;
  out.provenance = "sinusoid seed=" + std::to_string(seed);
  out.windows.reserve(count);

  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t w = 0; w < count; ++w) {
    std::mt19937_64 rng(seed + w);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double amp = amp_range.lo + (amp_range.hi - amp_range.lo) * unit(rng);
    const double freq = freq_range_hz.lo + (freq_range_hz.hi - freq_range_hz.lo) * unit(rng);
    const double phase = two_pi * unit(rng);

    std::vector<double> window(window_len);
    for (std::size_t n = 0; n < window_len; ++n)
      window[n] = amp * std::sin(two_pi * freq * static_cast<double>(n) / rate_hz + phase);
    out.windows.push_back(std::move(window));
  }
  return out;
}

/// Reads one real value per line. A first line that does not parse as a
/// number is treated as a header and skipped; blank lines are ignored.
inline TimeSeries load_csv(const std::string& path, double rate_hz) {
  if (!(rate_hz > 0.0)) throw ParameterError("load_csv: rate_hz must be positive");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  TimeSeries series;
  series.rate_hz = rate_hz;
  series.label = path;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto field = detail::trim(line);
    if (field.empty()) continue;
    double value = 0.0;
    if (detail::parse_real(field, value)) {
      series.samples.push_back(value);
      continue;
    }
    const bool header = line_no == 1 && !(std::isdigit(static_cast<unsigned char>(field.front())) ||
                                          field.front() == '-' || field.front() == '+' ||
                                          field.front() == '.');
    if (!header) throw ParseError(path + ": not a finite number: '" + std::string(field) + "'", line_no);
  }
  if (series.samples.empty()) throw ParseError(path + ": no samples", line_no);
  return series;
}

/// Linear interpolation onto a grid at `target_rate_hz` starting at t = 0.
/// Output length is floor((len - 1) * target / source) + 1.
inline TimeSeries resample_linear(const TimeSeries& series, double target_rate_hz) {
  if (series.samples.size() < 2) throw ParameterError("resample_linear: need at least 2 samples");
  if (!(target_rate_hz > 0.0) || !(series.rate_hz > 0.0))
    throw ParameterError("resample_linear: rates must be positive");

  const std::size_t len = series.samples.size();
  const double ratio = series.rate_hz / target_rate_hz;
  const double span = static_cast<double>(len - 1) * target_rate_hz / series.rate_hz;
  const auto out_len = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;

  TimeSeries out;
  out.rate_hz = target_rate_hz;
  out.label = series.label;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    auto j = static_cast<std::size_t>(std::floor(pos));
    if (j >= len - 1) {
      out.samples[i] = series.samples[len - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(j);
    const double a = series.samples[j];
    out.samples[i] = a + frac * (series.samples[j + 1] - a);
  }
  return out;
}

/// Windows at offsets 0, stride, 2*stride, ...; a trailing partial window is
/// dropped.
inline WindowSet segment(const TimeSeries& series, std::size_t window_len, std::size_t stride) {
  if (window_len == 0 || stride == 0)
    throw ParameterError("segment: window_len and stride must be positive");
  const std::size_t len = series.samples.size();
  if (window_len > len)
    throw ParameterError("segment: window_len " + std::to_string(window_len) +
                         " exceeds series length " + std::to_string(len));

  WindowSet out;
  out.window_len = window_len;
  out.rate_hz = series.rate_hz;
  out.provenance = series.label;
  const std::size_t count = (len - window_len) / stride + 1;
  out.windows.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto first = series.samples.begin() + static_cast<std::ptrdiff_t>(k * stride);
    out.windows.emplace_back(first, first + static_cast<std::ptrdiff_t>(window_len));
  }
  return out;
}

/// Keeps the first `len` samples of every window (used when a recording
/// window holds more samples than an image has pixels).
inline WindowSet truncate_windows(WindowSet set, std::size_t len) {
  if (len == 0 || len > set.window_len)
    throw ParameterError("truncate_windows: length must be in [1, window_len]");
  for (auto& w : set.windows) w.resize(len);
  set.window_len = len;
  return set;
}

}  // namespace tsgan
