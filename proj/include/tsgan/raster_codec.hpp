#pragma once

// Amplitude window <-> 8-bit grayscale raster image, plus binary PGM and
// `.spec` sidecar I/O. Sample i of a window is pixel i in row-major order.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tsgan/error.hpp"
#include "tsgan/signals.hpp"

namespace tsgan {

/// Affine amplitude range mapped onto gray levels 0..levels-1.
struct QuantizationSpec {
  double lo = -1.0;
  double hi = 1.0;
  int levels = 256;

  double step() const noexcept { return (hi - lo) / (levels - 1); }
  bool operator==(const QuantizationSpec&) const = default;
};

struct RasterImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, width * height
  QuantizationSpec spec;

  bool operator==(const RasterImage&) const = default;
};

inline void validate(const QuantizationSpec& spec) {
  if (!(spec.lo < spec.hi) || !std::isfinite(spec.lo) || !std::isfinite(spec.hi))
    throw ParameterError("quantization spec requires finite lo < hi");
  if (spec.levels != 256) throw ParameterError("quantization spec requires levels == 256");
}

inline std::uint8_t quantize(double sample, const QuantizationSpec& spec) {
  const double c = std::clamp(sample, spec.lo, spec.hi);
  // std::round rounds half away from zero.
  const double p = std::round((c - spec.lo) / (spec.hi - spec.lo) * 255.0);
  return static_cast<std::uint8_t>(std::clamp(p, 0.0, 255.0));
}

inline double dequantize(std::uint8_t pixel, const QuantizationSpec& spec) {
  return spec.lo + static_cast<double>(pixel) / 255.0 * (spec.hi - spec.lo);
}

inline RasterImage encode(std::span<const double> window, const QuantizationSpec& spec,
                          std::size_t width, std::size_t height) {
  validate(spec);
  if (width == 0 || height == 0) throw ParameterError("encode: image dims must be positive");
  if (window.size() != width * height)
    throw ParameterError("encode: window length " + std::to_string(window.size()) +
                         " != " + std::to_string(width) + "x" + std::to_string(height));
  RasterImage img{width, height, std::vector<std::uint8_t>(window.size()), spec};
  std::transform(window.begin(), window.end(), img.pixels.begin(),
                 [&](double s) { return quantize(s, spec); });
  return img;
}

inline std::vector<double> decode(const RasterImage& image) {
  validate(image.spec);
  if (image.pixels.size() != image.width * image.height)
    throw ParameterError("decode: pixel count does not match dims");
  std::vector<double> out(image.pixels.size());
  std::transform(image.pixels.begin(), image.pixels.end(), out.begin(),
                 [&](std::uint8_t p) { return dequantize(p, image.spec); });
  return out;
}

/// Dataset-wide range: min/max over every sample of every window. A
/// constant dataset is widened by 0.5 either side so that lo < hi holds.
inline QuantizationSpec fit_spec(const WindowSet& set) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& w : set.windows)
    for (double s : w) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw ParameterError("fit_spec: empty window set");
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return {lo, hi, 256};
}

// ---------------------------------------------------------------------------
// PGM (P5, maxval 255)

inline void write_pgm(const RasterImage& image, const std::string& path) {
  if (image.pixels.size() != image.width * image.height)
    throw ParameterError("write_pgm: pixel count does not match dims");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("write failed: " + path);
}

namespace detail {

// Reads one whitespace-delimited header token, skipping '#' comments.
inline std::string pgm_token(const std::vector<char>& buf, std::size_t& pos) {
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (pos < buf.size()) {
    if (is_space(buf[pos])) {
      ++pos;
    } else if (buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < buf.size() && !is_space(buf[pos]) && buf[pos] != '#') tok.push_back(buf[pos++]);
  return tok;
}

inline std::size_t pgm_number(const std::string& tok, const std::string& path) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size())
    throw FormatError(path + ": bad PGM header field '" + tok + "'");
  return v;
}

}  // namespace detail

inline RasterImage read_pgm(const std::string& path, const QuantizationSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::vector<char> buf{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};

  std::size_t pos = 0;
  if (detail::pgm_token(buf, pos) != "P5") throw FormatError(path + ": not a binary PGM (P5)");
  const auto width = detail::pgm_number(detail::pgm_token(buf, pos), path);
  const auto height = detail::pgm_number(detail::pgm_token(buf, pos), path);
  const auto maxval = detail::pgm_number(detail::pgm_token(buf, pos), path);
  if (width == 0 || height == 0) throw FormatError(path + ": zero image dimension");
  if (maxval != 255) throw FormatError(path + ": maxval must be 255");
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= buf.size()) throw FormatError(path + ": missing raster data");
  ++pos;

  const std::size_t expected = width * height;
  const std::size_t actual = buf.size() - pos;
  if (actual != expected)
    throw FormatError(path + ": expected " + std::to_string(expected) + " raster bytes, found " +
                      std::to_string(actual));
  RasterImage img{width, height, std::vector<std::uint8_t>(expected), spec};
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(pos), buf.end(), img.pixels.begin());
  return img;
}

// ---------------------------------------------------------------------------
// `.spec` sidecar: "lo=<real>\nhi=<real>\nlevels=256\n"

/// Shortest decimal form that parses back to the same double.
inline std::string format_real(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline void write_spec(const QuantizationSpec& spec, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << "lo=" << format_real(spec.lo) << "\nhi=" << format_real(spec.hi)
      << "\nlevels=" << spec.levels << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline QuantizationSpec read_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  QuantizationSpec spec;
  bool has_lo = false, has_hi = false, has_levels = false;
  std::string line;
  while (std::getline(in, line)) {
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw FormatError(path + ": expected key=value");
    const auto key = detail::trim(text.substr(0, eq));
    const auto val = detail::trim(text.substr(eq + 1));
    double v = 0.0;
    if (!detail::parse_real(val, v)) throw FormatError(path + ": bad value for " + std::string(key));
    if (key == "lo") {
      spec.lo = v;
      has_lo = true;
    } else if (key == "hi") {
      spec.hi = v;
      has_hi = true;
    } else if (key == "levels") {
      spec.levels = static_cast<int>(v);
      has_levels = true;
    } else {
      throw FormatError(path + ": unknown key " + std::string(key));
    }
  }
  if (!has_lo || !has_hi || !has_levels) throw FormatError(path + ": incomplete spec");
  try {
    validate(spec);
  } catch (const ParameterError& e) {
    throw FormatError(path + ": " + e.what());
  }
  return spec;
}

}  // namespace tsgan
