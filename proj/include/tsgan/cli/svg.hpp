#pragma once

// Standalone SVG figures: image tile grids and stacked line-chart panels.
// Output is plain text with fixed numeric formatting, so identical inputs
// give identical files.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tsgan/raster_codec.hpp"

namespace tsgan::cli {

inline std::string base64(std::span<const std::uint8_t> bytes) {
  static constexpr char table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    const std::uint32_t b0 = bytes[i];
    const std::uint32_t b1 = i + 1 < bytes.size() ? bytes[i + 1] : 0;
    const std::uint32_t b2 = i + 2 < bytes.size() ? bytes[i + 2] : 0;
    const std::uint32_t v = (b0 << 16) | (b1 << 8) | b2;
    out.push_back(table[(v >> 18) & 63]);
    out.push_back(table[(v >> 12) & 63]);
    out.push_back(i + 1 < bytes.size() ? table[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < bytes.size() ? table[v & 63] : '=');
  }
  return out;
}

/// 24-bit BMP with R = G = B = pixel, the form browsers embed directly.
inline std::vector<std::uint8_t> to_bmp(const RasterImage& img) {
  const std::size_t row_bytes = (img.width * 3 + 3) / 4 * 4;
  const std::size_t data_size = row_bytes * img.height;
  const std::size_t file_size = 54 + data_size;
  std::vector<std::uint8_t> out(file_size, 0);
  auto put32 = [&](std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
  };
  out[0] = 'B';
  out[1] = 'M';
  put32(2, static_cast<std::uint32_t>(file_size));
  put32(10, 54);
  put32(14, 40);
  put32(18, static_cast<std::uint32_t>(img.width));
  put32(22, static_cast<std::uint32_t>(img.height));
  out[26] = 1;   // planes
  out[28] = 24;  // bits per pixel
  put32(34, static_cast<std::uint32_t>(data_size));
  for (std::size_t r = 0; r < img.height; ++r) {
    // BMP rows run bottom-up.
    const std::size_t dst = 54 + (img.height - 1 - r) * row_bytes;
    for (std::size_t c = 0; c < img.width; ++c) {
      const std::uint8_t p = img.pixels[r * img.width + c];
      out[dst + 3 * c] = out[dst + 3 * c + 1] = out[dst + 3 * c + 2] = p;
    }
  }
  return out;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

/// Square-ish grid of image tiles, `cols` per row (8 x 8 for 64 images).
inline std::string grid_svg(std::span<const RasterImage> images, std::size_t cols = 8, double tile = 64.0,
                            double gap = 4.0) {
  const std::size_t rows = (images.size() + cols - 1) / cols;
  const double w = static_cast<double>(cols) * (tile + gap) + gap;
  const double h = static_cast<double>(rows) * (tile + gap) + gap;
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) +
                  "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < images.size(); ++i) {
    const double x = gap + static_cast<double>(i % cols) * (tile + gap);
    const double y = gap + static_cast<double>(i / cols) * (tile + gap);
    s += "<image x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(tile) + "\" height=\"" + fmt(tile) +
         "\" style=\"image-rendering:pixelated\" href=\"data:image/bmp;base64," + base64(to_bmp(images[i])) +
         "\"/>\n";
  }
  return s + "</svg>\n";
}

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

/// Panels stacked vertically; each series is one <polyline>.
inline std::string line_chart_svg(const std::vector<Panel>& panels, double width = 720.0,
                                  double panel_height = 240.0) {
  static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  const double margin_l = 64, margin_r = 16, margin_t = 28, margin_b = 40;
  const double height = panel_height * static_cast<double>(panels.size());
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" +
                  fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) +
                  "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Panel& panel = panels[p];
    const double top = static_cast<double>(p) * panel_height;
    const double x0 = margin_l, x1 = width - margin_r;
    const double y0 = top + margin_t, y1 = top + panel_height - margin_b;

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& ser : panel.series) {
      for (double v : ser.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
      for (double v : ser.y) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
    }
    if (!(xmin < xmax)) xmin -= 0.5, xmax += 0.5;
    if (!(ymin < ymax)) ymin -= 0.5, ymax += 0.5;
    auto px = [&](double v) { return x0 + (v - xmin) / (xmax - xmin) * (x1 - x0); };
    auto py = [&](double v) { return y1 - (v - ymin) / (ymax - ymin) * (y1 - y0); };

    s += "<g class=\"panel\">\n";
    s += "<text x=\"" + fmt(x0) + "\" y=\"" + fmt(top + 18) + "\" font-size=\"13\">" + xml_escape(panel.title) +
         "</text>\n";
    s += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y0) + "\" width=\"" + fmt(x1 - x0) + "\" height=\"" +
         fmt(y1 - y0) + "\" fill=\"none\" stroke=\"#444\"/>\n";
    s += "<text x=\"" + fmt(x0) + "\" y=\"" + fmt(y1 + 14) + "\">" + fmt(xmin) + "</text>\n";
    s += "<text x=\"" + fmt(x1) + "\" y=\"" + fmt(y1 + 14) + "\" text-anchor=\"end\">" + fmt(xmax) + "</text>\n";
    s += "<text x=\"" + fmt(x0 - 4) + "\" y=\"" + fmt(y1) + "\" text-anchor=\"end\">" + fmt(ymin) + "</text>\n";
    s += "<text x=\"" + fmt(x0 - 4) + "\" y=\"" + fmt(y0 + 8) + "\" text-anchor=\"end\">" + fmt(ymax) + "</text>\n";
    s += "<text x=\"" + fmt((x0 + x1) / 2) + "\" y=\"" + fmt(y1 + 30) + "\" text-anchor=\"middle\">" +
         xml_escape(panel.x_label) + "</text>\n";
    s += "<text x=\"14\" y=\"" + fmt((y0 + y1) / 2) + "\" transform=\"rotate(-90 14 " + fmt((y0 + y1) / 2) +
         ")\" text-anchor=\"middle\">" + xml_escape(panel.y_label) + "</text>\n";

    for (std::size_t k = 0; k < panel.series.size(); ++k) {
      const Series& ser = panel.series[k];
      const char* color = colors[k % std::size(colors)];
      std::string pts;
      for (std::size_t i = 0; i < std::min(ser.x.size(), ser.y.size()); ++i)
        pts += (i ? " " : "") + fmt(px(ser.x[i])) + "," + fmt(py(ser.y[i]));
      s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1\" points=\"" + pts +
           "\"/>\n";
      s += "<text x=\"" + fmt(x1 - 4) + "\" y=\"" + fmt(y0 + 14 + 14 * static_cast<double>(k)) +
           "\" text-anchor=\"end\" fill=\"" + color + "\">" + xml_escape(ser.label) + "</text>\n";
    }
    s += "</g>\n";
  }
  return s + "</svg>\n";
}

}  // namespace tsgan::cli
