#pragma once

// The end-to-end commands behind the `tsgan` executable:
// prepare -> train -> generate -> evaluate -> plot.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "tsgan/checkpoint.hpp"
#include "tsgan/cli/config.hpp"
#include "tsgan/cli/svg.hpp"
#include "tsgan/dsp.hpp"
#include "tsgan/error.hpp"
#include "tsgan/metrics.hpp"
#include "tsgan/raster_codec.hpp"
#include "tsgan/signals.hpp"
#include "tsgan/wgan_gp.hpp"

namespace tsgan::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// File helpers

inline std::string image_name(const std::string& prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return prefix + "_" + buf;
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// `t_seconds,amplitude` rows, t = i / rate.
inline void write_series_csv(const fs::path& path, std::span<const double> samples, double rate_hz) {
  std::string s = "t_seconds,amplitude\n";
  for (std::size_t i = 0; i < samples.size(); ++i)
    s += format_real(static_cast<double>(i) / rate_hz) + "," + format_real(samples[i]) + "\n";
  write_text(path, s);
}

inline void write_spectrum_csv(const fs::path& path, const dsp::Spectrum& spec) {
  std::string s = "frequency_hz,magnitude\n";
  for (std::size_t k = 0; k < spec.magnitudes.size(); ++k)
    s += format_real(spec.frequency(k)) + "," + format_real(spec.magnitudes[k]) + "\n";
  write_text(path, s);
}

inline void write_trace_csv(const fs::path& path, const TrainingTrace& trace) {
  std::string s = "iteration,critic_loss,gp_term,w1_estimate\n";
  for (const auto& r : trace)
    s += std::to_string(r.iteration) + "," + format_real(r.critic_loss) + "," + format_real(r.gp_term) + "," +
         format_real(r.w1_estimate) + "\n";
  write_text(path, s);
}

/// Numeric CSV with one header line; returns columns.
inline std::vector<std::vector<double>> read_numeric_csv(const fs::path& path, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> cols(columns);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || tsgan::detail::trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string field;
    for (std::size_t c = 0; c < columns; ++c) {
      double v = 0.0;
      if (!std::getline(ss, field, ',') || !tsgan::detail::parse_real(tsgan::detail::trim(field), v))
        throw ParseError(path.string() + ": expected " + std::to_string(columns) + " numeric columns", line_no);
      cols[c].push_back(v);
    }
  }
  return cols;
}

struct ImageDir {
  std::vector<RasterImage> images;
  std::vector<std::string> files;
  QuantizationSpec spec;
};

/// Images listed in `manifest.txt` (or every *.pgm, sorted, without one),
/// decoded with the directory's single `.spec` sidecar.
inline ImageDir load_image_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> specs;
  std::vector<std::string> pgms;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".spec") specs.push_back(e.path());
    if (e.path().extension() == ".pgm") pgms.push_back(e.path().filename().string());
  }

  ImageDir out;
  if (fs::exists(dir / "manifest.txt")) {
    std::stringstream ss(read_text(dir / "manifest.txt"));
    std::string line;
    while (std::getline(ss, line))
      if (!tsgan::detail::trim(line).empty()) out.files.emplace_back(tsgan::detail::trim(line));
  } else {
    std::sort(pgms.begin(), pgms.end());
    out.files = pgms;
  }
  if (out.files.empty()) throw ParameterError("no images in " + dir.string());
  if (specs.size() != 1)
    throw FormatError(dir.string() + ": expected exactly one .spec sidecar, found " + std::to_string(specs.size()));
  out.spec = read_spec(specs.front().string());
  for (const auto& f : out.files) out.images.push_back(read_pgm((dir / f).string(), out.spec));
  for (const auto& img : out.images)
    if (img.width != out.images.front().width || img.height != out.images.front().height)
      throw FormatError(dir.string() + ": images differ in size");
  return out;
}

inline void write_image_dir(const fs::path& dir, const std::string& prefix, const std::string& spec_name,
                            std::span<const RasterImage> images, const QuantizationSpec& spec) {
  ensure_dir(dir);
  std::string manifest;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string name = image_name(prefix, i) + ".pgm";
    write_pgm(images[i], (dir / name).string());
    manifest += name + "\n";
  }
  write_spec(spec, (dir / (spec_name + ".spec")).string());
  write_text(dir / "manifest.txt", manifest);
}

inline NetworkConfig generator_config(const PipelineConfig& c) {
  NetworkConfig n{{c.latent_dim}, Activation::Relu, Activation::Tanh, 0.2};
  n.layer_sizes.insert(n.layer_sizes.end(), c.generator_hidden.begin(), c.generator_hidden.end());
  n.layer_sizes.push_back(c.width * c.height);
  return n;
}

inline NetworkConfig critic_config(const PipelineConfig& c) {
  NetworkConfig n{{c.width * c.height}, Activation::LeakyRelu, Activation::Identity, 0.2};
  n.layer_sizes.insert(n.layer_sizes.end(), c.critic_hidden.begin(), c.critic_hidden.end());
  n.layer_sizes.push_back(1);
  return n;
}

inline TrainConfig train_config(const PipelineConfig& c) {
  TrainConfig t;
  t.latent_dim = c.latent_dim;
  t.gp_lambda = c.gp_lambda;
  t.n_critic = c.n_critic;
  t.adam = {c.learning_rate, c.beta1, c.beta2, 1e-8};
  t.epochs = c.epochs;
  t.batch_size = c.batch_size;
  t.seed = c.seed;
  t.width = c.width;
  t.height = c.height;
  return t;
}

// ---------------------------------------------------------------------------
// Commands

/// Windows the configured source, rasterises every window and writes
/// `win_<index>.pgm`, `<dataset>.spec` and `manifest.txt`.
inline fs::path cmd_prepare(const PipelineConfig& c) {
  c.validate();
  WindowSet windows;
  if (c.source == "sinusoid") {
    windows = generate_sinusoids(c.count, c.window_len, c.amp, c.freq, c.rate_hz, c.seed);
  } else {
    TimeSeries series = load_csv(c.input_csv, c.effective_input_rate());
    if (series.rate_hz != c.rate_hz) series = resample_linear(series, c.rate_hz);
    windows = segment(series, c.effective_segment_len(), c.effective_stride());
    if (windows.window_len != c.window_len) windows = truncate_windows(std::move(windows), c.window_len);
  }
  const QuantizationSpec spec = c.spec_lo ? QuantizationSpec{*c.spec_lo, *c.spec_hi, 256} : fit_spec(windows);

  std::vector<RasterImage> images;
  images.reserve(windows.size());
  for (const auto& w : windows.windows) images.push_back(encode(w, spec, c.width, c.height));
  const fs::path dir = c.dataset_dir();
  write_image_dir(dir, "win", c.dataset, images, spec);
  return dir;
}

struct TrainOutputs {
  fs::path checkpoint;
  fs::path trace;
  TrainResult result;
};

inline TrainOutputs cmd_train(const PipelineConfig& c) {
  c.validate();
  const ImageDir data = load_image_dir(c.dataset_dir());
  const auto& first = data.images.front();
  if (first.width != c.width || first.height != c.height)
    throw ConfigError("dataset images are " + std::to_string(first.width) + "x" + std::to_string(first.height) +
                      ", config expects " + std::to_string(c.width) + "x" + std::to_string(c.height));

  TraceObserver observe;
  if (c.log_every > 0)
    observe = [&c](const TraceRecord& r) {
      if (r.iteration % c.log_every == 0)
        std::cerr << "iter " << r.iteration << " critic_loss " << r.critic_loss << " gp " << r.gp_term << " w1 "
                  << r.w1_estimate << '\n';
    };
  TrainOutputs out{fs::path(c.checkpoint_path()), fs::path(c.out_dir) / "trace.csv",
                   train(data.images, generator_config(c), critic_config(c), train_config(c), observe)};
  if (out.checkpoint.has_parent_path()) ensure_dir(out.checkpoint.parent_path());
  ensure_dir(c.out_dir);
  save_checkpoint(out.result.checkpoint, out.checkpoint.string());
  write_trace_csv(out.trace, out.result.trace);
  return out;
}

/// Writes gen_<i>.pgm plus decoded `_raw.csv` and low-passed `_filtered.csv`
/// series for each generated image.
inline fs::path cmd_generate(const PipelineConfig& c) {
  c.validate();
  const Checkpoint ckpt = load_checkpoint(c.checkpoint_path());
  const auto images = generate(ckpt, c.generate_count, c.effective_generate_seed());
  const fs::path dir = c.generated_dir();
  write_image_dir(dir, "gen", "generated", images, ckpt.spec);
  const auto taps = dsp::design_lowpass(c.cutoff_hz, c.rate_hz, c.taps);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto raw = decode(images[i]);
    write_series_csv(dir / (image_name("gen", i) + "_raw.csv"), raw, c.rate_hz);
    write_series_csv(dir / (image_name("gen", i) + "_filtered.csv"), dsp::apply_fir(raw, taps), c.rate_hz);
  }
  return dir;
}

inline dsp::Spectrum mean_spectrum(std::span<const RasterImage> images, double rate_hz) {
  dsp::Spectrum mean;
  for (const auto& img : images) {
    const auto s = dsp::fft_magnitude(decode(img), rate_hz);
    if (mean.magnitudes.empty()) {
      mean = s;
    } else {
      for (std::size_t k = 0; k < s.magnitudes.size(); ++k) mean.magnitudes[k] += s.magnitudes[k];
    }
  }
  for (double& m : mean.magnitudes) m /= static_cast<double>(images.size());
  return mean;
}

inline std::string format_report(const MetricReport& r) {
  std::string s = "fid=" + format_real(r.fid) + "\nmmd=" + format_real(r.mmd) + "\n";
  if (r.w1_critic) s += "w1_critic=" + format_real(*r.w1_critic) + "\n";
  s += "n_real=" + std::to_string(r.n_real) + "\nn_fake=" + std::to_string(r.n_fake) +
       "\nbandwidth=" + format_real(r.bandwidth) + "\n";
  return s;
}

struct EvaluateOutputs {
  fs::path report_path;
  MetricReport report;
  bool bandwidth_fallback = false;
};

/// FID and MMD on [0,1] pixel features plus mean decoded spectra of both sets.
inline EvaluateOutputs cmd_evaluate(const PipelineConfig& c) {
  if (!(c.rate_hz > 0.0)) throw ConfigError("rate_hz must be positive");
  const ImageDir real = load_image_dir(c.eval_real_dir());
  const ImageDir fake = load_image_dir(c.eval_fake_dir());
  const auto& r0 = real.images.front();
  const auto& f0 = fake.images.front();
  if (r0.width != f0.width || r0.height != f0.height)
    throw ParameterError("image dims differ: real " + std::to_string(r0.width) + "x" + std::to_string(r0.height) +
                         " vs fake " + std::to_string(f0.width) + "x" + std::to_string(f0.height));

  const auto real_features = PixelFeatureSet::from_images(real.images);
  const auto fake_features = PixelFeatureSet::from_images(fake.images);
  EvaluateOutputs out;
  out.report.fid = fid(real_features, fake_features);
  const MmdResult m = mmd(real_features, fake_features, c.bandwidth);
  out.report.mmd = m.value;
  out.report.bandwidth = m.bandwidth;
  out.bandwidth_fallback = m.degenerate;
  out.report.n_real = real.images.size();
  out.report.n_fake = fake.images.size();
  if (c.eval_w1) out.report.w1_critic = critic_w1(load_checkpoint(c.checkpoint_path()), real.images, fake.images);

  ensure_dir(c.out_dir);
  out.report_path = fs::path(c.out_dir) / "report.txt";
  write_text(out.report_path, format_report(out.report));
  write_spectrum_csv(fs::path(c.out_dir) / "spectrum_real.csv", mean_spectrum(real.images, c.rate_hz));
  write_spectrum_csv(fs::path(c.out_dir) / "spectrum_fake.csv", mean_spectrum(fake.images, c.rate_hz));
  return out;
}

/// kind: grid | trace | series | spectrum.
inline fs::path cmd_plot(const PipelineConfig& c) {
  static const std::vector<std::string> kinds{"grid", "trace", "series", "spectrum"};
  if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end())
    throw ConfigError("unknown plot kind '" + c.kind + "' (expected grid, trace, series or spectrum)");
  if (c.inputs.empty()) throw ConfigError("plot needs at least one --input");
  const fs::path output = c.output.empty() ? fs::path(c.out_dir) / ("plot_" + c.kind + ".svg") : fs::path(c.output);

  std::string svg;
  if (c.kind == "grid") {
    ImageDir dir = load_image_dir(c.inputs.front());
    if (dir.images.size() > 64) dir.images.resize(64);
    svg = grid_svg(dir.images, 8);
  } else if (c.kind == "trace") {
    Panel panel{"Wasserstein-1 estimate", "critic iteration", "mean D(real) - mean D(fake)", {}};
    for (const auto& in : c.inputs) {
      auto cols = read_numeric_csv(in, 4);
      panel.series.push_back({fs::path(in).stem().string(), std::move(cols[0]), std::move(cols[3])});
    }
    svg = line_chart_svg({panel});
  } else if (c.kind == "series") {
    auto raw = read_numeric_csv(c.inputs.front(), 2);
    std::vector<double> filtered;
    if (c.inputs.size() > 1) {
      filtered = read_numeric_csv(c.inputs[1], 2)[1];
    } else {
      filtered = dsp::lowpass_fir(raw[1], c.cutoff_hz, c.rate_hz, c.taps);
    }
    svg = line_chart_svg({Panel{"raw", "t (s)", "amplitude", {{"raw", raw[0], raw[1]}}},
                          Panel{"low-pass filtered", "t (s)", "amplitude", {{"filtered", raw[0], filtered}}}});
  } else {
    Panel panel{"magnitude spectrum", "frequency (Hz)", "|Y(f)|", {}};
    for (const auto& in : c.inputs) {
      auto cols = read_numeric_csv(in, 2);
      panel.series.push_back({fs::path(in).stem().string(), std::move(cols[0]), std::move(cols[1])});
    }
    svg = line_chart_svg({panel});
  }
  if (output.has_parent_path()) ensure_dir(output.parent_path());
  write_text(output, svg);
  return output;
}

}  // namespace tsgan::cli
