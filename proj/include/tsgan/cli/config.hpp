#pragma once

// Flat `key = value` pipeline configuration. Later sources override earlier
// ones: defaults < config file < command-line `--key value` pairs.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tsgan/error.hpp"
#include "tsgan/signals.hpp"

namespace tsgan::cli {

using ConfigMap = std::map<std::string, std::string>;

inline void merge_config_file(ConfigMap& map, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto text = tsgan::detail::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    map[std::string(tsgan::detail::trim(text.substr(0, eq)))] = std::string(tsgan::detail::trim(text.substr(eq + 1)));
  }
}

/// Applies `--key value` pairs. A repeated key accumulates as a
/// comma-separated list.
inline void merge_overrides(ConfigMap& map, const std::vector<std::string>& args) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& flag = args[i];
    if (flag.size() < 3 || flag.rfind("--", 0) != 0) throw ConfigError("expected --key, got '" + flag + "'");
    std::string key = flag.substr(2), value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.erase(eq);
    } else {
      if (i + 1 >= args.size()) throw ConfigError("missing value for " + flag);
      value = args[++i];
    }
    std::replace(key.begin(), key.end(), '-', '_');
    if (seen.count(key)) {
      map[key] += "," + value;
    } else {
      map[key] = value;
      seen.insert(key);
    }
  }
}

struct PipelineConfig {
  // Data source.
  std::string dataset = "sinusoid";
  std::string source = "sinusoid";  // sinusoid | csv
  std::string input_csv;
  double input_rate_hz = 0.0;  // CSV sample rate; 0 means rate_hz
  double rate_hz = 256.0;
  std::size_t window_len = 4096;
  std::size_t segment_len = 0;  // recording window before truncation; 0 means window_len
  std::size_t stride = 0;       // 0 means segment_len
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t count = 2500;
  Interval amp{0.5, 1.0};
  Interval freq{1.0, 8.0};
  std::optional<double> spec_lo, spec_hi;

  // Training.
  std::size_t latent_dim = 64;
  double gp_lambda = 10.0;
  std::size_t n_critic = 5;
  double learning_rate = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  std::size_t epochs = 300;
  std::size_t batch_size = 64;
  std::vector<std::size_t> generator_hidden{256, 512};
  std::vector<std::size_t> critic_hidden{512, 256};
  std::uint64_t seed = 0;
  std::size_t log_every = 0;

  // Generation, evaluation and plotting.
  std::size_t generate_count = 64;
  std::optional<std::uint64_t> generate_seed;
  double cutoff_hz = 10.0;
  std::size_t taps = 101;
  std::optional<double> bandwidth;  // nullopt = median heuristic
  bool eval_w1 = false;

  std::string out_dir = "out";
  std::string data_dir;    // default <out_dir>/dataset
  std::string checkpoint;  // default <out_dir>/checkpoint.tsg
  std::string real_dir;    // default data_dir
  std::string fake_dir;    // default <out_dir>/generated
  std::string kind;
  std::vector<std::string> inputs;
  std::string output;

  std::size_t effective_segment_len() const { return segment_len ? segment_len : window_len; }
  std::size_t effective_stride() const { return stride ? stride : effective_segment_len(); }
  double effective_input_rate() const { return input_rate_hz > 0.0 ? input_rate_hz : rate_hz; }
  std::uint64_t effective_generate_seed() const { return generate_seed.value_or(seed + 1); }
  std::string dataset_dir() const { return data_dir.empty() ? out_dir + "/dataset" : data_dir; }
  std::string checkpoint_path() const { return checkpoint.empty() ? out_dir + "/checkpoint.tsg" : checkpoint; }
  std::string generated_dir() const { return out_dir + "/generated"; }
  std::string eval_real_dir() const { return real_dir.empty() ? dataset_dir() : real_dir; }
  std::string eval_fake_dir() const { return fake_dir.empty() ? generated_dir() : fake_dir; }

  /// Checks the invariants every command relies on.
  void validate() const {
    if (width == 0 || height == 0) throw ConfigError("width and height must be positive");
    if (width * height != window_len)
      throw ConfigError("image " + std::to_string(width) + "x" + std::to_string(height) +
                        " does not hold window_len " + std::to_string(window_len));
    if (window_len > effective_segment_len()) throw ConfigError("window_len exceeds segment_len");
    if (!(rate_hz > 0.0)) throw ConfigError("rate_hz must be positive");
    if (source != "sinusoid" && source != "csv") throw ConfigError("source must be sinusoid or csv");
    if (source == "csv" && input_csv.empty()) throw ConfigError("source = csv requires input_csv");
    if (spec_lo.has_value() != spec_hi.has_value()) throw ConfigError("spec_lo and spec_hi go together");
    if (spec_lo && !(*spec_lo < *spec_hi)) throw ConfigError("spec_lo must be below spec_hi");
    if (taps % 2 == 0) throw ConfigError("taps must be odd");
    if (!(cutoff_hz > 0.0) || cutoff_hz >= rate_hz / 2.0) throw ConfigError("cutoff_hz must lie in (0, rate_hz/2)");
  }
};

namespace detail {

inline double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  if (!tsgan::detail::parse_real(v, out)) throw ConfigError(key + ": expected a real number, got '" + v + "'");
  return out;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

inline std::vector<std::string> split(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto t = tsgan::detail::trim(tok);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

inline std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& tok : split(v)) {
    const auto n = to_uint(key, tok);
    if (n == 0) throw ConfigError(key + ": layer sizes must be positive");
    out.push_back(n);
  }
  return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

}  // namespace detail

inline PipelineConfig parse_config(const ConfigMap& map) {
  PipelineConfig c;
  using namespace detail;
  for (const auto& [key, v] : map) {
    if (key == "dataset") c.dataset = v;
    else if (key == "source") c.source = v;
    else if (key == "input_csv") c.input_csv = v;
    else if (key == "input_rate_hz") c.input_rate_hz = to_real(key, v);
    else if (key == "rate_hz") c.rate_hz = to_real(key, v);
    else if (key == "window_len") c.window_len = to_uint(key, v);
    else if (key == "segment_len") c.segment_len = to_uint(key, v);
    else if (key == "stride") c.stride = to_uint(key, v);
    else if (key == "width") c.width = to_uint(key, v);
    else if (key == "height") c.height = to_uint(key, v);
    else if (key == "count") c.count = to_uint(key, v);
    else if (key == "amp_lo") c.amp.lo = to_real(key, v);
    else if (key == "amp_hi") c.amp.hi = to_real(key, v);
    else if (key == "freq_lo") c.freq.lo = to_real(key, v);
    else if (key == "freq_hi") c.freq.hi = to_real(key, v);
    else if (key == "spec_lo") c.spec_lo = to_real(key, v);
    else if (key == "spec_hi") c.spec_hi = to_real(key, v);
    else if (key == "latent_dim") c.latent_dim = to_uint(key, v);
    else if (key == "gp_lambda") c.gp_lambda = to_real(key, v);
    else if (key == "n_critic") c.n_critic = to_uint(key, v);
    else if (key == "learning_rate") c.learning_rate = to_real(key, v);
    else if (key == "beta1") c.beta1 = to_real(key, v);
    else if (key == "beta2") c.beta2 = to_real(key, v);
    else if (key == "epochs") c.epochs = to_uint(key, v);
    else if (key == "batch_size") c.batch_size = to_uint(key, v);
    else if (key == "generator_hidden") c.generator_hidden = to_sizes(key, v);
    else if (key == "critic_hidden") c.critic_hidden = to_sizes(key, v);
    else if (key == "seed") c.seed = to_uint(key, v);
    else if (key == "log_every") c.log_every = to_uint(key, v);
    else if (key == "generate_count") c.generate_count = to_uint(key, v);
    else if (key == "generate_seed") c.generate_seed = to_uint(key, v);
    else if (key == "cutoff_hz") c.cutoff_hz = to_real(key, v);
    else if (key == "taps") c.taps = to_uint(key, v);
    else if (key == "bandwidth") c.bandwidth = v == "median" ? std::nullopt : std::optional(to_real(key, v));
    else if (key == "eval_w1") c.eval_w1 = to_bool(key, v);
    else if (key == "out_dir") c.out_dir = v;
    else if (key == "data_dir") c.data_dir = v;
    else if (key == "checkpoint") c.checkpoint = v;
    else if (key == "real_dir") c.real_dir = v;
    else if (key == "fake_dir") c.fake_dir = v;
    else if (key == "kind") c.kind = v;
    else if (key == "input") c.inputs = split(v);
    else if (key == "output") c.output = v;
    else throw ConfigError("unknown config key '" + key + "'");
  }
  return c;
}

}  // namespace tsgan::cli
