#pragma once

// Checkpoint file layout:
//
//   "TSG1"                       4 bytes magic
//   header length                u64 little-endian
//   header                       UTF-8 text, one key=value per line
//   parameters                   float64 little-endian, in header order
//
// The header lists every parameter as `param=<name> <d0>x<d1>...`.

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tsgan/error.hpp"
#include "tsgan/raster_codec.hpp"
#include "tsgan/wgan_gp.hpp"

namespace tsgan {

inline constexpr char kCheckpointMagic[4] = {'T', 'S', 'G', '1'};

namespace detail {

inline std::string join_sizes(const std::vector<std::size_t>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? std::string(1, sep) : "") + std::to_string(v[i]);
  return out;
}

inline std::vector<std::size_t> split_sizes(const std::string& s, char sep, const std::string& what) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size())
      throw FormatError("checkpoint: bad size list for " + what + ": '" + s + "'");
    out.push_back(v);
  }
  return out;
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

inline void write_network_header(std::ostringstream& h, const std::string& prefix, const NetworkConfig& c) {
  h << prefix << ".layers=" << join_sizes(c.layer_sizes, ',') << '\n'
    << prefix << ".hidden=" << to_string(c.hidden_activation) << '\n'
    << prefix << ".output=" << to_string(c.output_activation) << '\n'
    << prefix << ".leaky_slope=" << format_real(c.leaky_slope) << '\n';
}

class HeaderFields {
 public:
  explicit HeaderFields(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw FormatError("checkpoint: header line without '='");
      const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
      if (key == "param") {
        params_.push_back(value);
      } else {
        fields_[key] = value;
      }
    }
  }

  const std::string& str(const std::string& key) const {
    const auto it = fields_.find(key);
    if (it == fields_.end()) throw FormatError("checkpoint: header missing '" + key + "'");
    return it->second;
  }

  double real(const std::string& key) const {
    double v = 0.0;
    if (!parse_real(str(key), v)) throw FormatError("checkpoint: bad real for '" + key + "'");
    return v;
  }

  std::uint64_t integer(const std::string& key) const {
    const std::string& s = str(key);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
      throw FormatError("checkpoint: bad integer for '" + key + "'");
    return v;
  }

  NetworkConfig network(const std::string& prefix) const {
    NetworkConfig c;
    c.layer_sizes = split_sizes(str(prefix + ".layers"), ',', prefix + ".layers");
    try {
      c.hidden_activation = parse_activation(str(prefix + ".hidden"));
      c.output_activation = parse_activation(str(prefix + ".output"));
      c.validate();
    } catch (const ParameterError& e) {
      throw FormatError(std::string("checkpoint: ") + e.what());
    }
    c.leaky_slope = real(prefix + ".leaky_slope");
    return c;
  }

  const std::vector<std::string>& params() const { return params_; }

 private:
  std::map<std::string, std::string> fields_;
  std::vector<std::string> params_;
};

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& c) {
  std::ostringstream h;
  h << "version=" << c.version << '\n';
  detail::write_network_header(h, "generator", c.generator.config);
  detail::write_network_header(h, "critic", c.critic.config);
  const TrainConfig& t = c.train;
  h << "train.latent_dim=" << t.latent_dim << '\n'
    << "train.gp_lambda=" << format_real(t.gp_lambda) << '\n'
    << "train.n_critic=" << t.n_critic << '\n'
    << "train.learning_rate=" << format_real(t.adam.learning_rate) << '\n'
    << "train.beta1=" << format_real(t.adam.beta1) << '\n'
    << "train.beta2=" << format_real(t.adam.beta2) << '\n'
    << "train.adam_epsilon=" << format_real(t.adam.epsilon) << '\n'
    << "train.epochs=" << t.epochs << '\n'
    << "train.batch_size=" << t.batch_size << '\n'
    << "train.seed=" << t.seed << '\n'
    << "train.width=" << t.width << '\n'
    << "train.height=" << t.height << '\n'
    << "spec.lo=" << format_real(c.spec.lo) << '\n'
    << "spec.hi=" << format_real(c.spec.hi) << '\n'
    << "spec.levels=" << c.spec.levels << '\n'
    << "iteration=" << c.iteration << '\n';
  auto list = [&](const std::string& prefix, const Mlp& net) {
    for (std::size_t k = 0; k < net.params.size(); ++k)
      h << "param=" << prefix << '.' << Mlp::param_name(k) << ' '
        << detail::join_sizes(net.params[k].shape, 'x') << '\n';
  };
  list("generator", c.generator);
  list("critic", c.critic);

  const std::string header = h.str();
  std::string out(kCheckpointMagic, 4);
  detail::put_u64(out, header.size());
  out += header;
  for (const Mlp* net : {&c.generator, &c.critic})
    for (const auto& p : net->params)
      for (double v : p.values) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

inline Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 12 || bytes.compare(0, 4, kCheckpointMagic, 4) != 0)
    throw FormatError("checkpoint: bad magic (expected TSG1)");
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t header_len = detail::get_u64(raw + 4);
  if (header_len > bytes.size() - 12)
    throw FormatError("checkpoint: header length " + std::to_string(header_len) + " exceeds file size");
  const detail::HeaderFields f(bytes.substr(12, header_len));

  Checkpoint c;
  c.version = static_cast<std::uint32_t>(f.integer("version"));
  if (c.version != Checkpoint::kVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(c.version));
  c.generator.config = f.network("generator");
  c.critic.config = f.network("critic");
  TrainConfig& t = c.train;
  t.latent_dim = f.integer("train.latent_dim");
  t.gp_lambda = f.real("train.gp_lambda");
  t.n_critic = f.integer("train.n_critic");
  t.adam.learning_rate = f.real("train.learning_rate");
  t.adam.beta1 = f.real("train.beta1");
  t.adam.beta2 = f.real("train.beta2");
  t.adam.epsilon = f.real("train.adam_epsilon");
  t.epochs = f.integer("train.epochs");
  t.batch_size = f.integer("train.batch_size");
  t.seed = f.integer("train.seed");
  t.width = f.integer("train.width");
  t.height = f.integer("train.height");
  c.spec.lo = f.real("spec.lo");
  c.spec.hi = f.real("spec.hi");
  c.spec.levels = static_cast<int>(f.integer("spec.levels"));
  c.iteration = f.integer("iteration");

  // Parameter list must match the shapes implied by the configs.
  std::vector<std::pair<Mlp*, std::string>> expected;
  std::size_t total_values = 0;
  std::size_t listed = 0;
  for (auto [net, prefix] : {std::pair{&c.generator, std::string("generator")},
                             std::pair{&c.critic, std::string("critic")}}) {
    const std::size_t count = 2 * net->config.num_layers();
    for (std::size_t k = 0; k < count; ++k, ++listed) {
      const ad::Shape shape = net->param_shape(k);
      const std::string want = prefix + "." + Mlp::param_name(k) + " " + detail::join_sizes(shape, 'x');
      if (listed >= f.params().size() || f.params()[listed] != want)
        throw FormatError("checkpoint: parameter entry " + std::to_string(listed) + " does not match '" +
                          want + "'");
      net->params.push_back(ad::Tensor::zeros(shape));
      total_values += ad::numel(shape);
    }
  }
  if (listed != f.params().size()) throw FormatError("checkpoint: unexpected extra parameters in header");

  const std::size_t payload_offset = 12 + header_len;
  const std::size_t expected_bytes = total_values * 8;
  const std::size_t actual_bytes = bytes.size() - payload_offset;
  if (actual_bytes != expected_bytes)
    throw FormatError("checkpoint: payload size mismatch, expected " + std::to_string(expected_bytes) +
                      " bytes, found " + std::to_string(actual_bytes));
  const unsigned char* p = raw + payload_offset;
  for (Mlp* net : {&c.generator, &c.critic})
    for (auto& t_ : net->params)
      for (double& v : t_.values) {
        v = std::bit_cast<double>(detail::get_u64(p));
        p += 8;
      }
  return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
  const std::string bytes = serialize_checkpoint(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize_checkpoint(bytes);
}

}  // namespace tsgan
