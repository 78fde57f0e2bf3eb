#pragma once

// Fully connected networks on top of the autodiff graph, and Adam.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "tsgan/autodiff.hpp"
#include "tsgan/error.hpp"

namespace tsgan {

enum class Activation { Identity, Relu, LeakyRelu, Tanh };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Tanh: return "tanh";
  }
  return "identity";
}

inline Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "leaky_relu") return Activation::LeakyRelu;
  if (s == "tanh") return Activation::Tanh;
  throw ParameterError("unknown activation '" + s + "'");
}

struct NetworkConfig {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., output
  Activation hidden_activation = Activation::Relu;
  Activation output_activation = Activation::Identity;
  double leaky_slope = 0.2;

  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return layer_sizes.size() - 1; }

  void validate() const {
    if (layer_sizes.size() < 2) throw ParameterError("network needs at least 2 layer sizes");
    for (auto s : layer_sizes)
      if (s == 0) throw ParameterError("network layer sizes must be positive");
  }

  bool operator==(const NetworkConfig&) const = default;
};

inline ad::Var activate(const ad::Var& x, Activation a, double slope) {
  switch (a) {
    case Activation::Identity: return x;
    case Activation::Relu: return ad::relu(x);
    case Activation::LeakyRelu: return ad::leaky_relu(x, slope);
    case Activation::Tanh: return ad::tanh(x);
  }
  return x;
}

/// Multilayer perceptron. Parameters are stored as W0, b0, W1, b1, ... with
/// W_l of shape [in, out] and b_l of shape [out].
struct Mlp {
  NetworkConfig config;
  std::vector<ad::Tensor> params;

  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  template <class Rng>
  static Mlp init(const NetworkConfig& cfg, Rng& rng) {
    cfg.validate();
    Mlp net{cfg, {}};
    for (std::size_t l = 0; l < cfg.num_layers(); ++l) {
      const std::size_t fan_in = cfg.layer_sizes[l], fan_out = cfg.layer_sizes[l + 1];
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      ad::Tensor w = ad::Tensor::zeros({fan_in, fan_out});
      for (double& v : w.values) v = dist(rng);
      net.params.push_back(std::move(w));
      net.params.push_back(ad::Tensor::zeros({fan_out}));
    }
    return net;
  }

  static std::string param_name(std::size_t index) {
    return (index % 2 == 0 ? "W" : "b") + std::to_string(index / 2);
  }

  ad::Shape param_shape(std::size_t index) const {
    const std::size_t l = index / 2;
    if (index % 2 == 0) return {config.layer_sizes[l], config.layer_sizes[l + 1]};
    return {config.layer_sizes[l + 1]};
  }

  std::vector<ad::Var> bind(ad::Graph& g) const {
    std::vector<ad::Var> vars;
    vars.reserve(params.size());
    for (const auto& p : params) vars.push_back(g.leaf(p));
    return vars;
  }

  /// x: [batch, input_size] -> [batch, output_size].
  ad::Var forward(const std::vector<ad::Var>& vars, ad::Var x) const {
    const std::size_t layers = config.num_layers();
    for (std::size_t l = 0; l < layers; ++l) {
      x = ad::affine(x, vars[2 * l], vars[2 * l + 1]);
      x = activate(x, l + 1 == layers ? config.output_activation : config.hidden_activation,
                   config.leaky_slope);
    }
    return x;
  }

  /// Forward pass on values only.
  ad::Tensor predict(const ad::Tensor& x) const {
    ad::Graph g;
    return forward(bind(g), g.leaf(x)).value();
  }

  bool operator==(const Mlp&) const = default;
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  void step(std::vector<ad::Tensor>& params, const std::vector<ad::Tensor>& grads) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.push_back(ad::Tensor::zeros(p.shape));
        v_.push_back(ad::Tensor::zeros(p.shape));
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto& p = params[k].values;
      auto& m = m_[k].values;
      auto& v = v_[k].values;
      const auto& g = grads[k].values;
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
        p[i] -= cfg_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.epsilon);
      }
    }
  }

 private:
  AdamConfig cfg_;
  std::vector<ad::Tensor> m_, v_;
  long t_ = 0;
};

}  // namespace tsgan
