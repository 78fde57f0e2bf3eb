#pragma once

// Wasserstein GAN with gradient penalty on rasterised images.
//
// Images enter the networks as rows of a [batch, width*height] matrix with
// pixels scaled to [-1, 1] (p / 127.5 - 1). The generator ends in tanh and
// its output is mapped back to pixels with round((y + 1) * 127.5).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tsgan/autodiff.hpp"
#include "tsgan/error.hpp"
#include "tsgan/nn.hpp"
#include "tsgan/raster_codec.hpp"

namespace tsgan {

struct TrainConfig {
  std::size_t latent_dim = 64;
  double gp_lambda = 10.0;
  std::size_t n_critic = 5;
  AdamConfig adam;
  std::size_t epochs = 300;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  std::size_t width = 64;
  std::size_t height = 64;

  bool operator==(const TrainConfig&) const = default;
};

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t version = kVersion;
  Mlp generator;
  Mlp critic;
  TrainConfig train;
  QuantizationSpec spec;
  std::uint64_t iteration = 0;  // critic iterations completed

  bool operator==(const Checkpoint&) const = default;
};

struct TraceRecord {
  std::uint64_t iteration = 0;
  double critic_loss = 0.0;
  double gp_term = 0.0;      // penalty before the lambda weight
  double w1_estimate = 0.0;  // mean D(real) - mean D(fake)

  bool operator==(const TraceRecord&) const = default;
};

using TrainingTrace = std::vector<TraceRecord>;

/// Default desk-scale architectures: generator latent -> 256 -> 512 -> W*H
/// (relu, tanh head); critic W*H -> 512 -> 256 -> 1 (leaky_relu 0.2).
inline NetworkConfig default_generator_config(std::size_t latent_dim, std::size_t pixels) {
  return {{latent_dim, 256, 512, pixels}, Activation::Relu, Activation::Tanh, 0.2};
}

inline NetworkConfig default_critic_config(std::size_t pixels) {
  return {{pixels, 512, 256, 1}, Activation::LeakyRelu, Activation::Identity, 0.2};
}

/// Maps critic input [batch, dim] to scores [batch, 1].
using CriticFn = std::function<ad::Var(const ad::Var&)>;

// ---------------------------------------------------------------------------
// Losses

/// mean over the batch of (||grad_x D(x_hat)||_2 - 1)^2 with
/// x_hat = eps * real + (1 - eps) * fake, one eps per row. The returned node
/// is differentiable with respect to whatever the critic closes over.
inline ad::Var gradient_penalty(ad::Graph& g, const CriticFn& critic, const ad::Tensor& real,
                                const ad::Tensor& fake, std::span<const double> eps) {
  if (real.shape != fake.shape || real.shape.size() != 2)
    throw ParameterError("gradient_penalty: real " + ad::to_string(real.shape) + " and fake " +
                         ad::to_string(fake.shape) + " must be equal 2-D shapes");
  const std::size_t batch = real.rows(), dim = real.cols();
  if (eps.size() != batch) throw ParameterError("gradient_penalty: need one eps per sample");

  ad::Tensor mixed = real;
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      const std::size_t k = i * dim + j;
      mixed.values[k] = eps[i] * real.values[k] + (1.0 - eps[i]) * fake.values[k];
    }

  ad::Var x_hat = g.leaf(std::move(mixed));
  // Rows are independent, so the gradient of the summed scores gives every
  // sample's input gradient at once.
  ad::Var scores = ad::sum(critic(x_hat));
  const ad::Var wrt[] = {x_hat};
  ad::Var grad_x = g.grad(scores, wrt, /*create_graph=*/true)[0];
  ad::Var norms = ad::l2_norm(grad_x, 1);
  return ad::mean(ad::square(ad::add_scalar(norms, -1.0)));
}

/// Uniform [0,1) mixing weights, one per row.
template <class Rng>
std::vector<double> draw_mixing_weights(std::size_t batch, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> eps(batch);
  for (double& e : eps) e = unit(rng);
  return eps;
}

struct CriticLossTerms {
  ad::Var loss;     // mean D(fake) - mean D(real) + lambda * penalty
  ad::Var penalty;  // unweighted
  double w1_estimate = 0.0;
};

inline CriticLossTerms critic_loss(ad::Graph& g, const CriticFn& critic, const ad::Tensor& real,
                                   const ad::Tensor& fake, double gp_lambda,
                                   std::span<const double> eps) {
  if (real.shape != fake.shape)
    throw ParameterError("critic_loss: real " + ad::to_string(real.shape) + " vs fake " +
                         ad::to_string(fake.shape));
  ad::Var d_real = ad::mean(critic(g.leaf(real)));
  ad::Var d_fake = ad::mean(critic(g.leaf(fake)));
  ad::Var penalty = gradient_penalty(g, critic, real, fake, eps);
  ad::Var loss = ad::add(ad::sub(d_fake, d_real), ad::scale(penalty, gp_lambda));
  return {loss, penalty, d_real.item() - d_fake.item()};
}

/// -mean D(fake).
inline ad::Var generator_loss(const CriticFn& critic, const ad::Var& fake) {
  return ad::neg(ad::mean(critic(fake)));
}

// ---------------------------------------------------------------------------
// Pixel <-> network domain

inline ad::Tensor images_to_batch(std::span<const RasterImage> images,
                                  std::span<const std::size_t> indices) {
  const std::size_t dim = images[indices.front()].pixels.size();
  ad::Tensor batch = ad::Tensor::zeros({indices.size(), dim});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& px = images[indices[r]].pixels;
    for (std::size_t j = 0; j < dim; ++j) batch.values[r * dim + j] = px[j] / 127.5 - 1.0;
  }
  return batch;
}

inline ad::Tensor images_to_batch(std::span<const RasterImage> images) {
  std::vector<std::size_t> all(images.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return images_to_batch(images, all);
}

inline std::uint8_t unit_to_pixel(double y) {
  return static_cast<std::uint8_t>(std::clamp(std::round((y + 1.0) * 127.5), 0.0, 255.0));
}

template <class Rng>
ad::Tensor draw_latent(std::size_t batch, std::size_t latent_dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ad::Tensor z = ad::Tensor::zeros({batch, latent_dim});
  for (double& v : z.values) v = normal(rng);
  return z;
}

inline CriticFn bind_critic(const Mlp& critic, const std::vector<ad::Var>& params) {
  return [&critic, params](const ad::Var& x) { return critic.forward(params, x); };
}

// ---------------------------------------------------------------------------
// Training

namespace detail {

// Independent generator streams derived from the run seed.
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(seed + 0x9E3779B97F4A7C15ull * (index + 1));
}

inline void require_finite(double v, std::uint64_t iteration, const char* what) {
  if (!std::isfinite(v))
    throw NumericError(std::string("non-finite ") + what + " at critic iteration " +
                       std::to_string(iteration));
}

inline void require_finite(const std::vector<ad::Tensor>& ts, std::uint64_t iteration,
                           const char* what) {
  for (const auto& t : ts)
    for (double v : t.values) require_finite(v, iteration, what);
}

}  // namespace detail

/// Builds a checkpoint with freshly initialised networks.
inline Checkpoint initial_checkpoint(const NetworkConfig& gen_cfg, const NetworkConfig& critic_cfg,
                                     const TrainConfig& cfg, const QuantizationSpec& spec) {
  gen_cfg.validate();
  critic_cfg.validate();
  const std::size_t pixels = cfg.width * cfg.height;
  if (gen_cfg.input_size() != cfg.latent_dim)
    throw ParameterError("generator input size must equal latent_dim");
  if (gen_cfg.output_size() != pixels) throw ParameterError("generator output size must equal width*height");
  if (critic_cfg.input_size() != pixels) throw ParameterError("critic input size must equal width*height");
  if (critic_cfg.output_size() != 1) throw ParameterError("critic output size must be 1");

  auto rng = detail::stream(cfg.seed, 0);
  Checkpoint ckpt;
  ckpt.generator = Mlp::init(gen_cfg, rng);
  ckpt.critic = Mlp::init(critic_cfg, rng);
  ckpt.train = cfg;
  ckpt.spec = spec;
  return ckpt;
}

struct TrainResult {
  Checkpoint checkpoint;
  TrainingTrace trace;
};

/// Called after every critic iteration; useful for progress output.
using TraceObserver = std::function<void(const TraceRecord&)>;

/// Runs epochs * floor(N / batch) generator steps, each preceded by n_critic
/// critic steps. Each critic step draws its real batch from a shuffled pass
/// over the dataset (reshuffled when exhausted), fresh latent noise, and
/// fresh mixing weights. Deterministic for a fixed seed.
inline TrainResult train(const std::vector<RasterImage>& dataset, const NetworkConfig& gen_cfg,
                         const NetworkConfig& critic_cfg, const TrainConfig& cfg,
                         const TraceObserver& observe = {}) {
  if (dataset.empty()) throw ParameterError("train: empty dataset");
  if (cfg.batch_size == 0 || cfg.n_critic == 0 || cfg.latent_dim == 0)
    throw ParameterError("train: batch_size, n_critic and latent_dim must be positive");
  if (cfg.batch_size > dataset.size())
    throw ParameterError("train: batch_size " + std::to_string(cfg.batch_size) + " exceeds dataset size " +
                         std::to_string(dataset.size()));
  if (!(cfg.adam.beta1 >= 0.0 && cfg.adam.beta1 < 1.0 && cfg.adam.beta2 >= 0.0 && cfg.adam.beta2 < 1.0))
    throw ParameterError("train: Adam betas must lie in [0, 1)");
  if (cfg.gp_lambda < 0.0) throw ParameterError("train: gp_lambda must be non-negative");
  const QuantizationSpec spec = dataset.front().spec;
  for (const auto& img : dataset)
    if (img.width != cfg.width || img.height != cfg.height || !(img.spec == spec))
      throw ParameterError("train: all images must share dims " + std::to_string(cfg.width) + "x" +
                           std::to_string(cfg.height) + " and one quantization spec");

  TrainResult result{initial_checkpoint(gen_cfg, critic_cfg, cfg, spec), {}};
  Mlp& gen = result.checkpoint.generator;
  Mlp& critic = result.checkpoint.critic;

  auto shuffle_rng = detail::stream(cfg.seed, 1);
  auto latent_rng = detail::stream(cfg.seed, 2);
  auto mix_rng = detail::stream(cfg.seed, 3);

  Adam gen_opt(cfg.adam), critic_opt(cfg.adam);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  auto next_batch = [&] {
    if (cursor + cfg.batch_size > order.size()) {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      cursor = 0;
    }
    std::span<const std::size_t> idx(order.data() + cursor, cfg.batch_size);
    cursor += cfg.batch_size;
    return images_to_batch(dataset, idx);
  };

  const std::size_t steps_per_epoch = dataset.size() / cfg.batch_size;
  std::uint64_t iteration = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      for (std::size_t c = 0; c < cfg.n_critic; ++c) {
        const ad::Tensor real = next_batch();
        const ad::Tensor fake = gen.predict(draw_latent(cfg.batch_size, cfg.latent_dim, latent_rng));
        const auto eps = draw_mixing_weights(cfg.batch_size, mix_rng);

        ad::Graph g;
        const auto params = critic.bind(g);
        const auto terms = critic_loss(g, bind_critic(critic, params), real, fake, cfg.gp_lambda, eps);
        TraceRecord rec{iteration, terms.loss.item(), terms.penalty.item(), terms.w1_estimate};
        detail::require_finite(rec.critic_loss, iteration, "critic loss");
        detail::require_finite(rec.gp_term, iteration, "gradient penalty");
        detail::require_finite(rec.w1_estimate, iteration, "W1 estimate");

        std::vector<ad::Tensor> grads;
        for (const auto& v : g.grad(terms.loss, params)) grads.push_back(v.value());
        detail::require_finite(grads, iteration, "critic gradient");
        critic_opt.step(critic.params, grads);

        result.trace.push_back(rec);
        if (observe) observe(rec);
        ++iteration;
      }

      ad::Graph g;
      const auto gen_params = gen.bind(g);
      const auto critic_params = critic.bind(g);
      ad::Var fake = gen.forward(gen_params, g.leaf(draw_latent(cfg.batch_size, cfg.latent_dim, latent_rng)));
      ad::Var loss = generator_loss(bind_critic(critic, critic_params), fake);
      detail::require_finite(loss.item(), iteration, "generator loss");
      std::vector<ad::Tensor> grads;
      for (const auto& v : g.grad(loss, gen_params)) grads.push_back(v.value());
      detail::require_finite(grads, iteration, "generator gradient");
      gen_opt.step(gen.params, grads);
    }
  }
  result.checkpoint.iteration = iteration;
  return result;
}

// ---------------------------------------------------------------------------
// Sampling and evaluation

/// `count` images from standard-normal latents drawn with `seed`.
inline std::vector<RasterImage> generate(const Checkpoint& ckpt, std::size_t count, std::uint64_t seed) {
  if (count == 0) return {};
  std::mt19937_64 rng(seed);
  const ad::Tensor z = draw_latent(count, ckpt.train.latent_dim, rng);
  const ad::Tensor y = ckpt.generator.predict(z);
  const std::size_t pixels = ckpt.train.width * ckpt.train.height;
  if (y.cols() != pixels) throw FormatError("generator output does not match image dims");

  std::vector<RasterImage> images;
  images.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RasterImage img{ckpt.train.width, ckpt.train.height, std::vector<std::uint8_t>(pixels), ckpt.spec};
    for (std::size_t j = 0; j < pixels; ++j) img.pixels[j] = unit_to_pixel(y.values[i * pixels + j]);
    images.push_back(std::move(img));
  }
  return images;
}

/// mean D(real) - mean D(fake) under the checkpoint's critic.
inline double critic_w1(const Checkpoint& ckpt, std::span<const RasterImage> real,
                        std::span<const RasterImage> fake) {
  if (real.empty() || fake.empty()) throw ParameterError("critic_w1: empty image set");
  auto mean_score = [&](std::span<const RasterImage> imgs) {
    const ad::Tensor d = ckpt.critic.predict(images_to_batch(imgs));
    return std::accumulate(d.values.begin(), d.values.end(), 0.0) / static_cast<double>(d.size());
  };
  return mean_score(real) - mean_score(fake);
}

}  // namespace tsgan
