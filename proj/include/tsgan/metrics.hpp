#pragma once

// Two-sample distances on raw pixel features: Frechet distance (FID on
// pixels), kernel MMD, and exact 1-D Wasserstein-1.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsgan/error.hpp"
#include "tsgan/raster_codec.hpp"

namespace tsgan {

/// One row per image, pixels scaled to [0, 1].
struct PixelFeatureSet {
  std::vector<std::vector<double>> vectors;
  std::size_t dim = 0;

  std::size_t size() const noexcept { return vectors.size(); }

  static PixelFeatureSet from_images(std::span<const RasterImage> images) {
    PixelFeatureSet set;
    if (images.empty()) return set;
    set.dim = images.front().pixels.size();
    for (const auto& img : images) {
      if (img.pixels.size() != set.dim) throw ParameterError("feature set: images differ in size");
      std::vector<double> v(set.dim);
      for (std::size_t j = 0; j < set.dim; ++j) v[j] = img.pixels[j] / 255.0;
      set.vectors.push_back(std::move(v));
    }
    return set;
  }

  static PixelFeatureSet from_rows(std::vector<std::vector<double>> rows) {
    PixelFeatureSet set;
    set.dim = rows.empty() ? 0 : rows.front().size();
    for (const auto& r : rows)
      if (r.size() != set.dim) throw ParameterError("feature set: rows differ in length");
    set.vectors = std::move(rows);
    return set;
  }
};

struct MetricReport {
  double fid = 0.0;
  double mmd = 0.0;  // unbiased, may be slightly negative
  std::optional<double> w1_critic;
  std::size_t n_real = 0;
  std::size_t n_fake = 0;
  double bandwidth = 0.0;
};

namespace detail {

inline void check_pair(const PixelFeatureSet& a, const PixelFeatureSet& b, const char* name) {
  if (a.dim != b.dim)
    throw ParameterError(std::string(name) + ": dimension mismatch " + std::to_string(a.dim) + " vs " +
                         std::to_string(b.dim));
  if (a.size() < 2 || b.size() < 2) throw ParameterError(std::string(name) + ": each set needs >= 2 samples");
  if (a.dim == 0) throw ParameterError(std::string(name) + ": zero-dimensional features");
}

inline Eigen::MatrixXd as_matrix(const PixelFeatureSet& s) {
  Eigen::MatrixXd m(s.size(), s.dim);
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.dim; ++j) m(i, j) = s.vectors[i][j];
  return m;
}

inline double squared_distance(const std::vector<double>& x, const std::vector<double>& y) {
  double d = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double t = x[k] - y[k];
    d += t * t;
  }
  return d;
}

}  // namespace detail

/// Symmetric PSD square root V sqrt(max(L, 0)) V^T.
inline Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols()) throw ParameterError("matrix_sqrt_psd: matrix is not square");
  const double scale = 1.0 + s.cwiseAbs().maxCoeff();
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw ParameterError("matrix_sqrt_psd: matrix is not symmetric");
  const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericError("matrix_sqrt_psd: eigendecomposition failed");
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

/// Sample mean and unbiased covariance with shrinkage 1e-6 * trace / dim
/// added to the diagonal.
struct GaussianFit {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline GaussianFit fit_gaussian(const PixelFeatureSet& s) {
  const Eigen::MatrixXd x = detail::as_matrix(s);
  GaussianFit g;
  g.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - g.mean.transpose();
  g.cov = centered.transpose() * centered / static_cast<double>(s.size() - 1);
  const double shrink = 1e-6 * g.cov.trace() / static_cast<double>(s.dim);
  g.cov.diagonal().array() += shrink;
  return g;
}

/// ||mu_r - mu_f||^2 + Tr(S_r + S_f - 2 (S_r S_f)^(1/2)).
/// Tr((S_r S_f)^(1/2)) is evaluated as Tr((A S_f A)^(1/2)) with A = S_r^(1/2),
/// which is similar to S_r S_f but symmetric.
inline double fid(const PixelFeatureSet& real, const PixelFeatureSet& fake) {
  detail::check_pair(real, fake, "fid");
  const GaussianFit r = fit_gaussian(real), f = fit_gaussian(fake);
  const Eigen::MatrixXd a = matrix_sqrt_psd(r.cov);
  Eigen::MatrixXd m = a * f.cov * a;
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericError("fid: eigendecomposition failed");
  const double tr_sqrt = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (r.mean - f.mean).squaredNorm() + r.cov.trace() + f.cov.trace() - 2.0 * tr_sqrt;
  return std::max(value, 0.0);
}

using Kernel = std::function<double(const std::vector<double>&, const std::vector<double>&)>;

inline Kernel rbf_kernel(double bandwidth) {
  const double denom = 2.0 * bandwidth * bandwidth;
  return [denom](const std::vector<double>& x, const std::vector<double>& y) {
    return std::exp(-detail::squared_distance(x, y) / denom);
  };
}

inline Kernel linear_kernel() {
  return [](const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
    return s;
  };
}

enum class MmdEstimator { Unbiased, Biased };

/// Squared MMD. The unbiased U-statistic drops i == j terms within each set,
/// and also from the cross term when both sets have the same size (paired
/// form, exactly 0 for a set compared with itself).
inline double mmd_squared(const PixelFeatureSet& x, const PixelFeatureSet& y, const Kernel& k,
                          MmdEstimator estimator = MmdEstimator::Unbiased) {
  detail::check_pair(x, y, "mmd");
  const bool unbiased = estimator == MmdEstimator::Unbiased;
  auto within = [&](const PixelFeatureSet& s) {
    const std::size_t n = s.size();
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += k(s.vectors[i], s.vectors[i]);
      for (std::size_t j = i + 1; j < n; ++j) off += k(s.vectors[i], s.vectors[j]);
    }
    const double nd = static_cast<double>(n);
    return unbiased ? 2.0 * off / (nd * (nd - 1.0)) : (2.0 * off + diag) / (nd * nd);
  };
  const bool paired = unbiased && x.size() == y.size();
  double cross = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j)
      if (!paired || i != j) cross += k(x.vectors[i], y.vectors[j]);
  const double m = static_cast<double>(x.size()), n = static_cast<double>(y.size());
  cross /= paired ? m * (m - 1.0) : m * n;
  return within(x) + within(y) - 2.0 * cross;
}

/// Median pairwise Euclidean distance over the pooled sample; nullopt when
/// it is zero (all points identical).
inline std::optional<double> median_bandwidth(const PixelFeatureSet& x, const PixelFeatureSet& y) {
  std::vector<const std::vector<double>*> pooled;
  for (const auto& v : x.vectors) pooled.push_back(&v);
  for (const auto& v : y.vectors) pooled.push_back(&v);
  std::vector<double> dists;
  dists.reserve(pooled.size() * (pooled.size() - 1) / 2);
  for (std::size_t i = 0; i < pooled.size(); ++i)
    for (std::size_t j = i + 1; j < pooled.size(); ++j)
      dists.push_back(std::sqrt(detail::squared_distance(*pooled[i], *pooled[j])));
  if (dists.empty()) return std::nullopt;
  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
  double median = dists[mid];
  if (dists.size() % 2 == 0) {
    const double lower = *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  if (!(median > 0.0)) return std::nullopt;
  return median;
}

struct MmdResult {
  double value = 0.0;      // unbiased squared MMD
  double bandwidth = 1.0;  // sigma actually used
  bool degenerate = false; // median heuristic fell back to sigma = 1
};

/// Unbiased squared MMD with an RBF kernel; `bandwidth` nullopt selects the
/// median heuristic.
inline MmdResult mmd(const PixelFeatureSet& real, const PixelFeatureSet& fake,
                     std::optional<double> bandwidth = std::nullopt) {
  detail::check_pair(real, fake, "mmd");
  MmdResult r;
  if (bandwidth) {
    if (!(*bandwidth > 0.0)) throw ParameterError("mmd: bandwidth must be positive");
    r.bandwidth = *bandwidth;
  } else if (auto med = median_bandwidth(real, fake)) {
    r.bandwidth = *med;
  } else {
    r.bandwidth = 1.0;
    r.degenerate = true;
  }
  r.value = mmd_squared(real, fake, rbf_kernel(r.bandwidth));
  return r;
}

/// Exact W1 between two equal-size empirical 1-D distributions.
inline double w1_exact_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || a.size() != b.size())
    throw ParameterError("w1_exact_1d: arrays must be non-empty and of equal length");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return total / static_cast<double>(a.size());
}

}  // namespace tsgan
