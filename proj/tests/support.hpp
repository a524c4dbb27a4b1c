#pragma once

// Test-only oracles and generators. Nothing here calls into the code paths it
// is used to check.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "mvar/model.hpp"

namespace mvar::testing {

using Matrix = Mat<double>;
using CMatrix = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;

/// Lag-0 covariance from the companion-form Lyapunov equation, solved by
/// plain fixed-point iteration G <- C G C^T + Q (converges for rho < 1).
inline Matrix lyapunov_covariance(const ArModeld& model) {
  const Index q = model.channels();
  const Index n = q * model.order();
  Matrix c = Matrix::Zero(n, n);
  for (int k = 1; k <= model.order(); ++k) c.block(0, (k - 1) * q, q, q) = model.lag(k);
  if (n > q) c.block(q, 0, n - q, n - q).setIdentity();
  Matrix drive = Matrix::Zero(n, n);
  drive.topLeftCorner(q, q) = model.noise_cov();
  Matrix g = drive;
  for (int it = 0; it < 20000; ++it) {
    Matrix next = c * g * c.transpose() + drive;
    const double delta = (next - g).cwiseAbs().maxCoeff();
    g = next;
    if (delta < 1e-13 * g.cwiseAbs().maxCoeff()) break;
  }
  return g.topLeftCorner(q, q);
}

/// Zero-padded length-n_dft DFT of the lag sequence b(0..n_dft-1) with
/// b(0) = 0 and b(k) = A(k) for 1 <= k <= p, evaluated at integer bin w by
/// summing over every sample, zeros included.
inline CMatrix padded_dft(const ArModeld& model, Index bin, Index n_dft) {
  const Index q = model.channels();
  CMatrix out = CMatrix::Zero(q, q);
  const double pi = std::acos(-1.0);
  for (Index t = 0; t < n_dft; ++t) {
    Matrix b = Matrix::Zero(q, q);
    if (t >= 1 && t <= model.order()) b = model.lag(static_cast<int>(t));
    // exact reduction of t*w mod n_dft keeps the phase accurate for long transforms
    const double phase = -2.0 * pi * static_cast<double>((t * bin) % n_dft) / static_cast<double>(n_dft);
    out += b.cast<std::complex<double>>() * std::polar(1.0, phase);
  }
  return out;
}

/// Companion spectral radius by power iteration on C^m (independent of EigenSolver).
inline double univariate_radius(const std::vector<double>& lags) {
  const std::size_t p = lags.size();
  Matrix c = Matrix::Zero(static_cast<Index>(p), static_cast<Index>(p));
  for (std::size_t k = 0; k < p; ++k) c(0, static_cast<Index>(k)) = lags[k];
  if (p > 1) c.block(1, 0, static_cast<Index>(p) - 1, static_cast<Index>(p) - 1).setIdentity();
  Matrix power = Matrix::Identity(c.rows(), c.cols());
  const int m = 400;
  for (int k = 0; k < m; ++k) power = power * c;
  return std::pow(power.norm(), 1.0 / m);
}

struct RandomModelOptions {
  Index min_channels = 2;
  Index max_channels = 6;
  int max_order = 3;
  bool correlated_noise = true;
};

/**
 * Random model whose full companion matrix and every single-channel
 * self-regression have spectral radius below a random target in [0.5, 0.95].
 * Lag k is rescaled by c^k, which scales every companion eigenvalue by c.
 */
inline ArModeld random_stable_model(std::mt19937_64& rng, RandomModelOptions opts = {}) {
  std::uniform_int_distribution<Index> q_dist(opts.min_channels, opts.max_channels);
  std::uniform_int_distribution<int> p_dist(1, opts.max_order);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> target_dist(0.5, 0.95);
  const Index q = q_dist(rng);
  const int p = p_dist(rng);
  std::vector<Matrix> coeffs;
  for (int k = 0; k < p; ++k) {
    Matrix a(q, q);
    for (Index i = 0; i < q; ++i)
      for (Index j = 0; j < q; ++j) a(i, j) = (i == j ? 1.2 : 0.5) * u(rng);
    coeffs.push_back(a);
  }
  Matrix noise = Matrix::Identity(q, q);
  if (opts.correlated_noise) {
    Matrix f(q, q);
    for (Index i = 0; i < q; ++i)
      for (Index j = 0; j < q; ++j) f(i, j) = u(rng);
    noise = f * f.transpose() / static_cast<double>(q) + 0.2 * Matrix::Identity(q, q);
  }
  ArModeld raw(coeffs, noise);
  double rho = spectral_radius(raw);
  for (Index i = 0; i < q; ++i) rho = std::max(rho, spectral_radius(self_regression(raw, i)));
  const double scale = target_dist(rng) / std::max(rho, 1e-3);
  double s = 1.0;
  for (auto& a : coeffs) {
    s *= scale;
    a *= s;
  }
  return ArModeld(std::move(coeffs), std::move(noise));
}

/// Reorders channels: out channel n is input channel perm[n].
inline ArModeld permute_channels(const ArModeld& model, const std::vector<Index>& perm) {
  const Index q = model.channels();
  Eigen::PermutationMatrix<Eigen::Dynamic> pm(q);
  for (Index n = 0; n < q; ++n) pm.indices()(perm[static_cast<std::size_t>(n)]) = static_cast<int>(n);
  std::vector<Matrix> coeffs;
  for (const auto& a : model.coeffs()) coeffs.push_back(pm * a * pm.transpose());
  return ArModeld(std::move(coeffs), pm * model.noise_cov() * pm.transpose());
}

}  // namespace mvar::testing
