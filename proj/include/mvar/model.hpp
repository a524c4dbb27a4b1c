#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mvar/error.hpp"

namespace mvar {

using Index = Eigen::Index;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Spectral radius at or above this bound counts as unstable.
inline constexpr double kStabilityMargin = 1e-9;

/// Eigenvalues of the noise covariance may dip this far below zero.
inline constexpr double kPsdTolerance = 1e-10;

/**
 * Multivariate autoregressive model
 *
 *     x(t) = sum_{k=1..p} A(k) x(t-k) + e(t),   cov(e) = noise_cov
 *
 * Lags are 1-based: lag(1) .. lag(p). Channel indices are 0-based.
 * Instances are immutable once constructed.
 */
template <typename Scalar = double>
class ArModel {
 public:
  using Matrix = Mat<Scalar>;

  ArModel(std::vector<Matrix> coeffs, Matrix noise_cov)
      : coeffs_(std::move(coeffs)), noise_cov_(std::move(noise_cov)) {
    validate();
  }

  Index channels() const { return noise_cov_.rows(); }
  int order() const { return static_cast<int>(coeffs_.size()); }

  const Matrix& lag(int k) const { return coeffs_.at(static_cast<std::size_t>(k - 1)); }
  const std::vector<Matrix>& coeffs() const { return coeffs_; }
  const Matrix& noise_cov() const { return noise_cov_; }

  bool operator==(const ArModel& other) const {
    if (order() != other.order() || channels() != other.channels()) return false;
    for (int k = 1; k <= order(); ++k)
      if (lag(k) != other.lag(k)) return false;
    return noise_cov_ == other.noise_cov_;
  }

 private:
  void validate() const {
    const Index q = noise_cov_.rows();
    if (coeffs_.empty()) throw Error(Errc::invalid_model, "model order must be at least 1");
    if (q < 1 || noise_cov_.cols() != q)
      throw Error(Errc::invalid_model, "noise covariance must be square and non-empty");
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      if (coeffs_[k].rows() != q || coeffs_[k].cols() != q)
        throw Error(Errc::invalid_model,
                    "coefficient matrix for lag " + std::to_string(k + 1) + " is not " +
                        std::to_string(q) + "x" + std::to_string(q));
    }
    if (!noise_cov_.allFinite()) throw Error(Errc::covariance, "noise covariance has non-finite entries");
    const Scalar scale = std::max(Scalar(1), noise_cov_.cwiseAbs().maxCoeff());
    if ((noise_cov_ - noise_cov_.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale)
      throw Error(Errc::covariance, "noise covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(noise_cov_, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -Scalar(kPsdTolerance) * scale)
      throw Error(Errc::covariance, "noise covariance is not positive semidefinite");
  }

  std::vector<Matrix> coeffs_;
  Matrix noise_cov_;
};

/// Multichannel sampled signal, one row per channel.
template <typename Scalar = double>
class TimeSeries {
 public:
  using Matrix = Mat<Scalar>;

  TimeSeries(Matrix values, double sampling_rate)
      : values_(std::move(values)), sampling_rate_(sampling_rate) {
    if (values_.rows() < 1 || values_.cols() < 1)
      throw Error(Errc::invalid_argument, "time series must have at least one channel and one sample");
    if (!(sampling_rate_ > 0) || !std::isfinite(sampling_rate_))
      throw Error(Errc::invalid_argument, "sampling rate must be positive");
    if (!values_.allFinite()) throw Error(Errc::invalid_argument, "time series contains non-finite values");
  }

  Index channels() const { return values_.rows(); }
  Index samples() const { return values_.cols(); }
  double sampling_rate() const { return sampling_rate_; }
  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
  double sampling_rate_;
};

using ArModeld = ArModel<double>;
using TimeSeriesd = TimeSeries<double>;

/// Block companion matrix [A(1) .. A(p); I 0].
template <typename Scalar>
Mat<Scalar> companion(const ArModel<Scalar>& model) {
  const Index q = model.channels();
  const Index n = q * model.order();
  Mat<Scalar> c = Mat<Scalar>::Zero(n, n);
  for (int k = 1; k <= model.order(); ++k) c.block(0, (k - 1) * q, q, q) = model.lag(k);
  if (model.order() > 1) c.block(q, 0, n - q, n - q).setIdentity();
  return c;
}

template <typename Scalar>
Scalar spectral_radius(const ArModel<Scalar>& model) {
  for (const auto& a : model.coeffs())
    if (!a.allFinite()) throw Error(Errc::invalid_model, "model has non-finite coefficients");
  Eigen::EigenSolver<Mat<Scalar>> es(companion(model), false);
  if (es.info() != Eigen::Success) throw Error(Errc::invalid_model, "companion eigenvalue solve failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

template <typename Scalar>
bool is_stable(const ArModel<Scalar>& model) {
  return spectral_radius(model) < Scalar(1) - Scalar(kStabilityMargin);
}

/// Spectral radius of the univariate recursion x(t) = sum_k c[k-1] x(t-k).
template <typename Scalar>
Scalar spectral_radius(const Vec<Scalar>& lags) {
  const Index p = lags.size();
  if (p == 0 || lags.isZero(0)) return Scalar(0);
  Mat<Scalar> c = Mat<Scalar>::Zero(p, p);
  c.row(0) = lags.transpose();
  if (p > 1) c.block(1, 0, p - 1, p - 1).setIdentity();
  Eigen::EigenSolver<Mat<Scalar>> es(c, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Diagonal coefficients (i, i) across lags 1..p.
template <typename Scalar>
Vec<Scalar> self_regression(const ArModel<Scalar>& model, Index i) {
  Vec<Scalar> c(model.order());
  for (int k = 1; k <= model.order(); ++k) c(k - 1) = model.lag(k)(i, i);
  return c;
}

/// Factor F with F F^T = cov; Cholesky first, eigen decomposition for semidefinite input.
template <typename Scalar>
Mat<Scalar> covariance_factor(const Mat<Scalar>& cov) {
  Eigen::LLT<Mat<Scalar>> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> eig(cov);
  const Scalar scale = std::max(Scalar(1), cov.cwiseAbs().maxCoeff());
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < -Scalar(kPsdTolerance) * scale)
    throw Error(Errc::covariance, "noise covariance is not positive semidefinite");
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt().asDiagonal();
}

/**
 * Draw a realization from a stable model, starting from a zero state and
 * dropping the first `burn_in` samples. Innovations are Gaussian from a
 * mt19937_64 stream seeded with `seed`; output is bit-identical for equal
 * arguments.
 */
template <typename Scalar>
TimeSeries<Scalar> simulate(const ArModel<Scalar>& model, Index n_samples, Index burn_in,
                            std::uint64_t seed, double sampling_rate = 256.0) {
  if (n_samples <= 0) throw Error(Errc::invalid_argument, "n_samples must be positive");
  if (burn_in < 0) throw Error(Errc::invalid_argument, "burn_in must be non-negative");
  const Scalar rho = spectral_radius(model);
  if (!(rho < Scalar(1) - Scalar(kStabilityMargin)))
    throw Error(Errc::unstable_model, "cannot simulate unstable model (spectral radius " +
                                          std::to_string(static_cast<double>(rho)) + ")");
  const Mat<Scalar> factor = covariance_factor(model.noise_cov());

  const Index q = model.channels();
  const int p = model.order();
  const Index total = n_samples + burn_in;
  Mat<Scalar> x = Mat<Scalar>::Zero(q, total);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec<Scalar> draw(q);

  for (Index t = 0; t < total; ++t) {
    for (Index c = 0; c < q; ++c) draw(c) = static_cast<Scalar>(normal(rng));
    Vec<Scalar> next = factor * draw;
    for (int k = 1; k <= p && k <= t; ++k) next.noalias() += model.lag(k) * x.col(t - k);
    x.col(t) = next;
  }
  return TimeSeries<Scalar>(x.rightCols(n_samples), sampling_rate);
}

/**
 * Keep only the directed link j -> i: every off-diagonal entry of every A(k)
 * other than (i, j) is zeroed, as are all off-diagonal noise covariances.
 * Diagonals are untouched. Stability of the result is not checked.
 */
template <typename Scalar>
ArModel<Scalar> isolate(const ArModel<Scalar>& model, Index i, Index j) {
  const Index q = model.channels();
  if (i < 0 || j < 0 || i >= q || j >= q)
    throw Error(Errc::invalid_pair, "channel index out of range");
  if (i == j) throw Error(Errc::invalid_pair, "isolate needs distinct receiver and sender");

  std::vector<Mat<Scalar>> coeffs;
  coeffs.reserve(model.coeffs().size());
  for (const auto& a : model.coeffs()) {
    Mat<Scalar> kept = a.diagonal().asDiagonal();
    kept(i, j) = a(i, j);
    coeffs.push_back(std::move(kept));
  }
  Mat<Scalar> cov = model.noise_cov().diagonal().asDiagonal();
  return ArModel<Scalar>(std::move(coeffs), std::move(cov));
}

}  // namespace mvar
