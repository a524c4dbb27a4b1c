#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "mvar/model.hpp"

namespace mvar {

template <typename Scalar = double>
struct LeastSquaresFit {
  ArModel<Scalar> model;
  Mat<Scalar> residuals;     // q x (N - order), one column per predicted sample
  Vec<Scalar> channel_mean;  // removed before regression
  Scalar condition;          // |R|max / |R|min of the regressor QR
};

/// Residual covariance E E^T / N_eff, symmetrized.
template <typename Scalar>
Mat<Scalar> residual_covariance(const Mat<Scalar>& residuals) {
  const Mat<Scalar> c = residuals * residuals.transpose() / Scalar(residuals.cols());
  return (c + c.transpose()) * Scalar(0.5);
}

/// Design matrix of stacked lags: row t holds [x(t-1)^T .. x(t-order)^T].
template <typename Scalar>
Mat<Scalar> lagged_design(const Mat<Scalar>& centered, int order) {
  const Index q = centered.rows();
  const Index rows = centered.cols() - order;
  Mat<Scalar> z(rows, q * order);
  for (int k = 1; k <= order; ++k)
    z.middleCols((k - 1) * q, q) = centered.middleCols(order - k, rows).transpose();
  return z;
}

/**
 * Ordinary least-squares MVAR fit of the given order. Channels are demeaned
 * first; all channels share one regressor matrix, which is factored once
 * with column-pivoted QR.
 */
template <typename Scalar>
LeastSquaresFit<Scalar> fit_least_squares_detailed(const TimeSeries<Scalar>& data, int order) {
  if (order < 1) throw Error(Errc::invalid_argument, "model order must be at least 1");
  const Index q = data.channels();
  const Index n = data.samples();
  if (n <= q * order + order)
    throw Error(Errc::insufficient_data, "need more than " + std::to_string(q * order + order) +
                                             " samples to fit order " + std::to_string(order) + ", got " +
                                             std::to_string(n));

  const Vec<Scalar> mean = data.values().rowwise().mean();
  const Mat<Scalar> centered = data.values().colwise() - mean;
  const Mat<Scalar> z = lagged_design(centered, order);
  const Mat<Scalar> y = centered.rightCols(n - order).transpose();

  Eigen::ColPivHouseholderQR<Mat<Scalar>> qr(z);
  const Vec<Scalar> rdiag = qr.matrixQR().diagonal().cwiseAbs();
  const Scalar rmax = rdiag.size() ? rdiag.maxCoeff() : Scalar(0);
  const Scalar rmin = rdiag.size() ? rdiag.minCoeff() : Scalar(0);
  const Scalar condition = rmin > Scalar(0) ? rmax / rmin : std::numeric_limits<Scalar>::infinity();
  if (qr.rank() < z.cols() || !(rmax > Scalar(0)))
    throw Error(Errc::singular_design, "regressor matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                                           " of " + std::to_string(z.cols()) + ", condition estimate " +
                                           std::to_string(static_cast<double>(condition)) + ")");

  const Mat<Scalar> w = qr.solve(y);  // (q*order) x q
  Mat<Scalar> residuals = (y - z * w).transpose();

  std::vector<Mat<Scalar>> coeffs;
  for (int k = 1; k <= order; ++k) coeffs.push_back(w.middleRows((k - 1) * q, q).transpose());
  Mat<Scalar> cov = residual_covariance(residuals);
  return {ArModel<Scalar>(std::move(coeffs), std::move(cov)), std::move(residuals), mean, condition};
}

template <typename Scalar>
ArModel<Scalar> fit_least_squares(const TimeSeries<Scalar>& data, int order) {
  return fit_least_squares_detailed(data, order).model;
}

}  // namespace mvar
