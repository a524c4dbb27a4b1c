#include <doctest.h>

#include "mvar/estimate.hpp"
#include "mvar/toys.hpp"
#include "support.hpp"

using namespace mvar;
using mvar::testing::Matrix;

namespace {

Errc error_code_of(const TimeSeriesd& data, int order) {
  try {
    fit_least_squares(data, order);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::io;
}

double max_coef_error(const ArModeld& fit, const ArModeld& truth) {
  double err = 0.0;
  for (int k = 1; k <= fit.order(); ++k) {
    const Matrix ref = k <= truth.order() ? truth.lag(k) : Matrix::Zero(fit.channels(), fit.channels());
    err = std::max(err, (fit.lag(k) - ref).cwiseAbs().maxCoeff());
  }
  return err;
}

}  // namespace

TEST_CASE("scalar AR(1) fit matches the closed-form normal equation") {
  const ArModeld truth({Matrix::Constant(1, 1, 0.5)}, Matrix::Constant(1, 1, 1.0));
  const auto data = simulate(truth, 100000, 1000, 17);
  const auto fit = fit_least_squares(data, 1);
  CHECK(fit.lag(1)(0, 0) == doctest::Approx(0.5).epsilon(0.02));
  CHECK(std::abs(fit.lag(1)(0, 0) - 0.5) <= 0.01);
  CHECK(std::abs(fit.noise_cov()(0, 0) - 1.0) <= 0.02);

  // Brute force: demean, then a = sum x(t-1) x(t) / sum x(t-1)^2.
  const auto& x = data.values();
  const double mean = x.mean();
  double sxy = 0.0, sxx = 0.0;
  for (Index t = 1; t < x.cols(); ++t) {
    sxy += (x(0, t - 1) - mean) * (x(0, t) - mean);
    sxx += (x(0, t - 1) - mean) * (x(0, t - 1) - mean);
  }
  CHECK(fit.lag(1)(0, 0) == doctest::Approx(sxy / sxx).epsilon(1e-10));
  double rss = 0.0;
  const double a = sxy / sxx;
  for (Index t = 1; t < x.cols(); ++t) {
    const double e = (x(0, t) - mean) - a * (x(0, t - 1) - mean);
    rss += e * e;
  }
  CHECK(fit.noise_cov()(0, 0) == doctest::Approx(rss / static_cast<double>(x.cols() - 1)).epsilon(1e-10));
}

TEST_CASE("toy 9.2 recovery at order 3") {
  const auto truth = toy_model_9_2();
  const auto fit = fit_least_squares(simulate(truth, 25600, 1000, kDefaultSeed), 3);
  REQUIRE(fit.order() == 3);
  CHECK(max_coef_error(fit, truth) <= 0.05);
}

TEST_CASE("fit error paths") {
  CHECK(error_code_of(TimeSeriesd(Matrix::Zero(3, 500), 256.0), 2) == Errc::singular_design);
  CHECK(error_code_of(TimeSeriesd(Matrix::Random(3, 8), 256.0), 2) == Errc::insufficient_data);
  CHECK(error_code_of(TimeSeriesd(Matrix::Random(3, 100), 256.0), 0) == Errc::invalid_argument);
  // Two identical channels make the design rank deficient.
  Matrix dup = Matrix::Random(2, 400);
  dup.row(1) = dup.row(0);
  CHECK(error_code_of(TimeSeriesd(dup, 256.0), 1) == Errc::singular_design);
}

TEST_CASE("residuals are orthogonal to the regressors and define the noise covariance") {
  const auto data = simulate(toy_model_9_1(), 20000, 500, 4);
  const auto fit = fit_least_squares_detailed(data, 3);
  const Matrix centered = data.values().colwise() - fit.channel_mean;
  const Matrix z = lagged_design(centered, 3);
  const Matrix cross = fit.residuals * z / static_cast<double>(z.rows());
  CHECK(cross.cwiseAbs().maxCoeff() < 1e-8);

  CHECK(fit.model.noise_cov() == residual_covariance(fit.residuals));
  const Matrix direct = fit.residuals * fit.residuals.transpose() / static_cast<double>(fit.residuals.cols());
  CHECK((fit.model.noise_cov() - direct).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(fit.model.noise_cov());
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("refitting data simulated from a fit is self-consistent") {
  const auto truth = toy_model_9_1();
  const auto first = fit_least_squares(simulate(truth, 25600, 1000, 8), 3);
  const double first_error = max_coef_error(first, truth);
  const auto second = fit_least_squares(simulate(first, 25600, 1000, 9), 3);
  CHECK(max_coef_error(second, first) <= 3.0 * first_error);
}

TEST_CASE("estimator spread across seeds stays inside the recovery tolerance") {
  for (ToyId id : {ToyId::toy_9_1, ToyId::toy_9_2}) {
    const auto truth = toy_model(id);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
      worst = std::max(worst, max_coef_error(fit_least_squares(simulate(truth, 25600, 1000, seed), 3), truth));
    MESSAGE(std::string(to_string(id)) << " worst coefficient error over 10 seeds: " << worst);
    CHECK(worst <= 0.05);
  }
}
