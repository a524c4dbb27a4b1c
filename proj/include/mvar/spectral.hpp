#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "mvar/model.hpp"

namespace mvar {

template <typename Scalar>
using CMat = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using CVec = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

/// Reciprocal condition number below which a per-frequency inverse is refused.
inline constexpr double kSingularRcond = 1e-13;

/**
 * Frequencies (Hz) at which spectral quantities are evaluated. A frequency f
 * maps to the discrete bin f * n_dft / sampling_rate of a length-n_dft
 * transform; bins need not be integers.
 */
class FrequencyGrid {
 public:
  FrequencyGrid(std::vector<double> frequencies, double sampling_rate, Index n_dft)
      : frequencies_(std::move(frequencies)), sampling_rate_(sampling_rate), n_dft_(n_dft) {
    if (!(sampling_rate_ > 0)) throw Error(Errc::invalid_argument, "sampling rate must be positive");
    if (n_dft_ < 1) throw Error(Errc::invalid_argument, "n_dft must be positive");
    if (frequencies_.empty()) throw Error(Errc::invalid_argument, "frequency grid is empty");
    const double upper = sampling_rate_ / 2 + resolution();
    for (std::size_t k = 0; k < frequencies_.size(); ++k) {
      const double f = frequencies_[k];
      if (!(f >= 0 && f < upper))
        throw Error(Errc::invalid_argument, "frequency " + std::to_string(f) + " Hz outside [0, fs/2]");
      if (k > 0 && !(f > frequencies_[k - 1]))
        throw Error(Errc::invalid_argument, "frequency grid must be strictly increasing");
    }
  }

  /// All bins k * fs / n_dft that fall inside [f_min, f_max].
  static FrequencyGrid band(double f_min, double f_max, double sampling_rate, Index n_dft) {
    if (!(f_min <= f_max)) throw Error(Errc::invalid_argument, "band lower edge above upper edge");
    const double step = sampling_rate / static_cast<double>(n_dft);
    std::vector<double> freqs;
    const auto first = static_cast<Index>(std::ceil(f_min / step - 1e-9));
    const auto last = static_cast<Index>(std::floor(f_max / step + 1e-9));
    for (Index k = std::max<Index>(first, 0); k <= last && k <= n_dft / 2; ++k)
      freqs.push_back(static_cast<double>(k) * step);
    return FrequencyGrid(std::move(freqs), sampling_rate, n_dft);
  }

  const std::vector<double>& frequencies() const { return frequencies_; }
  double sampling_rate() const { return sampling_rate_; }
  Index n_dft() const { return n_dft_; }
  Index size() const { return static_cast<Index>(frequencies_.size()); }
  double resolution() const { return sampling_rate_ / static_cast<double>(n_dft_); }
  double operator[](Index k) const { return frequencies_[static_cast<std::size_t>(k)]; }
  double bin(Index k) const { return (*this)[k] * static_cast<double>(n_dft_) / sampling_rate_; }

  /// Index of the grid point closest to `hz`.
  Index nearest(double hz) const {
    Index best = 0;
    for (Index k = 1; k < size(); ++k)
      if (std::abs((*this)[k] - hz) < std::abs((*this)[best] - hz)) best = k;
    return best;
  }

  /// Sub-grid restricted to [f_min, f_max].
  FrequencyGrid restricted(double f_min, double f_max) const {
    std::vector<double> freqs;
    for (double f : frequencies_)
      if (f >= f_min - 1e-9 && f <= f_max + 1e-9) freqs.push_back(f);
    return FrequencyGrid(std::move(freqs), sampling_rate_, n_dft_);
  }

  bool operator==(const FrequencyGrid&) const = default;

 private:
  std::vector<double> frequencies_;
  double sampling_rate_;
  Index n_dft_;
};

/// A(w) = sum_k A(k) exp(-i 2 pi k w / n_dft) at a single (possibly fractional) bin.
template <typename Scalar>
CMat<Scalar> coefficient_transform_at(const ArModel<Scalar>& model, double bin, Index n_dft) {
  using C = std::complex<Scalar>;
  const Index q = model.channels();
  CMat<Scalar> a = CMat<Scalar>::Zero(q, q);
  const Scalar two_pi = Scalar(2) * Scalar(3.14159265358979323846264338327950288L);
  for (int k = 1; k <= model.order(); ++k) {
    const Scalar phase = -two_pi * Scalar(k) * Scalar(bin) / Scalar(n_dft);
    a += model.lag(k).template cast<C>() * std::polar(Scalar(1), phase);
  }
  return a;
}

/// I - A(w).
template <typename Scalar>
CMat<Scalar> a_check_at(const ArModel<Scalar>& model, double bin, Index n_dft) {
  const Index q = model.channels();
  return CMat<Scalar>::Identity(q, q) - coefficient_transform_at(model, bin, n_dft);
}

namespace detail {

template <typename Scalar>
CMat<Scalar> checked_inverse(const CMat<Scalar>& m, double hz, const char* what, Errc code) {
  Eigen::PartialPivLU<CMat<Scalar>> lu(m);
  const Scalar rc = lu.rcond();
  if (!(rc > Scalar(kSingularRcond))) {
    std::ostringstream os;
    os << what << " is numerically singular at " << hz << " Hz (rcond " << static_cast<double>(rc) << ")";
    throw Error(code, os.str());
  }
  return lu.inverse();
}

template <typename Scalar>
CMat<Scalar> hermitian_part(const CMat<Scalar>& m) {
  return (m + m.adjoint()) * Scalar(0.5);
}

}  // namespace detail

/// Per-frequency A(w), I - A(w) and its inverse B(w).
template <typename Scalar = double>
struct SpectralTransform {
  FrequencyGrid grid;
  std::vector<CMat<Scalar>> a_of_omega;
  std::vector<CMat<Scalar>> a_check;
  std::vector<CMat<Scalar>> b_of_omega;
};

template <typename Scalar>
SpectralTransform<Scalar> transform_coefficients(const ArModel<Scalar>& model, const FrequencyGrid& grid) {
  SpectralTransform<Scalar> out{grid, {}, {}, {}};
  const Index q = model.channels();
  out.a_of_omega.reserve(grid.size());
  out.a_check.reserve(grid.size());
  out.b_of_omega.reserve(grid.size());
  for (Index k = 0; k < grid.size(); ++k) {
    CMat<Scalar> a = coefficient_transform_at(model, grid.bin(k), grid.n_dft());
    CMat<Scalar> check = CMat<Scalar>::Identity(q, q) - a;
    out.b_of_omega.push_back(detail::checked_inverse(check, grid[k], "I - A(w)", Errc::singular_transform));
    out.a_of_omega.push_back(std::move(a));
    out.a_check.push_back(std::move(check));
  }
  return out;
}

/**
 * Spectral density matrix S_x(w) and its inverse on a frequency grid.
 * The inverse may be absent (singular noise covariance); asking for it then
 * throws covariance_singular.
 */
template <typename Scalar = double>
class CrossSpectrum {
 public:
  CrossSpectrum(FrequencyGrid grid, std::vector<CMat<Scalar>> s_x,
                std::optional<std::vector<CMat<Scalar>>> s_x_inv)
      : grid_(std::move(grid)), s_x_(std::move(s_x)), s_x_inv_(std::move(s_x_inv)) {}

  const FrequencyGrid& grid() const { return grid_; }
  const std::vector<CMat<Scalar>>& density() const { return s_x_; }
  bool has_inverse() const { return s_x_inv_.has_value(); }
  const std::vector<CMat<Scalar>>& inverse() const {
    if (!s_x_inv_) throw Error(Errc::covariance_singular, "inverse spectral density unavailable");
    return *s_x_inv_;
  }
  Index channels() const { return s_x_.empty() ? 0 : s_x_.front().rows(); }

  /// Real autospectrum [S_x]_ii over the grid.
  Vec<Scalar> autospectrum(Index i) const {
    Vec<Scalar> out(grid_.size());
    for (Index k = 0; k < grid_.size(); ++k) out(k) = s_x_[static_cast<std::size_t>(k)](i, i).real();
    return out;
  }

  CrossSpectrum restricted(double f_min, double f_max) const {
    std::vector<double> freqs;
    std::vector<CMat<Scalar>> s;
    std::optional<std::vector<CMat<Scalar>>> inv;
    if (s_x_inv_) inv.emplace();
    for (Index k = 0; k < grid_.size(); ++k) {
      const double f = grid_[k];
      if (f < f_min - 1e-9 || f > f_max + 1e-9) continue;
      freqs.push_back(f);
      s.push_back(s_x_[static_cast<std::size_t>(k)]);
      if (inv) inv->push_back((*s_x_inv_)[static_cast<std::size_t>(k)]);
    }
    return CrossSpectrum(FrequencyGrid(std::move(freqs), grid_.sampling_rate(), grid_.n_dft()),
                         std::move(s), std::move(inv));
  }

 private:
  FrequencyGrid grid_;
  std::vector<CMat<Scalar>> s_x_;
  std::optional<std::vector<CMat<Scalar>>> s_x_inv_;
};

/// S_x(w) = B S_e B^* at one bin.
template <typename Scalar>
CMat<Scalar> spectral_density_at(const ArModel<Scalar>& model, double bin, Index n_dft) {
  using C = std::complex<Scalar>;
  const CMat<Scalar> b =
      detail::checked_inverse(a_check_at(model, bin, n_dft), bin, "I - A(w)", Errc::singular_transform);
  return detail::hermitian_part<Scalar>(b * model.noise_cov().template cast<C>() * b.adjoint());
}

/**
 * Parametric spectral density of a stable model. S_x comes from the transfer
 * function B(w); S_x^{-1} is built directly as Acheck^* S_e^{-1} Acheck, never
 * by inverting S_x.
 */
template <typename Scalar>
CrossSpectrum<Scalar> cross_spectrum(const ArModel<Scalar>& model, const FrequencyGrid& grid) {
  using C = std::complex<Scalar>;
  if (!is_stable(model)) throw Error(Errc::unstable_model, "cross spectrum requires a stable model");
  const SpectralTransform<Scalar> tf = transform_coefficients(model, grid);
  const CMat<Scalar> noise = model.noise_cov().template cast<C>();

  std::optional<CMat<Scalar>> noise_inv;
  {
    Eigen::LLT<Mat<Scalar>> llt(model.noise_cov());
    if (llt.info() == Eigen::Success && llt.rcond() > Scalar(kSingularRcond))
      noise_inv = llt.solve(Mat<Scalar>::Identity(model.channels(), model.channels())).template cast<C>();
  }

  std::vector<CMat<Scalar>> s_x;
  std::optional<std::vector<CMat<Scalar>>> s_x_inv;
  if (noise_inv) s_x_inv.emplace();
  s_x.reserve(grid.size());
  for (std::size_t k = 0; k < tf.b_of_omega.size(); ++k) {
    const auto& b = tf.b_of_omega[k];
    s_x.push_back(detail::hermitian_part<Scalar>(b * noise * b.adjoint()));
    if (noise_inv) {
      const auto& ac = tf.a_check[k];
      s_x_inv->push_back(detail::hermitian_part<Scalar>(ac.adjoint() * (*noise_inv) * ac));
    }
  }
  return CrossSpectrum<Scalar>(grid, std::move(s_x), std::move(s_x_inv));
}

/// Hermitian PSD inverse; adds a growing ridge to the diagonal until the
/// factorization is well conditioned.
template <typename Scalar>
CMat<Scalar> regularized_inverse(const CMat<Scalar>& s) {
  const Index q = s.rows();
  const CMat<Scalar> eye = CMat<Scalar>::Identity(q, q);
  Eigen::LLT<CMat<Scalar>> llt(s);
  if (llt.info() == Eigen::Success && llt.rcond() > Scalar(1e-12))
    return detail::hermitian_part<Scalar>(llt.solve(eye));
  const Scalar scale = std::max(s.diagonal().real().cwiseAbs().maxCoeff(), Scalar(1e-300));
  Scalar ridge = Scalar(1e-10) * scale;
  for (int attempt = 0; attempt < 12; ++attempt, ridge *= Scalar(10)) {
    llt.compute(s + eye * ridge);
    if (llt.info() == Eigen::Success && llt.rcond() > Scalar(1e-12)) break;
  }
  return detail::hermitian_part<Scalar>(llt.solve(eye));
}

enum class Window { rectangular, hann, hamming };

template <typename Scalar>
Vec<Scalar> window_coefficients(Window w, Index n) {
  Vec<Scalar> out(n);
  const Scalar pi = Scalar(3.14159265358979323846264338327950288L);
  for (Index t = 0; t < n; ++t) {
    // periodic form, matching the usual spectral-analysis convention
    const Scalar c = std::cos(Scalar(2) * pi * Scalar(t) / Scalar(n));
    switch (w) {
      case Window::rectangular: out(t) = Scalar(1); break;
      case Window::hann: out(t) = Scalar(0.5) - Scalar(0.5) * c; break;
      case Window::hamming: out(t) = Scalar(0.54) - Scalar(0.46) * c; break;
    }
  }
  return out;
}

/**
 * Welch cross-periodogram. Each segment is demeaned per channel, windowed and
 * transformed; outer products z z^* are averaged and divided by the window
 * power sum(w^2), so unit-variance white noise has a flat level of 1 (the
 * same scale as the parametric S_x). Output covers bins 0 .. segment_len/2.
 * Inverses are per-frequency with a Tikhonov fallback for ill-conditioned bins.
 */
template <typename Scalar>
CrossSpectrum<Scalar> periodogram_cross_spectrum(const TimeSeries<Scalar>& data, Index segment_len,
                                                 double overlap_fraction, Window window = Window::hann) {
  using C = std::complex<Scalar>;
  if (segment_len < 2 || segment_len > data.samples())
    throw Error(Errc::invalid_argument, "segment length must be in [2, n_samples]");
  if (!(overlap_fraction >= 0.0 && overlap_fraction <= 0.9))
    throw Error(Errc::invalid_argument, "overlap fraction must be in [0, 0.9]");
  const Index step =
      std::max<Index>(1, segment_len - static_cast<Index>(std::llround(overlap_fraction * segment_len)));
  const Index segments = (data.samples() - segment_len) / step + 1;
  if (segments < 2)
    throw Error(Errc::insufficient_segments,
                "periodogram needs at least 2 segments, got " + std::to_string(segments));

  const Index q = data.channels();
  const Index n_bins = segment_len / 2 + 1;
  const Vec<Scalar> w = window_coefficients<Scalar>(window, segment_len);
  const Scalar power = w.squaredNorm();

  std::vector<CMat<Scalar>> acc(static_cast<std::size_t>(n_bins), CMat<Scalar>::Zero(q, q));
  Eigen::FFT<Scalar> fft;
  std::vector<Scalar> buf(static_cast<std::size_t>(segment_len));
  std::vector<C> spec;
  CMat<Scalar> z(q, n_bins);
  for (Index s = 0; s < segments; ++s) {
    const Index start = s * step;
    for (Index c = 0; c < q; ++c) {
      const auto seg = data.values().row(c).segment(start, segment_len);
      const Scalar mean = seg.mean();
      for (Index t = 0; t < segment_len; ++t) buf[static_cast<std::size_t>(t)] = (seg(t) - mean) * w(t);
      fft.fwd(spec, buf);
      for (Index b = 0; b < n_bins; ++b) z(c, b) = spec[static_cast<std::size_t>(b)];
    }
    for (Index b = 0; b < n_bins; ++b) acc[static_cast<std::size_t>(b)] += z.col(b) * z.col(b).adjoint();
  }

  std::vector<double> freqs;
  std::vector<CMat<Scalar>> inv;
  const Scalar norm = Scalar(1) / (Scalar(segments) * power);
  for (Index b = 0; b < n_bins; ++b) {
    auto& s = acc[static_cast<std::size_t>(b)];
    s = detail::hermitian_part<Scalar>(s * norm);
    freqs.push_back(static_cast<double>(b) * data.sampling_rate() / static_cast<double>(segment_len));
    inv.push_back(regularized_inverse(s));
  }
  return CrossSpectrum<Scalar>(FrequencyGrid(std::move(freqs), data.sampling_rate(), segment_len),
                               std::move(acc), std::move(inv));
}

}  // namespace mvar
