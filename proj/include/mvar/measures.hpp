#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mvar/model.hpp"
#include "mvar/spectral.hpp"

namespace mvar {

enum class Measure { coherence, partial_coherence, icoh, ncr, constrained_ncr, pdc, gpdc };

inline const char* to_string(Measure m) {
  switch (m) {
    case Measure::coherence: return "coherence";
    case Measure::partial_coherence: return "partial_coherence";
    case Measure::icoh: return "icoh";
    case Measure::ncr: return "ncr";
    case Measure::constrained_ncr: return "constrained_ncr";
    case Measure::pdc: return "pdc";
    case Measure::gpdc: return "gpdc";
  }
  return "unknown";
}

/// What the diagonal cells hold. `undefined` keeps the measure's own diagonal
/// (1 for the coherences, the self term for NCR/PDC/gPDC, 0 for iCoh).
enum class DiagonalConvention { undefined, normalized_autospectrum };

/// A receiver/sender pair the measure could not be evaluated for.
struct PairIssue {
  Index receiver;
  Index sender;
  Errc code;
  std::string message;
};

/**
 * A measure on a frequency grid: values[k](i, j) is the value for receiver i
 * and sender j at grid frequency k. Symmetric measures fill both triangles.
 */
template <typename Scalar = double>
struct ConnectivityMap {
  Measure measure;
  FrequencyGrid grid;
  std::vector<Mat<Scalar>> values;
  DiagonalConvention diagonal = DiagonalConvention::undefined;
  std::vector<PairIssue> issues;

  Index channels() const { return values.empty() ? 0 : values.front().rows(); }

  Vec<Scalar> curve(Index receiver, Index sender) const {
    Vec<Scalar> out(grid.size());
    for (Index k = 0; k < grid.size(); ++k) out(k) = values[static_cast<std::size_t>(k)](receiver, sender);
    return out;
  }
};

namespace detail {

template <typename Scalar>
ConnectivityMap<Scalar> empty_map(Measure m, const FrequencyGrid& grid, Index q) {
  return ConnectivityMap<Scalar>{
      m, grid, std::vector<Mat<Scalar>>(static_cast<std::size_t>(grid.size()), Mat<Scalar>::Zero(q, q)),
      DiagonalConvention::undefined, {}};
}

inline std::string at_frequency(const std::string& what, double hz) {
  std::ostringstream os;
  os << what << " at " << hz << " Hz";
  return os.str();
}

template <typename Scalar>
void require_stable_node(const ArModel<Scalar>& model, Index node) {
  const Scalar rho = spectral_radius(self_regression(model, node));
  if (!(rho < Scalar(1) - Scalar(kStabilityMargin)))
    throw Error(Errc::isolated_instability,
                "self-regression of channel " + std::to_string(node) + " is unstable (spectral radius " +
                    std::to_string(static_cast<double>(rho)) + ")");
}

template <typename Scalar>
void require_pair(Index q, Index i, Index j) {
  if (i < 0 || j < 0 || i >= q || j >= q) throw Error(Errc::invalid_pair, "channel index out of range");
  if (i == j) throw Error(Errc::invalid_pair, "measure needs distinct receiver and sender");
}

}  // namespace detail

/// Squared coherence |S_ij|^2 / (S_ii S_jj).
template <typename Scalar>
ConnectivityMap<Scalar> coherence(const CrossSpectrum<Scalar>& cs) {
  const Index q = cs.channels();
  auto out = detail::empty_map<Scalar>(Measure::coherence, cs.grid(), q);
  for (Index k = 0; k < cs.grid().size(); ++k) {
    const auto& s = cs.density()[static_cast<std::size_t>(k)];
    const Vec<Scalar> d = s.diagonal().real();
    if (!(d.minCoeff() > Scalar(0)))
      throw Error(Errc::degenerate_channel, detail::at_frequency("zero autospectrum", cs.grid()[k]));
    auto& v = out.values[static_cast<std::size_t>(k)];
    for (Index i = 0; i < q; ++i) {
      v(i, i) = Scalar(1);
      for (Index j = i + 1; j < q; ++j) {
        const Scalar c = std::min(Scalar(1), std::norm(s(i, j)) / (d(i) * d(j)));
        v(i, j) = v(j, i) = c;
      }
    }
  }
  return out;
}

/// Squared modulus of the partial coherence, from the inverse spectral matrix.
template <typename Scalar>
ConnectivityMap<Scalar> partial_coherence(const CrossSpectrum<Scalar>& cs) {
  const Index q = cs.channels();
  const auto& inv = cs.inverse();
  auto out = detail::empty_map<Scalar>(Measure::partial_coherence, cs.grid(), q);
  for (Index k = 0; k < cs.grid().size(); ++k) {
    const auto& s = inv[static_cast<std::size_t>(k)];
    const Vec<Scalar> d = s.diagonal().real();
    if (!(d.minCoeff() > Scalar(0)))
      throw Error(Errc::degenerate_inverse,
                  detail::at_frequency("non-positive inverse spectral diagonal", cs.grid()[k]));
    auto& v = out.values[static_cast<std::size_t>(k)];
    for (Index i = 0; i < q; ++i) {
      v(i, i) = Scalar(1);
      for (Index j = i + 1; j < q; ++j) {
        const Scalar c = std::min(Scalar(1), std::norm(s(i, j)) / (d(i) * d(j)));
        v(i, j) = v(j, i) = c;
      }
    }
  }
  return out;
}

/**
 * Isolated effective coherence for sender j -> receiver i at one frequency,
 * closed form:
 *
 *   k = s_ii^{-1} |Ac_ij|^2 / (s_ii^{-1} |Ac_ij|^2 + s_jj^{-1} |Ac_jj|^2)
 *
 * with Ac = I - A(w) and s the innovation variances. Only the (i,j), (j,j)
 * entries of Ac and the two variances enter.
 */
template <typename Scalar>
Scalar icoh_closed_form(const CMat<Scalar>& a_check, Scalar var_i, Scalar var_j, Index i, Index j) {
  const Scalar num = std::norm(a_check(i, j)) / var_i;
  const Scalar den = num + std::norm(a_check(j, j)) / var_j;
  return den > Scalar(0) ? num / den : Scalar(0);
}

/// Same quantity written as the squared partial coherence of the isolated
/// system: |[S^-1]_ij|^2 / ([S^-1]_ii [S^-1]_jj).
template <typename Scalar>
Scalar icoh_partial_form(const CMat<Scalar>& a_check, Scalar var_i, Scalar var_j, Index i, Index j) {
  const Scalar inv_i = Scalar(1) / var_i;
  const Scalar inv_j = Scalar(1) / var_j;
  const Scalar aij = std::norm(a_check(i, j));
  const Scalar aii = std::norm(a_check(i, i));
  const Scalar ajj = std::norm(a_check(j, j));
  const Scalar num = aij * aii * inv_i * inv_i;
  const Scalar den = inv_i * aii * (inv_i * aij + inv_j * ajj);
  return den > Scalar(0) ? num / den : Scalar(0);
}

struct IcohOptions {
  /// Also evaluate the partial-coherence form and fail on disagreement.
  bool cross_check = false;
  double cross_check_tolerance = 1e-12;
};

/**
 * iCoh for every ordered pair. Pairs whose receiver or sender has an unstable
 * self-regression are left at zero and reported in `issues`; the rest are
 * computed normally.
 */
template <typename Scalar>
ConnectivityMap<Scalar> icoh(const ArModel<Scalar>& model, const FrequencyGrid& grid, IcohOptions opts = {}) {
  const Index q = model.channels();
  auto out = detail::empty_map<Scalar>(Measure::icoh, grid, q);
  const Vec<Scalar> var = model.noise_cov().diagonal();

  std::vector<std::string> unstable(static_cast<std::size_t>(q));
  for (Index n = 0; n < q; ++n) {
    try {
      detail::require_stable_node(model, n);
      if (!(var(n) > Scalar(0)))
        throw Error(Errc::covariance_singular, "innovation variance of channel " + std::to_string(n) + " is zero");
    } catch (const Error& e) {
      unstable[static_cast<std::size_t>(n)] = e.what();
    }
  }
  for (Index i = 0; i < q; ++i)
    for (Index j = 0; j < q; ++j) {
      if (i == j) continue;
      for (Index n : {i, j})
        if (!unstable[static_cast<std::size_t>(n)].empty())
          out.issues.push_back({i, j, Errc::isolated_instability, unstable[static_cast<std::size_t>(n)]});
    }

  auto skipped = [&](Index i, Index j) {
    return !unstable[static_cast<std::size_t>(i)].empty() || !unstable[static_cast<std::size_t>(j)].empty();
  };

  for (Index k = 0; k < grid.size(); ++k) {
    const CMat<Scalar> ac = a_check_at(model, grid.bin(k), grid.n_dft());
    auto& v = out.values[static_cast<std::size_t>(k)];
    for (Index i = 0; i < q; ++i)
      for (Index j = 0; j < q; ++j) {
        if (i == j || skipped(i, j)) continue;
        v(i, j) = icoh_closed_form(ac, var(i), var(j), i, j);
        if (opts.cross_check) {
          const Scalar alt = icoh_partial_form(ac, var(i), var(j), i, j);
          if (std::abs(static_cast<double>(alt - v(i, j))) > opts.cross_check_tolerance)
            throw std::logic_error("iCoh closed form and partial-coherence form disagree");
        }
      }
  }
  return out;
}

/**
 * Noise contribution ratio |B_ij|^2 s_jj / sum_k |B_ik|^2 s_kk. Rows sum to
 * one across senders (diagonal included). Correlated innovations are refused
 * unless `force_diagonal_noise` drops the off-diagonal covariances.
 */
template <typename Scalar>
ConnectivityMap<Scalar> ncr(const ArModel<Scalar>& model, const FrequencyGrid& grid,
                            bool force_diagonal_noise = false) {
  const Index q = model.channels();
  const Mat<Scalar>& cov = model.noise_cov();
  const Mat<Scalar> off = cov - Mat<Scalar>(cov.diagonal().asDiagonal());
  if (!force_diagonal_noise && !off.isZero(0))
    throw Error(Errc::correlated_noise,
                "NCR assumes uncorrelated innovations; pass force_diagonal_noise (--force-diagonal-noise) "
                "to drop off-diagonal noise covariances");
  if (!is_stable(model)) throw Error(Errc::unstable_model, "NCR requires a stable model");

  const Vec<Scalar> var = cov.diagonal();
  const SpectralTransform<Scalar> tf = transform_coefficients(model, grid);
  auto out = detail::empty_map<Scalar>(Measure::ncr, grid, q);
  for (Index k = 0; k < grid.size(); ++k) {
    const auto& b = tf.b_of_omega[static_cast<std::size_t>(k)];
    auto& v = out.values[static_cast<std::size_t>(k)];
    for (Index i = 0; i < q; ++i) {
      Scalar total(0);
      for (Index j = 0; j < q; ++j) total += (v(i, j) = std::norm(b(i, j)) * var(j));
      if (!(total > Scalar(0)))
        throw Error(Errc::degenerate_channel, detail::at_frequency("zero power in channel " + std::to_string(i), grid[k]));
      v.row(i) /= total;
    }
  }
  return out;
}

/**
 * NCR of the model isolated to the single link j -> i. Goes through isolate()
 * and a numerical inverse of I - A(w) of the isolated model, so it is an
 * independent route to the same values as icoh().
 */
template <typename Scalar>
Vec<Scalar> constrained_ncr(const ArModel<Scalar>& model, const FrequencyGrid& grid, Index i, Index j) {
  detail::require_pair<Scalar>(model.channels(), i, j);
  detail::require_stable_node(model, i);
  detail::require_stable_node(model, j);
  const ArModel<Scalar> isolated = isolate(model, i, j);
  const Vec<Scalar> var = isolated.noise_cov().diagonal();
  if (!(var(i) > Scalar(0) && var(j) > Scalar(0)))
    throw Error(Errc::covariance_singular, "constrained NCR needs positive innovation variances");
  const SpectralTransform<Scalar> tf = transform_coefficients(isolated, grid);
  Vec<Scalar> out(grid.size());
  for (Index k = 0; k < grid.size(); ++k) {
    const auto& b = tf.b_of_omega[static_cast<std::size_t>(k)];
    Scalar total(0);
    for (Index n = 0; n < isolated.channels(); ++n) total += std::norm(b(i, n)) * var(n);
    out(k) = std::norm(b(i, j)) * var(j) / total;
  }
  return out;
}

namespace detail {

template <typename Scalar>
ConnectivityMap<Scalar> weighted_pdc(Measure m, const ArModel<Scalar>& model, const FrequencyGrid& grid,
                                     const Vec<Scalar>& weight) {
  const Index q = model.channels();
  auto out = empty_map<Scalar>(m, grid, q);
  for (Index k = 0; k < grid.size(); ++k) {
    const CMat<Scalar> ac = a_check_at(model, grid.bin(k), grid.n_dft());
    auto& v = out.values[static_cast<std::size_t>(k)];
    for (Index j = 0; j < q; ++j) {
      Scalar total(0);
      for (Index i = 0; i < q; ++i) total += (v(i, j) = weight(i) * std::norm(ac(i, j)));
      if (!(total > Scalar(0)))
        throw Error(Errc::degenerate_column,
                    at_frequency("vanishing PDC denominator for sender " + std::to_string(j), grid[k]));
      v.col(j) /= total;
    }
  }
  return out;
}

}  // namespace detail

/// PDC |Ac_ij|^2 / sum_k |Ac_kj|^2. Columns (senders) sum to one.
template <typename Scalar>
ConnectivityMap<Scalar> pdc(const ArModel<Scalar>& model, const FrequencyGrid& grid) {
  return detail::weighted_pdc(Measure::pdc, model, grid, Vec<Scalar>(Vec<Scalar>::Ones(model.channels())));
}

/// Generalized PDC: PDC with each receiver row weighted by 1 / s_ii.
template <typename Scalar>
ConnectivityMap<Scalar> gpdc(const ArModel<Scalar>& model, const FrequencyGrid& grid) {
  const Vec<Scalar> var = model.noise_cov().diagonal();
  if (!(var.minCoeff() > Scalar(0)))
    throw Error(Errc::covariance_singular, "gPDC needs positive innovation variances");
  return detail::weighted_pdc(Measure::gpdc, model, grid, Vec<Scalar>(var.cwiseInverse()));
}

/// Overwrite the diagonal with each channel's autospectrum scaled to unit maximum.
template <typename Scalar>
void apply_normalized_autospectrum(ConnectivityMap<Scalar>& map, const CrossSpectrum<Scalar>& cs) {
  if (!(map.grid == cs.grid()))
    throw Error(Errc::invalid_argument, "map and cross spectrum use different grids");
  for (Index i = 0; i < map.channels(); ++i) {
    const Vec<Scalar> auto_i = cs.autospectrum(i);
    const Scalar peak = auto_i.maxCoeff();
    if (!(peak > Scalar(0))) throw Error(Errc::degenerate_channel, "zero autospectrum for channel " + std::to_string(i));
    for (Index k = 0; k < map.grid.size(); ++k) map.values[static_cast<std::size_t>(k)](i, i) = auto_i(k) / peak;
  }
  map.diagonal = DiagonalConvention::normalized_autospectrum;
}

}  // namespace mvar
