#pragma once

#include <algorithm>
#include <vector>

#include "mvar/measures.hpp"

namespace mvar {

struct Peak {
  double frequency;
  double value;
  double prominence;
};

struct PeakReport {
  Index sender;
  Index receiver;
  std::vector<Peak> peaks;  // highest value first
};

inline constexpr double kDefaultMinProminence = 0.01;

/**
 * Interior local maxima of `values` (endpoints never qualify). A flat top is
 * reported at its middle sample. Prominence is the height above the higher of
 * the two lowest points reached before climbing to a higher sample (or the
 * curve edge) on either side.
 */
template <typename Derived>
std::vector<Index> local_maxima(const Eigen::DenseBase<Derived>& values, double min_prominence,
                                std::vector<double>* prominences = nullptr) {
  std::vector<Index> out;
  const Index n = values.size();
  Index i = 1;
  while (i < n - 1) {
    if (!(values(i) > values(i - 1))) {
      ++i;
      continue;
    }
    Index ahead = i + 1;
    while (ahead < n - 1 && values(ahead) == values(i)) ++ahead;
    if (values(ahead) < values(i)) {
      const Index peak = (i + ahead - 1) / 2;
      const double top = static_cast<double>(values(peak));
      double left_min = top;
      for (Index l = i - 1; l >= 0 && static_cast<double>(values(l)) <= top; --l)
        left_min = std::min(left_min, static_cast<double>(values(l)));
      double right_min = top;
      for (Index r = ahead; r < n && static_cast<double>(values(r)) <= top; ++r)
        right_min = std::min(right_min, static_cast<double>(values(r)));
      const double prominence = top - std::max(left_min, right_min);
      if (prominence >= min_prominence) {
        out.push_back(peak);
        if (prominences) prominences->push_back(prominence);
      }
    }
    i = ahead;
  }
  return out;
}

/// Peaks of one curve of a map, sorted by value descending.
template <typename Scalar>
PeakReport find_peaks(const ConnectivityMap<Scalar>& map, Index receiver, Index sender,
                      double min_prominence = kDefaultMinProminence) {
  const Vec<Scalar> curve = map.curve(receiver, sender);
  std::vector<double> prom;
  const auto idx = local_maxima(curve, min_prominence, &prom);
  PeakReport report{sender, receiver, {}};
  for (std::size_t n = 0; n < idx.size(); ++n)
    report.peaks.push_back({map.grid[idx[n]], static_cast<double>(curve(idx[n])), prom[n]});
  std::stable_sort(report.peaks.begin(), report.peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.value > b.value; });
  return report;
}

/// Frequency of the largest value (first on ties).
template <typename Derived>
double argmax_frequency(const Eigen::DenseBase<Derived>& values, const FrequencyGrid& grid) {
  Index best = 0;
  values.maxCoeff(&best);
  return grid[best];
}

}  // namespace mvar
