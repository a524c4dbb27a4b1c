#pragma once

#include <string>
#include <vector>

#include "mvar/measures.hpp"

namespace mvar::svg {

struct Series {
  const ConnectivityMap<double>* map;
  std::string color;
  std::string label;
};

/**
 * q x q small-multiples grid: senders as columns, receivers as rows, each
 * cell a 0..1 curve over the map's frequency band. Series are drawn in the
 * order given, so later series sit on top.
 */
std::string render_grid(const std::vector<Series>& series, const std::string& title);

}  // namespace mvar::svg
