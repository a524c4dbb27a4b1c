#include "mvar/svg.hpp"

#include <algorithm>
#include <sstream>

#include "mvar/io.hpp"

namespace mvar::svg {

namespace {

constexpr double kCell = 120.0;
constexpr double kGap = 10.0;
constexpr double kMargin = 40.0;
constexpr double kLegend = 24.0;

std::string num(double v) { return io::format_significant(v, 6); }

}  // namespace

std::string render_grid(const std::vector<Series>& series, const std::string& title) {
  if (series.empty() || !series.front().map) throw Error(Errc::invalid_argument, "nothing to plot");
  const Index q = series.front().map->channels();
  const double span = q * kCell + (q - 1) * kGap;
  const double width = 2 * kMargin + span;
  const double height = 2 * kMargin + span + kLegend;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(width / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << title
     << "</text>\n";

  for (Index c = 0; c < q; ++c) {
    const double x = kMargin + c * (kCell + kGap) + kCell / 2;
    os << "<text x=\"" << num(x) << "\" y=\"" << num(kMargin - 6) << "\" text-anchor=\"middle\">sender "
       << (c + 1) << "</text>\n";
  }
  for (Index r = 0; r < q; ++r) {
    const double y = kMargin + r * (kCell + kGap) + kCell / 2;
    os << "<text x=\"" << num(kMargin - 6) << "\" y=\"" << num(y) << "\" text-anchor=\"middle\" transform=\"rotate(-90 "
       << num(kMargin - 6) << ' ' << num(y) << ")\">receiver " << (r + 1) << "</text>\n";
  }

  for (Index r = 0; r < q; ++r)
    for (Index c = 0; c < q; ++c) {
      const double x0 = kMargin + c * (kCell + kGap);
      const double y0 = kMargin + r * (kCell + kGap);
      os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(kCell) << "\" height=\""
         << num(kCell) << "\" fill=\"none\" stroke=\"#999\"/>\n";
      for (const auto& s : series) {
        const auto& map = *s.map;
        const auto& grid = map.grid;
        if (grid.size() < 2) continue;
        const double f0 = grid[0], f1 = grid[grid.size() - 1];
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1\" points=\"";
        for (Index k = 0; k < grid.size(); ++k) {
          const double v = std::clamp(map.values[static_cast<std::size_t>(k)](r, c), 0.0, 1.0);
          const double px = x0 + (grid[k] - f0) / (f1 - f0) * kCell;
          const double py = y0 + (1.0 - v) * kCell;
          os << (k ? " " : "") << num(px) << ',' << num(py);
        }
        os << "\"/>\n";
      }
    }

  const auto& grid = series.front().map->grid;
  const double axis_y = kMargin + span + 14;
  os << "<text x=\"" << num(kMargin) << "\" y=\"" << num(axis_y) << "\">" << num(grid[0]) << "-"
     << num(grid[grid.size() - 1]) << " Hz, vertical 0-1</text>\n";
  double lx = kMargin + span / 2;
  for (const auto& s : series) {
    os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(axis_y - 4) << "\" x2=\"" << num(lx + 18) << "\" y2=\""
       << num(axis_y - 4) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << num(lx + 22) << "\" y=\"" << num(axis_y) << "\">" << s.label << "</text>\n";
    lx += 30 + 7.0 * static_cast<double>(s.label.size());
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace mvar::svg
