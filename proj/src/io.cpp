#include "mvar/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace mvar::io {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t k = 0;
  while (k < line.size()) {
    while (k < line.size() && (line[k] == ' ' || line[k] == '\t' || line[k] == ',' || line[k] == '\r')) ++k;
    const std::size_t start = k;
    while (k < line.size() && !(line[k] == ' ' || line[k] == '\t' || line[k] == ',' || line[k] == '\r')) ++k;
    if (k > start) out.push_back(line.substr(start, k - start));
  }
  return out;
}

bool parse_double(std::string_view token, double& value) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  return ec == std::errc() && ptr == token.data() + token.size() && std::isfinite(value);
}

Error parse_error(std::size_t line, const std::string& what) {
  return Error(Errc::parse, "line " + std::to_string(line) + ": " + what);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open '" + path + "' for reading");
  return in;
}

}  // namespace

std::string format_shortest(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string format_significant(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, value);
  return buf;
}

TimeSeriesd read_time_series(std::istream& in, double sampling_rate) {
  std::vector<double> flat;
  std::size_t width = 0;
  std::size_t rows = 0;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto fields = split_fields(line);
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw parse_error(number, "expected " + std::to_string(width) + " columns, found " + std::to_string(fields.size()));
    for (auto token : fields) {
      double v = 0;
      if (!parse_double(token, v)) throw parse_error(number, "non-numeric token '" + std::string(token) + "'");
      flat.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw Error(Errc::parse, "time series file has no samples");
  Mat<double> values = Eigen::Map<const Mat<double>>(flat.data(), static_cast<Index>(width), static_cast<Index>(rows));
  return TimeSeriesd(std::move(values), sampling_rate);
}

TimeSeriesd read_time_series_file(const std::string& path, double sampling_rate) {
  auto in = open_input(path);
  return read_time_series(in, sampling_rate);
}

void write_time_series(std::ostream& out, const TimeSeriesd& data) {
  out << '#';
  for (Index c = 0; c < data.channels(); ++c) out << " ch" << (c + 1);
  out << '\n';
  std::string row;
  for (Index t = 0; t < data.samples(); ++t) {
    row.clear();
    for (Index c = 0; c < data.channels(); ++c) {
      if (c) row += ' ';
      row += format_shortest(data.values()(c, t));
    }
    row += '\n';
    out << row;
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw Error(Errc::io, "failed writing '" + path + "'");
}

void write_time_series_file(const std::string& path, const TimeSeriesd& data) {
  std::ostringstream os;
  write_time_series(os, data);
  write_text_file(path, os.str());
}

nlohmann::json model_to_json(const ArModeld& model) {
  auto matrix = [](const Mat<double>& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index r = 0; r < m.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  nlohmann::json j;
  j["channels"] = model.channels();
  j["order"] = model.order();
  j["coeffs"] = nlohmann::json::array();
  for (const auto& a : model.coeffs()) j["coeffs"].push_back(matrix(a));
  j["noise_cov"] = matrix(model.noise_cov());
  return j;
}

ArModeld model_from_json(const nlohmann::json& j) {
  auto matrix = [](const nlohmann::json& rows) {
    if (!rows.is_array() || rows.empty()) throw Error(Errc::parse, "model matrix must be a non-empty array of rows");
    const auto n_rows = static_cast<Index>(rows.size());
    const auto n_cols = static_cast<Index>(rows.front().size());
    Mat<double> m(n_rows, n_cols);
    for (Index r = 0; r < n_rows; ++r) {
      const auto& row = rows[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Index>(row.size()) != n_cols)
        throw Error(Errc::parse, "model matrix rows have unequal length");
      for (Index c = 0; c < n_cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
  };
  try {
    std::vector<Mat<double>> coeffs;
    for (const auto& a : j.at("coeffs")) coeffs.push_back(matrix(a));
    return ArModeld(std::move(coeffs), matrix(j.at("noise_cov")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("malformed model JSON: ") + e.what());
  }
}

ArModeld read_model_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::parse, "'" + path + "': " + e.what());
  }
}

void write_measure_csv(std::ostream& out, const ConnectivityMap<double>& map) {
  std::string buf = "frequency_hz,receiver,sender,value\n";
  const Index q = map.channels();
  for (Index k = 0; k < map.grid.size(); ++k) {
    const std::string f = format_significant(map.grid[k]);
    const auto& v = map.values[static_cast<std::size_t>(k)];
    for (Index i = 0; i < q; ++i)
      for (Index j = 0; j < q; ++j)
        buf += f + ',' + std::to_string(i + 1) + ',' + std::to_string(j + 1) + ',' + format_significant(v(i, j)) + '\n';
  }
  out << buf;
}

ConnectivityMap<double> read_measure_csv(std::istream& in, Measure measure, double sampling_rate, Index n_dft) {
  std::map<double, std::map<std::pair<Index, Index>, double>> cells;
  Index q = 0;
  std::string line;
  bool header = true;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      if (line.rfind("frequency_hz", 0) == 0) continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() != 4) throw parse_error(number, "expected 4 fields");
    double f = 0, r = 0, s = 0, v = 0;
    if (!parse_double(fields[0], f) || !parse_double(fields[1], r) || !parse_double(fields[2], s) ||
        !parse_double(fields[3], v))
      throw parse_error(number, "non-numeric field");
    if (r < 1 || s < 1 || r != std::floor(r) || s != std::floor(s)) throw parse_error(number, "bad channel index");
    const auto ri = static_cast<Index>(r) - 1, si = static_cast<Index>(s) - 1;
    q = std::max({q, ri + 1, si + 1});
    cells[f][{ri, si}] = v;
  }
  if (cells.empty()) throw Error(Errc::parse, "measure CSV has no rows");
  std::vector<double> freqs;
  std::vector<Mat<double>> values;
  for (const auto& [f, entries] : cells) {
    freqs.push_back(f);
    Mat<double> m = Mat<double>::Zero(q, q);
    for (const auto& [pos, v] : entries) m(pos.first, pos.second) = v;
    values.push_back(std::move(m));
  }
  return ConnectivityMap<double>{measure, FrequencyGrid(std::move(freqs), sampling_rate, n_dft), std::move(values),
                                 DiagonalConvention::undefined, {}};
}

nlohmann::json report_to_json(const ReproductionReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks)
    checks.push_back({{"name", c.name},
                      {"expected", c.expected},
                      {"observed", c.observed},
                      {"tolerance", c.tolerance},
                      {"pass", c.pass}});
  return {{"example_id", to_string(report.example)},
          {"seed", report.seed},
          {"checks", std::move(checks)},
          {"overall_pass", report.overall_pass()}};
}

nlohmann::json peaks_to_json(const PeakReport& report) {
  nlohmann::json peaks = nlohmann::json::array();
  for (const auto& p : report.peaks)
    peaks.push_back({{"frequency_hz", p.frequency}, {"value", p.value}, {"prominence", p.prominence}});
  return {{"receiver", report.receiver + 1}, {"sender", report.sender + 1}, {"peaks", std::move(peaks)}};
}

std::optional<Measure> parse_measure(std::string_view name) {
  for (Measure m : {Measure::coherence, Measure::partial_coherence, Measure::icoh, Measure::ncr,
                    Measure::constrained_ncr, Measure::pdc, Measure::gpdc})
    if (name == to_string(m)) return m;
  return std::nullopt;
}

}  // namespace mvar::io
