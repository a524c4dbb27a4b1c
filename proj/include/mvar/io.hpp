#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvar/measures.hpp"
#include "mvar/model.hpp"
#include "mvar/peaks.hpp"
#include "mvar/toys.hpp"

namespace mvar::io {

/**
 * Plain-text time series: one sample per row, channels separated by
 * whitespace and/or commas. Lines starting with '#' are comments; blank lines
 * are skipped. Throws Errc::parse with the offending line number.
 */
TimeSeriesd read_time_series(std::istream& in, double sampling_rate);
TimeSeriesd read_time_series_file(const std::string& path, double sampling_rate);

/// Writes shortest round-trip decimal text so re-reading is exact.
void write_time_series(std::ostream& out, const TimeSeriesd& data);
void write_time_series_file(const std::string& path, const TimeSeriesd& data);

nlohmann::json model_to_json(const ArModeld& model);
ArModeld model_from_json(const nlohmann::json& j);
ArModeld read_model_file(const std::string& path);

/// CSV with header frequency_hz,receiver,sender,value; 1-based channels,
/// 9 significant digits, every cell including the diagonal.
void write_measure_csv(std::ostream& out, const ConnectivityMap<double>& map);

/// Parses a measure CSV back into a map on the given sampling rate / n_dft.
ConnectivityMap<double> read_measure_csv(std::istream& in, Measure measure, double sampling_rate, Index n_dft);

nlohmann::json report_to_json(const ReproductionReport& report);
nlohmann::json peaks_to_json(const PeakReport& report);

std::string format_significant(double value, int digits = 9);
std::string format_shortest(double value);

void write_text_file(const std::string& path, const std::string& contents);

std::optional<Measure> parse_measure(std::string_view name);

}  // namespace mvar::io
