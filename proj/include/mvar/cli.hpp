#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvar/measures.hpp"
#include "mvar/spectral.hpp"
#include "mvar/toys.hpp"

namespace mvar::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kDataError = 2, kReproductionFailed = 3 };

/// Parameters shared by the subcommands. Loaded from a JSON config, then
/// overridden by any flag given on the command line.
struct RunConfig {
  std::string input;                  // time-series text file
  std::optional<ToyId> toy;           // or a built-in toy model
  std::string model_path;             // or a model JSON (simulate)
  int order = 3;
  Index n_dft = 256;
  double sampling_rate = 256.0;
  double f_min = 1.0;
  double f_max = 127.0;
  std::vector<Measure> measures{Measure::icoh, Measure::gpdc};
  Index segment_len = 256;
  double overlap = 0.5;
  Window window = Window::hann;
  std::uint64_t seed = kDefaultSeed;
  Index n_samples = 25600;
  Index burn_in = 1000;
  std::string output_dir = ".";
  std::string output;                 // single-file outputs; empty = stdout
  bool plot = false;
  bool force_diagonal_noise = false;

  /// Throws Error(invalid_argument) on inconsistent settings.
  void validate() const;
};

/// Applies the recognised keys of a JSON config document.
void apply_config(RunConfig& cfg, const nlohmann::json& doc);

std::optional<Window> parse_window(std::string_view name);

/// Entry point shared by the mvarconn binary and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mvar::cli
