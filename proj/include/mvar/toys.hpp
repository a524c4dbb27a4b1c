#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvar/estimate.hpp"
#include "mvar/measures.hpp"
#include "mvar/model.hpp"
#include "mvar/spectral.hpp"

namespace mvar {

enum class ToyId { toy_9_1, toy_9_2 };

const char* to_string(ToyId id);
std::optional<ToyId> parse_toy_id(std::string_view text);

/// Five-node order-2 system with a 1 -> 2 -> 3 -> 4 <-> 5 -> 1 loop.
ArModeld toy_model_9_1();

/// Five-node order-2 system: nodes 1 and 2 drive each other, node 2 drives 3, 4 and 5.
ArModeld toy_model_9_2();

ArModeld toy_model(ToyId id);

/// Simulation and analysis settings of the reproduction pipeline.
struct ProtocolConfig {
  Index n_samples = 25600;
  Index burn_in = 1000;
  int order = 3;
  double sampling_rate = 256.0;
  Index n_dft = 256;
  double f_min = 1.0;
  double f_max = 127.0;
  Index segment_len = 256;
  double overlap = 0.5;
  Window window = Window::hann;
};

inline constexpr std::uint64_t kDefaultSeed = 1;

struct Check {
  std::string name;
  std::string expected;
  std::string observed;
  double tolerance;
  bool pass;
};

struct ReproductionReport {
  ToyId example;
  std::uint64_t seed;
  std::vector<Check> checks;

  bool overall_pass() const;
  const Check* find(std::string_view name) const;
};

/// Everything the pipeline produced, kept for plotting and export.
struct ReproductionRun {
  ArModeld truth;
  TimeSeriesd data;
  ArModeld fitted;
  FrequencyGrid grid;
  ConnectivityMap<double> coherence;             // parametric, autospectrum diagonal
  ConnectivityMap<double> periodogram_coherence; // nonparametric, autospectrum diagonal
  ConnectivityMap<double> partial_coherence;
  ConnectivityMap<double> icoh;
  ConnectivityMap<double> gpdc;
  ConnectivityMap<double> pdc;
  ConnectivityMap<double> ncr;
  ReproductionReport report;
};

/// Simulate, fit and analyse one toy, then evaluate its published claims.
ReproductionRun run_pipeline(ToyId id, std::uint64_t seed = kDefaultSeed, const ProtocolConfig& cfg = {});

ReproductionReport run_reproduction(ToyId id, std::uint64_t seed = kDefaultSeed);

/// Ordered (receiver, sender) pairs with a nonzero coefficient at some lag.
std::vector<std::pair<Index, Index>> direct_connections(const ArModeld& model);

}  // namespace mvar
