#include "mvar/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mvar/estimate.hpp"
#include "mvar/io.hpp"
#include "mvar/model.hpp"
#include "mvar/peaks.hpp"
#include "mvar/svg.hpp"

namespace mvar::cli {

namespace fs = std::filesystem;

std::optional<Window> parse_window(std::string_view name) {
  if (name == "hann") return Window::hann;
  if (name == "hamming") return Window::hamming;
  if (name == "rectangular") return Window::rectangular;
  return std::nullopt;
}

void RunConfig::validate() const {
  if (order < 1) throw Error(Errc::invalid_argument, "order must be at least 1");
  if (!(sampling_rate > 0)) throw Error(Errc::invalid_argument, "sampling rate must be positive");
  if (n_dft < 2) throw Error(Errc::invalid_argument, "n_dft must be at least 2");
  if (!(f_min > 0 && f_max < sampling_rate / 2 && f_min <= f_max))
    throw Error(Errc::invalid_argument, "band must satisfy 0 < f_min <= f_max < sampling_rate/2");
  if (n_samples <= 0) throw Error(Errc::invalid_argument, "n_samples must be positive");
  if (burn_in < 0) throw Error(Errc::invalid_argument, "burn_in must be non-negative");
  if (measures.empty()) throw Error(Errc::invalid_argument, "no measures requested");
}

namespace {

Measure measure_or_throw(const std::string& name) {
  if (auto m = io::parse_measure(name)) return *m;
  throw Error(Errc::invalid_argument, "unknown measure '" + name + "'");
}

ToyId toy_or_throw(const std::string& name) {
  if (auto t = parse_toy_id(name)) return *t;
  throw Error(Errc::invalid_argument, "unknown example id '" + name + "' (expected toy_9_1 or toy_9_2)");
}

std::vector<Measure> parse_measure_list(const std::vector<std::string>& names) {
  std::vector<Measure> out;
  for (const auto& entry : names) {
    std::stringstream ss(entry);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(measure_or_throw(item));
  }
  return out;
}

}  // namespace

void apply_config(RunConfig& cfg, const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(Errc::invalid_argument, "config must be a JSON object");
  try {
    if (doc.contains("input")) cfg.input = doc["input"].get<std::string>();
    if (doc.contains("toy")) cfg.toy = toy_or_throw(doc["toy"].get<std::string>());
    if (doc.contains("model")) cfg.model_path = doc["model"].get<std::string>();
    if (doc.contains("order")) cfg.order = doc["order"].get<int>();
    if (doc.contains("n_dft")) cfg.n_dft = doc["n_dft"].get<Index>();
    if (doc.contains("sampling_rate")) cfg.sampling_rate = doc["sampling_rate"].get<double>();
    if (doc.contains("band")) {
      const auto band = doc["band"].get<std::vector<double>>();
      if (band.size() != 2) throw Error(Errc::invalid_argument, "band must be [f_min, f_max]");
      cfg.f_min = band[0];
      cfg.f_max = band[1];
    }
    if (doc.contains("measures")) cfg.measures = parse_measure_list(doc["measures"].get<std::vector<std::string>>());
    if (doc.contains("segment_len")) cfg.segment_len = doc["segment_len"].get<Index>();
    if (doc.contains("overlap")) cfg.overlap = doc["overlap"].get<double>();
    if (doc.contains("window")) {
      auto w = parse_window(doc["window"].get<std::string>());
      if (!w) throw Error(Errc::invalid_argument, "unknown window");
      cfg.window = *w;
    }
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("n_samples")) cfg.n_samples = doc["n_samples"].get<Index>();
    if (doc.contains("burn_in")) cfg.burn_in = doc["burn_in"].get<Index>();
    if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();
    if (doc.contains("output")) cfg.output = doc["output"].get<std::string>();
    if (doc.contains("plot")) cfg.plot = doc["plot"].get<bool>();
    if (doc.contains("force_diagonal_noise")) cfg.force_diagonal_noise = doc["force_diagonal_noise"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("bad config value: ") + e.what());
  }
}

namespace {

/// Flag storage; each value is applied only if its flag was given.
struct Flags {
  std::string config;
  std::string input, toy, model, output_dir, output, window;
  int order = 0;
  Index n_dft = 0, segment_len = 0, n_samples = 0, burn_in = 0;
  double sampling_rate = 0, overlap = 0;
  std::vector<double> band;
  std::vector<std::string> measures;
  std::uint64_t seed = 0;
  bool plot = false, force_diagonal_noise = false;
};

struct Options {
  std::map<std::string, CLI::Option*> by_name;
  bool given(const std::string& name) const {
    auto it = by_name.find(name);
    return it != by_name.end() && it->second->count() > 0;
  }
};

void add_common(CLI::App& app, Flags& f, Options& o, const std::vector<std::string>& names) {
  for (const auto& n : names) {
    CLI::Option* opt = nullptr;
    if (n == "config") opt = app.add_option("--config", f.config, "JSON config file (flags override it)");
    else if (n == "input") opt = app.add_option("-i,--input", f.input, "input file");
    else if (n == "toy") opt = app.add_option("--toy", f.toy, "built-in model: toy_9_1 or toy_9_2");
    else if (n == "model") opt = app.add_option("--model", f.model, "model JSON file");
    else if (n == "order") opt = app.add_option("-p,--order", f.order, "autoregressive order");
    else if (n == "n_dft") opt = app.add_option("--n-dft", f.n_dft, "transform length placing the frequency bins");
    else if (n == "sampling_rate") opt = app.add_option("--sampling-rate", f.sampling_rate, "sampling rate in Hz");
    else if (n == "band") opt = app.add_option("--band", f.band, "analysed band f_min f_max in Hz")->expected(2);
    else if (n == "measures") opt = app.add_option("--measures", f.measures, "comma-separated measure names");
    else if (n == "segment_len") opt = app.add_option("--segment-len", f.segment_len, "periodogram segment length");
    else if (n == "overlap") opt = app.add_option("--overlap", f.overlap, "periodogram segment overlap fraction");
    else if (n == "window") opt = app.add_option("--window", f.window, "periodogram window: hann, hamming, rectangular");
    else if (n == "seed") opt = app.add_option("--seed", f.seed, "simulation seed");
    else if (n == "n_samples") opt = app.add_option("-n,--n-samples", f.n_samples, "samples to keep");
    else if (n == "burn_in") opt = app.add_option("--burn-in", f.burn_in, "initial samples to discard");
    else if (n == "output_dir") opt = app.add_option("-o,--output-dir", f.output_dir, "directory for result files");
    else if (n == "output") opt = app.add_option("-o,--output", f.output, "output file (default stdout)");
    else if (n == "plot") opt = app.add_flag("--plot", f.plot, "also write SVG grids");
    else if (n == "force_diagonal_noise")
      opt = app.add_flag("--force-diagonal-noise", f.force_diagonal_noise,
                         "drop off-diagonal innovation covariances for NCR");
    o.by_name[n] = opt;
  }
}

RunConfig resolve(const Flags& f, const Options& o) {
  RunConfig cfg;
  if (o.given("config")) {
    std::ifstream in(f.config);
    if (!in) throw Error(Errc::io, "cannot open config '" + f.config + "'");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::invalid_argument, std::string("config is not valid JSON: ") + e.what());
    }
    apply_config(cfg, doc);
  }
  if (o.given("input")) cfg.input = f.input;
  if (o.given("toy")) cfg.toy = toy_or_throw(f.toy);
  if (o.given("model")) cfg.model_path = f.model;
  if (o.given("order")) cfg.order = f.order;
  if (o.given("n_dft")) cfg.n_dft = f.n_dft;
  if (o.given("sampling_rate")) cfg.sampling_rate = f.sampling_rate;
  if (o.given("band")) {
    cfg.f_min = f.band.at(0);
    cfg.f_max = f.band.at(1);
  }
  if (o.given("measures")) cfg.measures = parse_measure_list(f.measures);
  if (o.given("segment_len")) cfg.segment_len = f.segment_len;
  if (o.given("overlap")) cfg.overlap = f.overlap;
  if (o.given("window")) {
    auto w = parse_window(f.window);
    if (!w) throw Error(Errc::invalid_argument, "unknown window '" + f.window + "'");
    cfg.window = *w;
  }
  if (o.given("seed")) cfg.seed = f.seed;
  if (o.given("n_samples")) cfg.n_samples = f.n_samples;
  if (o.given("burn_in")) cfg.burn_in = f.burn_in;
  if (o.given("output_dir")) cfg.output_dir = f.output_dir;
  if (o.given("output")) cfg.output = f.output;
  if (o.given("plot")) cfg.plot = f.plot;
  if (o.given("force_diagonal_noise")) cfg.force_diagonal_noise = f.force_diagonal_noise;
  cfg.validate();
  return cfg;
}

void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.output.empty())
    out << text;
  else
    io::write_text_file(cfg.output, text);
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

TimeSeriesd load_or_simulate(const RunConfig& cfg) {
  if (!cfg.input.empty()) return io::read_time_series_file(cfg.input, cfg.sampling_rate);
  if (cfg.toy) return simulate(toy_model(*cfg.toy), cfg.n_samples, cfg.burn_in, cfg.seed, cfg.sampling_rate);
  throw Error(Errc::invalid_argument, "give --input or --toy");
}

ConnectivityMap<double> compute(Measure m, const ArModeld& model, const FrequencyGrid& grid,
                                const CrossSpectrum<double>& cs, const RunConfig& cfg) {
  switch (m) {
    case Measure::coherence: {
      auto map = coherence(cs);
      apply_normalized_autospectrum(map, cs);
      return map;
    }
    case Measure::partial_coherence: return partial_coherence(cs);
    case Measure::icoh: return icoh(model, grid);
    case Measure::ncr:
      try {
        return ncr(model, grid, cfg.force_diagonal_noise);
      } catch (const Error& e) {
        if (e.code() == Errc::correlated_noise)
          throw Error(Errc::correlated_noise,
                      "the fitted innovations are correlated; NCR requires --force-diagonal-noise "
                      "(config key force_diagonal_noise) to drop their off-diagonal covariances");
        throw;
      }
    case Measure::constrained_ncr: {
      const Index q = model.channels();
      ConnectivityMap<double> map{Measure::constrained_ncr, grid,
                                  std::vector<Mat<double>>(static_cast<std::size_t>(grid.size()),
                                                           Mat<double>::Zero(q, q)),
                                  DiagonalConvention::undefined, {}};
      for (Index i = 0; i < q; ++i)
        for (Index j = 0; j < q; ++j) {
          if (i == j) continue;
          try {
            const Vec<double> v = constrained_ncr(model, grid, i, j);
            for (Index k = 0; k < grid.size(); ++k) map.values[static_cast<std::size_t>(k)](i, j) = v(k);
          } catch (const Error& e) {
            if (e.code() != Errc::isolated_instability) throw;
            map.issues.push_back({i, j, e.code(), e.what()});
          }
        }
      return map;
    }
    case Measure::pdc: return pdc(model, grid);
    case Measure::gpdc: return gpdc(model, grid);
  }
  throw Error(Errc::invalid_argument, "unknown measure");
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  ArModeld model = cfg.toy ? toy_model(*cfg.toy)
                           : (!cfg.model_path.empty() ? io::read_model_file(cfg.model_path)
                                                      : throw Error(Errc::invalid_argument, "give --toy or --model"));
  const TimeSeriesd data = simulate(model, cfg.n_samples, cfg.burn_in, cfg.seed, cfg.sampling_rate);
  std::ostringstream os;
  io::write_time_series(os, data);
  emit(cfg, os.str(), out);
  return kSuccess;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  const TimeSeriesd data = load_or_simulate(cfg);
  const auto fit = fit_least_squares_detailed(data, cfg.order);
  nlohmann::json doc = io::model_to_json(fit.model);
  doc["spectral_radius"] = spectral_radius(fit.model);
  doc["design_condition"] = fit.condition;
  doc["n_residuals"] = fit.residuals.cols();
  emit(cfg, doc.dump(2) + "\n", out);
  return kSuccess;
}

int cmd_measures(const RunConfig& cfg, std::ostream& out) {
  const TimeSeriesd data = load_or_simulate(cfg);
  const ArModeld fitted = fit_least_squares(data, cfg.order);
  const FrequencyGrid grid = FrequencyGrid::band(cfg.f_min, cfg.f_max, cfg.sampling_rate, cfg.n_dft);
  const CrossSpectrum<double> cs = cross_spectrum(fitted, grid);
  const fs::path dir = prepare_dir(cfg.output_dir);

  nlohmann::json peaks = nlohmann::json::object();
  for (Measure m : cfg.measures) {
    const auto map = compute(m, fitted, grid, cs, cfg);
    std::ostringstream csv;
    io::write_measure_csv(csv, map);
    io::write_text_file((dir / (std::string(to_string(m)) + ".csv")).string(), csv.str());

    nlohmann::json pairs = nlohmann::json::array();
    for (Index i = 0; i < map.channels(); ++i)
      for (Index j = 0; j < map.channels(); ++j)
        if (i != j) pairs.push_back(io::peaks_to_json(find_peaks(map, i, j)));
    peaks[to_string(m)] = std::move(pairs);
    for (const auto& issue : map.issues)
      out << "warning: " << to_string(m) << ' ' << issue.receiver + 1 << "<-" << issue.sender + 1 << ": "
          << issue.message << '\n';

    if (cfg.plot)
      io::write_text_file((dir / (std::string(to_string(m)) + ".svg")).string(),
                          svg::render_grid({{&map, "blue", to_string(m)}}, to_string(m)));
  }
  io::write_text_file((dir / "peaks.json").string(), peaks.dump(2) + "\n");
  out << "wrote " << cfg.measures.size() << " measure file(s) to " << dir.string() << '\n';
  return kSuccess;
}

int cmd_reproduce(const std::string& example, const RunConfig& cfg, std::ostream& out) {
  const ToyId id = toy_or_throw(example);
  ProtocolConfig protocol;
  protocol.n_samples = cfg.n_samples;
  protocol.burn_in = cfg.burn_in;
  protocol.order = cfg.order;
  protocol.sampling_rate = cfg.sampling_rate;
  protocol.n_dft = cfg.n_dft;
  protocol.f_min = cfg.f_min;
  protocol.f_max = cfg.f_max;
  protocol.segment_len = cfg.segment_len;
  protocol.overlap = cfg.overlap;
  protocol.window = cfg.window;
  const ReproductionRun run = run_pipeline(id, cfg.seed, protocol);
  const fs::path dir = prepare_dir(cfg.output_dir);
  const std::string stem = to_string(id);

  io::write_text_file((dir / (stem + "_report.json")).string(), io::report_to_json(run.report).dump(2) + "\n");
  io::write_text_file((dir / (stem + "_coherence.svg")).string(),
                      svg::render_grid({{&run.periodogram_coherence, "red", "periodogram"},
                                        {&run.coherence, "blue", "autoregressive"}},
                                       stem + ": spectra (diagonal) and squared coherence"));
  io::write_text_file((dir / (stem + "_icoh_gpdc.svg")).string(),
                      svg::render_grid({{&run.icoh, "red", "iCoh"}, {&run.gpdc, "blue", "gPDC"}},
                                       stem + ": iCoh and gPDC, senders as columns"));

  for (const auto& c : run.report.checks)
    out << (c.pass ? "PASS  " : "FAIL  ") << c.name << "  expected " << c.expected << "  observed " << c.observed
        << '\n';
  const bool pass = run.report.overall_pass();
  out << stem << ": " << (pass ? "reproduction passed" : "reproduction FAILED") << '\n';
  return pass ? kSuccess : kReproductionFailed;
}

int cmd_peaks(const RunConfig& cfg, const std::string& measure_name, int receiver, int sender,
              double min_prominence, std::ostream& out) {
  if (cfg.input.empty()) throw Error(Errc::invalid_argument, "give --input with a measure CSV");
  const Measure m = measure_name.empty() ? Measure::icoh : measure_or_throw(measure_name);
  std::ifstream in(cfg.input);
  if (!in) throw Error(Errc::io, "cannot open '" + cfg.input + "'");
  const auto map = io::read_measure_csv(in, m, cfg.sampling_rate, cfg.n_dft);
  const Index q = map.channels();
  nlohmann::json result = nlohmann::json::array();
  if (receiver > q || sender > q) throw Error(Errc::invalid_argument, "channel index out of range");
  for (Index i = 0; i < q; ++i)
    for (Index j = 0; j < q; ++j) {
      if (receiver > 0 && i != receiver - 1) continue;
      if (sender > 0 && j != sender - 1) continue;
      if (receiver <= 0 && sender <= 0 && i == j) continue;
      result.push_back(io::peaks_to_json(find_peaks(map, i, j, min_prominence)));
    }
  emit(cfg, result.dump(2) + "\n", out);
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multivariate autoregressive connectivity: simulate, fit, measure, reproduce", "mvarconn"};
  app.require_subcommand(1);

  Flags f;
  Options sim_o, fit_o, meas_o, rep_o, peak_o;
  auto* sim = app.add_subcommand("simulate", "simulate a toy or JSON model to a time-series text file");
  add_common(*sim, f, sim_o, {"config", "toy", "model", "n_samples", "burn_in", "seed", "sampling_rate", "output"});

  auto* fit = app.add_subcommand("fit", "least-squares MVAR fit; prints model JSON");
  add_common(*fit, f, fit_o,
             {"config", "input", "toy", "order", "sampling_rate", "n_samples", "burn_in", "seed", "output"});

  auto* meas = app.add_subcommand("measures", "fit, then write per-measure CSVs, peaks.json and optional SVGs");
  add_common(*meas, f, meas_o,
             {"config", "input", "toy", "order", "n_dft", "sampling_rate", "band", "measures", "segment_len",
              "overlap", "window", "seed", "n_samples", "burn_in", "output_dir", "plot", "force_diagonal_noise"});

  std::string example;
  auto* rep = app.add_subcommand("reproduce", "run the full toy pipeline and check the published claims");
  rep->add_option("example", example, "toy_9_1 or toy_9_2")->required();
  add_common(*rep, f, rep_o, {"config", "seed", "output_dir"});

  std::string measure_name;
  int receiver = 0, sender = 0;
  double min_prominence = kDefaultMinProminence;
  auto* peaks = app.add_subcommand("peaks", "list local maxima of curves in a measure CSV");
  add_common(*peaks, f, peak_o, {"config", "input", "sampling_rate", "n_dft", "output"});
  peaks->add_option("--measure", measure_name, "measure stored in the CSV");
  peaks->add_option("--receiver", receiver, "1-based receiver (default: all)");
  peaks->add_option("--sender", sender, "1-based sender (default: all)");
  peaks->add_option("--min-prominence", min_prominence, "minimum peak prominence");

  std::vector<const char*> argv{"mvarconn"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(resolve(f, sim_o), out);
    if (fit->parsed()) return cmd_fit(resolve(f, fit_o), out);
    if (meas->parsed()) return cmd_measures(resolve(f, meas_o), out);
    if (rep->parsed()) return cmd_reproduce(example, resolve(f, rep_o), out);
    if (peaks->parsed()) return cmd_peaks(resolve(f, peak_o), measure_name, receiver, sender, min_prominence, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return e.code() == Errc::invalid_argument ? kUsage : kDataError;
  }
  return kUsage;
}

}  // namespace mvar::cli
