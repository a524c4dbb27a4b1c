#include "mvar/toys.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "mvar/peaks.hpp"

namespace mvar {

namespace {

using Matrix = Mat<double>;

// 1-based (row, col) setter to keep the tables readable.
void set(Matrix& m, Index row, Index col, double v) { m(row - 1, col - 1) = v; }

std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

std::string hz_list(const std::vector<double>& hz) {
  std::string out = "[";
  for (std::size_t k = 0; k < hz.size(); ++k) out += (k ? ", " : "") + fmt(hz[k]);
  return out + "]";
}

std::string pair_name(Index receiver, Index sender) {
  return std::to_string(receiver + 1) + "<-" + std::to_string(sender + 1);
}

class CheckList {
 public:
  void add(std::string name, std::string expected, std::string observed, double tolerance, bool pass) {
    checks_.push_back({std::move(name), std::move(expected), std::move(observed), tolerance, pass});
  }

  /// |observed - expected| <= tol.
  void near(std::string name, double expected, double observed, double tol) {
    add(std::move(name), fmt(expected), fmt(observed), tol, std::abs(observed - expected) <= tol);
  }

  void at_most(std::string name, double bound, double observed) {
    add(std::move(name), "<= " + fmt(bound), fmt(observed, 3), bound, observed <= bound);
  }

  /// Runs `body`; an exception becomes a failed check instead of aborting.
  template <typename F>
  void guarded(const std::string& name, F&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      add(name, "pipeline completes", std::string("error: ") + e.what(), 0.0, false);
    }
  }

  std::vector<Check> release() { return std::move(checks_); }

 private:
  std::vector<Check> checks_;
};

bool has_peak_near(const std::vector<double>& peaks, double hz, double tol) {
  return std::any_of(peaks.begin(), peaks.end(), [&](double f) { return std::abs(f - hz) <= tol; });
}

std::vector<double> peak_frequencies(const Vec<double>& curve, const FrequencyGrid& grid) {
  std::vector<double> out;
  for (Index k : local_maxima(curve, kDefaultMinProminence)) out.push_back(grid[k]);
  return out;
}

Vec<double> normalized(const Vec<double>& v) { return v / v.maxCoeff(); }

double max_abs_diff(const Vec<double>& a, const Vec<double>& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Thresholds for declaring a directed iCoh link present or absent.
constexpr double kLinkPresent = 0.1;
constexpr double kLinkAbsent = 0.05;
constexpr double kPeakTolHz = 1.0;
constexpr double kCoefTol = 0.05;
constexpr double kIdentityTol = 1e-10;
constexpr double kClosedFormTol = 1e-12;
constexpr double kNormalizationTol = 1e-10;
constexpr double kInverseTol = 1e-8;
constexpr double kCoherenceAgreeTol = 0.1;
constexpr double kCoherenceAgreeFraction = 0.95;

void check_estimation(CheckList& checks, const ArModeld& truth, const ArModeld& fitted) {
  double err = 0.0;
  for (int k = 1; k <= truth.order(); ++k) err = std::max(err, (fitted.lag(k) - truth.lag(k)).cwiseAbs().maxCoeff());
  double extra = 0.0;
  for (int k = truth.order() + 1; k <= fitted.order(); ++k) extra = std::max(extra, fitted.lag(k).cwiseAbs().maxCoeff());
  checks.at_most("estimation: max |fitted - true| over A(1), A(2)", kCoefTol, err);
  checks.at_most("estimation: max |fitted A(3)|", kCoefTol, extra);
}

void check_formula_identities(CheckList& checks, const ArModeld& model, const FrequencyGrid& grid,
                              const ConnectivityMap<double>& ic) {
  const Index q = model.channels();
  double ncr_gap = 0.0;
  double form_gap = 0.0;
  const Vec<double> var = model.noise_cov().diagonal();
  for (Index k = 0; k < grid.size(); ++k) {
    const CMat<double> ac = a_check_at(model, grid.bin(k), grid.n_dft());
    for (Index i = 0; i < q; ++i)
      for (Index j = 0; j < q; ++j)
        if (i != j)
          form_gap = std::max(form_gap, std::abs(icoh_partial_form(ac, var(i), var(j), i, j) -
                                                 icoh_closed_form(ac, var(i), var(j), i, j)));
  }
  for (Index i = 0; i < q; ++i)
    for (Index j = 0; j < q; ++j)
      if (i != j) ncr_gap = std::max(ncr_gap, max_abs_diff(constrained_ncr(model, grid, i, j), ic.curve(i, j)));
  checks.at_most("identity: |iCoh - constrained NCR| all pairs, all bins", kIdentityTol, ncr_gap);
  checks.at_most("identity: |iCoh closed form - partial-coherence form|", kClosedFormTol, form_gap);
}

void check_normalization(CheckList& checks, const ReproductionRun& run) {
  double col_gap = 0.0;
  for (const auto* m : {&run.pdc, &run.gpdc})
    for (const auto& v : m->values) col_gap = std::max(col_gap, (v.colwise().sum().array() - 1.0).abs().maxCoeff());
  double row_gap = 0.0;
  for (const auto& v : run.ncr.values) row_gap = std::max(row_gap, (v.rowwise().sum().array() - 1.0).abs().maxCoeff());
  checks.at_most("normalization: PDC/gPDC per-sender sums - 1", kNormalizationTol, col_gap);
  checks.at_most("normalization: NCR per-receiver sums - 1", kNormalizationTol, row_gap);

  double lo = 0.0, hi = 0.0;
  for (const auto* m : {&run.coherence, &run.periodogram_coherence, &run.partial_coherence, &run.icoh, &run.gpdc,
                        &run.pdc, &run.ncr})
    for (const auto& v : m->values) {
      if (!v.allFinite()) lo = hi = std::nan("");
      lo = std::min(lo, v.minCoeff());
      hi = std::max(hi, v.maxCoeff());
    }
  checks.add("range: every measure value in [0, 1]", "[0, 1]", "[" + fmt(lo) + ", " + fmt(hi) + "]", 0.0,
             lo >= 0.0 && hi <= 1.0);
}

void check_spectral_consistency(CheckList& checks, const ReproductionRun& run, const CrossSpectrum<double>& cs) {
  double gap = 0.0;
  const Index q = cs.channels();
  for (std::size_t k = 0; k < cs.density().size(); ++k)
    gap = std::max(gap, (cs.density()[k] * cs.inverse()[k] - CMat<double>::Identity(q, q)).cwiseAbs().maxCoeff());
  checks.at_most("spectral: max |S_x S_x^-1 - I|", kInverseTol, gap);

  double worst = 1.0;
  for (Index i = 0; i < q; ++i)
    for (Index j = 0; j < q; ++j) {
      if (i == j) continue;
      const Vec<double> d = (run.coherence.curve(i, j) - run.periodogram_coherence.curve(i, j)).cwiseAbs();
      const double frac = static_cast<double>((d.array() <= kCoherenceAgreeTol).count()) / static_cast<double>(d.size());
      worst = std::min(worst, frac);
    }
  checks.add("spectral: parametric vs periodogram coherence, worst-pair fraction of bins within 0.1",
             ">= " + fmt(kCoherenceAgreeFraction), fmt(worst, 4), kCoherenceAgreeTol, worst >= kCoherenceAgreeFraction);
}

void toy_9_1_checks(CheckList& checks, const ReproductionRun& run, const CrossSpectrum<double>& cs) {
  const auto& grid = run.grid;
  // Channel 1 autospectrum.
  checks.near("spectra: argmax autospectrum channel 1 (Hz)", 33, argmax_frequency(cs.autospectrum(0), grid), kPeakTolHz);

  const auto coh41 = peak_frequencies(run.coherence.curve(3, 0), grid);
  const bool both = has_peak_near(coh41, 22, kPeakTolHz) && has_peak_near(coh41, 35, kPeakTolHz);
  checks.add("coherence: local maxima of (4,1) include 22 and 35 Hz", "[22, 35] +- 1", hz_list(coh41), kPeakTolHz, both);

  const std::set<std::pair<Index, Index>> linked{{1, 0}, {0, 4}, {2, 1}, {3, 2}, {3, 4}, {4, 3}};
  std::string strong, weak;
  bool support_ok = true;
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j) {
      if (i == j) continue;
      const double peak = run.icoh.curve(i, j).maxCoeff();
      if (peak > kLinkPresent) strong += (strong.empty() ? "" : " ") + pair_name(i, j);
      const bool ok = linked.count({i, j}) ? peak > kLinkPresent : peak < kLinkAbsent;
      if (!ok) weak += (weak.empty() ? "" : " ") + pair_name(i, j) + "=" + fmt(peak, 3);
      support_ok = support_ok && ok;
    }
  checks.add("icoh: links above 0.1 exactly on the wired pairs, others below 0.05",
             "2<-1 1<-5 3<-2 4<-3 4<-5 5<-4", weak.empty() ? strong : strong + " | violations: " + weak, kLinkAbsent,
             support_ok);
  checks.near("icoh: argmax 2<-1 (Hz)", 33, argmax_frequency(run.icoh.curve(1, 0), grid), kPeakTolHz);

  for (auto [i, j] : {std::pair<Index, Index>{0, 4}, {3, 4}}) {
    const double ic = run.icoh.curve(i, j).maxCoeff();
    const double gp = run.gpdc.curve(i, j).maxCoeff();
    checks.add("icoh vs gpdc: max iCoh " + pair_name(i, j) + " >= max gPDC", ">= " + fmt(gp, 4), fmt(ic, 4), 0.0,
               ic >= gp);
  }
}

void toy_9_2_checks(CheckList& checks, const ReproductionRun& run, const CrossSpectrum<double>& cs) {
  const auto& grid = run.grid;
  for (Index c = 0; c < 5; ++c) {
    const auto peaks = peak_frequencies(normalized(cs.autospectrum(c)), grid);
    const bool base = has_peak_near(peaks, 8, kPeakTolHz) && has_peak_near(peaks, 32, kPeakTolHz);
    const bool mid = has_peak_near(peaks, 23, kPeakTolHz);
    const bool want_mid = c >= 2;
    checks.add("spectra: autospectrum channel " + std::to_string(c + 1) + " peaks",
               want_mid ? "[8, 23, 32] +- 1" : "[8, 32] +- 1, none at 23", hz_list(peaks), kPeakTolHz,
               base && (mid == want_mid));
  }

  for (Index k : {2, 3, 4}) {
    const double peak = run.coherence.curve(1, k).maxCoeff();
    checks.add("coherence: max (2," + std::to_string(k + 1) + ") > 0.9", "> 0.9", fmt(peak, 4), 0.9, peak > 0.9);
  }

  for (Index k : {0, 2, 3, 4})
    checks.near("icoh: argmax " + pair_name(k, 1) + " (Hz)", 16, argmax_frequency(run.icoh.curve(k, 1), grid),
                kPeakTolHz);
  checks.near("icoh: argmax 2<-1 (Hz)", 28, argmax_frequency(run.icoh.curve(1, 0), grid), kPeakTolHz);

  checks.add("gpdc: argmax 1<-2 at band edge (Hz)", fmt(grid[0]),
             fmt(argmax_frequency(run.gpdc.curve(0, 1), grid)), 0.0,
             argmax_frequency(run.gpdc.curve(0, 1), grid) == grid[0]);
  for (Index k : {2, 3, 4}) {
    checks.near("gpdc: argmax " + pair_name(k, 1) + " (Hz)", 23, argmax_frequency(run.gpdc.curve(k, 1), grid),
                kPeakTolHz);
    const double peak = run.gpdc.curve(k, 1).maxCoeff();
    checks.add("gpdc: max " + pair_name(k, 1) + " < 0.5", "< 0.5", fmt(peak, 4), 0.5, peak < 0.5);
  }
}

}  // namespace

const char* to_string(ToyId id) {
  switch (id) {
    case ToyId::toy_9_1: return "toy_9_1";
    case ToyId::toy_9_2: return "toy_9_2";
  }
  return "unknown";
}

std::optional<ToyId> parse_toy_id(std::string_view text) {
  if (text == "toy_9_1") return ToyId::toy_9_1;
  if (text == "toy_9_2") return ToyId::toy_9_2;
  return std::nullopt;
}

ArModeld toy_model_9_1() {
  Matrix a1 = Matrix::Zero(5, 5), a2 = Matrix::Zero(5, 5);
  set(a1, 1, 1, 1.3435);
  set(a1, 2, 1, -0.5);
  set(a1, 4, 3, -0.5);
  set(a1, 4, 4, 0.3536);
  set(a1, 4, 5, 0.3536);
  set(a1, 5, 4, -0.3536);
  set(a1, 5, 5, 0.3536);
  set(a2, 1, 1, -0.9025);
  set(a2, 1, 5, 0.5);
  set(a2, 3, 2, 0.4);
  return ArModeld({a1, a2}, Matrix::Identity(5, 5));
}

ArModeld toy_model_9_2() {
  Matrix a1 = Matrix::Zero(5, 5), a2 = Matrix::Zero(5, 5);
  set(a1, 1, 1, 1.5);
  set(a1, 1, 2, -0.25);
  set(a1, 2, 1, -0.2);
  set(a1, 2, 2, 1.8);
  set(a2, 1, 1, -0.95);
  set(a2, 2, 2, -0.96);
  for (Index n = 3; n <= 5; ++n) {
    set(a1, n, 2, 0.9);
    set(a1, n, n, 1.65);
    set(a2, n, 2, -0.8);
    set(a2, n, n, -0.95);
  }
  return ArModeld({a1, a2}, Matrix::Identity(5, 5));
}

ArModeld toy_model(ToyId id) { return id == ToyId::toy_9_1 ? toy_model_9_1() : toy_model_9_2(); }

std::vector<std::pair<Index, Index>> direct_connections(const ArModeld& model) {
  std::vector<std::pair<Index, Index>> out;
  for (Index i = 0; i < model.channels(); ++i)
    for (Index j = 0; j < model.channels(); ++j) {
      if (i == j) continue;
      for (const auto& a : model.coeffs())
        if (a(i, j) != 0.0) {
          out.emplace_back(i, j);
          break;
        }
    }
  return out;
}

bool ReproductionReport::overall_pass() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check* ReproductionReport::find(std::string_view name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

ReproductionRun run_pipeline(ToyId id, std::uint64_t seed, const ProtocolConfig& cfg) {
  ArModeld truth = toy_model(id);
  TimeSeriesd data = simulate(truth, cfg.n_samples, cfg.burn_in, seed, cfg.sampling_rate);
  ArModeld fitted = fit_least_squares(data, cfg.order);
  const FrequencyGrid grid = FrequencyGrid::band(cfg.f_min, cfg.f_max, cfg.sampling_rate, cfg.n_dft);

  const CrossSpectrum<double> cs = cross_spectrum(fitted, grid);
  auto coh = coherence(cs);
  apply_normalized_autospectrum(coh, cs);

  const CrossSpectrum<double> pcs =
      periodogram_cross_spectrum(data, cfg.segment_len, cfg.overlap, cfg.window).restricted(cfg.f_min, cfg.f_max);
  auto pcoh = coherence(pcs);
  apply_normalized_autospectrum(pcoh, pcs);

  // Fitted innovations are never exactly uncorrelated; NCR drops the
  // off-diagonal covariances.
  ReproductionRun run{truth,
                      std::move(data),
                      fitted,
                      grid,
                      std::move(coh),
                      std::move(pcoh),
                      partial_coherence(cs),
                      icoh(fitted, grid),
                      gpdc(fitted, grid),
                      pdc(fitted, grid),
                      ncr(fitted, grid, true),
                      ReproductionReport{id, seed, {}}};

  CheckList checks;
  checks.guarded("estimation", [&] { check_estimation(checks, run.truth, run.fitted); });
  checks.guarded(id == ToyId::toy_9_1 ? "toy_9_1 claims" : "toy_9_2 claims", [&] {
    if (id == ToyId::toy_9_1)
      toy_9_1_checks(checks, run, cs);
    else
      toy_9_2_checks(checks, run, cs);
  });
  checks.guarded("identities", [&] { check_formula_identities(checks, run.fitted, grid, run.icoh); });
  checks.guarded("normalization", [&] { check_normalization(checks, run); });
  checks.guarded("spectral consistency", [&] { check_spectral_consistency(checks, run, cs); });
  run.report.checks = checks.release();
  return run;
}

ReproductionReport run_reproduction(ToyId id, std::uint64_t seed) { return run_pipeline(id, seed).report; }

}  // namespace mvar
