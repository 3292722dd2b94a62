#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stablab/dynamics.hpp"
#include "stablab/freqlib.hpp"
#include "stablab/ftseries.hpp"
#include "stablab/smoothing.hpp"
#include "stablab/stabpipe.hpp"

namespace stablab {

/// Taylor exponents m in N^d with lo <= |m|_1 <= hi, in lexicographic order.
std::vector<std::vector<int>> taylor_exponents_between(int d, int lo, int hi);

/// omega.I + sum_{2 <= |m|_1 <= floor(ell) - 2} a_m(theta) I^m, each a_m a
/// lacunary series of regularity ell with levels 0 ... j_max and phases drawn
/// from (seed, index of m). omega is golden_frequency(d).
FourierTaylorSeries build_test_hamiltonian(int d, const HolderClass& hc, std::uint64_t seed,
                                           double amplitude, int j_max = 8);
FourierTaylorSeries build_test_hamiltonian(const Frequency& omega, const HolderClass& hc,
                                           std::uint64_t seed, double amplitude, int j_max = 8);

/// The amplitude at which the test Hamiltonian's schedule has the given rho~.
/// rho~ is inversely proportional to the amplitude.
double amplitude_for_rho_tilde(const Frequency& omega, const HolderClass& hc, std::uint64_t seed,
                               int j_max, double gamma, double tau, const BoundConstants& consts,
                               double rho_tilde);

enum class SweepMode { full, dynamics_only };

/// Flat "key = value" configuration. Keys and defaults:
///   d = 2, ell = 6.5, tau = 1
///   omega = golden          (or a comma-separated list)
///   gamma = 1               (or "auto": the Diophantine constant up to |k|_1 = 200)
///   rho_list = 0.1, 0.05, 0.025   (strictly decreasing)
///   mode = dynamics         (or "full")
///   xi = 2, constants =     (constants file; empty keeps every C at 1)
///   rho_tilde = 2000        (amplitude is tuned to this value)
///   amplitude =             (overrides rho_tilde when set)
///   j_max = 8, seed = 1
///   dt = 0                  (0: min(0.01, 0.01 / |omega|_inf))
///   t_cap_steps = 1000000   (escape runs stop at min(t_pred, t_cap_steps dt))
///   n_samples = 50, threshold_factor = 0.5   (escape at drift factor x rho)
///   epsilon = 0.1, T0 = 1   (diffusion reference)
///   k_max = -1, m_max = -1  (normal-form truncation; -1 keeps the defaults)
///   output_dir = .
struct ExperimentConfig {
  int d = 2;
  double ell = 6.5;
  double tau = 1.0;
  std::vector<double> omega;  // empty: golden
  double gamma = 1.0;         // <= 0: automatic
  std::vector<double> rho_list{0.1, 0.05, 0.025};
  SweepMode mode = SweepMode::dynamics_only;
  double xi = 2.0;
  std::string constants_file;
  double rho_tilde = 2000.0;
  double amplitude = -1.0;  // < 0: derived from rho_tilde
  int j_max = 8;
  std::uint64_t seed = 1;
  double dt = 0.0;
  double t_cap_steps = 1e6;
  std::size_t n_samples = 50;
  double threshold_factor = 0.5;
  double epsilon = 0.1;
  double T0 = 1.0;
  int k_max = -1;
  int m_max = -1;
  std::string output_dir = ".";

  /// Throws DomainError on an invalid field.
  void validate() const;
};

ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

struct SweepRow {
  double rho = 0.0;
  double t_pred = 0.0;      // t_stab with the configured constants
  double t_diff_ref = 0.0;  // diffusion reference time
  double t_cap = 0.0;       // escape runs stop here
  double min_escape = 0.0;
  bool min_escape_censored = true;
  double censored_fraction = 1.0;
  double max_drift = 0.0;
  double ballistic_bound = 0.0;
  double max_energy_drift = 0.0;
  bool schedule_ok = false;
  std::string schedule_flags;  // "ok" or the failed flag names separated by '|'
  int K = 0;
  double s = 0.0;
  double contraction = 0.0;  // NaN when no normal form was run
  std::string error;         // empty on success

  bool operator==(const SweepRow&) const = default;
};

/// Runs every rho of the config in order. Each row is written to sink (if
/// given) as soon as it is done; a row that fails records the error and the
/// sweep continues.
std::vector<SweepRow> sweep(const ExperimentConfig& config, std::ostream* sink = nullptr);

/// Versioned CSV with a "# stablab-sweep v1" first line.
void write_sweep_header(std::ostream& os);
void write_sweep_row(std::ostream& os, const SweepRow& row);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(std::istream& is);
std::vector<SweepRow> load_sweep_csv(const std::string& path);

enum class FitModel { pure_power, power_with_log };
enum class FitSource { t_pred, min_escape };
const char* to_string(FitModel model);
FitModel parse_fit_model(const std::string& name);

struct FitReport {
  FitModel model = FitModel::pure_power;
  FitSource source = FitSource::t_pred;
  std::size_t rows_used = 0;
  double p = 0.0;  // log t = c0 - p log rho [- (ell - 1) log |log rho|]
  double c0 = 0.0;
  std::vector<double> residuals;
  double rms = 0.0;
  /// Residuals show a systematic (curved) pattern: the model misses a factor.
  bool model_mismatch = false;
};

/// Least-squares exponent fit. Rows with errors, non-finite values or (for
/// min_escape) censoring are skipped; fewer than 4 usable rows throw
/// InsufficientData.
FitReport fit_exponent(const std::vector<SweepRow>& rows, FitModel model, double ell,
                       FitSource source = FitSource::t_pred);

struct PlotFiles {
  std::vector<std::string> data_files;
  std::string script;
};

/// Two-column gnuplot data (log10 rho, log10 t) for t_pred, uncensored
/// min_escape and censored points (at t_cap), plus a script stub. Only
/// non-empty series are written.
PlotFiles emit_plots(const std::vector<SweepRow>& rows, const std::string& directory,
                     const std::string& prefix = "sweep");

std::vector<std::pair<double, double>> read_plot_data(const std::string& path);

}  // namespace stablab
