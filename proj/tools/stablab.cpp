// Command-line front end. Exit codes: 0 success, 2 precondition failure,
// 3 numerical fault.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "stablab/dynamics.hpp"
#include "stablab/errors.hpp"
#include "stablab/experiment.hpp"
#include "stablab/freqlib.hpp"
#include "stablab/ftseries.hpp"
#include "stablab/kvfile.hpp"
#include "stablab/normalform.hpp"
#include "stablab/smoothing.hpp"
#include "stablab/stabpipe.hpp"

namespace fs = std::filesystem;
using namespace stablab;

namespace {

Frequency parse_omega(const std::string& spec, int d) {
  if (spec == "golden") return golden_frequency(d);
  return Frequency(parse_double_list(spec));
}

std::string fmt(double x) { return format_double(x); }

// Writes to path, or stdout when path is empty or "-".
template <class F>
void with_output(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream os(path);
  if (!os) throw ParseError("cannot write '" + path + "'");
  write(os);
}

int cmd_dioph(const std::string& omega_spec, double tau, int K, int max_K) {
  const Frequency omega = parse_omega(omega_spec, 2);
  const DiophantineCertificate cert = diophantine_constant(omega, tau, K, EnumerationBudget{max_K});
  std::cout << "K=" << cert.K << "\ntau=" << fmt(cert.tau) << "\ngamma_K=" << fmt(cert.gamma_K)
            << "\nargmin=";
  for (std::size_t i = 0; i < cert.argmin.size(); ++i) std::cout << (i ? "," : "") << cert.argmin[i];
  std::cout << "\nalpha=" << fmt(cert.alpha()) << "\n";
  return 0;
}

int cmd_smooth(const std::string& in, double s, const std::string& out) {
  const FourierTaylorSeries g = load_series(in);
  const SmoothingResult r = smooth(g, s);
  std::cout << "# smooth s=" << fmt(s) << " cutoff=" << r.cutoff
            << " dropped_mass=" << fmt(r.dropped_tail_mass)
            << " fourier_norm=" << fmt(r.fourier_norm_at_s) << "\n";
  with_output(out, [&](std::ostream& os) { write_series(os, r.g_s); });
  return 0;
}

int cmd_smooth_verify(double ell, int p, const std::string& family, double s_min, double s_max,
                      int d, int j_max, std::uint64_t seed, double amplitude,
                      const std::string& out) {
  if (family != "lacunary") throw DomainError("only the lacunary family is available");
  if (!(s_min > 0.0 && s_min <= s_max && s_max <= 1.0)) {
    throw DomainError("need 0 < s_min <= s_max <= 1");
  }
  const HolderClass hc(ell, d);
  const FourierTaylorSeries g = lacunary_series(d, ell, j_max, amplitude, seed);
  const int j_from = static_cast<int>(std::ceil(-std::log2(s_max) - 1e-9));
  const int j_to = static_cast<int>(std::floor(-std::log2(s_min) + 1e-9));
  const auto s_list = dyadic_s_list(j_from, j_to);
  const SmoothingScalingReport report = verify_smoothing_estimate(g, hc, p, s_list);
  with_output(out, [&](std::ostream& os) {
    os << "s,error,norm_ratio\n";
    for (const auto& sample : report.samples) {
      os << fmt(sample.s) << ',' << fmt(sample.error) << ',' << fmt(sample.norm_ratio) << '\n';
    }
  });
  std::cerr << "slope=" << fmt(report.slope) << " expected=" << fmt(report.expected_slope)
            << " pass=" << (report.pass ? "true" : "false") << "\n";
  return 0;
}

int cmd_nf(const std::string& ham, const std::string& omega_spec, int K, double sigma, double rho,
           double xi, double alpha, const std::string& out_dir) {
  const FourierTaylorSeries H = load_series(ham);
  const Frequency omega = parse_omega(omega_spec, H.dim());
  NormalFormParams params;
  params.K = K;
  params.widths = AnalyticityWidths(sigma, rho);
  params.xi = xi;
  params.alpha = alpha > 0.0 ? alpha : min_small_divisor(omega, K);
  const NormalFormResult r = resonant_normal_form(H, omega, params);
  const std::string cert = r.certificate(params);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    save_series((dir / "h.series").string(), r.h);
    save_series((dir / "f_star.series").string(), r.f_star);
    for (std::size_t i = 0; i < r.generators.size(); ++i) {
      save_series((dir / ("chi_" + std::to_string(i + 1) + ".series")).string(), r.generators[i]);
    }
    std::ofstream(dir / "certificate.txt") << cert;
  }
  std::cout << cert;
  return 0;
}

int cmd_predict(double rho, double ell, double tau, double gamma, const std::string& constants,
                int d, double coeff_norm, const std::string& ham, std::optional<double> rho_tilde) {
  const HolderClass hc(ell, d);
  const BoundConstants consts = constants.empty() ? BoundConstants{} : load_bound_constants(constants);
  double N = coeff_norm;
  if (!ham.empty()) {
    FourierTaylorSeries f = load_series(ham);
    f = f.filter([](const TermKey& key) { return key.m_norm1() >= 2; });
    N = coeff_norm_max(taylor_split(f, hc, rho), hc);
  }
  const ParameterSchedule sc =
      rho_tilde ? parameter_schedule_with_rho_tilde(rho, *rho_tilde, gamma, tau, hc, consts, N)
                : parameter_schedule(rho, gamma, tau, hc, consts, N);
  const StabilityTimes times = predicted_stability_time(rho, hc, tau, consts);
  std::ostringstream os;
  os << "rho=" << fmt(rho) << "\nell=" << fmt(ell) << "\ntau=" << fmt(tau) << "\ngamma=" << fmt(gamma)
     << "\ncoeff_norm_max=" << fmt(N) << "\na=" << fmt(sc.a) << "\nb=" << fmt(sc.b)
     << "\nrho_tilde=" << fmt(sc.rho_tilde) << "\nK=" << sc.K << "\ns=" << fmt(sc.s)
     << "\nalpha=" << fmt(sc.alpha) << "\nKs=" << fmt(sc.K * sc.s)
     << "\nsmallness_ok=" << sc.flags.smallness_ok << "\nrho_ok=" << sc.flags.rho_ok
     << "\nKs_ok=" << sc.flags.Ks_ok << "\ns_in_range=" << sc.flags.s_in_range
     << "\nrho_below_e6=" << sc.flags.rho_below_e6 << "\n";
  if (sc.flags.all()) {
    const RemainderBounds b = remainder_bounds(sc, consts, hc, rho);
    os << "bound_analytic=" << fmt(b.analytic) << "\nbound_smoothing_gap=" << fmt(b.smoothing_gap)
       << "\nbound_taylor=" << fmt(b.taylor) << "\ndominant=" << to_string(b.dominant) << "\n";
  } else {
    os << "failed_flags=" << sc.flags.failures() << "\n";
  }
  os << "exponent=" << fmt(times.exponent) << "\nt_star=" << fmt(times.t_star)
     << "\nt_stab=" << fmt(times.t_stab) << "\n";
  std::cout << os.str();
  return 0;
}

int cmd_escape(const std::string& ham, double rho, double threshold, double tcap, std::size_t n,
               std::uint64_t seed, double dt, const std::string& out) {
  const FourierTaylorSeries H = load_series(ham);
  EscapeOptions opts;
  opts.dt = dt;
  const EscapeRecord rec = escape_time(H, rho, threshold, tcap, n, seed, opts);
  with_output(out, [&](std::ostream& os) { write_escape_csv(os, rec); });
  std::cerr << "escaped=" << rec.escaped() << " min_escape=" << fmt(rec.min_escape)
            << (rec.min_escape_censored ? " (censored)" : "")
            << " ballistic_bound=" << fmt(rec.ballistic_bound)
            << " max_energy_drift=" << fmt(rec.max_energy_drift) << "\n";
  return 0;
}

int cmd_integrate(const std::string& ham, const std::vector<double>& theta,
                  const std::vector<double>& I, double t_end, double dt, const std::string& out) {
  const FourierTaylorSeries H = load_series(ham);
  const Trajectory traj =
      integrate(H, PhasePoint{theta, I}, t_end, dt > 0.0 ? dt : default_dt(H));
  with_output(out, [&](std::ostream& os) { write_trajectory_csv(os, traj); });
  std::cerr << "steps=" << traj.steps << " action_drift=" << fmt(action_drift(traj))
            << " max_energy_drift=" << fmt(traj.max_energy_drift) << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out) {
  const ExperimentConfig config = load_experiment_config(config_path);
  std::string path = out;
  if (path.empty()) {
    fs::create_directories(config.output_dir);
    path = (fs::path(config.output_dir) / "sweep.csv").string();
  }
  std::vector<SweepRow> rows;
  with_output(path, [&](std::ostream& os) { rows = sweep(config, &os); });
  int failed = 0;
  for (const auto& r : rows) failed += r.error.empty() ? 0 : 1;
  std::cerr << "rows=" << rows.size() << " failed=" << failed << " csv=" << path << "\n";
  return 0;
}

int cmd_fit(const std::string& csv, const std::string& model, double ell, const std::string& source) {
  const auto rows = load_sweep_csv(csv);
  FitSource src = FitSource::t_pred;
  if (source == "min_escape") {
    src = FitSource::min_escape;
  } else if (source != "t_pred") {
    throw ParseError("source must be 't_pred' or 'min_escape'");
  }
  const FitReport r = fit_exponent(rows, parse_fit_model(model), ell, src);
  std::cout << "model=" << to_string(r.model) << "\nrows=" << r.rows_used << "\np=" << fmt(r.p)
            << "\nc0=" << fmt(r.c0) << "\nrms=" << fmt(r.rms)
            << "\nmodel_mismatch=" << (r.model_mismatch ? "true" : "false") << "\nresiduals=";
  for (std::size_t i = 0; i < r.residuals.size(); ++i) {
    std::cout << (i ? "," : "") << fmt(r.residuals[i]);
  }
  std::cout << "\n";
  return 0;
}

int cmd_plots(const std::string& csv, const std::string& dir, const std::string& prefix) {
  const PlotFiles files = emit_plots(load_sweep_csv(csv), dir, prefix);
  for (const auto& f : files.data_files) std::cout << f << "\n";
  std::cout << files.script << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective-stability numerics for quasi-periodic tori"};
  app.require_subcommand(1);
  int code = 0;

  std::string omega_spec = "golden";
  double tau = 1.0;
  int K = 5;
  int max_K = 200;
  auto* dioph = app.add_subcommand("dioph", "Finite-cutoff Diophantine constant");
  dioph->add_option("--omega", omega_spec, "Frequency: 'golden' or comma-separated values");
  dioph->add_option("--tau", tau, "Diophantine exponent");
  dioph->add_option("--K", K, "Mode cutoff (l1 norm)")->required();
  dioph->add_option("--max-K", max_K, "Enumeration budget");
  dioph->callback([&] { code = cmd_dioph(omega_spec, tau, K, max_K); });

  std::string in, out;
  double s = 0.125;
  auto* smooth_cmd = app.add_subcommand("smooth", "Sharp Fourier cutoff of a pure-angle series");
  smooth_cmd->add_option("--in", in, "Series file")->required();
  smooth_cmd->add_option("--s", s, "Smoothing width in (0, 1]")->required();
  smooth_cmd->add_option("--out", out, "Output series file (default stdout)");
  smooth_cmd->callback([&] { code = cmd_smooth(in, s, out); });

  double ell = 6.5, s_min = std::exp2(-10), s_max = std::exp2(-3), amplitude = 1.0;
  int p = 0, d = 2, j_max = 20;
  std::uint64_t seed = 1;
  std::string family = "lacunary";
  auto* verify = app.add_subcommand("smooth-verify", "Smoothing error scaling on a test family");
  verify->add_option("--ell", ell, "Hoelder regularity");
  verify->add_option("--p", p, "Derivative order");
  verify->add_option("--family", family, "Test family (lacunary)");
  verify->add_option("--s-min", s_min, "Smallest width");
  verify->add_option("--s-max", s_max, "Largest width");
  verify->add_option("--d", d, "Dimension");
  verify->add_option("--j-max", j_max, "Top lacunary level");
  verify->add_option("--seed", seed, "Phase seed");
  verify->add_option("--amplitude", amplitude, "Family amplitude");
  verify->add_option("--out", out, "CSV output (default stdout)");
  verify->callback([&] {
    code = cmd_smooth_verify(ell, p, family, s_min, s_max, d, j_max, seed, amplitude, out);
  });

  std::string ham, out_dir;
  double sigma = 1.2, rho = 0.5, xi = 2.0, alpha = 0.0;
  auto* nf = app.add_subcommand("nf", "Resonant normal form with certificate");
  nf->add_option("--ham", ham, "Hamiltonian series file")->required();
  nf->add_option("--omega", omega_spec, "Frequency: 'golden' or comma-separated values");
  nf->add_option("--K", K, "Mode cutoff")->required();
  nf->add_option("--sigma", sigma, "Angle strip width");
  nf->add_option("--rho", rho, "Action radius");
  nf->add_option("--xi", xi, "Domain parameter (> 1)");
  nf->add_option("--alpha", alpha, "Non-resonance threshold (default: min |omega.k|)");
  nf->add_option("--out-dir", out_dir, "Directory for h, f_star and generator series");
  nf->callback([&] { code = cmd_nf(ham, omega_spec, K, sigma, rho, xi, alpha, out_dir); });

  double gamma = 1.0, coeff_norm = 1.0;
  std::string constants;
  std::optional<double> rho_tilde;
  auto* predict = app.add_subcommand("predict", "Parameter schedule, remainder bounds and t*");
  predict->add_option("--rho", rho, "Distance to the torus")->required();
  predict->add_option("--ell", ell, "Hoelder regularity")->required();
  predict->add_option("--tau", tau, "Diophantine exponent")->required();
  predict->add_option("--gamma", gamma, "Diophantine constant")->required();
  predict->add_option("--constants", constants, "key=value constants file");
  predict->add_option("--d", d, "Dimension");
  predict->add_option("--coeff-norm", coeff_norm, "max Hoelder majorant of the coefficients");
  predict->add_option("--ham", ham, "Read the coefficient norm from a Hamiltonian");
  predict->add_option("--rho-tilde", rho_tilde, "Override rho~");
  predict->callback([&] {
    code = cmd_predict(rho, ell, tau, gamma, constants, d, coeff_norm, ham, rho_tilde);
  });

  double threshold = 0.0, tcap = 100.0, dt = 0.0;
  std::size_t n = 50;
  auto* escape = app.add_subcommand("escape", "Monte-Carlo escape times");
  escape->add_option("--ham", ham, "Hamiltonian series file")->required();
  escape->add_option("--rho", rho, "Launch radius")->required();
  escape->add_option("--threshold", threshold, "Escape drift (default rho/2)");
  escape->add_option("--tcap", tcap, "Time cap");
  escape->add_option("--n", n, "Samples");
  escape->add_option("--seed", seed, "Seed");
  escape->add_option("--dt", dt, "Step (default min(0.01, 0.01/|omega|))");
  escape->add_option("--out", out, "CSV output (default stdout)");
  escape->callback([&] {
    code = cmd_escape(ham, rho, threshold > 0.0 ? threshold : rho / 2.0, tcap, n, seed, dt, out);
  });

  std::vector<double> theta, actions;
  double t_end = 1.0;
  auto* integ = app.add_subcommand("integrate", "Single trajectory dump");
  integ->add_option("--ham", ham, "Hamiltonian series file")->required();
  integ->add_option("--theta", theta, "Initial angles")->delimiter(',')->required();
  integ->add_option("--I", actions, "Initial actions")->delimiter(',')->required();
  integ->add_option("--t", t_end, "End time (either sign)");
  integ->add_option("--dt", dt, "Step");
  integ->add_option("--out", out, "CSV output (default stdout)");
  integ->callback([&] { code = cmd_integrate(ham, theta, actions, t_end, dt, out); });

  std::string config;
  auto* sweep_cmd = app.add_subcommand("sweep", "rho sweep: predicted times against escapes");
  sweep_cmd->add_option("--config", config, "key=value experiment config")->required();
  sweep_cmd->add_option("--out", out, "CSV output (default output_dir/sweep.csv)");
  sweep_cmd->callback([&] { code = cmd_sweep(config, out); });

  std::string csv, model = "power-with-log", source = "t_pred";
  auto* fit = app.add_subcommand("fit", "Exponent fit of sweep rows");
  fit->add_option("--csv", csv, "Sweep CSV")->required();
  fit->add_option("--model", model, "pure-power or power-with-log");
  fit->add_option("--ell", ell, "Hoelder regularity (log factor exponent ell - 1)");
  fit->add_option("--source", source, "t_pred or min_escape");
  fit->callback([&] { code = cmd_fit(csv, model, ell, source); });

  std::string plot_dir = ".", prefix = "sweep";
  auto* plots = app.add_subcommand("plots", "gnuplot data files from a sweep CSV");
  plots->add_option("--csv", csv, "Sweep CSV")->required();
  plots->add_option("--dir", plot_dir, "Output directory");
  plots->add_option("--prefix", prefix, "File prefix");
  plots->callback([&] { code = cmd_plots(csv, plot_dir, prefix); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalFault& e) {
    std::cerr << "numerical fault: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return code;
}
