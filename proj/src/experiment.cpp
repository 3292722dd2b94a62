#include "stablab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "stablab/errors.hpp"
#include "stablab/kvfile.hpp"
#include "stablab/linfit.hpp"

namespace stablab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr const char* kSweepVersion = "# stablab-sweep v1";
constexpr const char* kSweepColumns =
    "rho,t_pred,t_diff_ref,t_cap,min_escape,min_escape_censored,censored_fraction,max_drift,"
    "ballistic_bound,max_energy_drift,schedule_ok,schedule_flags,K,s,contraction,error";

std::string fmt(double x) { return format_double(x); }

void collect_exponents(int d, int i, int remaining, int lo, std::vector<int>& m,
                       std::vector<std::vector<int>>& out) {
  if (i == d) {
    const int order = [&] {
      int n = 0;
      for (int v : m) n += v;
      return n;
    }();
    if (order >= lo) out.push_back(m);
    return;
  }
  for (int v = 0; v <= remaining; ++v) {
    m[std::size_t(i)] = v;
    collect_exponents(d, i + 1, remaining - v, lo, m, out);
  }
  m[std::size_t(i)] = 0;
}

FourierTaylorSeries test_perturbation(int d, const HolderClass& hc, std::uint64_t seed,
                                      double amplitude, int j_max) {
  if (hc.dim() != d) throw DomainError("Hoelder class dimension differs from d");
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
    throw DomainError("amplitude must be finite and >= 0");
  }
  if (j_max < 0) throw DomainError("j_max must be >= 0");
  FourierTaylorSeries f(d);
  const auto exponents = taylor_exponents_between(d, 2, hc.q() - 2);
  for (std::size_t idx = 0; idx < exponents.size(); ++idx) {
    f += lacunary_series(d, hc.ell(), j_max, amplitude, seed, exponents[idx], idx);
  }
  return f;
}

std::string sanitize(std::string text) {
  for (char& c : text) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return text;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_bool01(const std::string& s) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw ParseError("expected 0 or 1, got '" + s + "'");
}

}  // namespace

std::vector<std::vector<int>> taylor_exponents_between(int d, int lo, int hi) {
  if (d < 1 || d > kMaxDim) throw DomainError("dimension out of range");
  std::vector<std::vector<int>> out;
  if (hi < lo || hi < 0) return out;
  std::vector<int> m(std::size_t(d), 0);
  collect_exponents(d, 0, hi, lo, m, out);
  std::sort(out.begin(), out.end());
  return out;
}

FourierTaylorSeries build_test_hamiltonian(const Frequency& omega, const HolderClass& hc,
                                           std::uint64_t seed, double amplitude, int j_max) {
  return FourierTaylorSeries::linear(omega.values()) +
         test_perturbation(omega.dim(), hc, seed, amplitude, j_max);
}

FourierTaylorSeries build_test_hamiltonian(int d, const HolderClass& hc, std::uint64_t seed,
                                           double amplitude, int j_max) {
  return build_test_hamiltonian(golden_frequency(d), hc, seed, amplitude, j_max);
}

double amplitude_for_rho_tilde(const Frequency& omega, const HolderClass& hc, std::uint64_t seed,
                               int j_max, double gamma, double tau, const BoundConstants& consts,
                               double rho_tilde) {
  if (!(rho_tilde > 0.0)) throw DomainError("target rho~ must be > 0");
  const FourierTaylorSeries f = test_perturbation(omega.dim(), hc, seed, 1.0, j_max);
  const double n1 = coeff_norm_max(taylor_split(f, hc, 1.0), hc);
  if (!(n1 > 0.0)) throw DomainError("test Hamiltonian has no coefficients below order floor(ell) - 2");
  // rho~ = (gamma / (256 xi C0 C_B A n1))^{1 / (a (tau + 1))} and a (tau + 1) = 1.
  const double base = schedule_rho_tilde(gamma, tau, consts, n1);
  return base / rho_tilde;
}

void ExperimentConfig::validate() const {
  if (d < 2 || d > kMaxDim) throw DomainError("config: d out of range");
  (void)HolderClass(ell, d);
  if (!(tau >= 0.0)) throw DomainError("config: tau must be >= 0");
  if (!omega.empty() && static_cast<int>(omega.size()) != d) {
    throw DomainError("config: omega has " + std::to_string(omega.size()) + " components, d = " +
                      std::to_string(d));
  }
  if (rho_list.empty()) throw DomainError("config: rho_list is empty");
  const double upper = mode == SweepMode::full ? std::exp(-6.0) : 1.0;
  for (std::size_t i = 0; i < rho_list.size(); ++i) {
    const double r = rho_list[i];
    if (!(r > 0.0 && r < upper)) {
      throw DomainError("config: rho = " + fmt(r) + " outside (0, " + fmt(upper) + ")" +
                        (mode == SweepMode::full ? " required for pipeline runs" : ""));
    }
    if (i > 0 && !(r < rho_list[i - 1])) throw DomainError("config: rho_list must be strictly decreasing");
  }
  if (!(xi > 1.0)) throw DomainError("config: xi must be > 1");
  if (amplitude < 0.0 && !(rho_tilde > 0.0)) throw DomainError("config: rho_tilde must be > 0");
  if (j_max < 0 || j_max > 28) throw DomainError("config: j_max out of range");
  if (!(dt >= 0.0)) throw DomainError("config: dt must be >= 0");
  if (!(t_cap_steps >= 1.0)) throw DomainError("config: t_cap_steps must be >= 1");
  if (n_samples < 1) throw DomainError("config: n_samples must be >= 1");
  if (!(threshold_factor > 0.0)) throw DomainError("config: threshold_factor must be > 0");
  if (!(epsilon >= 0.0) || !(T0 > 0.0)) throw DomainError("config: epsilon >= 0 and T0 > 0 required");
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  std::istringstream is(text);
  const KeyValues kv = parse_key_values(is);
  static const std::set<std::string> known = {
      "d",      "ell",         "tau",        "omega",       "gamma",     "rho_list",
      "mode",   "xi",          "constants",  "rho_tilde",   "amplitude", "j_max",
      "seed",   "dt",          "t_cap_steps", "n_samples",  "threshold_factor",
      "epsilon", "T0",         "k_max",      "m_max",       "output_dir"};
  for (const auto& [key, value] : kv) {
    if (!known.count(key)) throw ParseError("config: unknown key '" + key + "'");
  }
  ExperimentConfig c;
  c.d = static_cast<int>(kv_int(kv, "d", c.d));
  c.ell = kv_double(kv, "ell", c.ell);
  c.tau = kv_double(kv, "tau", c.tau);
  const std::string omega = kv_string(kv, "omega", "golden");
  if (omega != "golden") c.omega = parse_double_list(omega);
  const std::string gamma = kv_string(kv, "gamma", "1");
  c.gamma = gamma == "auto" ? 0.0 : parse_double(gamma);
  c.rho_list = kv_double_list(kv, "rho_list", c.rho_list);
  const std::string mode = kv_string(kv, "mode", "dynamics");
  if (mode == "full") {
    c.mode = SweepMode::full;
  } else if (mode == "dynamics") {
    c.mode = SweepMode::dynamics_only;
  } else {
    throw ParseError("config: mode must be 'full' or 'dynamics'");
  }
  c.xi = kv_double(kv, "xi", c.xi);
  c.constants_file = kv_string(kv, "constants", "");
  c.rho_tilde = kv_double(kv, "rho_tilde", c.rho_tilde);
  const std::string amplitude = kv_string(kv, "amplitude", "");
  if (!amplitude.empty()) c.amplitude = parse_double(amplitude);
  c.j_max = static_cast<int>(kv_int(kv, "j_max", c.j_max));
  c.seed = static_cast<std::uint64_t>(kv_int(kv, "seed", long(c.seed)));
  c.dt = kv_double(kv, "dt", c.dt);
  c.t_cap_steps = kv_double(kv, "t_cap_steps", c.t_cap_steps);
  const long n = kv_int(kv, "n_samples", long(c.n_samples));
  if (n < 1) throw DomainError("config: n_samples must be >= 1");
  c.n_samples = static_cast<std::size_t>(n);
  c.threshold_factor = kv_double(kv, "threshold_factor", c.threshold_factor);
  c.epsilon = kv_double(kv, "epsilon", c.epsilon);
  c.T0 = kv_double(kv, "T0", c.T0);
  c.k_max = static_cast<int>(kv_int(kv, "k_max", c.k_max));
  c.m_max = static_cast<int>(kv_int(kv, "m_max", c.m_max));
  c.output_dir = kv_string(kv, "output_dir", c.output_dir);
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_experiment_config(ss.str());
}

std::vector<SweepRow> sweep(const ExperimentConfig& config, std::ostream* sink) {
  config.validate();
  const HolderClass hc(config.ell, config.d);
  const Frequency omega = config.omega.empty() ? golden_frequency(config.d) : Frequency(config.omega);
  BoundConstants consts =
      config.constants_file.empty() ? BoundConstants{} : load_bound_constants(config.constants_file);
  consts.xi = config.xi;
  consts.validate();
  const double gamma = config.gamma > 0.0
                           ? config.gamma
                           : diophantine_constant(omega, config.tau, 200).gamma_K;
  const double amplitude =
      config.amplitude >= 0.0
          ? config.amplitude
          : amplitude_for_rho_tilde(omega, hc, config.seed, config.j_max, gamma, config.tau, consts,
                                    config.rho_tilde);
  const FourierTaylorSeries H = build_test_hamiltonian(omega, hc, config.seed, amplitude, config.j_max);
  const FourierTaylorSeries f = H - FourierTaylorSeries::linear(omega.values());
  const double dt = config.dt > 0.0 ? config.dt : default_dt(H);
  const bool dynamics_only = config.mode == SweepMode::dynamics_only;

  PipelineOptions pipe;
  pipe.dynamics_only = dynamics_only;
  pipe.normal_form.k_max = config.k_max;
  pipe.normal_form.m_max = config.m_max;

  if (sink) write_sweep_header(*sink);
  std::vector<SweepRow> rows;
  for (double rho : config.rho_list) {
    SweepRow row;
    row.rho = rho;
    row.contraction = kNaN;
    try {
      row.t_diff_ref = diffusion_time_reference(rho, hc, config.tau, config.epsilon, config.T0);
      if (f.empty()) {
        row.t_pred = kInf;
        row.schedule_ok = true;
        row.schedule_flags = "ok";
      } else {
        row.t_pred = predicted_stability_time(rho, hc, config.tau, consts).t_stab;
        ScheduleFlags flags;
        if (dynamics_only) {
          const TaylorSplit split = taylor_split(f, hc, rho);
          const ParameterSchedule sc =
              parameter_schedule(rho, gamma, config.tau, hc, consts, coeff_norm_max(split, hc));
          flags = sc.flags;
          row.K = sc.K;
          row.s = sc.s;
        } else {
          const PipelineReport report = run_pipeline(H, omega, gamma, config.tau, hc, rho, consts, pipe);
          flags = report.schedule.flags;
          row.K = report.schedule.K;
          row.s = report.schedule.s;
          if (report.normal_form) row.contraction = report.normal_form->contraction;
          if (!report.ok && report.failed_stage != "schedule") row.error = report.diagnostics;
        }
        row.schedule_ok = flags.all(dynamics_only);
        row.schedule_flags = row.schedule_ok ? "ok" : flags.failures(dynamics_only);
        std::replace(row.schedule_flags.begin(), row.schedule_flags.end(), ',', '|');
        row.schedule_flags.erase(
            std::remove(row.schedule_flags.begin(), row.schedule_flags.end(), ' '),
            row.schedule_flags.end());
      }
      row.t_cap = std::min(row.t_pred, config.t_cap_steps * dt);
      EscapeOptions eo;
      eo.dt = dt;
      const EscapeRecord rec = escape_time(H, rho, config.threshold_factor * rho, row.t_cap,
                                           config.n_samples, config.seed, eo);
      row.min_escape = rec.min_escape;
      row.min_escape_censored = rec.min_escape_censored;
      row.censored_fraction = rec.censored_fraction();
      row.max_drift = *std::max_element(rec.max_drift.begin(), rec.max_drift.end());
      row.ballistic_bound = rec.ballistic_bound;
      row.max_energy_drift = rec.max_energy_drift;
    } catch (const Error& e) {
      row.error = e.what();
    }
    row.error = sanitize(row.error);
    if (sink) {
      write_sweep_row(*sink, row);
      sink->flush();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_header(std::ostream& os) { os << kSweepVersion << '\n' << kSweepColumns << '\n'; }

void write_sweep_row(std::ostream& os, const SweepRow& r) {
  os << fmt(r.rho) << ',' << fmt(r.t_pred) << ',' << fmt(r.t_diff_ref) << ',' << fmt(r.t_cap) << ','
     << fmt(r.min_escape) << ',' << (r.min_escape_censored ? 1 : 0) << ','
     << fmt(r.censored_fraction) << ',' << fmt(r.max_drift) << ',' << fmt(r.ballistic_bound) << ','
     << fmt(r.max_energy_drift) << ',' << (r.schedule_ok ? 1 : 0) << ','
     << (r.schedule_flags.empty() ? "-" : r.schedule_flags) << ',' << r.K << ',' << fmt(r.s) << ','
     << fmt(r.contraction) << ',' << sanitize(r.error) << '\n';
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  write_sweep_header(os);
  for (const auto& r : rows) write_sweep_row(os, r);
}

std::vector<SweepRow> read_sweep_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kSweepVersion) {
    throw ParseError("sweep CSV: missing '" + std::string(kSweepVersion) + "' header");
  }
  if (!std::getline(is, line) || line != kSweepColumns) throw ParseError("sweep CSV: unexpected columns");
  std::vector<SweepRow> rows;
  int line_no = 2;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv(line);
    if (f.size() != 16) {
      throw ParseError("sweep CSV line " + std::to_string(line_no) + ": expected 16 fields");
    }
    try {
      SweepRow r;
      r.rho = parse_double(f[0]);
      r.t_pred = parse_double(f[1]);
      r.t_diff_ref = parse_double(f[2]);
      r.t_cap = parse_double(f[3]);
      r.min_escape = parse_double(f[4]);
      r.min_escape_censored = parse_bool01(f[5]);
      r.censored_fraction = parse_double(f[6]);
      r.max_drift = parse_double(f[7]);
      r.ballistic_bound = parse_double(f[8]);
      r.max_energy_drift = parse_double(f[9]);
      r.schedule_ok = parse_bool01(f[10]);
      r.schedule_flags = f[11] == "-" ? "" : f[11];
      r.K = static_cast<int>(parse_double(f[12]));
      r.s = parse_double(f[13]);
      r.contraction = parse_double(f[14]);
      r.error = f[15];
      rows.push_back(std::move(r));
    } catch (const ParseError& e) {
      throw ParseError("sweep CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<SweepRow> load_sweep_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open '" + path + "'");
  return read_sweep_csv(is);
}

const char* to_string(FitModel model) {
  return model == FitModel::pure_power ? "pure-power" : "power-with-log";
}

FitModel parse_fit_model(const std::string& name) {
  if (name == "pure-power") return FitModel::pure_power;
  if (name == "power-with-log") return FitModel::power_with_log;
  throw ParseError("fit model must be 'pure-power' or 'power-with-log'");
}

FitReport fit_exponent(const std::vector<SweepRow>& rows, FitModel model, double ell,
                       FitSource source) {
  std::vector<std::pair<double, double>> points;
  for (const auto& r : rows) {
    if (!r.error.empty() || !(r.rho > 0.0 && r.rho < 1.0)) continue;
    double t = 0.0;
    if (source == FitSource::t_pred) {
      t = r.t_pred;
    } else {
      if (r.min_escape_censored) continue;
      t = r.min_escape;
    }
    if (!(t > 0.0) || !std::isfinite(t)) continue;
    double y = std::log(t);
    if (model == FitModel::power_with_log) y += (ell - 1.0) * std::log(std::abs(std::log(r.rho)));
    points.emplace_back(std::log(r.rho), y);
  }
  if (points.size() < 4) {
    throw InsufficientData("exponent fit needs >= 4 usable rows, got " + std::to_string(points.size()));
  }
  std::sort(points.begin(), points.end());
  std::vector<double> x, y;
  for (const auto& [a, b] : points) {
    x.push_back(a);
    y.push_back(b);
  }
  const LineFit fit = fit_line(x, y);
  FitReport out;
  out.model = model;
  out.source = source;
  out.rows_used = points.size();
  out.p = -fit.slope;
  out.c0 = fit.intercept;
  out.residuals = fit.residuals;
  out.rms = fit.rms;
  const double r_first = fit.residuals.front();
  const double r_last = fit.residuals.back();
  const double r_mid = fit.residuals[fit.residuals.size() / 2];
  double scale = 0.0;
  for (double v : y) scale = std::max(scale, std::abs(v));
  out.model_mismatch = fit.rms > 1e-9 * std::max(1.0, scale) && r_first * r_last > 0.0 &&
                       r_first * r_mid < 0.0;
  return out;
}

namespace {

void write_series_file(const std::string& path, const char* label,
                       const std::vector<std::pair<double, double>>& points) {
  std::ofstream os(path);
  if (!os) throw ParseError("cannot write '" + path + "'");
  os << "# log10(rho) log10(" << label << ")\n";
  for (const auto& [x, y] : points) os << fmt(x) << ' ' << fmt(y) << '\n';
}

}  // namespace

PlotFiles emit_plots(const std::vector<SweepRow>& rows, const std::string& directory,
                     const std::string& prefix) {
  if (rows.empty()) throw InsufficientData("emit_plots: no rows");
  std::filesystem::create_directories(directory);
  std::vector<std::pair<double, double>> pred, escape, censored;
  for (const auto& r : rows) {
    if (!(r.rho > 0.0)) continue;
    const double x = std::log10(r.rho);
    if (r.t_pred > 0.0 && std::isfinite(r.t_pred)) pred.emplace_back(x, std::log10(r.t_pred));
    if (!r.error.empty()) continue;
    if (!r.min_escape_censored && r.min_escape > 0.0) {
      escape.emplace_back(x, std::log10(r.min_escape));
    } else if (r.min_escape_censored && r.t_cap > 0.0 && std::isfinite(r.t_cap)) {
      censored.emplace_back(x, std::log10(r.t_cap));
    }
  }
  PlotFiles out;
  const std::filesystem::path dir(directory);
  struct Series {
    const char* name;
    const char* title;
    const std::vector<std::pair<double, double>>& points;
  };
  const Series series[] = {{"t_pred", "predicted t_stab", pred},
                           {"min_escape", "min escape time", escape},
                           {"censored", "no escape before t_cap", censored}};
  std::string plot_cmd;
  for (const auto& s : series) {
    if (s.points.empty()) continue;
    const std::string file = prefix + "_" + s.name + ".dat";
    write_series_file((dir / file).string(), s.name, s.points);
    out.data_files.push_back((dir / file).string());
    plot_cmd += std::string(plot_cmd.empty() ? "plot " : ", \\\n     ") + "'" + file +
                "' using 1:2 with linespoints title '" + s.title + "'";
  }
  out.script = (dir / (prefix + ".gp")).string();
  std::ofstream gp(out.script);
  if (!gp) throw ParseError("cannot write '" + out.script + "'");
  gp << "set xlabel 'log10(rho)'\nset ylabel 'log10(t)'\nset key left bottom\n";
  gp << plot_cmd << '\n';
  return out;
}

std::vector<std::pair<double, double>> read_plot_data(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open '" + path + "'");
  std::vector<std::pair<double, double>> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto space = line.find(' ');
    if (space == std::string::npos) throw ParseError("plot data: expected two columns");
    out.emplace_back(parse_double(line.substr(0, space)), parse_double(line.substr(space + 1)));
  }
  return out;
}

}  // namespace stablab
