#include "stablab/stabpipe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "stablab/errors.hpp"
#include "stablab/kvfile.hpp"

namespace stablab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double x) { return format_double(x); }

std::vector<int> m_of(const TermKey& key, int d) {
  std::vector<int> m(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) m[std::size_t(i)] = key.m(i);
  return m;
}

void require_unit_rho(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("rho must lie in (0, 1), got " + fmt(rho));
}

// Rethrows the active exception with a stage prefix and the same type.
[[noreturn]] void rethrow_tagged(const std::string& stage) {
  const std::string tag = stage + ": ";
  try {
    throw;
  } catch (const EnumerationBudgetError& e) {
    throw EnumerationBudgetError(tag + e.what());
  } catch (const UnsupportedDimension& e) {
    throw UnsupportedDimension(tag + e.what());
  } catch (const DomainError& e) {
    throw DomainError(tag + e.what());
  } catch (const InsufficientData& e) {
    throw InsufficientData(tag + e.what());
  } catch (const MeanNotRemoved& e) {
    throw MeanNotRemoved(tag + e.what());
  } catch (const ModelViolation& e) {
    throw ModelViolation(tag + e.what());
  } catch (const DominanceViolation& e) {
    throw DominanceViolation(tag + e.what());
  } catch (const ParseError& e) {
    throw ParseError(tag + e.what());
  } catch (const PreconditionError& e) {
    throw PreconditionError(tag + e.what());
  } catch (const RealityViolation& e) {
    throw RealityViolation(tag + e.what());
  } catch (const SmallDivisor& e) {
    throw SmallDivisor(tag + e.what());
  } catch (const Divergence& e) {
    throw Divergence(tag + e.what());
  } catch (const DomainEscape& e) {
    throw DomainEscape(tag + e.what());
  } catch (const StepFailure& e) {
    throw StepFailure(tag + e.what());
  } catch (const IntegrationFault& e) {
    throw IntegrationFault(tag + e.what());
  } catch (const NumericalFault& e) {
    throw NumericalFault(tag + e.what());
  }
}

}  // namespace

void BoundConstants::validate() const {
  const std::pair<const char*, double> all[] = {{"C_A", C_A}, {"C_B", C_B}, {"C0", C0},
                                                {"C1", C1},   {"C2", C2},   {"C3", C3},
                                                {"C4", C4},   {"C5", C5},   {"C6", C6}};
  for (const auto& [name, value] : all) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw DomainError(std::string("constant ") + name + " must be positive and finite");
    }
  }
  if (!(xi > 1.0) || !std::isfinite(xi)) throw DomainError("constant xi must be > 1");
}

namespace {

BoundConstants from_key_values(const KeyValues& kv) {
  static const std::set<std::string> known = {"C_A", "C_B", "C0", "C1", "C2", "C3",
                                              "C4",  "C5",  "C6", "xi"};
  for (const auto& [key, value] : kv) {
    if (!known.count(key)) throw ParseError("unknown constant '" + key + "'");
  }
  BoundConstants c;
  c.C_A = kv_double(kv, "C_A", c.C_A);
  c.C_B = kv_double(kv, "C_B", c.C_B);
  c.C0 = kv_double(kv, "C0", c.C0);
  c.C1 = kv_double(kv, "C1", c.C1);
  c.C2 = kv_double(kv, "C2", c.C2);
  c.C3 = kv_double(kv, "C3", c.C3);
  c.C4 = kv_double(kv, "C4", c.C4);
  c.C5 = kv_double(kv, "C5", c.C5);
  c.C6 = kv_double(kv, "C6", c.C6);
  c.xi = kv_double(kv, "xi", c.xi);
  c.validate();
  return c;
}

}  // namespace

BoundConstants load_bound_constants(const std::string& path) {
  return from_key_values(load_key_values(path));
}

BoundConstants parse_bound_constants(const std::string& text) {
  std::istringstream is(text);
  return from_key_values(parse_key_values(is));
}

std::string to_text(const BoundConstants& c) {
  std::ostringstream os;
  os << "C_A = " << fmt(c.C_A) << "\nC_B = " << fmt(c.C_B) << "\nC0 = " << fmt(c.C0)
     << "\nC1 = " << fmt(c.C1) << "\nC2 = " << fmt(c.C2) << "\nC3 = " << fmt(c.C3)
     << "\nC4 = " << fmt(c.C4) << "\nC5 = " << fmt(c.C5) << "\nC6 = " << fmt(c.C6)
     << "\nxi = " << fmt(c.xi) << "\n";
  return os.str();
}

TaylorSplit taylor_split(const FourierTaylorSeries& f, const HolderClass& hc, double rho) {
  if (!(rho > 0.0)) throw DomainError("taylor split: rho must be > 0");
  const int top = hc.q() - 2;
  TaylorSplit out{FourierTaylorSeries(f.dim()), FourierTaylorSeries(f.dim()), top, 0.0};
  for (const auto& [key, c] : f) {
    const int order = key.m_norm1();
    if (order < 2) {
      throw ModelViolation("taylor split: term of Taylor order " + std::to_string(order) +
                           " present; the perturbation must vanish to second order in I");
    }
    if (order <= top) {
      out.P.add(key, c);
    } else {
      out.Z.add(key, c);
      out.Z_bound += std::abs(c) * kTwoPi * key.k_norm1() * std::pow(rho, order);
    }
  }
  return out;
}

FourierTaylorSeries taylor_coefficient(const FourierTaylorSeries& f, std::span<const int> m) {
  if (static_cast<int>(m.size()) != f.dim()) throw DomainError("Taylor exponent has wrong length");
  FourierTaylorSeries out(f.dim());
  for (const auto& [key, c] : f) {
    bool match = true;
    for (int i = 0; i < f.dim(); ++i) match = match && key.m(i) == m[std::size_t(i)];
    if (!match) continue;
    TermKey angle = key;
    for (int i = 0; i < f.dim(); ++i) angle.m(i) = 0;
    out.add(angle, c);
  }
  return out;
}

std::vector<std::vector<int>> taylor_exponents(const FourierTaylorSeries& f) {
  std::set<std::vector<int>> seen;
  for (const auto& [key, c] : f) seen.insert(m_of(key, f.dim()));
  return {seen.begin(), seen.end()};
}

double coeff_norm_max(const TaylorSplit& split, const HolderClass& hc) {
  double out = 0.0;
  for (const auto& m : taylor_exponents(split.P)) {
    out = std::max(out, holder_norm_majorant(taylor_coefficient(split.P, m), hc));
  }
  return out;
}

SmoothedCoefficients smooth_coefficients(const TaylorSplit& split, double s, double rho) {
  if (!(rho > 0.0)) throw DomainError("smooth_coefficients: rho must be > 0");
  const int d = split.P.dim();
  SmoothedCoefficients out{FourierTaylorSeries(d), smoothing_cutoff(s), 0.0, 0.0};
  for (const auto& m : taylor_exponents(split.P)) {
    const SmoothingResult r = smooth(taylor_coefficient(split.P, m), s);
    for (const auto& [key, c] : r.g_s) {
      TermKey full = key;
      for (int i = 0; i < d; ++i) full.m(i) = m[std::size_t(i)];
      out.P_s.add(full, c);
    }
  }
  const double half = rho / 2.0;
  for (const auto& [key, c] : split.P) {
    const int n = key.k_norm1();
    if (n <= out.cutoff) continue;
    const int order = key.m_norm1();
    out.gap_grad_J += std::abs(c) * order * std::pow(half, order - 1);
    out.gap_grad_phi += std::abs(c) * kTwoPi * n * std::pow(half, order);
  }
  return out;
}

bool ScheduleFlags::all(bool dynamics_only) const {
  return smallness_ok && rho_ok && Ks_ok && s_in_range && (dynamics_only || rho_below_e6);
}

std::string ScheduleFlags::failures(bool dynamics_only) const {
  std::string out;
  auto note = [&out](bool ok, const char* name) {
    if (ok) return;
    if (!out.empty()) out += ", ";
    out += name;
  };
  note(smallness_ok, "smallness_ok");
  note(rho_ok, "rho_ok");
  note(Ks_ok, "Ks_ok");
  note(s_in_range, "s_in_range");
  if (!dynamics_only) note(rho_below_e6, "rho_below_e6");
  return out;
}

double schedule_rho_tilde(double gamma, double tau, const BoundConstants& consts,
                          double coeff_norm_max) {
  if (!(gamma > 0.0)) throw DomainError("schedule: gamma must be > 0");
  if (!(tau >= 0.0)) throw DomainError("schedule: tau must be >= 0");
  if (!(coeff_norm_max > 0.0)) throw DomainError("schedule: coefficient norm must be > 0");
  consts.validate();
  const double a = 1.0 / (tau + 1.0);
  const double base = gamma / (256.0 * consts.xi * consts.C0 * consts.C_B * coeff_norm_max);
  return std::pow(base, 1.0 / (a * (tau + 1.0)));
}

ParameterSchedule parameter_schedule_with_rho_tilde(double rho, double rho_tilde, double gamma,
                                                    double tau, const HolderClass& hc,
                                                    const BoundConstants& consts,
                                                    double coeff_norm_max) {
  require_unit_rho(rho);
  if (!(gamma > 0.0)) throw DomainError("schedule: gamma must be > 0");
  if (!(tau >= 0.0)) throw DomainError("schedule: tau must be >= 0");
  if (!(rho_tilde > 0.0) || !std::isfinite(rho_tilde)) {
    throw DomainError("schedule: rho~ must be positive and finite");
  }
  if (!(coeff_norm_max >= 0.0)) throw DomainError("schedule: coefficient norm must be >= 0");
  consts.validate();

  ParameterSchedule out;
  out.rho = rho;
  out.tau = tau;
  out.ell = hc.ell();
  out.a = 1.0 / (tau + 1.0);
  out.b = 6.0 * (out.a * hc.ell() + 1.0);
  out.rho_tilde = rho_tilde;
  out.coeff_norm_max = coeff_norm_max;

  const double x = std::pow(rho_tilde / rho, out.a);
  if (x > 1e9) throw DomainError("schedule: K = (rho~/rho)^a = " + fmt(x) + " is out of range");
  const double nearest = std::round(x);
  const double k_real = std::abs(x - nearest) <= 1e-9 * x ? nearest : std::floor(x);
  out.K = std::max(1, static_cast<int>(k_real));
  out.s = std::pow(rho / rho_tilde, out.a) * std::abs(out.b * std::log(rho));
  out.alpha = gamma / std::pow(double(out.K), tau);
  out.rho_0 = out.s;

  out.smallness_lhs = consts.C0 * consts.C_B * coeff_norm_max * rho * rho;
  out.smallness_rhs = out.alpha * rho / (256.0 * consts.xi * out.K);
  // equality is reached whenever (rho~/rho)^a is an integer
  out.flags.smallness_ok = out.smallness_lhs <= out.smallness_rhs * (1.0 + 1e-12);
  const double rho_bound =
      out.M > 0.0 ? std::min(out.rho_0, out.alpha / (2.0 * consts.xi * out.M * out.K)) : out.rho_0;
  out.flags.rho_ok = rho <= rho_bound;
  out.flags.Ks_ok = out.K * out.s >= 6.0;
  out.flags.s_in_range = out.s > 0.0 && out.s <= 1.0;
  out.flags.rho_below_e6 = rho < std::exp(-6.0);
  return out;
}

ParameterSchedule parameter_schedule(double rho, double gamma, double tau, const HolderClass& hc,
                                     const BoundConstants& consts, double coeff_norm_max) {
  return parameter_schedule_with_rho_tilde(
      rho, schedule_rho_tilde(gamma, tau, consts, coeff_norm_max), gamma, tau, hc, consts,
      coeff_norm_max);
}

const char* to_string(RemainderKind kind) {
  switch (kind) {
    case RemainderKind::analytic:
      return "analytic";
    case RemainderKind::smoothing_gap:
      return "smoothing_gap";
    case RemainderKind::taylor:
      return "taylor";
  }
  return "unknown";
}

bool dominance_condition(double ell, double tau) { return ell > 3.0 + 2.0 / tau; }

RemainderBounds remainder_bounds(const ParameterSchedule& schedule, const BoundConstants& consts,
                                 const HolderClass& hc, double rho) {
  require_unit_rho(rho);
  const double tau = schedule.tau;
  if (!dominance_condition(hc.ell(), tau)) {
    throw DominanceViolation("remainder bounds: dominance requires ell > 3 + 2/tau = " +
                             fmt(3.0 + 2.0 / tau) + ", got ell = " + fmt(hc.ell()));
  }
  if (!schedule.flags.all(true)) {
    throw PreconditionError("remainder bounds: schedule flags failed: " +
                            schedule.flags.failures(true));
  }
  consts.validate();
  const double a = schedule.a;
  const double b = schedule.b;
  const double ell = hc.ell();
  const double log_b = std::abs(b * std::log(rho));

  RemainderBounds out;
  out.analytic = consts.C1 * std::pow(rho, 2.0 + b / 6.0 - a) / log_b;
  out.smoothing_gap =
      consts.C4 * std::pow(rho, 2.0 + a * (ell - 1.0)) * std::pow(log_b, ell - 1.0);
  out.taylor = consts.C5 * std::pow(rho, ell - 1.0);
  out.dominant = RemainderKind::smoothing_gap;
  if (out.analytic > out.smoothing_gap && out.analytic >= out.taylor) {
    out.dominant = RemainderKind::analytic;
  } else if (out.taylor > out.smoothing_gap) {
    out.dominant = RemainderKind::taylor;
  }
  return out;
}

double stability_exponent(double ell, double tau) { return 1.0 + (ell - 1.0) / (tau + 1.0); }

StabilityTimes predicted_stability_time(double rho, const HolderClass& hc, double tau,
                                        const BoundConstants& consts) {
  require_unit_rho(rho);
  if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
  consts.validate();
  const double ell = hc.ell();
  const double a = 1.0 / (tau + 1.0);
  const double b = 6.0 * (a * ell + 1.0);
  const double log_rho = std::abs(std::log(rho));
  StabilityTimes out;
  out.exponent = stability_exponent(ell, tau);
  out.t_star = 1.0 / (6.0 * consts.C6 * std::pow(rho, 1.0 + a * (ell - 1.0)) *
                      std::pow(b * log_rho, ell - 1.0));
  out.t_stab = consts.C1 / (std::pow(rho, out.exponent) * std::pow(log_rho, ell - 1.0));
  return out;
}

double diffusion_time_reference(double rho, const HolderClass& hc, double tau, double epsilon,
                                double T0) {
  require_unit_rho(rho);
  if (!(epsilon >= 0.0)) throw DomainError("diffusion reference: epsilon must be >= 0");
  if (!(T0 > 0.0)) throw DomainError("diffusion reference: T0 must be > 0");
  return T0 / std::pow(rho, stability_exponent(hc.ell(), tau) + epsilon);
}

namespace {

// Majorants of d_theta (Pi_J Psi) and d_theta (Pi_theta Psi) - 1 over the
// generators, from second derivatives of each chi at the given widths.
std::pair<double, double> transform_derivative_bounds(
    const std::vector<FourierTaylorSeries>& generators, double sigma, double rho) {
  double dJ = 0.0;
  double dphi = 0.0;
  for (const auto& chi : generators) {
    double gen_J = 0.0;
    double gen_phi = 0.0;
    for (int i = 0; i < chi.dim(); ++i) {
      const FourierTaylorSeries dti = partial_theta(chi, i);
      for (int j = 0; j < chi.dim(); ++j) {
        gen_J = std::max(gen_J, weighted_norm(partial_theta(dti, j), sigma, rho));
        gen_phi = std::max(gen_phi, weighted_norm(partial_I(dti, j), sigma, rho));
      }
    }
    dJ += gen_J;
    dphi += gen_phi;
  }
  return {dJ, dphi};
}

}  // namespace

PipelineReport run_pipeline(const FourierTaylorSeries& H, const Frequency& omega, double gamma,
                            double tau, const HolderClass& hc, double rho,
                            const BoundConstants& consts, const PipelineOptions& options) {
  if (H.dim() != omega.dim()) throw DomainError("pipeline: frequency and Hamiltonian dimensions differ");
  if (H.dim() != hc.dim()) throw DomainError("pipeline: Hoelder class dimension differs");
  require_unit_rho(rho);
  consts.validate();

  PipelineReport report;
  const FourierTaylorSeries f = H - FourierTaylorSeries::linear(omega.values());

  try {
    report.split = taylor_split(f, hc, rho);
    report.coeff_norm_max = coeff_norm_max(report.split, hc);
  } catch (const Error&) {
    rethrow_tagged("taylor_split");
  }

  if (f.empty()) {
    report.ok = true;
    report.integrable = true;
    report.schedule.rho = rho;
    report.schedule.tau = tau;
    report.schedule.ell = hc.ell();
    report.schedule.a = 1.0 / (tau + 1.0);
    report.schedule.b = 6.0 * (report.schedule.a * hc.ell() + 1.0);
    report.schedule.rho_tilde = kInf;
    report.schedule.flags = {true, true, true, true, true};
    report.times = {kInf, kInf, stability_exponent(hc.ell(), tau)};
    return report;
  }
  if (!(report.coeff_norm_max > 0.0)) {
    report.failed_stage = "schedule";
    report.diagnostics = "P is empty: every term has Taylor order above floor(ell) - 2";
    return report;
  }

  try {
    report.schedule =
        options.rho_tilde
            ? parameter_schedule_with_rho_tilde(rho, *options.rho_tilde, gamma, tau, hc, consts,
                                                report.coeff_norm_max)
            : parameter_schedule(rho, gamma, tau, hc, consts, report.coeff_norm_max);
  } catch (const Error&) {
    rethrow_tagged("schedule");
  }
  if (!report.schedule.flags.all(options.dynamics_only)) {
    report.failed_stage = "schedule";
    report.diagnostics = "failed flags: " + report.schedule.flags.failures(options.dynamics_only);
    return report;
  }

  const double s = report.schedule.s;
  try {
    report.smoothed = smooth_coefficients(report.split, s, rho);
  } catch (const Error&) {
    rethrow_tagged("smooth_coefficients");
  }

  try {
    NormalFormParams params;
    params.alpha = report.schedule.alpha;
    params.K = report.schedule.K;
    params.widths = AnalyticityWidths(s, rho);
    params.xi = consts.xi;
    params.M = 0.0;
    report.nf_params = params;
    const FourierTaylorSeries h_s = FourierTaylorSeries::linear(omega.values()) + report.smoothed->P_s;
    report.normal_form = resonant_normal_form(h_s, omega, params, options.normal_form);
  } catch (const Error&) {
    rethrow_tagged("normal_form");
  }

  try {
    report.bounds = remainder_bounds(report.schedule, consts, hc, rho);
    report.times = predicted_stability_time(rho, hc, tau, consts);
  } catch (const Error&) {
    rethrow_tagged("remainder_bounds");
  }
  report.drift_rate_bound = report.bounds.total();

  const NormalFormResult& nf = *report.normal_form;
  double analytic_rate = 0.0;
  for (int i = 0; i < H.dim(); ++i) {
    analytic_rate =
        std::max(analytic_rate, weighted_norm(partial_theta(nf.f_star, i), s / 12.0, rho / 2.0));
  }
  const auto [dJ, dphi] = transform_derivative_bounds(nf.generators, s, rho);
  report.measured_drift_rate = analytic_rate + report.smoothed->gap_grad_J * dJ +
                               report.smoothed->gap_grad_phi * (dphi + 1.0) +
                               report.split.Z_bound;

  report.ok = nf.certified;
  if (!nf.certified) {
    report.failed_stage = "normal_form";
    report.diagnostics = "normal form not certified (contraction " + fmt(nf.contraction) +
                         ", target " + fmt(nf.contraction_target) + ")";
  }
  return report;
}

std::string PipelineReport::to_text() const {
  std::ostringstream os;
  auto flag = [](bool b) { return b ? "true" : "false"; };
  os << "ok=" << flag(ok) << "\n";
  os << "integrable=" << flag(integrable) << "\n";
  if (!failed_stage.empty()) os << "failed_stage=" << failed_stage << "\n";
  if (!diagnostics.empty()) os << "diagnostics=" << diagnostics << "\n";
  os << "Z_bound=" << fmt(split.Z_bound) << "\n";
  os << "coeff_norm_max=" << fmt(coeff_norm_max) << "\n";
  const ParameterSchedule& sc = schedule;
  os << "rho=" << fmt(sc.rho) << "\ntau=" << fmt(sc.tau) << "\nell=" << fmt(sc.ell)
     << "\na=" << fmt(sc.a) << "\nb=" << fmt(sc.b) << "\nrho_tilde=" << fmt(sc.rho_tilde)
     << "\nK=" << sc.K << "\ns=" << fmt(sc.s) << "\nalpha=" << fmt(sc.alpha)
     << "\nrho_0=" << fmt(sc.rho_0) << "\nsmallness_lhs=" << fmt(sc.smallness_lhs)
     << "\nsmallness_rhs=" << fmt(sc.smallness_rhs) << "\n";
  os << "smallness_ok=" << flag(sc.flags.smallness_ok) << "\nrho_ok=" << flag(sc.flags.rho_ok)
     << "\nKs_ok=" << flag(sc.flags.Ks_ok) << "\ns_in_range=" << flag(sc.flags.s_in_range)
     << "\nrho_below_e6=" << flag(sc.flags.rho_below_e6) << "\n";
  if (smoothed) {
    os << "cutoff=" << smoothed->cutoff << "\ngap_grad_J=" << fmt(smoothed->gap_grad_J)
       << "\ngap_grad_phi=" << fmt(smoothed->gap_grad_phi) << "\n";
  }
  if (normal_form && nf_params) {
    std::istringstream cert(normal_form->certificate(*nf_params));
    std::string line;
    while (std::getline(cert, line)) {
      if (!line.empty()) os << "nf." << line << "\n";
    }
  }
  os << "bound_analytic=" << fmt(bounds.analytic) << "\nbound_smoothing_gap="
     << fmt(bounds.smoothing_gap) << "\nbound_taylor=" << fmt(bounds.taylor)
     << "\ndominant=" << to_string(bounds.dominant) << "\n";
  os << "drift_rate_bound=" << fmt(drift_rate_bound)
     << "\nmeasured_drift_rate=" << fmt(measured_drift_rate) << "\n";
  os << "t_star=" << fmt(times.t_star) << "\nt_stab=" << fmt(times.t_stab)
     << "\nexponent=" << fmt(times.exponent) << "\n";
  return os.str();
}

BoundConstants calibrate_constants(const PipelineReport& report, const HolderClass& hc,
                                   double tau, const BoundConstants& base) {
  BoundConstants out = base;
  if (!report.ok || report.integrable || !report.normal_form) return out;
  const double rho = report.schedule.rho;
  const double a = 1.0 / (tau + 1.0);
  const double b = 6.0 * (a * hc.ell() + 1.0);
  const double ell = hc.ell();
  const double log_b = std::abs(b * std::log(rho));
  const double s = report.schedule.s;

  const NormalFormResult& nf = *report.normal_form;
  double analytic = 0.0;
  for (int i = 0; i < nf.f_star.dim(); ++i) {
    analytic = std::max(analytic, weighted_norm(partial_theta(nf.f_star, i), s / 12.0, rho / 2.0));
  }
  const double gap = report.measured_drift_rate - analytic - report.split.Z_bound;
  auto ratio = [](double value, double shape, double fallback) {
    return value > 0.0 && shape > 0.0 && std::isfinite(value / shape) ? value / shape : fallback;
  };
  out.C1 = ratio(analytic, std::pow(rho, 2.0 + b / 6.0 - a) / log_b, base.C1);
  out.C4 = ratio(gap, std::pow(rho, 2.0 + a * (ell - 1.0)) * std::pow(log_b, ell - 1.0), base.C4);
  out.C5 = ratio(report.split.Z_bound, std::pow(rho, ell - 1.0), base.C5);
  out.C6 = ratio(report.measured_drift_rate,
                 std::pow(rho, 2.0 + a * (ell - 1.0)) * std::pow(log_b, ell - 1.0), base.C6);
  return out;
}

}  // namespace stablab
