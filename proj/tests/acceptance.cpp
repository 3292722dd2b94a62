// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "stablab/dynamics.hpp"
#include "stablab/errors.hpp"
#include "stablab/experiment.hpp"
#include "stablab/freqlib.hpp"
#include "stablab/ftseries.hpp"
#include "stablab/normalform.hpp"
#include "stablab/smoothing.hpp"
#include "stablab/stabpipe.hpp"

using namespace stablab;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPhi = std::numbers::phi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double abs_mass(const FourierTaylorSeries& f) {
  double sum = 0.0;
  for (const auto& [key, c] : f) sum += std::abs(c);
  return sum;
}

// sum |g_k| e^{s |k|_1} over the modes of g with |k|_1 <= floor(1/s).
double retained_fourier_norm(const FourierTaylorSeries& g, double s) {
  const int cutoff = static_cast<int>(std::floor(1.0 / s));
  double sum = 0.0;
  for (const auto& [key, c] : g) {
    if (key.k_norm1() <= cutoff) sum += std::abs(c) * std::exp(s * key.k_norm1());
  }
  return sum;
}

double series_fourier_norm(const FourierTaylorSeries& g, double s) {
  double sum = 0.0;
  for (const auto& [key, c] : g) sum += std::abs(c) * std::exp(s * key.k_norm1());
  return sum;
}

FourierTaylorSeries harmonic(std::vector<int> k, std::vector<int> m, double amplitude,
                             double phase = 0.0) {
  FourierTaylorSeries g(static_cast<int>(k.size()));
  g.add_real_harmonic(k, m, amplitude, phase);
  return g;
}

double sup_gap(const PhasePoint& a, const PhasePoint& b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.theta.size(); ++i) {
    r = std::max({r, std::abs(a.theta[i] - b.theta[i]), std::abs(a.I[i] - b.I[i])});
  }
  return r;
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

Outcome smoothing_scaling() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s_list = dyadic_s_list(3, 10);
  bool ok = true;
  std::string detail;
  for (double ell : {5.5, 6.5}) {
    const HolderClass hc(ell, 2);
    const auto g = lacunary_series(2, ell, 16, 1.0, 11);
    for (int p : {0, 1}) {
      const auto r = verify_smoothing_estimate(g, hc, p, s_list);
      const bool good = !r.saturated && std::abs(r.slope - (ell - p)) <= 0.3;
      ok = ok && good;
      detail += fmt("ell=%.1f p=%d slope=%.4f; ", ell, p, r.slope);
    }
  }
  const double t = seconds_since(t0);
  detail += fmt("%.2fs", t);
  return {ok && t < 60.0, detail};
}

Outcome fourier_norm() {
  double worst_equality = 0.0;
  double worst_growth = 0.0;
  int calls = 0;
  std::vector<FourierTaylorSeries> family;
  for (double ell : {5.5, 6.5}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) family.push_back(lacunary_series(2, ell, 16, 1.0, seed));
  }
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto& g = family[i];
    const HolderClass hc(i < 3 ? 5.5 : 6.5, 2);
    const double majorant = holder_norm_majorant(g, hc);
    for (int j = 0; j <= 12; ++j) {
      const double s = std::exp2(-j);
      const auto r = smooth(g, s);
      ++calls;
      const double direct = series_fourier_norm(r.g_s, s);
      const double retained = retained_fourier_norm(g, s);
      worst_equality = std::max({worst_equality, std::abs(direct - retained) / retained,
                                 std::abs(r.fourier_norm_at_s - retained) / retained});
    }
    const double ratio_fine = smooth(g, std::exp2(-10)).fourier_norm_at_s / majorant;
    const double ratio_coarse = smooth(g, std::exp2(-4)).fourier_norm_at_s / majorant;
    calls += 2;
    worst_growth = std::max(worst_growth, ratio_fine / ratio_coarse);
  }
  const bool ok = worst_equality <= 1e-12 && worst_growth <= 2.0;
  return {ok, fmt("%d smooth() calls, max equality gap %.2e, max ratio(2^-10)/ratio(2^-4) %.4f",
                  calls, worst_equality, worst_growth)};
}

struct Instance {
  Frequency omega{{1.0, kPhi}};
  NormalFormParams params;
  FourierTaylorSeries H{2};
  Instance() {
    params.K = 5;
    params.widths = AnalyticityWidths(1.2, 0.5);
    params.xi = 2.0;
    params.alpha = min_small_divisor(omega, params.K);
    const std::vector<double> w{1.0, kPhi};
    H = FourierTaylorSeries::linear(w) + harmonic({1, -1}, {1, 1}, 1e-6);
  }
};

Outcome normal_form_contraction() {
  const auto t0 = std::chrono::steady_clock::now();
  const Instance inst;
  const auto r = resonant_normal_form(inst.H, inst.omega, inst.params);
  const double f_norm = weighted_norm(inst.H - FourierTaylorSeries::linear(inst.omega.values()), 1.2, 0.5);
  const double f_star_norm = weighted_norm(r.f_star, 1.2 / 6, 0.25);
  const double target = std::exp(-5 * 1.2 / 6);
  const double action_ratio = r.action_shift_bound / 0.5;
  const double angle_ratio = r.angle_shift_bound / 1.2;
  const double t = seconds_since(t0);
  const bool ok = r.certified && r.contraction <= target && f_star_norm <= target * f_norm &&
                  action_ratio <= 1.0 / 64 && angle_ratio <= 1.0 / 48 && t < 60.0;
  return {ok, fmt("contraction=%.3e (target %.4f), action ratio %.3e <= %.5f, angle ratio %.3e <= "
                  "%.5f, certified=%d, %.2fs",
                  r.contraction, target, action_ratio, 1.0 / 64, angle_ratio, 1.0 / 48,
                  int(r.certified), t)};
}

Outcome homological_and_symplectic() {
  std::mt19937_64 rng(17);
  const Frequency omega({1.0, kPhi});
  std::uniform_int_distribution<int> kd(-8, 8), md(0, 3);
  std::uniform_real_distribution<double> u(-1.0, 1.0), unit(0.0, 1.0);

  double worst_residual = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    FourierTaylorSeries f(2);
    for (int t = 0; t < 30; ++t) {
      std::vector<int> k{kd(rng), kd(rng)};
      if (k[0] == 0 && k[1] == 0) k[0] = 1;
      f.add_real_harmonic(k, std::vector<int>{md(rng), md(rng)}, u(rng), kPi * u(rng));
    }
    const auto chi = solve_homological(f, omega);
    worst_residual = std::max(worst_residual, abs_mass(homological_residual(chi, f, omega)) / abs_mass(f));
  }

  std::vector<FourierTaylorSeries> generators;
  for (int g = 0; g < 2; ++g) {
    FourierTaylorSeries chi(2);
    for (int t = 0; t < 6; ++t) {
      std::vector<int> k{kd(rng) % 4, kd(rng) % 4};
      if (k[0] == 0 && k[1] == 0) k[1] = 1;
      chi.add_real_harmonic(k, std::vector<int>{md(rng) % 3, md(rng) % 3}, 0.02 * u(rng), kPi * u(rng));
    }
    generators.push_back(chi);
  }
  const Instance inst;
  const auto nf = resonant_normal_form(inst.H, inst.omega, inst.params);

  double worst_defect = 0.0, worst_round_trip = 0.0;
  for (const std::vector<FourierTaylorSeries>* gens : {&std::as_const(generators), &nf.generators}) {
    for (int n = 0; n < 10; ++n) {
      const PhasePoint x{{unit(rng), unit(rng)}, {0.5 * u(rng), 0.5 * u(rng)}};
      const auto J = transform_jacobian(*gens, x, Direction::forward);
      worst_defect = std::max(worst_defect, symplectic_defect(J, 2));
      const PhasePoint y = apply_transform(*gens, x, Direction::forward);
      const PhasePoint back = apply_transform(*gens, y, Direction::inverse);
      worst_round_trip = std::max(worst_round_trip, sup_gap(back, x));
    }
  }
  const bool ok = worst_residual <= 1e-13 && worst_defect <= 1e-6 && worst_round_trip <= 1e-8;
  return {ok, fmt("residual/mass %.2e, symplectic defect %.2e, round trip %.2e", worst_residual,
                  worst_defect, worst_round_trip)};
}

Outcome schedule_identities() {
  bool ok = true;
  std::string detail;

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> lr(-12.0, -3.0);
  double worst_ks = 0.0;
  for (double tau : {0.5, 1.0, 2.0}) {
    for (double ell : {5.5, 6.5, 9.0}) {
      const HolderClass hc(ell, 2);
      const double a = 1.0 / (tau + 1.0);
      for (int trial = 0; trial < 50; ++trial) {
        const double rho = std::pow(10.0, lr(rng));
        const auto sc = parameter_schedule_with_rho_tilde(rho, 1.0, 1.0, tau, hc, {}, 1e-3);
        ok = ok && sc.a == a && sc.b == 6.0 * (a * ell + 1.0);
        const double target = sc.b * std::abs(std::log(rho));
        const double dev = std::abs(sc.K * sc.s - target) / target;
        worst_ks = std::max(worst_ks, dev * sc.K);
        ok = ok && dev <= 1.0 / sc.K;
      }
      ok = ok && stability_exponent(ell, tau) == 1.0 + (ell - 1.0) / (tau + 1.0);
    }
  }
  detail += fmt("max K*|Ks/(b|log rho|)-1| = %.3f; ", worst_ks);

  // dominance across 1e-12 ... 1e-6
  const HolderClass hc(6.5, 2);
  int points = 0, dominated = 0;
  for (int i = 0; i <= 24; ++i) {
    const double rho = std::pow(10.0, -12.0 + 0.25 * i);
    const auto sc = parameter_schedule_with_rho_tilde(rho, 1.0, 1.0, 1.0, hc, {}, 1e-3);
    ++points;
    if (!sc.flags.all()) continue;
    const auto b = remainder_bounds(sc, {}, hc, rho);
    if (b.dominant == RemainderKind::smoothing_gap && b.analytic <= b.smoothing_gap &&
        b.taylor <= b.smoothing_gap) {
      ++dominated;
    }
  }
  ok = ok && dominated == points;
  detail += fmt("smoothing gap dominant at %d/%d rho in [1e-12, 1e-6]; ", dominated, points);

  // the tau = 1 gate is ell > 5
  bool gate = !dominance_condition(5.0, 1.0) && dominance_condition(std::nextafter(5.0, 6.0), 1.0);
  for (int i = 0; i <= 60; ++i) {
    const double ell = 3.5 + 0.05 * i;
    gate = gate && dominance_condition(ell, 1.0) == (ell > 5.0);
  }
  const HolderClass at5(5.0, 1), above5(5.01, 1);
  const auto sc5 = parameter_schedule_with_rho_tilde(1e-8, 1.0, 1.0, 1.0, at5, {}, 1e-3);
  const auto sc6 = parameter_schedule_with_rho_tilde(1e-8, 1.0, 1.0, 1.0, above5, {}, 1e-3);
  try {
    remainder_bounds(sc5, {}, at5, 1e-8);
    gate = false;
  } catch (const DominanceViolation&) {
  }
  try {
    remainder_bounds(sc6, {}, above5, 1e-8);
  } catch (const Error&) {
    gate = false;
  }
  ok = ok && gate;
  detail += std::string("gate ell > 5 ") + (gate ? "exact" : "wrong");
  return {ok, detail};
}

struct SweepOutcome {
  Outcome outcome;
  std::vector<SweepRow> rows;
};

SweepOutcome no_escape() {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig config;  // d = 2, ell = 6.5, tau = 1, rho 0.1 / 0.05 / 0.025, 50 samples
  auto rows = sweep(config);
  const double t = seconds_since(t0);
  bool ok = rows.size() == 3;
  std::string detail;
  for (const auto& r : rows) {
    const double dt = std::min(0.01, 0.01 / kPhi);
    const StabilityTimes times = predicted_stability_time(r.rho, HolderClass(6.5, 2), 1.0, {});
    const double expected_cap = std::min(times.t_stab, 1e6 * dt);
    const bool row_ok = r.error.empty() && r.schedule_ok && r.min_escape_censored &&
                        r.censored_fraction == 1.0 && r.max_drift < r.rho / 2 &&
                        r.max_energy_drift <= 1e-8 &&
                        std::abs(r.t_cap - expected_cap) <= 1e-12 * expected_cap;
    ok = ok && row_ok;
    detail += fmt("rho=%.3f K=%d t_cap=%.1f drift=%.2e energy=%.2e%s; ", r.rho, r.K, r.t_cap,
                  r.max_drift, r.max_energy_drift, row_ok ? "" : " (bad)");
  }
  ok = ok && t < 1800.0;
  detail += fmt("%.1fs", t);
  return {{ok, detail}, std::move(rows)};
}

Outcome ballistic(const std::vector<SweepRow>& sweep_rows) {
  const double rho = 0.05;
  auto sine = [](double w1) {
    const std::vector<double> w{w1, kPhi};
    return FourierTaylorSeries::linear(w) + harmonic({1, 0}, {2, 0}, 1.0, -kPi / 2);
  };
  const double bound = ballistic_lower_bound(sine(1.0), rho, rho / 2);
  const double exact = 1.0 / (4 * kPi * rho);
  bool ok = std::abs(bound - exact) <= 1e-15 * exact;

  EscapeOptions opts;
  opts.check_ballistic = false;
  std::size_t escapes = 0, violations = 0;
  auto audit = [&](const EscapeRecord& rec) {
    for (std::size_t i = 0; i < rec.escape_times.size(); ++i) {
      if (rec.censored[i]) continue;
      ++escapes;
      if (rec.escape_times[i] < rec.ballistic_bound) ++violations;
    }
  };
  audit(escape_time(sine(1.0), rho, rho / 2, 20.0, 50, 1, opts));
  audit(escape_time(sine(0.0), rho, rho / 2, 20.0, 50, 2, opts));
  FourierTaylorSeries mixed = sine(1.0);
  mixed += harmonic({1, 1}, {1, 1}, 2.0, 0.3);
  mixed += harmonic({0, 1}, {0, 2}, 1.5, 1.1);
  audit(escape_time(mixed, rho, rho / 2, 20.0, 50, 3, opts));
  for (const auto& r : sweep_rows) {
    if (r.min_escape_censored) continue;
    ++escapes;
    if (r.min_escape < r.ballistic_bound) ++violations;
  }
  ok = ok && violations == 0 && escapes > 0;
  return {ok, fmt("bound at rho=0.05: %.15f vs 1/(4 pi rho) = %.15f; %zu escapes, %zu below bound",
                  bound, exact, escapes, violations)};
}

Outcome fit_correctness() {
  const double ell = 6.5, tau = 1.0;
  const HolderClass hc(ell, 2);
  std::vector<SweepRow> formula, synthetic;
  for (int i = 0; i <= 12; ++i) {
    const double rho = std::pow(10.0, -2.0 - 0.5 * i);
    SweepRow r;
    r.rho = rho;
    r.t_pred = predicted_stability_time(rho, hc, tau, {}).t_stab;
    formula.push_back(r);
    r.t_pred = 3.7 * std::pow(rho, -2.25);
    synthetic.push_back(r);
  }
  const double p_expected = 1.0 + (ell - 1.0) / (tau + 1.0);
  const auto a = fit_exponent(formula, FitModel::power_with_log, ell);
  const auto b = fit_exponent(synthetic, FitModel::pure_power, ell);
  const bool ok = std::abs(a.p - p_expected) <= 1e-6 && std::abs(b.p - 2.25) <= 1e-10;
  return {ok, fmt("power-with-log p=%.12f (expected %.4f), pure power p=%.14f (expected 2.25)", a.p,
                  p_expected, b.p)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* name, const std::function<Outcome()>& run) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };

  report("smoothing-scaling", smoothing_scaling);
  report("fourier-norm", fourier_norm);
  report("normal-form-contraction", normal_form_contraction);
  report("homological-symplectic", homological_and_symplectic);
  report("schedule-identities", schedule_identities);
  std::vector<SweepRow> rows;
  report("no-escape", [&] {
    auto s = no_escape();
    rows = std::move(s.rows);
    return s.outcome;
  });
  report("ballistic", [&] { return ballistic(rows); });
  report("fit-correctness", fit_correctness);
  return failures == 0 ? 0 : 1;
}
