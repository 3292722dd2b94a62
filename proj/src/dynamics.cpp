#include "stablab/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "stablab/errors.hpp"
#include "stablab/random.hpp"
#include "stablab/vector_field.hpp"

namespace stablab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double reduce_angle(double x) {
  const double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

// Triple-jump weights for a 4th-order composition of a symmetric method.
const double kJumpOuter = 1.0 / (2.0 - std::cbrt(2.0));
const double kJumpInner = -std::cbrt(2.0) / (2.0 - std::cbrt(2.0));

class Stepper {
 public:
  Stepper(const HamiltonianField& field, const IntegrateOptions& opts)
      : field_(field), opts_(opts) {}

  // Advances x by h; returns false on inner non-convergence.
  bool step(std::span<double> x, double h) const {
    if (opts_.method == StepMethod::midpoint) return sub(x, h);
    return sub(x, kJumpOuter * h) && sub(x, kJumpInner * h) && sub(x, kJumpOuter * h);
  }

 private:
  bool sub(std::span<double> x, double h) const {
    return implicit_midpoint_step(field_, x, h, opts_.inner_tol, opts_.max_sweeps) >= 0;
  }

  const HamiltonianField& field_;
  const IntegrateOptions& opts_;
};

std::string state_text(double t, std::span<const double> x) {
  std::ostringstream os;
  os << "t = " << t << ", state = (";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

// ceil(span / dt), ignoring rounding noise in the quotient.
std::size_t step_count(double span, double dt) {
  const double x = span / dt;
  return static_cast<std::size_t>(std::ceil(x - 1e-12 * std::max(1.0, x)));
}

void check_start(const FourierTaylorSeries& H, const PhasePoint& start) {
  const auto d = std::size_t(H.dim());
  if (start.theta.size() != d || start.I.size() != d) {
    throw DomainError("start point dimension does not match the Hamiltonian");
  }
}

}  // namespace

const char* to_string(StepMethod method) {
  return method == StepMethod::midpoint ? "implicit_midpoint" : "triple_jump_midpoint";
}

double default_dt(const FourierTaylorSeries& H) {
  double sup = 0.0;
  for (const auto& [key, c] : H) {
    if (key.is_average() && key.m_norm1() == 1) sup = std::max(sup, std::abs(c));
  }
  return sup > 0.0 ? std::min(0.01, 0.01 / sup) : 0.01;
}

Trajectory integrate(const FourierTaylorSeries& H, const PhasePoint& start, double t_end,
                     double dt, const IntegrateOptions& options) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("integrate: dt must be > 0");
  if (!std::isfinite(t_end)) throw DomainError("integrate: t_end must be finite");
  if (options.max_samples < 2) throw DomainError("integrate: max_samples must be >= 2");
  check_start(H, start);
  const HamiltonianField field(H);
  const Stepper stepper(field, options);
  const auto d = std::size_t(H.dim());

  const auto n_steps = step_count(std::abs(t_end), dt);
  const double h = n_steps > 0 ? t_end / double(n_steps) : 0.0;
  const std::size_t stride =
      std::max<std::size_t>(1, (n_steps + options.max_samples - 2) / (options.max_samples - 1));

  std::vector<double> x(2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    x[i] = reduce_angle(start.theta[i]);
    x[d + i] = start.I[i];
  }
  const std::span<const double> xs(x);
  const double e0 = field.value(xs.first(d), xs.subspan(d, d));
  const double e_scale = std::max(std::abs(e0), 1.0);

  Trajectory traj;
  traj.dt = h;
  traj.method = options.method;
  auto record = [&](double t, double energy) {
    traj.samples.push_back({t, std::vector<double>(x.begin(), x.begin() + std::ptrdiff_t(d)),
                            std::vector<double>(x.begin() + std::ptrdiff_t(d), x.end()), energy});
  };
  record(0.0, e0);

  for (std::size_t n = 1; n <= n_steps; ++n) {
    if (!stepper.step(x, h)) {
      throw StepFailure("implicit midpoint did not converge at " +
                        state_text(double(n - 1) * h, x));
    }
    for (std::size_t i = 0; i < d; ++i) x[i] = reduce_angle(x[i]);
    ++traj.steps;
    const double t = double(n) * h;
    const double energy = field.value(xs.first(d), xs.subspan(d, d));
    traj.max_energy_drift = std::max(traj.max_energy_drift, std::abs(energy - e0) / e_scale);
    double drift = 0.0;
    double size = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      drift = std::max(drift, std::abs(x[d + i] - start.I[i]));
      size = std::max(size, std::abs(x[d + i]));
    }
    traj.max_action_drift = std::max(traj.max_action_drift, drift);
    if (size > options.R) {
      traj.domain_exit = true;
      record(t, energy);
      break;
    }
    if (n % stride == 0 || n == n_steps) record(t, energy);
  }
  traj.energy_ok = traj.max_energy_drift <= options.energy_tol;
  return traj;
}

double action_drift(const Trajectory& traj) {
  if (traj.samples.empty()) throw DomainError("action_drift: empty trajectory");
  const auto& I0 = traj.samples.front().I;
  double out = traj.max_action_drift;
  for (const auto& sample : traj.samples) {
    for (std::size_t i = 0; i < I0.size(); ++i) out = std::max(out, std::abs(sample.I[i] - I0[i]));
  }
  return out;
}

double angle_gradient_majorant(const FourierTaylorSeries& H, double r) {
  if (!(r >= 0.0)) throw DomainError("tube radius must be >= 0");
  double sum = 0.0;
  for (const auto& [key, c] : H) {
    const int n = key.k_norm1();
    if (n == 0) continue;
    sum += std::abs(c) * kTwoPi * n * std::pow(r, key.m_norm1());
  }
  return sum;
}

double ballistic_lower_bound(const FourierTaylorSeries& H, double rho, double threshold,
                             double margin) {
  if (!(rho > 0.0) || !(threshold > 0.0) || !(margin >= 0.0)) {
    throw DomainError("ballistic bound: rho, threshold > 0 and margin >= 0 required");
  }
  const double sup = angle_gradient_majorant(H, rho * (1.0 + margin));
  return sup > 0.0 ? threshold / sup : std::numeric_limits<double>::infinity();
}

int default_workers() {
  if (const char* env = std::getenv("STABLAB_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::size_t EscapeRecord::escaped() const {
  return static_cast<std::size_t>(std::count(censored.begin(), censored.end(), false));
}

double EscapeRecord::censored_fraction() const {
  return n_samples ? double(n_samples - escaped()) / double(n_samples) : 0.0;
}

namespace {

struct SampleResult {
  double escape_time = 0.0;
  bool censored = true;
  double max_drift = 0.0;
  double max_energy_drift = 0.0;
  bool domain_exit = false;
};

SampleResult run_sample(const HamiltonianField& field, const Stepper& stepper, double rho,
                        double threshold, double t_cap, double dt, std::uint64_t seed,
                        std::size_t sample, const IntegrateOptions& opts) {
  const auto d = std::size_t(field.dim());
  std::vector<double> x(2 * d), I0(d);
  for (std::size_t i = 0; i < d; ++i) {
    x[i] = counter_uniform(seed, sample, 0, i);
    I0[i] = rho * (2.0 * counter_uniform(seed, sample, 1, i) - 1.0);
    x[d + i] = I0[i];
  }
  const std::span<const double> xs(x);
  const double e0 = field.value(xs.first(d), xs.subspan(d, d));
  const double e_scale = std::max(std::abs(e0), 1.0);

  SampleResult out;
  out.escape_time = t_cap;
  const auto n_steps = step_count(t_cap, dt);
  const double h = n_steps > 0 ? t_cap / double(n_steps) : 0.0;
  for (std::size_t n = 1; n <= n_steps; ++n) {
    if (!stepper.step(x, h)) {
      throw StepFailure("implicit midpoint did not converge at " +
                        state_text(double(n - 1) * h, x));
    }
    for (std::size_t i = 0; i < d; ++i) x[i] = reduce_angle(x[i]);
    const double energy = field.value(xs.first(d), xs.subspan(d, d));
    out.max_energy_drift = std::max(out.max_energy_drift, std::abs(energy - e0) / e_scale);
    double drift = 0.0;
    double size = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      drift = std::max(drift, std::abs(x[d + i] - I0[i]));
      size = std::max(size, std::abs(x[d + i]));
    }
    out.max_drift = std::max(out.max_drift, drift);
    if (drift >= threshold) {
      out.escape_time = double(n) * h;
      out.censored = false;
      break;
    }
    if (size > opts.R) {
      out.domain_exit = true;
      break;
    }
  }
  return out;
}

}  // namespace

EscapeRecord escape_time(const FourierTaylorSeries& H, double rho, double threshold, double t_cap,
                         std::size_t n_samples, std::uint64_t seed, const EscapeOptions& options) {
  if (!(rho > 0.0)) throw DomainError("escape_time: rho must be > 0");
  if (!(threshold > 0.0)) throw DomainError("escape_time: threshold must be > 0");
  if (!(t_cap > 0.0) || !std::isfinite(t_cap)) throw DomainError("escape_time: t_cap must be > 0");
  if (n_samples < 1) throw DomainError("escape_time: n_samples must be >= 1");
  const double dt = options.dt > 0.0 ? options.dt : default_dt(H);
  const HamiltonianField field(H);
  const Stepper stepper(field, options.integrate);

  std::vector<SampleResult> results(n_samples);
  std::vector<std::exception_ptr> errors(n_samples);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n_samples; i = next++) {
      try {
        results[i] = run_sample(field, stepper, rho, threshold, t_cap, dt, seed, i,
                                options.integrate);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = std::clamp<int>(options.workers > 0 ? options.workers : default_workers(), 1,
                                      static_cast<int>(n_samples));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < n_samples; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw IntegrationFault("sample " + std::to_string(i) + ": " + e.what());
    }
  }

  EscapeRecord rec;
  rec.rho = rho;
  rec.threshold = threshold;
  rec.n_samples = n_samples;
  rec.seed = seed;
  rec.t_cap = t_cap;
  rec.dt = dt;
  rec.min_escape = t_cap;
  rec.ballistic_bound = ballistic_lower_bound(H, rho, threshold, threshold / rho);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const SampleResult& r = results[i];
    rec.escape_times.push_back(r.escape_time);
    rec.censored.push_back(r.censored);
    rec.max_drift.push_back(r.max_drift);
    rec.max_energy_drift = std::max(rec.max_energy_drift, r.max_energy_drift);
    rec.domain_exits += r.domain_exit ? 1 : 0;
    if (r.censored) {
      rec.max_drift_at_cap = std::max(rec.max_drift_at_cap, r.max_drift);
    } else {
      if (options.check_ballistic && r.escape_time < rec.ballistic_bound) {
        throw IntegrationFault("sample " + std::to_string(i) + ": escape at t = " +
                               format_double(r.escape_time) + " beats the ballistic bound " +
                               format_double(rec.ballistic_bound));
      }
      if (rec.min_escape_censored || r.escape_time < rec.min_escape) {
        rec.min_escape = r.escape_time;
        rec.min_escape_censored = false;
      }
    }
  }
  rec.energy_ok = rec.max_energy_drift <= options.integrate.energy_tol;
  return rec;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t d = traj.samples.empty() ? 0 : traj.samples.front().theta.size();
  os << "t";
  for (std::size_t i = 1; i <= d; ++i) os << ",theta_" << i;
  for (std::size_t i = 1; i <= d; ++i) os << ",I_" << i;
  os << ",energy\n";
  for (const auto& s : traj.samples) {
    os << format_double(s.t);
    for (double v : s.theta) os << ',' << format_double(v);
    for (double v : s.I) os << ',' << format_double(v);
    os << ',' << format_double(s.energy) << '\n';
  }
}

void write_escape_csv(std::ostream& os, const EscapeRecord& record) {
  os << "sample,escape_time,censored,max_drift\n";
  for (std::size_t i = 0; i < record.n_samples; ++i) {
    os << i << ',' << format_double(record.escape_times[i]) << ',' << (record.censored[i] ? 1 : 0)
       << ',' << format_double(record.max_drift[i]) << '\n';
  }
}

}  // namespace stablab
