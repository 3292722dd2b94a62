#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "stablab/ftseries.hpp"
#include "stablab/normalform.hpp"

namespace stablab {

enum class StepMethod { midpoint, triple_jump };
const char* to_string(StepMethod method);

struct TrajectorySample {
  double t = 0.0;
  std::vector<double> theta;  // reduced to [0, 1)
  std::vector<double> I;
  double energy = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double dt = 0.0;  // signed step actually used
  StepMethod method = StepMethod::midpoint;
  std::size_t steps = 0;
  /// max over every step, not only the recorded samples
  double max_energy_drift = 0.0;  // |H - H_0| / max(|H_0|, 1)
  double max_action_drift = 0.0;  // |I - I_0|_inf
  bool energy_ok = true;          // max_energy_drift <= tolerance
  bool domain_exit = false;       // |I|_inf left B_R; the trajectory stops there
};

struct IntegrateOptions {
  StepMethod method = StepMethod::midpoint;
  double inner_tol = 1e-13;
  int max_sweeps = 50;
  std::size_t max_samples = 100'000;
  double energy_tol = 1e-8;
  double R = std::numeric_limits<double>::infinity();
};

/// min(0.01, 0.01 / |omega|_inf) with omega read off the k = 0, |m| = 1 terms
/// of H; 0.01 if H has no linear part.
double default_dt(const FourierTaylorSeries& H);

/// Symplectic integration from start to t_end (either sign) with
/// |t_end| / ceil(|t_end| / dt) sized steps. At most max_samples evenly
/// decimated samples are kept, always including both ends. Throws
/// StepFailure (with the time and state) if the inner iteration does not
/// converge.
Trajectory integrate(const FourierTaylorSeries& H, const PhasePoint& start, double t_end,
                     double dt, const IntegrateOptions& options = {});

/// sup over samples (and the per-step record) of |I(t) - I(0)|_inf.
double action_drift(const Trajectory& traj);

/// sum |c| 2 pi |k|_1 r^{|m|_1}: a majorant of sup |d_theta H| on T^d x B_r.
double angle_gradient_majorant(const FourierTaylorSeries& H, double r);

/// threshold / angle_gradient_majorant(H, rho (1 + margin)); +inf when H has
/// no angle dependence.
double ballistic_lower_bound(const FourierTaylorSeries& H, double rho, double threshold,
                             double margin = 0.0);

struct EscapeOptions {
  double dt = 0.0;   // 0: default_dt(H)
  int workers = 0;   // 0: STABLAB_WORKERS or the available parallelism
  IntegrateOptions integrate{};
  /// Throw IntegrationFault when an escape beats the ballistic bound.
  bool check_ballistic = true;
};

struct EscapeRecord {
  double rho = 0.0;
  double threshold = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  double t_cap = 0.0;
  double dt = 0.0;
  std::vector<double> escape_times;  // t_cap when censored
  std::vector<bool> censored;
  std::vector<double> max_drift;  // per sample, up to escape or t_cap
  double min_escape = 0.0;        // t_cap when every sample is censored
  bool min_escape_censored = true;
  double max_drift_at_cap = 0.0;  // over censored samples
  double max_energy_drift = 0.0;
  bool energy_ok = true;
  std::size_t domain_exits = 0;
  /// threshold / sup |d_theta H| on the tube of radius rho + threshold
  double ballistic_bound = 0.0;

  std::size_t escaped() const;
  double censored_fraction() const;
  bool operator==(const EscapeRecord&) const = default;
};

/// Monte-Carlo escape times from T^d x B_rho (sup-norm ball), initial
/// conditions drawn from a counter RNG keyed by (seed, sample). A sample
/// escapes at the first step with |I - I_0|_inf >= threshold. Results do not
/// depend on the worker count.
EscapeRecord escape_time(const FourierTaylorSeries& H, double rho, double threshold, double t_cap,
                         std::size_t n_samples, std::uint64_t seed,
                         const EscapeOptions& options = {});

/// Worker count from STABLAB_WORKERS, else std::thread::hardware_concurrency.
int default_workers();

/// "t,theta_1..theta_d,I_1..I_d,energy"
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
/// "sample,escape_time,censored,max_drift"
void write_escape_csv(std::ostream& os, const EscapeRecord& record);

}  // namespace stablab
