#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stablab/freqlib.hpp"
#include "stablab/ftseries.hpp"
#include "stablab/normalform.hpp"
#include "stablab/smoothing.hpp"

namespace stablab {

/// Scale factors of the stability estimate. The proof only asserts that they
/// exist, so every prediction is "shape x configured constant".
struct BoundConstants {
  double C_A = 1.0;
  double C_B = 1.0;
  double C0 = 1.0;
  double C1 = 1.0;
  double C2 = 1.0;
  double C3 = 1.0;
  double C4 = 1.0;
  double C5 = 1.0;
  double C6 = 1.0;
  double xi = 2.0;

  /// Throws DomainError unless every constant is positive and finite and xi > 1.
  void validate() const;
};

/// Keys C_A, C_B, C0 ... C6, xi; missing keys keep their defaults.
BoundConstants load_bound_constants(const std::string& path);
BoundConstants parse_bound_constants(const std::string& text);
std::string to_text(const BoundConstants& c);

/// f = P + Z with P the Taylor orders 2 ... q-2 (q = floor(ell)) and Z the rest.
struct TaylorSplit {
  FourierTaylorSeries P;
  FourierTaylorSeries Z;
  int top_order = 0;  // q - 2
  /// sum over Z of |c| 2 pi |k|_1 rho^{|m|_1}: sup of |d_theta Z| on T^d x B_rho.
  double Z_bound = 0.0;
};

/// Throws ModelViolation if f has a term of Taylor order 0 or 1.
TaylorSplit taylor_split(const FourierTaylorSeries& f, const HolderClass& hc, double rho);

/// The angle coefficient a_m(theta) of I^m in f (a pure-angle series).
FourierTaylorSeries taylor_coefficient(const FourierTaylorSeries& f, std::span<const int> m);

/// Every Taylor exponent that occurs in f, in lexicographic order.
std::vector<std::vector<int>> taylor_exponents(const FourierTaylorSeries& f);

/// max over the exponents of P of holder_norm_majorant(a_m).
double coeff_norm_max(const TaylorSplit& split, const HolderClass& hc);

struct SmoothedCoefficients {
  FourierTaylorSeries P_s;
  int cutoff = 0;
  /// Majorants on T^d x B_{rho/2} of the l1 norms of grad_J (P - P_s) and
  /// grad_theta (P - P_s).
  double gap_grad_J = 0.0;
  double gap_grad_phi = 0.0;
};

/// Replaces each a_m of P by its smoothing at width s.
SmoothedCoefficients smooth_coefficients(const TaylorSplit& split, double s, double rho);

struct ScheduleFlags {
  bool smallness_ok = false;  // C0 C_B N rho^2 <= alpha rho / (256 xi K), up to 1e-12 relative
  bool rho_ok = false;        // rho <= min(rho_0, alpha / (2 xi M K))
  bool Ks_ok = false;         // K s >= 6
  bool s_in_range = false;    // 0 < s <= 1
  bool rho_below_e6 = false;  // rho < e^{-6}

  /// All flags, or all but rho_below_e6 for dynamics-only runs.
  bool all(bool dynamics_only = false) const;
  /// Names of the failed flags, comma separated.
  std::string failures(bool dynamics_only = false) const;
};

struct ParameterSchedule {
  double rho = 0.0;
  double tau = 0.0;
  double ell = 0.0;
  double a = 0.0;  // 1 / (tau + 1)
  double b = 0.0;  // 6 (a ell + 1)
  double rho_tilde = 0.0;
  int K = 0;
  double s = 0.0;
  double alpha = 0.0;  // gamma / K^tau
  double rho_0 = 0.0;  // s
  double M = 0.0;
  double coeff_norm_max = 0.0;
  double smallness_lhs = 0.0;  // C0 C_B N rho^2
  double smallness_rhs = 0.0;  // alpha rho / (256 xi K)
  ScheduleFlags flags;
};

/// rho~ = (gamma / (256 xi C0 C_B N))^{1 / (a (tau + 1))} with N = coeff_norm_max.
double schedule_rho_tilde(double gamma, double tau, const BoundConstants& consts,
                          double coeff_norm_max);

/// Evaluates the schedule and its flags. Failed flags are reported, not
/// thrown. K = floor((rho~/rho)^a), at least 1. Throws DomainError for
/// rho outside (0, 1), gamma <= 0 or coeff_norm_max <= 0.
ParameterSchedule parameter_schedule(double rho, double gamma, double tau, const HolderClass& hc,
                                     const BoundConstants& consts, double coeff_norm_max);

/// Same with rho~ given directly.
ParameterSchedule parameter_schedule_with_rho_tilde(double rho, double rho_tilde, double gamma,
                                                    double tau, const HolderClass& hc,
                                                    const BoundConstants& consts,
                                                    double coeff_norm_max);

enum class RemainderKind { analytic, smoothing_gap, taylor };
const char* to_string(RemainderKind kind);

struct RemainderBounds {
  double analytic = 0.0;       // C1 rho^{2 + b/6 - a} / |log rho^b|
  double smoothing_gap = 0.0;  // C4 rho^{2 + a(ell-1)} |log rho^b|^{ell-1}
  double taylor = 0.0;         // C5 rho^{ell-1}
  RemainderKind dominant = RemainderKind::smoothing_gap;
  double total() const { return analytic + smoothing_gap + taylor; }
};

/// ell > 3 + 2/tau, the condition under which the smoothing gap dominates.
bool dominance_condition(double ell, double tau);

/// Throws DominanceViolation if ell <= 3 + 2/tau and PreconditionError if a
/// schedule flag other than rho_below_e6 failed.
RemainderBounds remainder_bounds(const ParameterSchedule& schedule, const BoundConstants& consts,
                                 const HolderClass& hc, double rho);

struct StabilityTimes {
  double t_star = 0.0;    // 1 / (6 C6 rho^{1 + a(ell-1)} |log rho^b|^{ell-1})
  double t_stab = 0.0;    // C1 / (rho^{1 + (ell-1)/(tau+1)} |log rho|^{ell-1})
  double exponent = 0.0;  // 1 + (ell-1)/(tau+1)
};

/// 1 + (ell - 1) / (tau + 1).
double stability_exponent(double ell, double tau);

/// Throws DomainError unless 0 < rho < 1.
StabilityTimes predicted_stability_time(double rho, const HolderClass& hc, double tau,
                                        const BoundConstants& consts);

/// T0 / rho^{1 + (ell-1)/(tau+1) + epsilon}.
double diffusion_time_reference(double rho, const HolderClass& hc, double tau, double epsilon,
                                double T0);

struct PipelineOptions {
  /// Overrides the rho~ formula when set.
  std::optional<double> rho_tilde;
  /// Accept rho >= e^{-6} (the dynamics-only regime).
  bool dynamics_only = false;
  NormalFormOptions normal_form{-1, 6, -1, -1, 1e-12, 1e-12, EnumerationBudget{4096}};
};

struct PipelineReport {
  bool ok = false;
  bool integrable = false;
  std::string failed_stage;
  std::string diagnostics;

  TaylorSplit split{FourierTaylorSeries(2), FourierTaylorSeries(2)};
  double coeff_norm_max = 0.0;
  ParameterSchedule schedule;
  std::optional<SmoothedCoefficients> smoothed;
  std::optional<NormalFormParams> nf_params;
  std::optional<NormalFormResult> normal_form;
  RemainderBounds bounds;
  StabilityTimes times;

  /// |t| times this bounds the action drift in normal-form variables:
  /// the sum of the three configured remainder shapes.
  double drift_rate_bound = 0.0;
  /// The same rate assembled from this run's certificates: the analytic
  /// remainder's angle gradient, the smoothing gap through the transform, and Z.
  double measured_drift_rate = 0.0;

  /// Flat key=value text.
  std::string to_text() const;
};

/// taylor_split, schedule, smooth_coefficients, resonant_normal_form on
/// omega.I + P_s, remainder_bounds, predicted_stability_time. A failed
/// schedule returns ok = false with failed_stage = "schedule"; any other stage
/// error is rethrown with the stage name prefixed, keeping its type.
PipelineReport run_pipeline(const FourierTaylorSeries& H, const Frequency& omega, double gamma,
                            double tau, const HolderClass& hc, double rho,
                            const BoundConstants& consts, const PipelineOptions& options = {});

/// Constants measured from a certified report: each C is the certified
/// quantity divided by its shape. Constants without data keep base values.
BoundConstants calibrate_constants(const PipelineReport& report, const HolderClass& hc,
                                   double tau, const BoundConstants& base);

}  // namespace stablab
