#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "stablab/freqlib.hpp"
#include "stablab/ftseries.hpp"

namespace stablab {

/// Hypotheses of the analytic normal form for H = omega.I + f.
struct NormalFormParams {
  double alpha = 0.0;  // non-resonance threshold
  int K = 1;           // mode cutoff
  AnalyticityWidths widths{1.0, 1.0};
  double xi = 2.0;
  double M = 0.0;  // Hessian bound of the integrable part; 0 for linear h

  /// Checks alpha > 0, xi > 1, K sigma >= 6 and, when M > 0,
  /// rho <= alpha / (2 xi M K). Throws PreconditionError naming the
  /// violated inequality.
  void validate() const;
};

/// omega . d_theta chi = f_nr solved mode-wise:
///   chi_{k,m} = f_{k,m} / (2 pi i omega.k).
/// Throws MeanNotRemoved on a k = 0 term and SmallDivisor when
/// |omega.k| < divisor_floor.
FourierTaylorSeries solve_homological(const FourierTaylorSeries& f_nr, const Frequency& omega,
                                      double divisor_floor = 1e-12);

/// omega . d_theta chi - f_nr (zero for an exact solve).
FourierTaylorSeries homological_residual(const FourierTaylorSeries& chi,
                                         const FourierTaylorSeries& f_nr, const Frequency& omega);

struct LieSeriesOptions {
  int order = 6;
  int k_max = kNoCutoff;
  int m_max = kNoCutoff;
  /// Widths at which bracket growth and the tail are measured.
  double sigma = 1.0;
  double rho = 1.0;
  /// Widths at which truncated-away terms are weighed.
  double loss_sigma = 1.0;
  double loss_rho = 1.0;
  double growth_limit = 1e3;
  /// Stop once a term falls below this fraction of |||H|||.
  double negligible = 1e-30;
};

struct LieSeriesResult {
  FourierTaylorSeries series;
  double tail_norm = 0.0;     // norm of the last retained term
  double dropped_norm = 0.0;  // truncated terms at the loss widths
  int terms_used = 0;
};

/// H o Phi^1_chi ~ sum_{n <= order} (1/n!) ad^n H with ad H = {H, chi},
/// each term truncated to (k_max, m_max). Throws Divergence if a bracket
/// grows the norm by more than growth_limit.
LieSeriesResult lie_transform(const FourierTaylorSeries& H, const FourierTaylorSeries& chi,
                              const LieSeriesOptions& options = {});

struct NormalFormOptions {
  int max_iter = -1;  // -1: 2K
  int lie_order = 6;
  int k_max = -1;  // -1: 3K
  int m_max = -1;  // -1: twice the top Taylor order of H
  /// Iterate until the non-resonant part is below this fraction of |||f|||.
  double nonresonant_tol = 1e-12;
  double divisor_floor = 1e-12;
  EnumerationBudget budget{};
};

struct NormalFormResult {
  FourierTaylorSeries h;       // omega.I plus every absorbed average
  FourierTaylorSeries f_star;  // k != 0 remainder
  /// Applied in order: H o Psi with Psi = Phi_{chi_1} o ... o Phi_{chi_n}.
  std::vector<FourierTaylorSeries> generators;

  double f_norm = 0.0;             // |||f|||_{sigma, rho}
  double f_star_norm = 0.0;        // |||f*|||_{sigma/6, rho/2}
  double truncation_loss = 0.0;    // dropped terms at (sigma/6, rho/2)
  double lie_tail = 0.0;           // largest last-term norm over Lie series
  double residual_nonresonant = 0.0;  // |||f* restricted to 0<|k|<=K|||_{sigma,rho}
  double contraction = 0.0;        // (f_star_norm + truncation_loss) / f_norm
  double contraction_target = 0.0; // e^{-K sigma / 6}

  /// Generator majorants: Euclidean action shift, sup-norm angle shift.
  double action_shift_bound = 0.0;
  double angle_shift_bound = 0.0;
  /// A-priori bounds 8 K |||f||| / alpha and sigma 2^5 K |||f||| / (3 alpha rho).
  double action_shift_apriori = 0.0;
  double angle_shift_apriori = 0.0;
  double action_ratio_limit = 0.0;  // 1 / (32 xi)
  double angle_ratio_limit = 0.0;   // 1 / (24 xi)

  int iterations = 0;
  bool converged = false;
  bool certified = false;

  /// Flat key=value certificate.
  std::string certificate(const NormalFormParams& params) const;
};

/// Lie-series averaging of every mode with 0 < |k|_1 <= K. Preconditions
/// (checked, PreconditionError on failure): params.validate(), (alpha, K)
/// complete non-resonance of omega, and
///   |||H - omega.I|||_{sigma, rho} <= alpha rho / (256 xi K).
/// A run that does not reach the contraction target is returned with
/// certified = false. Certification also requires the iteration to have
/// converged (non-resonant part below nonresonant_tol).
NormalFormResult resonant_normal_form(const FourierTaylorSeries& H, const Frequency& omega,
                                      const NormalFormParams& params,
                                      const NormalFormOptions& options = {});

enum class Direction { forward, inverse };

struct TransformOptions {
  double tol = 1e-10;
  /// 0: choose the substep count per generator by step doubling at the
  /// given point; otherwise use this many symmetric substeps.
  int substeps = 0;
  double max_action = std::numeric_limits<double>::infinity();
};

struct PhasePoint {
  std::vector<double> theta;
  std::vector<double> I;
};

/// Psi (forward) or Psi^{-1} (inverse) at a real point, each time-1 flow
/// integrated with a 4th-order symmetric composition of implicit midpoint
/// steps. Angles are not reduced mod 1. Throws DomainEscape if |I|_inf
/// exceeds max_action along the way.
PhasePoint apply_transform(const std::vector<FourierTaylorSeries>& generators,
                           const PhasePoint& point, Direction direction,
                           const TransformOptions& options = {});

/// Central-difference Jacobian of apply_transform in (theta, I) coordinates,
/// row-major 2d x 2d. Substep counts are frozen at the base point so the
/// differenced map is smooth.
std::vector<double> transform_jacobian(const std::vector<FourierTaylorSeries>& generators,
                                       const PhasePoint& point, Direction direction,
                                       double step = 1e-6, const TransformOptions& options = {});

/// max |J^T Omega J - Omega| for a row-major 2d x 2d matrix.
double symplectic_defect(const std::vector<double>& jacobian, int d);

}  // namespace stablab
