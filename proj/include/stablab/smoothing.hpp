#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stablab/ftseries.hpp"

namespace stablab {

/// Hoelder regularity ell = q + mu with q = floor(ell), mu in [0, 1).
class HolderClass {
 public:
  /// Throws DomainError unless ell > 2d + 1.
  HolderClass(double ell, int d);

  double ell() const { return ell_; }
  int q() const { return q_; }
  double mu() const { return mu_; }
  int dim() const { return d_; }

 private:
  double ell_;
  int q_;
  double mu_;
  int d_;
};

struct SmoothingResult {
  FourierTaylorSeries g_s;
  double s = 0.0;
  int cutoff = 0;  // largest kept |k|_1, floor(1/s)
  double fourier_norm_at_s = 0.0;  // sum_{|k|_1 <= 1/s} |g_k| e^{|k|_1 s}
  double dropped_tail_mass = 0.0;  // sum |g_k| over removed modes
};

/// Largest |k|_1 kept by the smoothing at width s.
int smoothing_cutoff(double s);

/// Sharp l1-ball Fourier truncation at |k|_1 <= 1/s of a pure-angle series.
/// The Fourier norm of the result at width s is recomputed from g_s and
/// compared with the sum over g's retained modes; a mismatch beyond 1e-12
/// relative is a NumericalFault.
SmoothingResult smooth(const FourierTaylorSeries& g, double s);

/// (1 + 2^{1-mu}) sum_k |g_k| (1 + (2 pi |k|_1)^ell): an upper bound on the
/// C^ell norm of a trigonometric series. +inf if it overflows.
double holder_norm_majorant(const FourierTaylorSeries& g, const HolderClass& hc);

/// sum_k |g_k| (2 pi |k|_1)^p over the modes removed at width s: an upper
/// bound on ||g - g_s||_{C^p}.
double smoothing_error_majorant(const FourierTaylorSeries& g, double s, int p);

struct SmoothingSample {
  double s = 0.0;
  double error = 0.0;       // C^p majorant of g - g_s
  double norm_ratio = 0.0;  // |||g_s|||_s / C^ell majorant of g
  bool saturated = false;   // nothing was dropped
};

struct SmoothingScalingReport {
  std::vector<SmoothingSample> samples;
  double slope = 0.0;  // d log(error) / d log(s) over non-saturated samples
  double expected_slope = 0.0;  // ell - p
  bool saturated = false;       // every sample had zero error
  bool pass = false;            // slope >= ell - p - 0.3
};

/// Sweeps s, fits log error against log s. Throws InsufficientData if fewer
/// than 4 samples carry a nonzero error (unless all of them are saturated).
SmoothingScalingReport verify_smoothing_estimate(const FourierTaylorSeries& g,
                                                 const HolderClass& hc, int p,
                                                 std::span<const double> s_list);

struct FourierNormReport {
  std::vector<SmoothingSample> samples;  // ordered by decreasing s
  double sup_ratio = 0.0;
  double max_ratio_first_third = 0.0;
  double max_ratio_last_third = 0.0;
  bool pass = false;  // finite, and last third <= 2x first third
};

FourierNormReport fourier_norm_bound_check(const FourierTaylorSeries& g, const HolderClass& hc,
                                           std::span<const double> s_list);

/// Empirical smoothing constants over a probe sweep: C_A as the largest
/// error / (s^{ell-p} majorant), C_B as the largest |||g_s|||_s / majorant.
struct SmoothingConstants {
  double C_A = 0.0;
  double C_B = 0.0;
};
SmoothingConstants calibrate_smoothing_constants(const FourierTaylorSeries& g,
                                                 const HolderClass& hc, int p,
                                                 std::span<const double> s_list);

/// Modes of the lacunary family at level j: 2^j e_i for every i, plus
/// 2^{j-1}(e_1 - e_2) for j >= 1.
std::vector<std::vector<int>> lacunary_modes(int d, int j);

/// sum_{j=0}^{j_max} sum_{k in lacunary_modes(d, j)}
///   amplitude 2^{-j ell} cos(2 pi k.theta + phase) I^m
/// with phases drawn from (seed, stream). m defaults to zero (pure angle).
FourierTaylorSeries lacunary_series(int d, double ell, int j_max, double amplitude,
                                    std::uint64_t seed, std::span<const int> m = {},
                                    std::uint64_t stream = 0);

/// Geometric s grid 2^{-j_from}, ..., 2^{-j_to}.
std::vector<double> dyadic_s_list(int j_from, int j_to);

}  // namespace stablab
