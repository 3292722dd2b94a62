#pragma once

#include <array>
#include <span>
#include <vector>

#include "stablab/ftseries.hpp"

namespace stablab {

/// A real Fourier-Taylor Hamiltonian compiled for fast pointwise evaluation.
/// Terms are grouped by Fourier mode and only one mode of each +/-k pair is
/// kept; the value is A_0(I) + 2 Re sum_{k>0} e^{2 pi i k.theta} A_k(I).
class HamiltonianField {
 public:
  /// Throws RealityViolation if H is not real-valued.
  explicit HamiltonianField(const FourierTaylorSeries& H);

  int dim() const { return d_; }
  std::size_t mode_count() const { return modes_.size(); }

  double value(std::span<const double> theta, std::span<const double> I) const;

  /// Writes dH/dtheta and dH/dI; returns H.
  double gradient(std::span<const double> theta, std::span<const double> I,
                  std::span<double> d_theta, std::span<double> d_I) const;

  /// Phase-space velocity for x = (theta, I):
  /// theta' = dH/dI, I' = -dH/dtheta.
  void velocity(std::span<const double> x, std::span<double> dx) const;

 private:
  struct Monomial {
    std::array<int, kMaxDim> m{};
    Complex c;
  };
  struct Mode {
    std::array<int, kMaxDim> k{};
    double weight = 1.0;  // 1 for k = 0, 2 for a representative of a pair
    std::vector<Monomial> poly;
  };

  int d_;
  int max_power_ = 0;
  std::vector<Mode> modes_;
};

/// One implicit-midpoint step x1 = x0 + h F((x0 + x1) / 2), solved by
/// fixed-point sweeps until the update is <= tol (sup norm).
/// Returns the number of sweeps, or -1 if max_sweeps was exhausted.
int implicit_midpoint_step(const HamiltonianField& field, std::span<double> x, double h,
                           double tol = 1e-13, int max_sweeps = 50);

}  // namespace stablab
