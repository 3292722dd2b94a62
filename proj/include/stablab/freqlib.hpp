#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace stablab {

/// Frequency vector of a linear flow on T^d = R^d / Z^d.
///
/// Components are in cycles per unit time: the basis is e^{2 pi i k.theta},
/// so the small divisors met by the homological equation are 2 pi (omega.k).
class Frequency {
 public:
  /// Throws DomainError unless d >= 2, every component is finite and
  /// omega != 0.
  explicit Frequency(std::vector<double> omega);

  int dim() const { return static_cast<int>(omega_.size()); }
  std::span<const double> values() const { return omega_; }
  double operator[](int i) const { return omega_[static_cast<std::size_t>(i)]; }
  double sup_norm() const;

  /// omega . k, accumulated in index order.
  double dot(std::span<const int> k) const;

 private:
  std::vector<double> omega_;
};

/// Finite-cutoff Diophantine certificate:
/// gamma_K = min_{0 < |k|_1 <= K} |omega.k| |k|_1^tau.
struct DiophantineCertificate {
  double tau = 0.0;
  int K = 0;
  double gamma_K = 0.0;
  /// A minimizing k, normalized so its first nonzero entry is positive.
  std::vector<int> argmin;

  /// alpha such that omega is (alpha, K) completely non-resonant.
  double alpha() const;
};

struct EnumerationBudget {
  int max_K = 200;
  /// Hard ceiling on visited lattice points, for d > 2.
  std::uint64_t max_points = 50'000'000;
};

/// Number of k in Z^d with |k|_1 <= K (including k = 0).
std::uint64_t l1_ball_size(int d, int K);

/// Calls visit(k) for every k with 0 < |k|_1 <= K whose first nonzero entry is
/// positive (one representative of each +/- pair), in lexicographic order.
void for_each_half_l1_ball(int d, int K, const std::function<void(std::span<const int>)>& visit);

/// Exhaustive enumeration; throws EnumerationBudgetError instead of
/// approximating when the budget does not cover the ball.
DiophantineCertificate diophantine_constant(const Frequency& omega, double tau, int K,
                                            const EnumerationBudget& budget = {});

/// True iff |k.omega| >= alpha for all 0 < |k|_1 <= K. The comparison
/// tolerates 4 ulp of rounding so that alpha = gamma_K / K^tau always
/// certifies.
bool is_completely_nonresonant(const Frequency& omega, double alpha, int K,
                               const EnumerationBudget& budget = {});

/// Smallest |omega.k| over 0 < |k|_1 <= K.
double min_small_divisor(const Frequency& omega, int K, const EnumerationBudget& budget = {});

/// (1, golden ratio). Only d = 2 is supported.
Frequency golden_frequency(int d);

}  // namespace stablab
