#include "stablab/freqlib.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "stablab/errors.hpp"

namespace stablab {

Frequency::Frequency(std::vector<double> omega) : omega_(std::move(omega)) {
  if (omega_.size() < 2) {
    throw DomainError("frequency dimension must be >= 2, got " + std::to_string(omega_.size()));
  }
  bool nonzero = false;
  for (double w : omega_) {
    if (!std::isfinite(w)) throw DomainError("frequency component is not finite");
    nonzero = nonzero || w != 0.0;
  }
  if (!nonzero) throw DomainError("frequency vector is zero");
}

double Frequency::sup_norm() const {
  double m = 0.0;
  for (double w : omega_) m = std::max(m, std::abs(w));
  return m;
}

double Frequency::dot(std::span<const int> k) const {
  double s = 0.0;
  for (std::size_t i = 0; i < omega_.size(); ++i) s += omega_[i] * k[i];
  return s;
}

double DiophantineCertificate::alpha() const { return gamma_K / std::pow(double(K), tau); }

std::uint64_t l1_ball_size(int d, int K) {
  // N(d, K) = sum_j 2^j C(d, j) C(K, j)
  long double total = 0.0L;
  long double cd = 1.0L, ck = 1.0L, p2 = 1.0L;
  for (int j = 0; j <= std::min(d, K); ++j) {
    total += p2 * cd * ck;
    cd = cd * (d - j) / (j + 1);
    ck = ck * (K - j) / (j + 1);
    p2 *= 2.0L;
  }
  if (total > static_cast<long double>(std::numeric_limits<std::uint64_t>::max())) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(total);
}

namespace {

void enumerate_half(std::vector<int>& k, int pos, int remaining, bool leading_done,
                    const std::function<void(std::span<const int>)>& visit) {
  const int d = static_cast<int>(k.size());
  if (pos == d) {
    if (leading_done) visit(k);
    return;
  }
  const int lo = leading_done ? -remaining : 0;
  for (int v = lo; v <= remaining; ++v) {
    k[pos] = v;
    enumerate_half(k, pos + 1, remaining - std::abs(v), leading_done || v != 0, visit);
  }
  k[pos] = 0;
}

void check_budget(int d, int K, const EnumerationBudget& budget) {
  if (K < 1) throw DomainError("mode cutoff K must be >= 1");
  if (K > budget.max_K) {
    throw EnumerationBudgetError("enumeration budget exceeded: K = " + std::to_string(K) +
                                 " > cap " + std::to_string(budget.max_K));
  }
  if (l1_ball_size(d, K) > budget.max_points) {
    throw EnumerationBudgetError("enumeration budget exceeded: l1 ball of radius " +
                                 std::to_string(K) + " in dimension " + std::to_string(d) +
                                 " has more than " + std::to_string(budget.max_points) +
                                 " points");
  }
}

}  // namespace

void for_each_half_l1_ball(int d, int K, const std::function<void(std::span<const int>)>& visit) {
  std::vector<int> k(static_cast<std::size_t>(d), 0);
  enumerate_half(k, 0, K, false, visit);
}

DiophantineCertificate diophantine_constant(const Frequency& omega, double tau, int K,
                                            const EnumerationBudget& budget) {
  if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
  check_budget(omega.dim(), K, budget);

  DiophantineCertificate cert;
  cert.tau = tau;
  cert.K = K;
  cert.gamma_K = std::numeric_limits<double>::infinity();
  for_each_half_l1_ball(omega.dim(), K, [&](std::span<const int> k) {
    int norm1 = 0;
    for (int v : k) norm1 += std::abs(v);
    const double value = std::abs(omega.dot(k)) * std::pow(double(norm1), tau);
    if (value < cert.gamma_K) {
      cert.gamma_K = value;
      cert.argmin.assign(k.begin(), k.end());
    }
  });
  return cert;
}

double min_small_divisor(const Frequency& omega, int K, const EnumerationBudget& budget) {
  check_budget(omega.dim(), K, budget);
  double best = std::numeric_limits<double>::infinity();
  for_each_half_l1_ball(omega.dim(), K, [&](std::span<const int> k) {
    best = std::min(best, std::abs(omega.dot(k)));
  });
  return best;
}

bool is_completely_nonresonant(const Frequency& omega, double alpha, int K,
                               const EnumerationBudget& budget) {
  if (!(alpha > 0.0)) throw DomainError("alpha must be > 0");
  const double slack = 1.0 - 4.0 * std::numeric_limits<double>::epsilon();
  return min_small_divisor(omega, K, budget) >= alpha * slack;
}

Frequency golden_frequency(int d) {
  if (d != 2) {
    throw UnsupportedDimension("golden frequency is defined for d = 2 only, got d = " +
                               std::to_string(d));
  }
  return Frequency({1.0, std::numbers::phi});
}

}  // namespace stablab
