#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "stablab/errors.hpp"
#include "stablab/freqlib.hpp"

using namespace stablab;

namespace {

// Brute force over the full box [-K, K]^2, both signs of every k.
double box_gamma(double w1, double w2, double tau, int K) {
  double best = INFINITY;
  for (int a = -K; a <= K; ++a) {
    for (int b = -K; b <= K; ++b) {
      const int n = std::abs(a) + std::abs(b);
      if (n == 0 || n > K) continue;
      best = std::min(best, std::abs(a * w1 + b * w2) * std::pow(n, tau));
    }
  }
  return best;
}

double box_min_divisor(double w1, double w2, int K) {
  double best = INFINITY;
  for (int a = -K; a <= K; ++a) {
    for (int b = -K; b <= K; ++b) {
      const int n = std::abs(a) + std::abs(b);
      if (n == 0 || n > K) continue;
      best = std::min(best, std::abs(a * w1 + b * w2));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("frequency validation") {
  CHECK_THROWS_AS(Frequency({1.0}), DomainError);
  CHECK_THROWS_AS(Frequency({0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(Frequency({1.0, NAN}), DomainError);
  CHECK_THROWS_AS(Frequency({INFINITY, 1.0}), DomainError);
  const Frequency w({1.0, -3.0, 0.5});
  CHECK(w.dim() == 3);
  CHECK(w.sup_norm() == 3.0);
  const int k[] = {2, 1, -4};
  CHECK(w.dot(k) == doctest::Approx(2.0 - 3.0 - 2.0));
}

TEST_CASE("golden frequency") {
  const Frequency g = golden_frequency(2);
  CHECK(g[0] == 1.0);
  CHECK(g[1] == doctest::Approx((1.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-15));
  CHECK_THROWS_AS(golden_frequency(3), UnsupportedDimension);
  CHECK_THROWS_AS(golden_frequency(1), UnsupportedDimension);
  CHECK(diophantine_constant(g, 1.0, 50).gamma_K > 0.0);
  CHECK(diophantine_constant(g, 1.0, 50).gamma_K == doctest::Approx(box_gamma(1.0, g[1], 1.0, 50)));
}

TEST_CASE("diophantine constant, golden K = 2") {
  const Frequency w({1.0, 1.6180339887});
  const auto cert = diophantine_constant(w, 1.0, 2);
  CHECK(cert.gamma_K == doctest::Approx(1.0).epsilon(1e-15));
  REQUIRE(cert.argmin.size() == 2);
  CHECK(cert.argmin[0] == 1);
  CHECK(cert.argmin[1] == 0);
  CHECK(cert.gamma_K == box_gamma(1.0, 1.6180339887, 1.0, 2));
}

TEST_CASE("exact resonances give zero") {
  CHECK(diophantine_constant(Frequency({1.0, 1.0}), 1.0, 2).gamma_K == 0.0);
  CHECK(diophantine_constant(Frequency({1.0, 1.0}), 1.0, 7).gamma_K == 0.0);
  const auto cert = diophantine_constant(Frequency({1.0, 0.5}), 2.0, 3);
  CHECK(cert.gamma_K == 0.0);
  CHECK(cert.argmin == std::vector<int>{1, -2});
}

TEST_CASE("enumeration budget is explicit") {
  const Frequency g = golden_frequency(2);
  CHECK_THROWS_AS(diophantine_constant(g, 1.0, 201), EnumerationBudgetError);
  CHECK_NOTHROW(diophantine_constant(g, 1.0, 201, EnumerationBudget{201}));
  CHECK_THROWS_AS(diophantine_constant(g, 1.0, 0), DomainError);
  CHECK_THROWS_AS(diophantine_constant(g, -1.0, 3), DomainError);
  const Frequency w6({1.0, 1.1, 1.3, 1.7, 1.9, 2.3});
  CHECK_THROWS_AS(diophantine_constant(w6, 5.0, 40, EnumerationBudget{200, 1000}),
                  EnumerationBudgetError);
}

TEST_CASE("l1 ball sizes") {
  CHECK(l1_ball_size(2, 0) == 1);
  CHECK(l1_ball_size(2, 1) == 5);
  CHECK(l1_ball_size(2, 3) == 25);  // 2K^2 + 2K + 1
  CHECK(l1_ball_size(3, 1) == 7);
  CHECK(l1_ball_size(3, 2) == 25);
  std::size_t visited = 0;
  for_each_half_l1_ball(3, 4, [&](std::span<const int>) { ++visited; });
  CHECK(2 * visited + 1 == l1_ball_size(3, 4));
}

TEST_CASE("complete non-resonance") {
  const Frequency w({1.0, 1.6180339887});
  CHECK(is_completely_nonresonant(w, 0.5, 2));
  CHECK(min_small_divisor(w, 2) == doctest::Approx(0.6180339887));
  CHECK_FALSE(is_completely_nonresonant(Frequency({1.0, 1.0}), 0.1, 2));
  CHECK_THROWS_AS(is_completely_nonresonant(w, 0.0, 2), DomainError);
  for (int K = 1; K <= 30; ++K) {
    const auto cert = diophantine_constant(w, 1.0, K);
    CHECK(is_completely_nonresonant(w, cert.alpha(), K));
    CHECK(min_small_divisor(w, K) == box_min_divisor(1.0, 1.6180339887, K));
  }
}

TEST_CASE("property: monotone in K, exact against brute force") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double w1 = u(rng), w2 = u(rng);
    const Frequency w({w1, w2});
    double previous = INFINITY;
    for (int K = 1; K <= 25; ++K) {
      const double g = diophantine_constant(w, 1.5, K).gamma_K;
      CHECK(g <= previous);
      CHECK(g == doctest::Approx(box_gamma(w1, w2, 1.5, K)).epsilon(1e-14));
      previous = g;
    }
  }
}

TEST_CASE("property: scaling and consistency") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double w1 = u(rng), w2 = u(rng), w3 = u(rng);
    const double lambda = 4.0;  // power of two: scaling is exact in floating point
    const auto a = diophantine_constant(Frequency({w1, w2, w3}), 2.0, 6);
    const auto b = diophantine_constant(Frequency({lambda * w1, lambda * w2, lambda * w3}), 2.0, 6);
    CHECK(b.gamma_K == lambda * a.gamma_K);
    const double lambda2 = 1.7;
    const auto c = diophantine_constant(Frequency({lambda2 * w1, lambda2 * w2, lambda2 * w3}), 2.0, 6);
    CHECK(c.gamma_K == doctest::Approx(lambda2 * a.gamma_K).epsilon(1e-13));
    if (a.gamma_K > 0.0) CHECK(is_completely_nonresonant(Frequency({w1, w2, w3}), a.alpha(), 6));
  }
}
