#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "stablab/errors.hpp"
#include "stablab/freqlib.hpp"
#include "stablab/ftseries.hpp"
#include "stablab/normalform.hpp"

using namespace stablab;

namespace {

constexpr double kPi = std::numbers::pi;
const double kPhi = (1.0 + std::sqrt(5.0)) / 2.0;

double mass(const FourierTaylorSeries& f) { return weighted_norm(f, 0.0, 1.0); }

FourierTaylorSeries harmonic(std::vector<int> k, std::vector<int> m, double amplitude,
                             double phase = 0.0) {
  FourierTaylorSeries g(static_cast<int>(k.size()));
  g.add_real_harmonic(k, m, amplitude, phase);
  return g;
}

FourierTaylorSeries random_oscillating(std::mt19937_64& rng, int n, double scale) {
  std::uniform_int_distribution<int> kd(-3, 3), md(0, 2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FourierTaylorSeries f(2);
  for (int t = 0; t < n; ++t) {
    std::vector<int> k{kd(rng), kd(rng)};
    if (k[0] == 0 && k[1] == 0) k[1] = 1;
    f.add_real_harmonic(k, std::vector<int>{md(rng), md(rng)}, scale * u(rng), kPi * u(rng));
  }
  return f;
}

PhasePoint random_point(std::mt19937_64& rng, double rho) {
  std::uniform_real_distribution<double> u(0.0, 1.0), v(-1.0, 1.0);
  return PhasePoint{{u(rng), u(rng)}, {rho * v(rng), rho * v(rng)}};
}

double sup_gap(const PhasePoint& a, const PhasePoint& b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.theta.size(); ++i) {
    r = std::max(r, std::abs(a.theta[i] - b.theta[i]));
    r = std::max(r, std::abs(a.I[i] - b.I[i]));
  }
  return r;
}

struct CertifiedInstance {
  Frequency omega{{1.0, kPhi}};
  NormalFormParams params;
  FourierTaylorSeries H{2};

  explicit CertifiedInstance(double eps) {
    params.alpha = 0.2;
    params.K = 5;
    params.widths = AnalyticityWidths(1.2, 0.5);
    params.xi = 2.0;
    const std::vector<double> w{1.0, kPhi};
    H = FourierTaylorSeries::linear(w) + harmonic({1, -1}, {1, 1}, eps);
  }
};

}  // namespace

TEST_CASE("homological equation: examples") {
  const Frequency omega({1.0, kPhi});
  const auto f = harmonic({2, -1}, {0, 0}, 1.0);
  const auto chi = solve_homological(f, omega);
  const double wk = 2.0 - kPhi;
  const auto expected = harmonic({2, -1}, {0, 0}, 1.0 / (2 * kPi * wk), -kPi / 2);
  CHECK(mass(chi - expected) <= 1e-15 * mass(expected));

  const auto g = harmonic({1, 0}, {2, 0}, 1.0);
  const auto chi_g = solve_homological(g, omega);
  const auto expected_g = harmonic({1, 0}, {2, 0}, 1.0 / (2 * kPi), -kPi / 2);
  CHECK(mass(chi_g - expected_g) <= 1e-15 * mass(expected_g));
  CHECK(mass(homological_residual(chi_g, g, omega)) <= 1e-15);

  FourierTaylorSeries with_mean = g;
  with_mean.add(std::vector<int>{0, 0}, std::vector<int>{1, 0}, 0.5);
  CHECK_THROWS_AS(solve_homological(with_mean, omega), MeanNotRemoved);
  CHECK_THROWS_AS(solve_homological(harmonic({1, -1}, {0, 0}, 1.0), Frequency({1.0, 1.0})),
                  SmallDivisor);
  CHECK_THROWS_AS(solve_homological(harmonic({1}, {0}, 1.0), omega), DomainError);
}

TEST_CASE("property: homological residual is at rounding level") {
  std::mt19937_64 rng(3);
  const Frequency omega({1.0, kPhi});
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = random_oscillating(rng, 8, 1.0);
    const auto chi = solve_homological(f, omega);
    CHECK(chi.is_real());
    CHECK(mass(homological_residual(chi, f, omega)) <= 1e-13 * mass(f));
  }
}

TEST_CASE("Lie transform: identity and first order") {
  const std::vector<double> w{1.0, kPhi};
  const auto H = FourierTaylorSeries::linear(w) + harmonic({1, 0}, {2, 0}, 0.1);
  CHECK(lie_transform(H, FourierTaylorSeries(2)).series == H);

  std::mt19937_64 rng(8);
  const auto chi = random_oscillating(rng, 6, 0.05).filter([](const TermKey& key) {
    return key.m_norm1() == 0;
  });
  REQUIRE_FALSE(chi.empty());
  const auto lin = FourierTaylorSeries::linear(w);
  LieSeriesOptions opt;
  opt.order = 1;
  const auto r = lie_transform(lin, chi, opt);
  FourierTaylorSeries oracle = lin;
  for (int i = 0; i < 2; ++i) oracle -= Complex(w[std::size_t(i)]) * partial_theta(chi, i);
  CHECK(mass(r.series - oracle) <= 1e-14 * mass(oracle));
  CHECK(r.terms_used == 1);

  opt.order = 0;
  CHECK_THROWS_AS(lie_transform(lin, chi, opt), DomainError);
}

TEST_CASE("Lie transform: divergence guard") {
  const auto H = harmonic({1, 0}, {3, 0}, 1.0);
  const auto chi = harmonic({3, 0}, {3, 0}, 1e3);
  LieSeriesOptions opt;
  opt.growth_limit = 10.0;
  CHECK_THROWS_AS(lie_transform(H, chi, opt), Divergence);
}

TEST_CASE("Lie transform: energy matches the flow of the generator") {
  const std::vector<double> w{1.0, kPhi};
  const auto H = FourierTaylorSeries::linear(w) + harmonic({1, 0}, {2, 0}, 0.1) +
                 harmonic({1, 1}, {0, 1}, 0.05, 0.4);
  const auto chi = harmonic({1, -1}, {1, 0}, 0.01, 0.2) + harmonic({0, 1}, {0, 0}, 0.02);
  LieSeriesOptions opt;
  opt.order = 14;
  const auto r = lie_transform(H, chi, opt);
  CHECK(r.tail_norm < 1e-9);
  std::mt19937_64 rng(12);
  for (int n = 0; n < 10; ++n) {
    const PhasePoint x = random_point(rng, 0.5);
    const PhasePoint y = apply_transform({chi}, x, Direction::forward);
    CHECK(std::abs(evaluate(r.series, x.theta, x.I) - evaluate(H, y.theta, y.I)) <=
          1e-8 + r.tail_norm);
  }
}

TEST_CASE("normal form: trivial perturbation") {
  CertifiedInstance inst(0.0);
  const auto r = resonant_normal_form(inst.H, inst.omega, inst.params);
  CHECK(r.h == inst.H);
  CHECK(r.f_star.empty());
  CHECK(r.contraction == 0.0);
  CHECK(r.generators.empty());
  CHECK(r.certified);
}

TEST_CASE("normal form: certified small instance") {
  CertifiedInstance inst(1e-6);
  const auto r = resonant_normal_form(inst.H, inst.omega, inst.params);
  const double f_norm = weighted_norm(inst.H - FourierTaylorSeries::linear(inst.omega.values()),
                                      inst.params.widths);
  CHECK(r.f_norm == doctest::Approx(f_norm).epsilon(1e-15));
  CHECK(r.f_norm == doctest::Approx(1e-6 * 0.25 * std::exp(2 * 1.2)).epsilon(1e-14));
  CHECK(r.certified);
  CHECK(r.converged);
  CHECK(r.contraction_target == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  const double f_star_oracle = weighted_norm(r.f_star, 1.2 / 6, 0.25);
  CHECK(f_star_oracle <= std::exp(-1.0) * f_norm);
  CHECK(r.contraction <= std::exp(-1.0));
  CHECK(r.action_shift_bound / 0.5 <= 1.0 / 64);
  CHECK(r.angle_shift_bound / 1.2 <= 1.0 / 48);
  for (const auto& [key, c] : r.f_star) CHECK_FALSE(key.is_average());
  for (const auto& [key, c] : r.h) CHECK(key.is_average());
  const std::string cert = r.certificate(inst.params);
  CHECK(cert.find("status=CERTIFIED") != std::string::npos);
  CHECK(cert.find("contraction=") != std::string::npos);

  // actions move by at most rho / (32 xi)
  std::mt19937_64 rng(4);
  double displacement = 0.0;
  for (int n = 0; n < 10; ++n) {
    const PhasePoint x = random_point(rng, 0.5);
    const PhasePoint y = apply_transform(r.generators, x, Direction::forward);
    for (int i = 0; i < 2; ++i) displacement = std::max(displacement, std::abs(y.I[std::size_t(i)] - x.I[std::size_t(i)]));
  }
  CHECK(displacement <= 0.5 / 64);
}

TEST_CASE("normal form: preconditions") {
  CertifiedInstance big(1e-3);
  CHECK_THROWS_AS(resonant_normal_form(big.H, big.omega, big.params), PreconditionError);
  try {
    resonant_normal_form(big.H, big.omega, big.params);
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("smallness") != std::string::npos);
  }
  CertifiedInstance inst(1e-6);
  NormalFormParams p = inst.params;
  p.K = 4;
  CHECK_THROWS_AS(resonant_normal_form(inst.H, inst.omega, p), PreconditionError);  // K sigma < 6
  p = inst.params;
  p.alpha = 0.3;  // |3 - 2 phi| < 0.3
  CHECK_THROWS_AS(resonant_normal_form(inst.H, inst.omega, p), PreconditionError);
  p = inst.params;
  p.xi = 1.0;
  CHECK_THROWS_AS(p.validate(), PreconditionError);
  p = inst.params;
  p.M = 1.0;
  CHECK_THROWS_AS(p.validate(), PreconditionError);  // rho > alpha / (2 xi M K)
  p.M = 0.01;
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("normal form: iteration cap gives a NOT-CERTIFIED partial result") {
  CertifiedInstance inst(1e-6);
  NormalFormOptions opt;
  opt.max_iter = 0;
  const auto r = resonant_normal_form(inst.H, inst.omega, inst.params, opt);
  CHECK_FALSE(r.certified);
  CHECK_FALSE(r.converged);
  CHECK(r.certificate(inst.params).find("status=NOT-CERTIFIED") != std::string::npos);
}

TEST_CASE("apply transform: identity, round trip, domain escape") {
  std::mt19937_64 rng(21);
  const PhasePoint x = random_point(rng, 0.5);
  CHECK(sup_gap(apply_transform({}, x, Direction::forward), x) == 0.0);

  std::vector<FourierTaylorSeries> gens{random_oscillating(rng, 5, 0.02),
                                        random_oscillating(rng, 5, 0.02)};
  for (int n = 0; n < 10; ++n) {
    const PhasePoint p = random_point(rng, 0.5);
    const PhasePoint there = apply_transform(gens, p, Direction::forward);
    const PhasePoint back = apply_transform(gens, there, Direction::inverse);
    CHECK(sup_gap(back, p) < 1e-8);
    CHECK(sup_gap(there, p) > 0.0);
  }

  const auto push = harmonic({1, 0}, {0, 0}, 1.0);  // dI/dt = 2 pi sin(2 pi theta)
  TransformOptions opt;
  opt.max_action = 0.1;
  const PhasePoint start{{0.25, 0.0}, {0.0, 0.0}};
  CHECK_THROWS_AS(apply_transform({push}, start, Direction::forward, opt), DomainEscape);
}

TEST_CASE("property: transform is symplectic") {
  std::mt19937_64 rng(33);
  std::vector<FourierTaylorSeries> gens{random_oscillating(rng, 6, 0.03),
                                        random_oscillating(rng, 6, 0.03)};
  CHECK(symplectic_defect({1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1}, 2) == 0.0);
  CHECK(symplectic_defect({2, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1}, 2) == 1.0);
  for (int n = 0; n < 5; ++n) {
    const PhasePoint p = random_point(rng, 0.5);
    for (Direction dir : {Direction::forward, Direction::inverse}) {
      const auto J = transform_jacobian(gens, p, dir);
      double off_identity = 0.0;
      for (std::size_t i = 0; i < 16; ++i) off_identity = std::max(off_identity, std::abs(J[i] - (i % 5 == 0 ? 1.0 : 0.0)));
      CHECK(off_identity > 1e-3);
      CHECK(symplectic_defect(J, 2) <= 1e-6);
    }
  }
}
