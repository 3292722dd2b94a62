#include "stablab/vector_field.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "stablab/errors.hpp"

namespace stablab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Canonical representative: first nonzero entry positive (or k = 0).
bool is_representative(const TermKey& key, int d) {
  for (int i = 0; i < d; ++i) {
    if (key.k(i) != 0) return key.k(i) > 0;
  }
  return true;
}

}  // namespace

HamiltonianField::HamiltonianField(const FourierTaylorSeries& H) : d_(H.dim()) {
  if (!H.is_real(1e-10)) throw RealityViolation("Hamiltonian series is not real-valued");
  std::map<std::array<int, kMaxDim>, std::size_t> index;
  for (const auto& [key, c] : H) {
    if (!is_representative(key, d_)) continue;
    std::array<int, kMaxDim> k{};
    Monomial mono;
    mono.c = c;
    for (int i = 0; i < d_; ++i) {
      k[std::size_t(i)] = key.k(i);
      mono.m[std::size_t(i)] = key.m(i);
      max_power_ = std::max(max_power_, key.m(i));
    }
    auto [it, inserted] = index.try_emplace(k, modes_.size());
    if (inserted) {
      Mode mode;
      mode.k = k;
      mode.weight = key.is_average() ? 1.0 : 2.0;
      modes_.push_back(std::move(mode));
    }
    modes_[it->second].poly.push_back(mono);
  }
}

double HamiltonianField::value(std::span<const double> theta, std::span<const double> I) const {
  std::array<double, kMaxDim> dt{}, di{};
  return gradient(theta, I, std::span<double>(dt.data(), std::size_t(d_)),
                  std::span<double>(di.data(), std::size_t(d_)));
}

double HamiltonianField::gradient(std::span<const double> theta, std::span<const double> I,
                                  std::span<double> d_theta, std::span<double> d_I) const {
  const int d = d_;
  const int P = max_power_ + 1;
  // powers[i * P + n] = I_i^n
  std::array<double, kMaxDim * 64> stack_powers;
  std::vector<double> heap_powers;
  double* powers = stack_powers.data();
  if (d * P > static_cast<int>(stack_powers.size())) {
    heap_powers.resize(std::size_t(d * P));
    powers = heap_powers.data();
  }
  for (int i = 0; i < d; ++i) {
    powers[i * P] = 1.0;
    for (int n = 1; n < P; ++n) powers[i * P + n] = powers[i * P + n - 1] * I[std::size_t(i)];
  }
  for (int i = 0; i < d; ++i) {
    d_theta[std::size_t(i)] = 0.0;
    d_I[std::size_t(i)] = 0.0;
  }
  double value = 0.0;
  std::array<Complex, kMaxDim> dA{};
  for (const Mode& mode : modes_) {
    Complex A{};
    for (int i = 0; i < d; ++i) dA[std::size_t(i)] = Complex{};
    for (const Monomial& mono : mode.poly) {
      double prod = 1.0;
      for (int i = 0; i < d; ++i) prod *= powers[i * P + mono.m[std::size_t(i)]];
      A += mono.c * prod;
      for (int i = 0; i < d; ++i) {
        const int mi = mono.m[std::size_t(i)];
        if (mi == 0) continue;
        double p = double(mi);
        for (int j = 0; j < d; ++j) p *= powers[j * P + mono.m[std::size_t(j)] - (j == i ? 1 : 0)];
        dA[std::size_t(i)] += mono.c * p;
      }
    }
    double phase = 0.0;
    for (int i = 0; i < d; ++i) phase += mode.k[std::size_t(i)] * theta[std::size_t(i)];
    const Complex z = std::polar(1.0, kTwoPi * phase);
    const Complex zA = z * A;
    value += mode.weight * zA.real();
    for (int i = 0; i < d; ++i) {
      // d/dtheta_i of Re(z A) = Re(2 pi i k_i z A) = -2 pi k_i Im(z A)
      d_theta[std::size_t(i)] -= mode.weight * kTwoPi * mode.k[std::size_t(i)] * zA.imag();
      d_I[std::size_t(i)] += mode.weight * (z * dA[std::size_t(i)]).real();
    }
  }
  return value;
}

void HamiltonianField::velocity(std::span<const double> x, std::span<double> dx) const {
  const auto d = std::size_t(d_);
  std::array<double, kMaxDim> dt{}, di{};
  gradient(x.first(d), x.subspan(d, d), std::span<double>(dt.data(), d),
           std::span<double>(di.data(), d));
  for (std::size_t i = 0; i < d; ++i) {
    dx[i] = di[i];
    dx[d + i] = -dt[i];
  }
}

int implicit_midpoint_step(const HamiltonianField& field, std::span<double> x, double h,
                           double tol, int max_sweeps) {
  const std::size_t n = x.size();
  std::array<double, 2 * kMaxDim> x0{}, x1{}, mid{}, f{};
  std::copy(x.begin(), x.end(), x0.begin());
  field.velocity(std::span<const double>(x0.data(), n), std::span<double>(f.data(), n));
  for (std::size_t i = 0; i < n; ++i) x1[i] = x0[i] + h * f[i];
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    for (std::size_t i = 0; i < n; ++i) mid[i] = 0.5 * (x0[i] + x1[i]);
    field.velocity(std::span<const double>(mid.data(), n), std::span<double>(f.data(), n));
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double next = x0[i] + h * f[i];
      change = std::max(change, std::abs(next - x1[i]));
      x1[i] = next;
    }
    if (change <= tol) {
      std::copy(x1.begin(), x1.begin() + std::ptrdiff_t(n), x.begin());
      return sweep;
    }
  }
  return -1;
}

}  // namespace stablab
