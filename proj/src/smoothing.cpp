#include "stablab/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "stablab/errors.hpp"
#include "stablab/linfit.hpp"
#include "stablab/random.hpp"

namespace stablab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_pure_angle(const FourierTaylorSeries& g) {
  if (!g.is_pure_angle()) throw DomainError("smoothing expects a pure-angle series (all m = 0)");
}

}  // namespace

HolderClass::HolderClass(double ell, int d) : ell_(ell), d_(d) {
  if (!std::isfinite(ell) || !(ell > 2.0 * d + 1.0)) {
    std::ostringstream msg;
    msg << "Hoelder regularity must satisfy ell > 2d + 1 = " << 2 * d + 1 << ", got " << ell;
    throw DomainError(msg.str());
  }
  q_ = static_cast<int>(std::floor(ell));
  mu_ = ell - q_;
}

int smoothing_cutoff(double s) {
  if (!(s > 0.0 && s <= 1.0)) throw DomainError("smoothing width s must lie in (0, 1]");
  // 1/s is an integer for the dyadic widths used in sweeps; guard against it
  // rounding to just below that integer.
  return static_cast<int>(std::floor(1.0 / s + 1e-9));
}

SmoothingResult smooth(const FourierTaylorSeries& g, double s) {
  require_pure_angle(g);
  SmoothingResult out{FourierTaylorSeries(g.dim()), s, smoothing_cutoff(s), 0.0, 0.0};
  double retained = 0.0;
  for (const auto& [key, c] : g) {
    const int n = key.k_norm1();
    if (n <= out.cutoff) {
      out.g_s.add(key, c);
      retained += std::abs(c) * std::exp(n * s);
    } else {
      out.dropped_tail_mass += std::abs(c);
    }
  }
  out.fourier_norm_at_s = weighted_norm(out.g_s, s, 1.0);
  const double scale = std::max(std::abs(retained), std::numeric_limits<double>::min());
  if (std::abs(out.fourier_norm_at_s - retained) > 1e-12 * scale) {
    throw NumericalFault("Fourier norm of the smoothed series disagrees with the retained-mode sum");
  }
  return out;
}

double holder_norm_majorant(const FourierTaylorSeries& g, const HolderClass& hc) {
  require_pure_angle(g);
  double sum = 0.0;
  for (const auto& [key, c] : g) {
    sum += std::abs(c) * (1.0 + std::pow(kTwoPi * key.k_norm1(), hc.ell()));
  }
  const double value = (1.0 + std::pow(2.0, 1.0 - hc.mu())) * sum;
  return std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
}

double smoothing_error_majorant(const FourierTaylorSeries& g, double s, int p) {
  require_pure_angle(g);
  if (p < 0) throw DomainError("derivative order p must be >= 0");
  const int cutoff = smoothing_cutoff(s);
  double sum = 0.0;
  for (const auto& [key, c] : g) {
    const int n = key.k_norm1();
    if (n > cutoff) sum += std::abs(c) * std::pow(kTwoPi * n, p);
  }
  return sum;
}

SmoothingScalingReport verify_smoothing_estimate(const FourierTaylorSeries& g,
                                                 const HolderClass& hc, int p,
                                                 std::span<const double> s_list) {
  if (p < 0 || p > hc.ell()) throw DomainError("derivative order must satisfy 0 <= p <= ell");
  if (s_list.size() < 4) throw InsufficientData("smoothing sweep needs at least 4 widths");
  const double majorant = holder_norm_majorant(g, hc);

  SmoothingScalingReport report;
  report.expected_slope = hc.ell() - p;
  std::vector<double> xs, ys;
  for (double s : s_list) {
    const SmoothingResult r = smooth(g, s);
    SmoothingSample sample;
    sample.s = s;
    sample.error = smoothing_error_majorant(g, s, p);
    sample.norm_ratio = majorant > 0.0 ? r.fourier_norm_at_s / majorant : 0.0;
    sample.saturated = r.dropped_tail_mass == 0.0;
    if (!sample.saturated && sample.error > 0.0) {
      xs.push_back(std::log(s));
      ys.push_back(std::log(sample.error));
    }
    report.samples.push_back(sample);
  }
  if (xs.empty()) {
    report.saturated = true;
    report.slope = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  if (xs.size() < 4) {
    throw InsufficientData("only " + std::to_string(xs.size()) +
                           " widths carry a nonzero smoothing error; need 4");
  }
  report.slope = fit_line(xs, ys).slope;
  report.pass = report.slope >= report.expected_slope - 0.3;
  return report;
}

FourierNormReport fourier_norm_bound_check(const FourierTaylorSeries& g, const HolderClass& hc,
                                           std::span<const double> s_list) {
  if (s_list.size() < 3) throw InsufficientData("Fourier norm check needs at least 3 widths");
  std::vector<double> widths(s_list.begin(), s_list.end());
  std::sort(widths.begin(), widths.end(), std::greater<>());
  const double majorant = holder_norm_majorant(g, hc);

  FourierNormReport report;
  bool finite = std::isfinite(majorant);
  for (double s : widths) {
    const SmoothingResult r = smooth(g, s);
    SmoothingSample sample;
    sample.s = s;
    sample.norm_ratio = majorant > 0.0 ? r.fourier_norm_at_s / majorant : 0.0;
    sample.saturated = r.dropped_tail_mass == 0.0;
    finite = finite && std::isfinite(sample.norm_ratio);
    report.sup_ratio = std::max(report.sup_ratio, sample.norm_ratio);
    report.samples.push_back(sample);
  }
  const std::size_t third = std::max<std::size_t>(1, widths.size() / 3);
  for (std::size_t i = 0; i < third; ++i) {
    report.max_ratio_first_third =
        std::max(report.max_ratio_first_third, report.samples[i].norm_ratio);
    report.max_ratio_last_third =
        std::max(report.max_ratio_last_third, report.samples[widths.size() - 1 - i].norm_ratio);
  }
  report.pass = finite && report.max_ratio_last_third <= 2.0 * report.max_ratio_first_third;
  return report;
}

SmoothingConstants calibrate_smoothing_constants(const FourierTaylorSeries& g,
                                                 const HolderClass& hc, int p,
                                                 std::span<const double> s_list) {
  const double majorant = holder_norm_majorant(g, hc);
  SmoothingConstants out;
  if (!(majorant > 0.0)) return out;
  for (double s : s_list) {
    const double err = smoothing_error_majorant(g, s, p);
    out.C_A = std::max(out.C_A, err / (std::pow(s, hc.ell() - p) * majorant));
    out.C_B = std::max(out.C_B, smooth(g, s).fourier_norm_at_s / majorant);
  }
  return out;
}

std::vector<std::vector<int>> lacunary_modes(int d, int j) {
  if (j < 0 || j > 29) throw DomainError("lacunary level out of range");
  std::vector<std::vector<int>> modes;
  for (int i = 0; i < d; ++i) {
    std::vector<int> k(static_cast<std::size_t>(d), 0);
    k[static_cast<std::size_t>(i)] = 1 << j;
    modes.push_back(std::move(k));
  }
  if (j >= 1 && d >= 2) {
    std::vector<int> k(static_cast<std::size_t>(d), 0);
    k[0] = 1 << (j - 1);
    k[1] = -(1 << (j - 1));
    modes.push_back(std::move(k));
  }
  return modes;
}

FourierTaylorSeries lacunary_series(int d, double ell, int j_max, double amplitude,
                                    std::uint64_t seed, std::span<const int> m,
                                    std::uint64_t stream) {
  std::vector<int> exponent(static_cast<std::size_t>(d), 0);
  if (!m.empty()) {
    if (static_cast<int>(m.size()) != d) throw DomainError("Taylor exponent has wrong length");
    exponent.assign(m.begin(), m.end());
  }
  FourierTaylorSeries out(d);
  for (int j = 0; j <= j_max; ++j) {
    const double size = amplitude * std::exp2(-j * ell);
    const auto modes = lacunary_modes(d, j);
    for (std::size_t idx = 0; idx < modes.size(); ++idx) {
      const double phase = kTwoPi * counter_uniform(seed, stream, std::uint64_t(j), idx);
      out.add_real_harmonic(modes[idx], exponent, size, phase);
    }
  }
  return out;
}

std::vector<double> dyadic_s_list(int j_from, int j_to) {
  std::vector<double> out;
  for (int j = j_from; j <= j_to; ++j) out.push_back(std::exp2(-j));
  return out;
}

}  // namespace stablab
