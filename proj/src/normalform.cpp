#include "stablab/normalform.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "stablab/errors.hpp"
#include "stablab/vector_field.hpp"

namespace stablab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string fmt(double x) { return format_double(x); }

std::vector<int> k_of(const TermKey& key, int d) {
  std::vector<int> k(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) k[std::size_t(i)] = key.k(i);
  return k;
}

}  // namespace

void NormalFormParams::validate() const {
  if (!(alpha > 0.0)) throw PreconditionError("normal form: alpha must be > 0");
  if (K < 1) throw PreconditionError("normal form: K must be >= 1");
  if (!(xi > 1.0)) throw PreconditionError("normal form: xi must be > 1");
  if (!(M >= 0.0)) throw PreconditionError("normal form: M must be >= 0");
  if (K * widths.sigma < 6.0) {
    throw PreconditionError("normal form: K sigma >= 6 violated (K sigma = " +
                            fmt(K * widths.sigma) + ")");
  }
  if (M > 0.0 && widths.rho > alpha / (2.0 * xi * M * K)) {
    throw PreconditionError("normal form: rho <= alpha / (2 xi M K) violated (rho = " +
                            fmt(widths.rho) + ", bound = " + fmt(alpha / (2.0 * xi * M * K)) +
                            ")");
  }
}

FourierTaylorSeries solve_homological(const FourierTaylorSeries& f_nr, const Frequency& omega,
                                      double divisor_floor) {
  if (f_nr.dim() != omega.dim()) throw DomainError("frequency and series dimensions differ");
  FourierTaylorSeries chi(f_nr.dim());
  for (const auto& [key, c] : f_nr) {
    if (key.is_average()) {
      throw MeanNotRemoved("homological equation: input has a k = 0 term (mean not removed)");
    }
    const auto k = k_of(key, f_nr.dim());
    const double wk = omega.dot(k);
    if (std::abs(wk) < divisor_floor) {
      std::ostringstream msg;
      msg << "homological equation: small divisor |omega.k| = " << std::abs(wk) << " at k = (";
      for (std::size_t i = 0; i < k.size(); ++i) msg << (i ? ", " : "") << k[i];
      msg << ")";
      throw SmallDivisor(msg.str());
    }
    chi.add(key, c / Complex(0.0, kTwoPi * wk));
  }
  return chi;
}

FourierTaylorSeries homological_residual(const FourierTaylorSeries& chi,
                                         const FourierTaylorSeries& f_nr, const Frequency& omega) {
  FourierTaylorSeries lhs(chi.dim());
  for (int i = 0; i < chi.dim(); ++i) lhs += Complex(omega[i]) * partial_theta(chi, i);
  return lhs - f_nr;
}

LieSeriesResult lie_transform(const FourierTaylorSeries& H, const FourierTaylorSeries& chi,
                              const LieSeriesOptions& options) {
  if (options.order < 1) throw DomainError("Lie series order must be >= 1");
  LieSeriesResult out{H, 0.0, 0.0, 0};
  FourierTaylorSeries term = H;
  double previous = weighted_norm(term, options.sigma, options.rho);
  const double floor = options.negligible * previous;
  for (int n = 1; n <= options.order; ++n) {
    FourierTaylorSeries next = Complex(1.0 / n) * poisson_bracket(term, chi);
    auto cut = truncate(next, options.k_max, options.m_max);
    if (cut.dropped_mass > 0.0) {
      out.dropped_norm += weighted_norm(next, options.loss_sigma, options.loss_rho) -
                          weighted_norm(cut.series, options.loss_sigma, options.loss_rho);
    }
    term = std::move(cut.series);
    const double norm = weighted_norm(term, options.sigma, options.rho);
    if (previous > 0.0 && norm > options.growth_limit * previous) {
      throw Divergence("Lie series diverging: bracket " + std::to_string(n) +
                       " grew the norm by a factor " + fmt(norm / previous));
    }
    out.tail_norm = norm;
    out.terms_used = n;
    if (term.empty()) break;
    out.series += term;
    if (norm <= floor) break;
    previous = norm;
  }
  return out;
}

NormalFormResult resonant_normal_form(const FourierTaylorSeries& H, const Frequency& omega,
                                      const NormalFormParams& params,
                                      const NormalFormOptions& options) {
  params.validate();
  if (H.dim() != omega.dim()) throw DomainError("frequency and Hamiltonian dimensions differ");
  const int K = params.K;
  const double sigma = params.widths.sigma;
  const double rho = params.widths.rho;

  if (!is_completely_nonresonant(omega, params.alpha, K, options.budget)) {
    throw PreconditionError("normal form: omega is not (alpha, K) completely non-resonant (alpha = " +
                            fmt(params.alpha) + ", K = " + std::to_string(K) + ")");
  }

  const FourierTaylorSeries h_lin = FourierTaylorSeries::linear(omega.values());
  const FourierTaylorSeries f0 = H - h_lin;

  NormalFormResult out{h_lin, FourierTaylorSeries(H.dim()), {}};
  out.f_norm = weighted_norm(f0, params.widths);
  const double smallness = params.alpha * rho / (256.0 * params.xi * K);
  if (out.f_norm > smallness) {
    throw PreconditionError("normal form: smallness |||f|||_{sigma,rho} <= alpha rho / (256 xi K) "
                            "violated (" + fmt(out.f_norm) + " > " + fmt(smallness) + ")");
  }

  const int max_iter = options.max_iter >= 0 ? options.max_iter : 2 * K;
  LieSeriesOptions lie;
  lie.order = options.lie_order;
  lie.k_max = options.k_max >= 0 ? options.k_max : 3 * K;
  lie.m_max = options.m_max >= 0 ? options.m_max : std::max(2, 2 * H.max_taylor_order());
  lie.sigma = sigma;
  lie.rho = rho;
  lie.loss_sigma = sigma / 6.0;
  lie.loss_rho = rho / 2.0;

  out.contraction_target = std::exp(-K * sigma / 6.0);
  out.action_ratio_limit = 1.0 / (32.0 * params.xi);
  out.angle_ratio_limit = 1.0 / (24.0 * params.xi);

  auto is_nonresonant = [K](const TermKey& key) {
    const int n = key.k_norm1();
    return n > 0 && n <= K;
  };

  FourierTaylorSeries current = H;
  for (int iter = 0;; ++iter) {
    const FourierTaylorSeries pert = current - h_lin;
    const FourierTaylorSeries nonres = pert.filter(is_nonresonant);
    out.f_star = pert.filter([](const TermKey& key) { return !key.is_average(); });
    out.h = h_lin + pert.filter([](const TermKey& key) { return key.is_average(); });
    out.f_star_norm = weighted_norm(out.f_star, sigma / 6.0, rho / 2.0);
    out.residual_nonresonant = weighted_norm(nonres, params.widths);
    out.contraction =
        out.f_norm > 0.0 ? (out.f_star_norm + out.truncation_loss) / out.f_norm : 0.0;
    out.iterations = iter;

    if (out.contraction <= out.contraction_target &&
        out.residual_nonresonant <= options.nonresonant_tol * out.f_norm) {
      out.converged = true;
      break;
    }
    if (iter == max_iter) break;

    FourierTaylorSeries chi = solve_homological(nonres, omega, options.divisor_floor);
    LieSeriesResult step = lie_transform(current, chi, lie);
    current = std::move(step.series);
    out.truncation_loss += step.dropped_norm;
    out.lie_tail = std::max(out.lie_tail, step.tail_norm);
    out.generators.push_back(std::move(chi));
  }

  for (const auto& chi : out.generators) {
    double action_sq = 0.0;
    double angle = 0.0;
    for (int i = 0; i < H.dim(); ++i) {
      const double a = weighted_norm(partial_theta(chi, i), params.widths);
      action_sq += a * a;
      angle = std::max(angle, weighted_norm(partial_I(chi, i), params.widths));
    }
    out.action_shift_bound += std::sqrt(action_sq);
    out.angle_shift_bound += angle;
  }
  out.action_shift_apriori = 8.0 * K * out.f_norm / params.alpha;
  out.angle_shift_apriori = sigma * 32.0 * K * out.f_norm / (3.0 * params.alpha * rho);

  out.certified = out.converged && out.contraction <= out.contraction_target &&
                  out.action_shift_bound / rho <= out.action_ratio_limit &&
                  out.angle_shift_bound / sigma <= out.angle_ratio_limit;
  return out;
}

std::string NormalFormResult::certificate(const NormalFormParams& params) const {
  std::ostringstream os;
  os << "alpha=" << fmt(params.alpha) << '\n'
     << "K=" << params.K << '\n'
     << "sigma=" << fmt(params.widths.sigma) << '\n'
     << "rho=" << fmt(params.widths.rho) << '\n'
     << "xi=" << fmt(params.xi) << '\n'
     << "iterations=" << iterations << '\n'
     << "generators=" << generators.size() << '\n'
     << "f_norm=" << fmt(f_norm) << '\n'
     << "f_star_norm=" << fmt(f_star_norm) << '\n'
     << "truncation_loss=" << fmt(truncation_loss) << '\n'
     << "lie_tail=" << fmt(lie_tail) << '\n'
     << "residual_nonresonant=" << fmt(residual_nonresonant) << '\n'
     << "contraction=" << fmt(contraction) << '\n'
     << "contraction_target=" << fmt(contraction_target) << '\n'
     << "action_shift_ratio=" << fmt(action_shift_bound / params.widths.rho) << '\n'
     << "action_ratio_limit=" << fmt(action_ratio_limit) << '\n'
     << "angle_shift_ratio=" << fmt(angle_shift_bound / params.widths.sigma) << '\n'
     << "angle_ratio_limit=" << fmt(angle_ratio_limit) << '\n'
     << "action_shift_apriori_ratio=" << fmt(action_shift_apriori / params.widths.rho) << '\n'
     << "angle_shift_apriori_ratio=" << fmt(angle_shift_apriori / params.widths.sigma) << '\n'
     << "domains=remainder measured on (sigma/6, rho/2); generator shifts on (sigma, rho)\n"
     << "converged=" << (converged ? "true" : "false") << '\n'
     << "status=" << (certified ? "CERTIFIED" : "NOT-CERTIFIED") << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// applying Psi

namespace {

// Symmetric triple-jump weights for a 4th-order composition.
const double kJumpOuter = 1.0 / (2.0 - std::cbrt(2.0));
const double kJumpInner = -std::cbrt(2.0) / (2.0 - std::cbrt(2.0));

void check_domain(std::span<const double> x, int d, double max_action) {
  for (int i = 0; i < d; ++i) {
    if (!(std::abs(x[std::size_t(d + i)]) <= max_action)) {
      throw DomainEscape("transform left the action domain |I| <= " + fmt(max_action));
    }
  }
}

std::vector<double> flow_fixed(const HamiltonianField& field, std::vector<double> x, double time,
                               int substeps, double max_action) {
  const double h = time / substeps;
  const int d = field.dim();
  for (int n = 0; n < substeps; ++n) {
    for (double w : {kJumpOuter, kJumpInner, kJumpOuter}) {
      if (implicit_midpoint_step(field, x, w * h, 1e-14, 100) < 0) {
        throw StepFailure("implicit midpoint iteration did not converge in transform flow");
      }
    }
    check_domain(x, d, max_action);
  }
  return x;
}

double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
  return r;
}

std::vector<double> flow_adaptive(const HamiltonianField& field, const std::vector<double>& x,
                                  double time, const TransformOptions& options, int& substeps) {
  int n = 1;
  std::vector<double> coarse = flow_fixed(field, x, time, n, options.max_action);
  while (n < (1 << 16)) {
    std::vector<double> fine = flow_fixed(field, x, time, 2 * n, options.max_action);
    if (sup_distance(coarse, fine) <= options.tol) {
      substeps = 2 * n;
      return fine;
    }
    coarse = std::move(fine);
    n *= 2;
  }
  throw StepFailure("transform flow: no substep count reached tolerance " + fmt(options.tol));
}

PhasePoint apply_impl(const std::vector<FourierTaylorSeries>& generators, const PhasePoint& point,
                      Direction direction, const TransformOptions& options,
                      std::vector<int>& substeps, bool frozen) {
  const std::size_t d = point.theta.size();
  if (point.I.size() != d) throw DomainError("phase point has inconsistent dimension");
  std::vector<double> x(point.theta);
  x.insert(x.end(), point.I.begin(), point.I.end());
  substeps.resize(generators.size(), options.substeps);

  const std::size_t count = generators.size();
  for (std::size_t step = 0; step < count; ++step) {
    // forward applies chi_n first; the inverse undoes chi_1 first
    const std::size_t g = direction == Direction::forward ? count - 1 - step : step;
    const double time = direction == Direction::forward ? 1.0 : -1.0;
    if (generators[g].dim() != static_cast<int>(d)) {
      throw DomainError("generator dimension differs from the phase point");
    }
    if (generators[g].empty()) continue;
    const HamiltonianField field(generators[g]);
    if (frozen || substeps[g] > 0) {
      x = flow_fixed(field, x, time, substeps[g], options.max_action);
    } else {
      x = flow_adaptive(field, x, time, options, substeps[g]);
    }
  }
  PhasePoint out;
  out.theta.assign(x.begin(), x.begin() + std::ptrdiff_t(d));
  out.I.assign(x.begin() + std::ptrdiff_t(d), x.end());
  return out;
}

}  // namespace

PhasePoint apply_transform(const std::vector<FourierTaylorSeries>& generators,
                           const PhasePoint& point, Direction direction,
                           const TransformOptions& options) {
  std::vector<int> substeps;
  return apply_impl(generators, point, direction, options, substeps, false);
}

std::vector<double> transform_jacobian(const std::vector<FourierTaylorSeries>& generators,
                                       const PhasePoint& point, Direction direction, double step,
                                       const TransformOptions& options) {
  std::vector<int> substeps;
  apply_impl(generators, point, direction, options, substeps, false);
  for (int& n : substeps) n = std::max(n, 1);

  const std::size_t d = point.theta.size();
  const std::size_t n = 2 * d;
  std::vector<double> jac(n * n, 0.0);
  for (std::size_t col = 0; col < n; ++col) {
    PhasePoint plus = point, minus = point;
    auto& p = col < d ? plus.theta[col] : plus.I[col - d];
    auto& q = col < d ? minus.theta[col] : minus.I[col - d];
    p += step;
    q -= step;
    const PhasePoint fp = apply_impl(generators, plus, direction, options, substeps, true);
    const PhasePoint fm = apply_impl(generators, minus, direction, options, substeps, true);
    for (std::size_t row = 0; row < n; ++row) {
      const double a = row < d ? fp.theta[row] : fp.I[row - d];
      const double b = row < d ? fm.theta[row] : fm.I[row - d];
      jac[row * n + col] = (a - b) / (2.0 * step);
    }
  }
  return jac;
}

double symplectic_defect(const std::vector<double>& jacobian, int d) {
  const std::size_t n = 2 * std::size_t(d);
  auto omega = [d](std::size_t r, std::size_t c) {
    const auto dd = std::size_t(d);
    if (r < dd && c == r + dd) return 1.0;
    if (r >= dd && c + dd == r) return -1.0;
    return 0.0;
  };
  double defect = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      double sum = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
          sum += jacobian[a * n + r] * omega(a, b) * jacobian[b * n + c];
        }
      }
      defect = std::max(defect, std::abs(sum - omega(r, c)));
    }
  }
  return defect;
}

}  // namespace stablab
