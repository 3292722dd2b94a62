#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace stablab {

using Complex = std::complex<double>;

inline constexpr int kMaxDim = 6;
inline constexpr int kNoCutoff = std::numeric_limits<int>::max();

/// Exact integer index of one term: Fourier mode k in Z^d, Taylor exponent
/// m in N^d. Unused slots beyond d stay zero.
struct TermKey {
  std::array<std::int32_t, 2 * kMaxDim> v{};

  std::int32_t& k(int i) { return v[static_cast<std::size_t>(i)]; }
  std::int32_t& m(int i) { return v[static_cast<std::size_t>(kMaxDim + i)]; }
  std::int32_t k(int i) const { return v[static_cast<std::size_t>(i)]; }
  std::int32_t m(int i) const { return v[static_cast<std::size_t>(kMaxDim + i)]; }

  int k_norm1() const;
  int m_norm1() const;
  bool is_average() const;  // k == 0

  auto operator<=>(const TermKey&) const = default;
};

TermKey make_key(std::span<const int> k, std::span<const int> m);

/// Sparse Fourier-Taylor series on T^d x C^d:
///   f(theta, I) = sum c_{k,m} e^{2 pi i k.theta} I^m.
/// Canonical form: exact zeros are never stored, so equality of series is
/// equality of term maps. A real-valued series satisfies
/// c_{-k,m} = conj(c_{k,m}).
class FourierTaylorSeries {
 public:
  using TermMap = std::map<TermKey, Complex>;

  explicit FourierTaylorSeries(int d);

  /// omega . I
  static FourierTaylorSeries linear(std::span<const double> omega);
  /// c I^m
  static FourierTaylorSeries monomial(std::span<const int> m, double c);

  int dim() const { return d_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  const TermMap& terms() const { return terms_; }
  TermMap::const_iterator begin() const { return terms_.begin(); }
  TermMap::const_iterator end() const { return terms_.end(); }

  /// Accumulates c into the (k, m) coefficient.
  void add(const TermKey& key, Complex c);
  void add(std::span<const int> k, std::span<const int> m, Complex c);
  /// amplitude * cos(2 pi k.theta + phase) * I^m, stored as two conjugate terms.
  void add_real_harmonic(std::span<const int> k, std::span<const int> m, double amplitude,
                         double phase = 0.0);

  Complex coefficient(const TermKey& key) const;

  int max_fourier_order() const;
  int max_taylor_order() const;
  int min_taylor_order() const;

  /// Checks c_{-k,m} = conj(c_{k,m}) to relative tolerance.
  bool is_real(double rel_tol = 1e-12) const;
  bool is_pure_angle() const;  // every m == 0

  FourierTaylorSeries filter(const std::function<bool(const TermKey&)>& keep) const;

  FourierTaylorSeries& operator+=(const FourierTaylorSeries& other);
  FourierTaylorSeries& operator-=(const FourierTaylorSeries& other);
  FourierTaylorSeries& operator*=(Complex s);

  friend bool operator==(const FourierTaylorSeries&, const FourierTaylorSeries&) = default;

 private:
  int d_;
  TermMap terms_;
};

FourierTaylorSeries operator+(FourierTaylorSeries a, const FourierTaylorSeries& b);
FourierTaylorSeries operator-(FourierTaylorSeries a, const FourierTaylorSeries& b);
FourierTaylorSeries operator*(Complex s, FourierTaylorSeries a);
FourierTaylorSeries operator*(const FourierTaylorSeries& a, const FourierTaylorSeries& b);

/// Angle-strip half-width sigma and action-polydisc radius rho.
struct AnalyticityWidths {
  double sigma;
  double rho;

  /// Throws DomainError unless both are finite and positive.
  AnalyticityWidths(double sigma, double rho);
};

/// Complex value at a real point.
Complex evaluate_complex(const FourierTaylorSeries& f, std::span<const double> theta,
                         std::span<const double> I);

/// Real value at a real point; throws RealityViolation if the imaginary part
/// exceeds 1e-12 of the absolute term mass.
double evaluate(const FourierTaylorSeries& f, std::span<const double> theta,
                std::span<const double> I);

/// Derivatives with 0-based coordinate index.
FourierTaylorSeries partial_theta(const FourierTaylorSeries& f, int i);
FourierTaylorSeries partial_I(const FourierTaylorSeries& f, int i);

/// {f, g} = sum_i d_theta_i f d_I_i g - d_I_i f d_theta_i g.
/// With this sign, F o Phi^t_chi = exp(t {., chi}) F for the flow of chi.
FourierTaylorSeries poisson_bracket(const FourierTaylorSeries& f, const FourierTaylorSeries& g);

/// sum |c_{k,m}| rho^{|m|_1} e^{sigma |k|_1}: the coefficient majorant of
/// sup_I sum_k |f_k(I)| e^{|k| sigma}. Returns +inf on overflow.
double weighted_norm(const FourierTaylorSeries& f, const AnalyticityWidths& widths);
/// Same majorant with sigma >= 0 and rho >= 0 allowed (sigma = 0, rho = 1 is
/// the plain coefficient l1 mass).
double weighted_norm(const FourierTaylorSeries& f, double sigma, double rho);

struct TruncationResult {
  FourierTaylorSeries series;
  double dropped_mass = 0.0;  // sum |c| over removed terms
};

/// Keeps terms with |k|_1 <= k_max and |m|_1 <= m_max.
TruncationResult truncate(const FourierTaylorSeries& f, int k_max, int m_max);

/// One term per line: "k_1 .. k_d | m_1 .. m_d | re im", '#' starts a
/// comment. Coefficients are written in shortest round-trip form, so
/// write-then-read is bit exact.
void write_series(std::ostream& os, const FourierTaylorSeries& f);
FourierTaylorSeries read_series(std::istream& is);
std::string to_text(const FourierTaylorSeries& f);
FourierTaylorSeries from_text(const std::string& text);
void save_series(const std::string& path, const FourierTaylorSeries& f);
FourierTaylorSeries load_series(const std::string& path);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

}  // namespace stablab
