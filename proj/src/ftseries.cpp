#include "stablab/ftseries.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "stablab/errors.hpp"

namespace stablab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_dim(int d) {
  if (d < 1 || d > kMaxDim) {
    throw DomainError("series dimension must be in [1, " + std::to_string(kMaxDim) + "], got " +
                      std::to_string(d));
  }
}

void require_same_dim(const FourierTaylorSeries& a, const FourierTaylorSeries& b) {
  if (a.dim() != b.dim()) throw DomainError("series dimensions differ");
}

double int_power(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

TermKey negated_k(const TermKey& key, int d) {
  TermKey out = key;
  for (int i = 0; i < d; ++i) out.k(i) = -key.k(i);
  return out;
}

}  // namespace

int TermKey::k_norm1() const {
  int s = 0;
  for (int i = 0; i < kMaxDim; ++i) s += std::abs(k(i));
  return s;
}

int TermKey::m_norm1() const {
  int s = 0;
  for (int i = 0; i < kMaxDim; ++i) s += m(i);
  return s;
}

bool TermKey::is_average() const {
  for (int i = 0; i < kMaxDim; ++i) {
    if (k(i) != 0) return false;
  }
  return true;
}

TermKey make_key(std::span<const int> k, std::span<const int> m) {
  if (k.size() != m.size() || k.size() > static_cast<std::size_t>(kMaxDim)) {
    throw DomainError("term index has inconsistent or unsupported length");
  }
  TermKey key;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (m[i] < 0) throw DomainError("Taylor exponents must be non-negative");
    key.k(static_cast<int>(i)) = k[i];
    key.m(static_cast<int>(i)) = m[i];
  }
  return key;
}

FourierTaylorSeries::FourierTaylorSeries(int d) : d_(d) { check_dim(d); }

FourierTaylorSeries FourierTaylorSeries::linear(std::span<const double> omega) {
  FourierTaylorSeries out(static_cast<int>(omega.size()));
  for (int i = 0; i < out.d_; ++i) {
    TermKey key;
    key.m(i) = 1;
    out.add(key, omega[static_cast<std::size_t>(i)]);
  }
  return out;
}

FourierTaylorSeries FourierTaylorSeries::monomial(std::span<const int> m, double c) {
  FourierTaylorSeries out(static_cast<int>(m.size()));
  std::vector<int> zero(m.size(), 0);
  out.add(zero, m, c);
  return out;
}

void FourierTaylorSeries::add(const TermKey& key, Complex c) {
  if (c == Complex{}) return;
  auto [it, inserted] = terms_.try_emplace(key, c);
  if (!inserted) {
    it->second += c;
    if (it->second == Complex{}) terms_.erase(it);
  }
}

void FourierTaylorSeries::add(std::span<const int> k, std::span<const int> m, Complex c) {
  if (static_cast<int>(k.size()) != d_) throw DomainError("term index length != series dimension");
  add(make_key(k, m), c);
}

void FourierTaylorSeries::add_real_harmonic(std::span<const int> k, std::span<const int> m,
                                            double amplitude, double phase) {
  const TermKey key = make_key(k, m);
  if (key.is_average()) {
    add(key, amplitude * std::cos(phase));
    return;
  }
  const Complex half = std::polar(0.5 * amplitude, phase);
  add(key, half);
  add(negated_k(key, d_), std::conj(half));
}

Complex FourierTaylorSeries::coefficient(const TermKey& key) const {
  auto it = terms_.find(key);
  return it == terms_.end() ? Complex{} : it->second;
}

int FourierTaylorSeries::max_fourier_order() const {
  int r = 0;
  for (const auto& [key, c] : terms_) r = std::max(r, key.k_norm1());
  return r;
}

int FourierTaylorSeries::max_taylor_order() const {
  int r = 0;
  for (const auto& [key, c] : terms_) r = std::max(r, key.m_norm1());
  return r;
}

int FourierTaylorSeries::min_taylor_order() const {
  int r = std::numeric_limits<int>::max();
  for (const auto& [key, c] : terms_) r = std::min(r, key.m_norm1());
  return terms_.empty() ? 0 : r;
}

bool FourierTaylorSeries::is_real(double rel_tol) const {
  for (const auto& [key, c] : terms_) {
    const Complex partner = coefficient(negated_k(key, d_));
    const double scale = std::max(std::abs(c), std::abs(partner));
    if (std::abs(c - std::conj(partner)) > rel_tol * scale) return false;
  }
  return true;
}

bool FourierTaylorSeries::is_pure_angle() const {
  for (const auto& [key, c] : terms_) {
    if (key.m_norm1() != 0) return false;
  }
  return true;
}

FourierTaylorSeries FourierTaylorSeries::filter(
    const std::function<bool(const TermKey&)>& keep) const {
  FourierTaylorSeries out(d_);
  for (const auto& [key, c] : terms_) {
    if (keep(key)) out.terms_.emplace_hint(out.terms_.end(), key, c);
  }
  return out;
}

FourierTaylorSeries& FourierTaylorSeries::operator+=(const FourierTaylorSeries& other) {
  require_same_dim(*this, other);
  for (const auto& [key, c] : other.terms_) add(key, c);
  return *this;
}

FourierTaylorSeries& FourierTaylorSeries::operator-=(const FourierTaylorSeries& other) {
  require_same_dim(*this, other);
  for (const auto& [key, c] : other.terms_) add(key, -c);
  return *this;
}

FourierTaylorSeries& FourierTaylorSeries::operator*=(Complex s) {
  if (s == Complex{}) {
    terms_.clear();
    return *this;
  }
  for (auto it = terms_.begin(); it != terms_.end();) {
    it->second *= s;
    it = it->second == Complex{} ? terms_.erase(it) : std::next(it);
  }
  return *this;
}

FourierTaylorSeries operator+(FourierTaylorSeries a, const FourierTaylorSeries& b) {
  a += b;
  return a;
}

FourierTaylorSeries operator-(FourierTaylorSeries a, const FourierTaylorSeries& b) {
  a -= b;
  return a;
}

FourierTaylorSeries operator*(Complex s, FourierTaylorSeries a) {
  a *= s;
  return a;
}

FourierTaylorSeries operator*(const FourierTaylorSeries& a, const FourierTaylorSeries& b) {
  require_same_dim(a, b);
  FourierTaylorSeries out(a.dim());
  for (const auto& [ka, ca] : a) {
    for (const auto& [kb, cb] : b) {
      TermKey key;
      for (std::size_t i = 0; i < key.v.size(); ++i) key.v[i] = ka.v[i] + kb.v[i];
      out.add(key, ca * cb);
    }
  }
  return out;
}

AnalyticityWidths::AnalyticityWidths(double sigma_, double rho_) : sigma(sigma_), rho(rho_) {
  if (!(std::isfinite(sigma) && sigma > 0.0 && std::isfinite(rho) && rho > 0.0)) {
    throw DomainError("analyticity widths must be finite and positive");
  }
}

Complex evaluate_complex(const FourierTaylorSeries& f, std::span<const double> theta,
                         std::span<const double> I) {
  const int d = f.dim();
  if (static_cast<int>(theta.size()) != d || static_cast<int>(I.size()) != d) {
    throw DomainError("evaluation point has wrong dimension");
  }
  Complex sum{};
  for (const auto& [key, c] : f) {
    double phase = 0.0;
    double mono = 1.0;
    for (int i = 0; i < d; ++i) {
      phase += key.k(i) * theta[static_cast<std::size_t>(i)];
      mono *= int_power(I[static_cast<std::size_t>(i)], key.m(i));
    }
    sum += c * std::polar(mono, kTwoPi * phase);
  }
  return sum;
}

double evaluate(const FourierTaylorSeries& f, std::span<const double> theta,
                std::span<const double> I) {
  const Complex z = evaluate_complex(f, theta, I);
  double mass = 0.0;
  for (const auto& [key, c] : f) {
    double mono = 1.0;
    for (int i = 0; i < f.dim(); ++i) mono *= int_power(I[static_cast<std::size_t>(i)], key.m(i));
    mass += std::abs(c) * std::abs(mono);
  }
  if (std::abs(z.imag()) > 1e-12 * std::max(mass, std::numeric_limits<double>::min())) {
    std::ostringstream msg;
    msg << "series is not real at the evaluation point: imaginary part " << z.imag()
        << " against term mass " << mass;
    throw RealityViolation(msg.str());
  }
  return z.real();
}

FourierTaylorSeries partial_theta(const FourierTaylorSeries& f, int i) {
  if (i < 0 || i >= f.dim()) throw DomainError("derivative index out of range");
  FourierTaylorSeries out(f.dim());
  for (const auto& [key, c] : f) {
    if (key.k(i) != 0) out.add(key, c * Complex(0.0, kTwoPi * key.k(i)));
  }
  return out;
}

FourierTaylorSeries partial_I(const FourierTaylorSeries& f, int i) {
  if (i < 0 || i >= f.dim()) throw DomainError("derivative index out of range");
  FourierTaylorSeries out(f.dim());
  for (const auto& [key, c] : f) {
    if (key.m(i) == 0) continue;
    TermKey lowered = key;
    lowered.m(i) -= 1;
    out.add(lowered, c * double(key.m(i)));
  }
  return out;
}

FourierTaylorSeries poisson_bracket(const FourierTaylorSeries& f, const FourierTaylorSeries& g) {
  require_same_dim(f, g);
  const int d = f.dim();
  FourierTaylorSeries out(d);
  // Both halves of the bracket land on the same index (ka+kb, ma+mb-e_i), so
  // each pair of terms contributes 2 pi i (ka_i mb_i - ma_i kb_i) ca cb.
  for (const auto& [ka, ca] : f) {
    for (const auto& [kb, cb] : g) {
      const Complex prod = ca * cb;
      for (int i = 0; i < d; ++i) {
        const long w = long(ka.k(i)) * kb.m(i) - long(ka.m(i)) * kb.k(i);
        if (w == 0) continue;
        TermKey key;
        for (std::size_t j = 0; j < key.v.size(); ++j) key.v[j] = ka.v[j] + kb.v[j];
        key.m(i) -= 1;
        out.add(key, prod * Complex(0.0, kTwoPi * double(w)));
      }
    }
  }
  return out;
}

double weighted_norm(const FourierTaylorSeries& f, double sigma, double rho) {
  if (!(sigma >= 0.0 && rho >= 0.0)) throw DomainError("norm widths must be non-negative");
  double sum = 0.0;
  for (const auto& [key, c] : f) {
    sum += std::abs(c) * int_power(rho, key.m_norm1()) * std::exp(sigma * key.k_norm1());
  }
  return std::isfinite(sum) ? sum : std::numeric_limits<double>::infinity();
}

double weighted_norm(const FourierTaylorSeries& f, const AnalyticityWidths& widths) {
  return weighted_norm(f, widths.sigma, widths.rho);
}

TruncationResult truncate(const FourierTaylorSeries& f, int k_max, int m_max) {
  if (k_max < 0 || m_max < 0) throw DomainError("truncation orders must be >= 0");
  TruncationResult out{FourierTaylorSeries(f.dim()), 0.0};
  for (const auto& [key, c] : f) {
    if (key.k_norm1() <= k_max && key.m_norm1() <= m_max) {
      out.series.add(key, c);
    } else {
      out.dropped_mass += std::abs(c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// text format

std::string format_double(double x) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

void write_series(std::ostream& os, const FourierTaylorSeries& f) {
  const int d = f.dim();
  os << "# ftseries d=" << d << " terms=" << f.size() << '\n';
  for (const auto& [key, c] : f) {
    for (int i = 0; i < d; ++i) os << key.k(i) << ' ';
    os << '|';
    for (int i = 0; i < d; ++i) os << ' ' << key.m(i);
    os << " | " << format_double(c.real()) << ' ' << format_double(c.imag()) << '\n';
  }
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

template <typename T>
T parse_number(const std::string& tok, int line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" + tok + "'");
  }
  return value;
}

}  // namespace

FourierTaylorSeries read_series(std::istream& is) {
  int d = 0;
  std::vector<std::pair<TermKey, Complex>> terms;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      const auto pos = line.find("d=");
      if (d == 0 && line.find("ftseries") != std::string::npos && pos != std::string::npos) {
        d = parse_number<int>(split_ws(line.substr(pos + 2)).at(0), line_no);
      }
      continue;
    }
    const auto bar1 = line.find('|');
    const auto bar2 = bar1 == std::string::npos ? bar1 : line.find('|', bar1 + 1);
    if (bar2 == std::string::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 'k | m | re im'");
    }
    const auto ks = split_ws(line.substr(0, bar1));
    const auto ms = split_ws(line.substr(bar1 + 1, bar2 - bar1 - 1));
    const auto cs = split_ws(line.substr(bar2 + 1));
    if (d == 0) d = static_cast<int>(ks.size());
    if (static_cast<int>(ks.size()) != d || static_cast<int>(ms.size()) != d || cs.size() != 2) {
      throw ParseError("line " + std::to_string(line_no) + ": wrong number of fields");
    }
    std::vector<int> k, m;
    for (const auto& t : ks) k.push_back(parse_number<int>(t, line_no));
    for (const auto& t : ms) m.push_back(parse_number<int>(t, line_no));
    terms.emplace_back(make_key(k, m), Complex(parse_number<double>(cs[0], line_no),
                                               parse_number<double>(cs[1], line_no)));
  }
  if (d == 0) throw ParseError("cannot infer series dimension from an empty file without header");
  FourierTaylorSeries out(d);
  for (const auto& [key, c] : terms) out.add(key, c);
  return out;
}

std::string to_text(const FourierTaylorSeries& f) {
  std::ostringstream os;
  write_series(os, f);
  return os.str();
}

FourierTaylorSeries from_text(const std::string& text) {
  std::istringstream is(text);
  return read_series(is);
}

void save_series(const std::string& path, const FourierTaylorSeries& f) {
  std::ofstream os(path);
  if (!os) throw ParseError("cannot open '" + path + "' for writing");
  write_series(os, f);
}

FourierTaylorSeries load_series(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open '" + path + "'");
  return read_series(is);
}

}  // namespace stablab
