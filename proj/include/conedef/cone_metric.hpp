#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "conedef/errors.hpp"
#include "conedef/parse.hpp"
#include "conedef/polynomial.hpp"
#include "conedef/rational.hpp"

namespace conedef {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CPoly = Polynomial<cd>;

// ---------------------------------------------------------------------------
// Potentials a(z, zbar): polynomials in z_1..z_D and their conjugates zb_1..zb_D.

struct Potential {
  std::size_t dim = 0;  // D; the polynomial has 2D variables
  CPoly poly;

  std::size_t zvar(std::size_t i) const { return i; }
  std::size_t zbvar(std::size_t i) const { return dim + i; }

  std::vector<cd> arguments(const std::vector<cd>& z) const {
    std::vector<cd> x(2 * dim);
    for (std::size_t i = 0; i < dim; ++i) {
      x[i] = z[i];
      x[dim + i] = std::conj(z[i]);
    }
    return x;
  }

  cd value(const std::vector<cd>& z) const { return poly.evaluate(arguments(z)); }

  // coefficient of z^p zb^q must be the conjugate of that of z^q zb^p
  void validate_hermitian(double tol = 1e-12) const {
    for (const auto& [e, c] : poly.terms()) {
      Exponent f(e.size());
      for (std::size_t i = 0; i < dim; ++i) {
        f[i] = e[dim + i];
        f[dim + i] = e[i];
      }
      if (std::abs(poly.coeff(f) - std::conj(c)) > tol * (1 + std::abs(c)))
        throw ValidationError("potential is not real: coefficients are not conjugate-symmetric");
    }
  }
};

namespace detail {

// expr := ('+'|'-')? term (('+'|'-') term)*; term := factor ('*' factor)*; factor := atom ('^' int)?
// atom := rational | 'i' | 'z'int? | 'zb'int? | 'zbar'int? | '|' 'z'int? '|' | '(' expr ')'
class PotentialParser {
public:
  PotentialParser(std::string_view text, std::size_t dim) : c_(text, 1), dim_(dim) {}

  Polynomial<GaussRational> parse() {
    if (c_.at_end()) c_.fail("empty expression");
    auto p = expr();
    if (!c_.at_end()) c_.fail(std::string("unexpected character '") + c_.peek() + "'");
    return p;
  }

private:
  using GPoly = Polynomial<GaussRational>;

  GPoly constant(const GaussRational& v) const { return GPoly::constant(2 * dim_, v); }

  GPoly expr() {
    GPoly acc(2 * dim_);
    bool first = true;
    while (true) {
      GaussRational sign(1);
      if (c_.accept('-')) sign = GaussRational(-1);
      else if (!c_.accept('+') && !first) break;
      first = false;
      acc += term() * sign;
      char nx = c_.peek();
      if (nx != '+' && nx != '-') break;
    }
    return acc;
  }

  GPoly term() {
    GPoly p = factor();
    while (c_.accept('*')) p = p * factor();
    return p;
  }

  GPoly factor() {
    bool modulus = c_.peek() == '|';
    GPoly base = atom();
    if (c_.accept('^')) {
      long k = c_.small_int();
      if (modulus) {
        if (k % 2 != 0) c_.fail("|z| must be raised to an even power");
        return base.pow(static_cast<int>(k / 2));
      }
      return base.pow(static_cast<int>(k));
    }
    if (modulus) c_.fail("|z| must be raised to an even power");
    return base;
  }

  // index after z / zb; bare names need D = 1
  std::size_t var_index() {
    if (std::isdigit(static_cast<unsigned char>(c_.peek_raw()))) {
      int col = c_.column();
      long i = c_.small_int();
      if (i < 1 || static_cast<std::size_t>(i) > dim_) throw ParseError("variable index out of range", 1, col);
      return static_cast<std::size_t>(i - 1);
    }
    if (dim_ != 1) c_.fail("variable needs an index when dim D > 1");
    return 0;
  }

  GPoly atom() {
    if (c_.accept('(')) {
      GPoly p = expr();
      c_.expect(')');
      return p;
    }
    if (c_.accept('|')) {
      c_.expect('z');
      GPoly s(2 * dim_);
      if (std::isdigit(static_cast<unsigned char>(c_.peek_raw()))) {
        std::size_t i = var_index();
        s = GPoly::variable(2 * dim_, i) * GPoly::variable(2 * dim_, dim_ + i);
      } else {
        for (std::size_t i = 0; i < dim_; ++i) s += GPoly::variable(2 * dim_, i) * GPoly::variable(2 * dim_, dim_ + i);
      }
      c_.expect('|');
      return s;
    }
    if (c_.peek() == 'i') {
      c_.expect('i');
      return constant(GaussRational::i());
    }
    if (c_.accept('z')) {
      bool bar = false;
      if (c_.peek_raw() == 'b') {
        c_.expect('b');
        bar = true;
        if (c_.peek_raw() == 'a') {
          c_.expect('a');
          if (c_.peek_raw() != 'r') c_.fail("expected 'zbar'");
          c_.expect('r');
        }
      }
      std::size_t i = var_index();
      return GPoly::variable(2 * dim_, bar ? dim_ + i : i);
    }
    if (c_.digit_next()) return constant(GaussRational(c_.rational_literal()));
    c_.fail("expected number, variable, |z| or '('");
  }

  Cursor c_;
  std::size_t dim_;
};

}  // namespace detail

inline Potential parse_potential(std::string_view text, std::size_t dim) {
  if (dim == 0) throw ValidationError("dim D must be positive");
  detail::PotentialParser p(text, dim);
  Polynomial<GaussRational> g = p.parse();
  Potential pot;
  pot.dim = dim;
  pot.poly = CPoly(2 * dim);
  for (const auto& [e, c] : g.terms()) pot.poly.add_term(e, c.to_complex());
  pot.validate_hermitian();
  return pot;
}

// Derivatives of a at a point through third order (holomorphic index i, antiholomorphic jb).
struct PotentialJets {
  std::size_t dim = 0;
  double a = 0;
  std::vector<cd> d;                        // a_i
  std::vector<std::vector<cd>> dd;          // a_ij
  std::vector<std::vector<cd>> ddbar;       // a_{i jbar}
  std::vector<std::vector<std::vector<cd>>> dddbar;  // a_{i j kbar}

  cd dbar(std::size_t j) const { return std::conj(d[j]); }
};

inline PotentialJets jets_at(const Potential& p, const std::vector<cd>& z) {
  std::size_t D = p.dim;
  auto x = p.arguments(z);
  PotentialJets j;
  j.dim = D;
  cd v = p.poly.evaluate(x);
  j.a = v.real();
  j.d.resize(D);
  j.dd.assign(D, std::vector<cd>(D));
  j.ddbar.assign(D, std::vector<cd>(D));
  j.dddbar.assign(D, std::vector<std::vector<cd>>(D, std::vector<cd>(D)));
  for (std::size_t i = 0; i < D; ++i) {
    CPoly pi = p.poly.derivative(p.zvar(i));
    j.d[i] = pi.evaluate(x);
    for (std::size_t k = 0; k < D; ++k) {
      CPoly pik = pi.derivative(p.zvar(k));
      j.dd[i][k] = pik.evaluate(x);
      j.ddbar[i][k] = pi.derivative(p.zbvar(k)).evaluate(x);
      for (std::size_t l = 0; l < D; ++l) j.dddbar[i][k][l] = pik.derivative(p.zbvar(l)).evaluate(x);
    }
  }
  return j;
}

// ---------------------------------------------------------------------------
// Calabi ansatz metric i ddbar (a |xi|^-2)^delta in coordinates (xi, z_1..z_D); index 0 is xi.

inline Rational calabi_exponent(const Rational& mu, int dim_d) {
  if (sgn(mu) <= 0) throw ValidationError("mu must be positive");
  if (dim_d < 1) throw ValidationError("dim D must be positive");
  Rational d = mu / (dim_d + 1);
  d.canonicalize();
  return d;
}

// g_{A Bbar} from the potential's 2-jet; general point, no normalization assumed.
inline CMatrix calabi_metric(const PotentialJets& j, double delta, cd xi) {
  std::size_t D = j.dim;
  double A = j.a;
  if (!(A > 0)) throw ValidationError("potential must be positive at the point");
  if (std::abs(xi) == 0) throw ValidationError("xi must be nonzero");
  double r2 = std::norm(xi);
  double s = std::pow(r2, -delta);  // |xi|^{-2 delta}
  CMatrix g(D + 1, D + 1);
  g(0, 0) = delta * delta * std::pow(A, delta) * s / r2;
  for (std::size_t b = 0; b < D; ++b) {
    // g_{0 bbar}
    cd v = -delta * delta * std::pow(A, delta - 1) * j.dbar(b) / xi * s;
    g(0, b + 1) = v;
    g(b + 1, 0) = std::conj(v);
  }
  for (std::size_t a = 0; a < D; ++a)
    for (std::size_t b = 0; b < D; ++b)
      g(a + 1, b + 1) = s * (delta * std::pow(A, delta - 1) * j.ddbar[a][b] +
                             delta * (delta - 1) * std::pow(A, delta - 2) * j.d[a] * j.dbar(b));
  return g;
}

inline CMatrix calabi_metric(const Potential& p, double delta, const std::vector<cd>& z, cd xi) {
  return calabi_metric(jets_at(p, z), delta, xi);
}

// Comparison metric pi^* omega_D + eps i ddbar(|xi|^2 / a), omega_D = i ddbar log a.
inline CMatrix comparison_metric(const PotentialJets& j, cd xi, double eps = 0.1) {
  std::size_t D = j.dim;
  double A = j.a;
  CMatrix g(D + 1, D + 1);
  g(0, 0) = eps / A;
  for (std::size_t b = 0; b < D; ++b) {
    cd v = eps * std::conj(xi) * (-j.dbar(b) / (A * A));
    g(0, b + 1) = v;
    g(b + 1, 0) = std::conj(v);
  }
  double r2 = std::norm(xi);
  for (std::size_t a = 0; a < D; ++a)
    for (std::size_t b = 0; b < D; ++b) {
      cd logab = j.ddbar[a][b] / A - j.d[a] * j.dbar(b) / (A * A);
      cd invab = -j.ddbar[a][b] / (A * A) + 2.0 * j.d[a] * j.dbar(b) / (A * A * A);
      g(a + 1, b + 1) = logab + eps * r2 * invab;
    }
  return g;
}

using Christoffel = std::vector<std::vector<std::vector<cd>>>;  // gamma[k][i][j] = Gamma^k_{ij}

struct ConeChart {
  Rational delta;
  std::size_t dim_d = 1;
  std::vector<cd> z;
  cd xi{1.0, 0.0};
  Potential potential;

  double delta_d() const { return delta.get_d(); }
  PotentialJets jets() const { return jets_at(potential, z); }
};

struct NormalizationDefect {
  double first = 0;   // max |a_i|
  double second = 0;  // max |a_ij|
  double hermitian = 0;  // max |a_{i jbar} - a delta_ij|
  double third = 0;   // max |a_{i j kbar}|
  double max() const { return std::max({first, second, hermitian, third}); }
};

inline NormalizationDefect normalization_defect(const PotentialJets& j) {
  NormalizationDefect n;
  for (std::size_t i = 0; i < j.dim; ++i) {
    n.first = std::max(n.first, std::abs(j.d[i]));
    for (std::size_t k = 0; k < j.dim; ++k) {
      n.second = std::max(n.second, std::abs(j.dd[i][k]));
      n.hermitian = std::max(n.hermitian, std::abs(j.ddbar[i][k] - (i == k ? j.a : 0.0)));
      for (std::size_t l = 0; l < j.dim; ++l) n.third = std::max(n.third, std::abs(j.dddbar[i][k][l]));
    }
  }
  return n;
}

struct MetricAtPoint {
  CMatrix g;
  Christoffel gamma;
  double r = 0;                 // h^{delta/2}
  std::vector<double> dz_norm;  // |dz^i|
  double dxi_norm = 0;          // |dxi|
};

// Closed formulas at a normalized point.
inline MetricAtPoint metric_at(const ConeChart& c, double tol = 1e-12) {
  if (sgn(c.delta) <= 0) throw ValidationError("delta must be positive");
  if (c.z.size() != c.dim_d || c.potential.dim != c.dim_d) throw ValidationError("chart dimension mismatch");
  PotentialJets j = c.jets();
  if (!(j.a > 0)) throw ValidationError("potential must be positive at the point");
  NormalizationDefect nd = normalization_defect(j);
  if (nd.max() > tol)
    throw NotNormalizedChart("chart is not normalized (defect " + std::to_string(nd.max()) + ")");
  double d = c.delta_d();
  std::size_t D = c.dim_d;
  double r2 = std::norm(c.xi);
  MetricAtPoint m;
  m.g = CMatrix::Zero(D + 1, D + 1);
  m.g(0, 0) = d * d * std::pow(j.a, d) * std::pow(r2, -(d + 1));
  for (std::size_t i = 1; i <= D; ++i) m.g(i, i) = d * std::pow(j.a, d) * std::pow(r2, -d);
  m.gamma.assign(D + 1, std::vector<std::vector<cd>>(D + 1, std::vector<cd>(D + 1)));
  for (std::size_t i = 1; i <= D; ++i) {
    m.gamma[i][i][0] = -d / c.xi;
    m.gamma[i][0][i] = -d / c.xi;
  }
  m.gamma[0][0][0] = -(d + 1) / c.xi;
  m.r = std::pow(j.a / r2, d / 2);
  m.dz_norm.assign(D, std::pow(d, -0.5) * std::pow(j.a, -d / 2) * std::pow(r2, d / 2));
  m.dxi_norm = std::pow(d, -1.0) * std::pow(j.a, -d / 2) * std::pow(r2, (d + 1) / 2);
  return m;
}

// ---------------------------------------------------------------------------
// Finite differences in the real coordinates of (xi, z)

struct FDOptions {
  double step = 1e-4;
  bool richardson = true;
};

namespace detail {

// point with coordinate k (0 = xi) moved by t in the real (imag=false) or imaginary direction
inline void shift(std::vector<cd>& z, cd& xi, std::size_t k, bool imag, double t) {
  cd dv = imag ? cd(0, t) : cd(t, 0);
  if (k == 0) xi += dv;
  else z[k - 1] += dv;
}

template <class F>
auto central(F&& f, std::size_t k, bool imag, const std::vector<cd>& z, cd xi, double h) {
  auto zp = z, zm = z;
  cd xp = xi, xm = xi;
  shift(zp, xp, k, imag, h);
  shift(zm, xm, k, imag, -h);
  auto fp = f(zp, xp);
  auto fm = f(zm, xm);
  return ((fp - fm) / (2 * h)).eval();
}

template <class F>
auto real_derivative(F&& f, std::size_t k, bool imag, const std::vector<cd>& z, cd xi, const FDOptions& o) {
  auto d1 = central(f, k, imag, z, xi, o.step);
  if (!o.richardson) return d1;
  auto d2 = central(f, k, imag, z, xi, o.step / 2);
  return ((4.0 * d2 - d1) / 3.0).eval();
}

// d/dw_k = (d/dx - i d/dy)/2 ; d/dwbar_k = (d/dx + i d/dy)/2
template <class F>
auto holo_derivative(F&& f, std::size_t k, bool bar, const std::vector<cd>& z, cd xi, const FDOptions& o) {
  auto dx = real_derivative(f, k, false, z, xi, o);
  auto dy = real_derivative(f, k, true, z, xi, o);
  cd s = bar ? cd(0, 1) : cd(0, -1);
  return ((dx + s * dy) * 0.5).eval();
}

inline CMatrix as_matrix(cd v) {
  CMatrix m(1, 1);
  m(0, 0) = v;
  return m;
}

}  // namespace detail

// dg[c] = d g_{A Bbar} / d w^c by finite differences
inline std::vector<CMatrix> metric_derivatives_fd(const Potential& p, double delta, const std::vector<cd>& z, cd xi,
                                                  const FDOptions& o = {}) {
  auto f = [&](const std::vector<cd>& zz, cd xx) { return calabi_metric(p, delta, zz, xx); };
  std::vector<CMatrix> out;
  for (std::size_t k = 0; k <= p.dim; ++k) out.push_back(detail::holo_derivative(f, k, false, z, xi, o));
  return out;
}

inline Christoffel christoffel_from(const CMatrix& g, const std::vector<CMatrix>& dg) {
  std::size_t n = static_cast<std::size_t>(g.rows());
  CMatrix ginv = g.inverse();
  Christoffel gamma(n, std::vector<std::vector<cd>>(n, std::vector<cd>(n)));
  // Gamma^k_{ij} = g^{k lbar} d_i g_{j lbar}, with g^{k lbar} = ginv(l, k)
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        cd s = 0;
        for (std::size_t l = 0; l < n; ++l) s += ginv(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) * dg[i](static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l));
        gamma[k][i][j] = s;
      }
  return gamma;
}

inline Christoffel christoffel_fd(const Potential& p, double delta, const std::vector<cd>& z, cd xi, const FDOptions& o = {}) {
  return christoffel_from(calabi_metric(p, delta, z, xi), metric_derivatives_fd(p, delta, z, xi, o));
}

inline double christoffel_difference(const Christoffel& a, const Christoffel& b) {
  double m = 0;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[k][i][j] - b[k][i][j]));
  return m;
}

// ---------------------------------------------------------------------------
// Tensor norms and scaling

struct TensorType {
  int p_h = 0, p_v = 0, q_h = 0, q_v = 0;
};

inline Rational scaling_exponent(const TensorType& t, const Rational& delta) {
  if (t.p_h < 0 || t.p_v < 0 || t.q_h < 0 || t.q_v < 0) throw ValidationError("tensor slot counts must be nonnegative");
  Rational e = delta * t.p_h + (delta + 1) * t.p_v - delta * t.q_h - (delta + 1) * t.q_v;
  e.canonicalize();
  return e;
}

// |T| for T = sum T(a, b) dw^a (x) d/dw^b under the hermitian metric g.
inline double tensor11_norm(const CMatrix& g, const CMatrix& t) {
  CMatrix ginv = g.inverse();
  // |T|^2 = sum T_a^b conj(T_c^d) g^{a cbar} g_{b dbar}, g^{a cbar} = ginv(c, a)
  cd s = 0;
  Eigen::Index n = g.rows();
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      if (t(a, b) == cd(0)) continue;
      for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index d = 0; d < n; ++d) s += t(a, b) * std::conj(t(c, d)) * ginv(c, a) * g(b, d);
    }
  return std::sqrt(std::max(0.0, s.real()));
}

inline double covector_norm(const CMatrix& g, Eigen::Index a) { return std::sqrt(g.inverse()(a, a).real()); }
inline double vector_norm(const CMatrix& g, Eigen::Index a) { return std::sqrt(g(a, a).real()); }

// The four (1,1) component types: covariant slot (0 = vertical xi, 1 = horizontal z1) and contravariant slot.
struct ComponentType {
  const char* name;
  Eigen::Index cov;
  Eigen::Index contra;
  TensorType type;
};

inline std::vector<ComponentType> one_one_types() {
  return {
      {"dxi (x) d/dz", 0, 1, TensorType{0, 1, 1, 0}},
      {"dz (x) d/dxi", 1, 0, TensorType{1, 0, 0, 1}},
      {"dxi (x) d/dxi", 0, 0, TensorType{0, 1, 0, 1}},
      {"dz (x) d/dz", 1, 1, TensorType{1, 0, 1, 0}},
  };
}

struct SlopeMeasurement {
  std::string name;
  double predicted = 0;
  double measured = 0;
  double relative_error() const {
    return predicted == 0 ? std::abs(measured) : std::abs(measured - predicted) / std::abs(predicted);
  }
};

// least-squares slope of log ratio against log |xi| over xi = 2^-k, k in [k0, k1]
inline std::vector<SlopeMeasurement> scaling_slopes(const ConeChart& c, int k0, int k1, double eps = 0.1) {
  PotentialJets j = c.jets();
  double d = c.delta_d();
  std::vector<SlopeMeasurement> out;
  for (const auto& ct : one_one_types()) {
    std::vector<double> xs, ys;
    for (int k = k0; k <= k1; ++k) {
      cd xi = std::polar(std::ldexp(1.0, -k), std::arg(c.xi));
      CMatrix g0 = calabi_metric(j, d, xi);
      CMatrix gt = comparison_metric(j, xi, eps);
      CMatrix t = CMatrix::Zero(g0.rows(), g0.cols());
      t(ct.cov, ct.contra) = 1;
      xs.push_back(std::log(std::abs(xi)));
      ys.push_back(std::log(tensor11_norm(g0, t) / tensor11_norm(gt, t)));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(ys.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
    out.push_back({ct.name, scaling_exponent(ct.type, c.delta).get_d(), sxy / sxx});
  }
  return out;
}

// |grad d/dxi| * r / |d/dxi| using finite-difference Christoffels at a general point.
inline double derivative_norm_ratio(const Potential& p, double delta, const std::vector<cd>& z, cd xi, const FDOptions& o = {}) {
  CMatrix g = calabi_metric(p, delta, z, xi);
  Christoffel gam = christoffel_fd(p, delta, z, xi, o);
  std::size_t n = static_cast<std::size_t>(g.rows());
  CMatrix t(n, n);  // (grad d/dxi) = Gamma^b_{a0} dw^a (x) d/dw^b
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) t(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = gam[b][a][0];
  double r = std::sqrt(std::pow(p.value(z).real() / std::norm(xi), delta));
  return tensor11_norm(g, t) * r / vector_norm(g, 0);
}

// 4 g^{A Bbar} r_A r_Bbar with r = Phi^{1/2}; equals 1 on a Riemannian cone.
inline double radial_gradient_norm2(const Potential& p, double delta, const std::vector<cd>& z, cd xi, const FDOptions& o = {}) {
  auto r = [&](const std::vector<cd>& zz, cd xx) {
    return detail::as_matrix(std::pow(p.value(zz).real() / std::norm(xx), delta / 2));
  };
  CMatrix g = calabi_metric(p, delta, z, xi);
  CMatrix ginv = g.inverse();
  std::size_t n = static_cast<std::size_t>(g.rows());
  std::vector<cd> dr(n);
  for (std::size_t k = 0; k < n; ++k) dr[k] = detail::holo_derivative(r, k, false, z, xi, o)(0, 0);
  cd s = 0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) s += ginv(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) * dr[a] * std::conj(dr[b]);
  return 4 * s.real();
}

// ---------------------------------------------------------------------------
// Curvature

namespace detail {

// d^2 f / dw_a dwbar_b from real second differences
template <class F>
auto mixed_second(F&& f, std::size_t a, std::size_t b, const std::vector<cd>& z, cd xi, double h) {
  // d_a dbar_b = 1/4 (dx_a - i dy_a)(dx_b + i dy_b)
  auto d2 = [&](bool ia, bool ib) {
    auto at = [&](double sa, double sb) {
      auto zz = z;
      cd xx = xi;
      shift(zz, xx, a, ia, sa * h);
      shift(zz, xx, b, ib, sb * h);
      return f(zz, xx);
    };
    return ((at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * h * h)).eval();
  };
  auto xx = d2(false, false), xy = d2(false, true), yx = d2(true, false), yy = d2(true, true);
  // (dx_a - i dy_a)(dx_b + i dy_b) = xx + i xy - i yx + yy
  return ((xx + cd(0, 1) * xy - cd(0, 1) * yx + yy) * 0.25).eval();
}

template <class F>
auto mixed_second_rich(F&& f, std::size_t a, std::size_t b, const std::vector<cd>& z, cd xi, const FDOptions& o) {
  auto d1 = mixed_second(f, a, b, z, xi, o.step);
  if (!o.richardson) return d1;
  auto d2 = mixed_second(f, a, b, z, xi, o.step / 2);
  return ((4.0 * d2 - d1) / 3.0).eval();
}

}  // namespace detail

struct CurvatureReport {
  double max_value = 0;       // max |R| (full tensor) or max Ricci defect
  double richardson_gap = 0;  // |extrapolated - coarse| as a convergence diagnostic
  bool converged = true;
  std::vector<std::string> notes;
};

// Full curvature R_{a bbar c dbar} = -d_c dbar_d g_{a bbar} + g^{p qbar} d_c g_{a qbar} dbar_d g_{p bbar}.
inline CurvatureReport full_curvature(const Potential& p, double delta, const std::vector<cd>& z, cd xi, const FDOptions& o = {}) {
  auto f = [&](const std::vector<cd>& zz, cd xx) { return calabi_metric(p, delta, zz, xx); };
  CMatrix g = f(z, xi);
  CMatrix ginv = g.inverse();
  std::vector<CMatrix> dg = metric_derivatives_fd(p, delta, z, xi, o);
  std::size_t n = static_cast<std::size_t>(g.rows());
  CurvatureReport rep;
  FDOptions coarse = o;
  coarse.richardson = false;
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t d = 0; d < n; ++d) {
      CMatrix ddg = detail::mixed_second_rich(f, c, d, z, xi, o);
      CMatrix ddg0 = detail::mixed_second_rich(f, c, d, z, xi, coarse);
      rep.richardson_gap = std::max(rep.richardson_gap, (ddg - ddg0).cwiseAbs().maxCoeff());
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
          cd s = -ddg(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
          for (std::size_t pp = 0; pp < n; ++pp)
            for (std::size_t q = 0; q < n; ++q) {
              // dbar_d g_{p bbar} = conj(d_d g_{b pbar})
              cd dbar_g = std::conj(dg[d](static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(pp)));
              s += ginv(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(pp)) *
                   dg[c](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(q)) * dbar_g;
            }
          rep.max_value = std::max(rep.max_value, std::abs(s));
        }
    }
  return rep;
}

// Defect of Ric(omega_0) = (mu - n delta) pi^* omega_D with Ric = -i ddbar log det g, n = D + 1.
inline CurvatureReport ricci_defect(const Potential& p, double delta, double mu, const std::vector<cd>& z, cd xi,
                                    const FDOptions& o = {}) {
  auto logdet = [&](const std::vector<cd>& zz, cd xx) {
    return detail::as_matrix(std::log(calabi_metric(p, delta, zz, xx).determinant().real()));
  };
  PotentialJets j = jets_at(p, z);
  double n = static_cast<double>(p.dim + 1);
  std::size_t N = p.dim + 1;
  CurvatureReport rep;
  FDOptions coarse = o;
  coarse.richardson = false;
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = 0; b < N; ++b) {
      cd ric = -detail::mixed_second_rich(logdet, a, b, z, xi, o)(0, 0);
      cd ric0 = -detail::mixed_second_rich(logdet, a, b, z, xi, coarse)(0, 0);
      rep.richardson_gap = std::max(rep.richardson_gap, std::abs(ric - ric0));
      cd base = 0;
      if (a > 0 && b > 0)
        base = j.ddbar[a - 1][b - 1] / j.a - j.d[a - 1] * j.dbar(b - 1) / (j.a * j.a);
      rep.max_value = std::max(rep.max_value, std::abs(ric - (mu - n * delta) * base));
    }
  return rep;
}

inline void require_nondegenerate(const Potential& p, double delta, const std::vector<cd>& z, cd xi) {
  CMatrix g = calabi_metric(p, delta, z, xi);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(g);
  double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (!(lo > 1e-12 * std::max(1.0, hi)))
    throw ValidationError("cone metric is degenerate at this point (i ddbar log a is not positive definite)");
}

struct GridPoint {
  std::vector<cd> z;
  cd xi;
};

inline CurvatureReport curvature_check(const Potential& p, double delta, std::optional<double> mu, const std::vector<GridPoint>& grid,
                                       const FDOptions& o = {}) {
  CurvatureReport total;
  for (const auto& pt : grid) {
    require_nondegenerate(p, delta, pt.z, pt.xi);
    CurvatureReport r = mu ? ricci_defect(p, delta, *mu, pt.z, pt.xi, o) : full_curvature(p, delta, pt.z, pt.xi, o);
    total.max_value = std::max(total.max_value, r.max_value);
    total.richardson_gap = std::max(total.richardson_gap, r.richardson_gap);
  }
  // Richardson removes O(h^2); a gap far above the reported value means the step is not in the asymptotic range
  if (total.richardson_gap > 1e3 * std::max(total.max_value, 1e-9)) {
    total.converged = false;
    total.notes.push_back("convergence-not-reached: Richardson correction dominates the reported value");
  }
  return total;
}

// ---------------------------------------------------------------------------
// Normalization helper: new coordinates w and frame with z = z0 + L(w + Q(w,w)/2), a -> a |e^f|^2.

struct NormalizedChart {
  Potential potential;  // in w coordinates, centered at w = 0
  CMatrix L;
  std::vector<CMatrix> Q;  // Q[k](i, j)
  std::vector<cd> f_linear;
  CMatrix f_quadratic;
  double a0 = 0;
};

namespace detail {

// log a jets from a jets
struct LogJets {
  std::vector<cd> l1;
  std::vector<std::vector<cd>> l2, l11;
  std::vector<std::vector<std::vector<cd>>> l21;
};

inline LogJets log_jets(const PotentialJets& j) {
  std::size_t D = j.dim;
  double a = j.a;
  LogJets L;
  L.l1.resize(D);
  L.l2.assign(D, std::vector<cd>(D));
  L.l11.assign(D, std::vector<cd>(D));
  L.l21.assign(D, std::vector<std::vector<cd>>(D, std::vector<cd>(D)));
  for (std::size_t i = 0; i < D; ++i) {
    L.l1[i] = j.d[i] / a;
    for (std::size_t k = 0; k < D; ++k) {
      L.l2[i][k] = j.dd[i][k] / a - j.d[i] * j.d[k] / (a * a);
      L.l11[i][k] = j.ddbar[i][k] / a - j.d[i] * j.dbar(k) / (a * a);
      for (std::size_t l = 0; l < D; ++l)
        L.l21[i][k][l] = j.dddbar[i][k][l] / a -
                         (j.dd[i][k] * j.dbar(l) + j.ddbar[i][l] * j.d[k] + j.ddbar[k][l] * j.d[i]) / (a * a) +
                         2.0 * j.d[i] * j.d[k] * j.dbar(l) / (a * a * a);
    }
  }
  return L;
}

inline CPoly conj_poly(const CPoly& p, std::size_t D) {
  CPoly out(p.nvars());
  for (const auto& [e, c] : p.terms()) {
    Exponent f(e.size());
    for (std::size_t i = 0; i < D; ++i) {
      f[i] = e[D + i];
      f[D + i] = e[i];
    }
    out.add_term(f, std::conj(c));
  }
  return out;
}

inline CPoly truncate_degree(const CPoly& p, int deg) {
  CPoly out(p.nvars());
  for (const auto& [e, c] : p.terms())
    if (total_degree(e) <= deg) out.add_term(e, c);
  return out;
}

}  // namespace detail

inline NormalizedChart normalize_chart(const Potential& p, const std::vector<cd>& z0) {
  std::size_t D = p.dim;
  std::size_t nv = 2 * D;
  PotentialJets j0 = jets_at(p, z0);
  if (!(j0.a > 0)) throw ValidationError("potential must be positive at the point");
  detail::LogJets l0 = detail::log_jets(j0);
  NormalizedChart out;
  // H_{i jbar} = l_{i jbar} = C C^*, L = (C^{-1})^T gives L^T H conj(L) = I
  CMatrix H(D, D);
  for (std::size_t i = 0; i < D; ++i)
    for (std::size_t k = 0; k < D; ++k) H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = l0.l11[i][k];
  Eigen::LLT<CMatrix> llt(H);
  if (llt.info() != Eigen::Success) throw ValidationError("i ddbar log a is not positive definite at the point");
  CMatrix C = llt.matrixL();
  out.L = CMatrix(C.inverse()).transpose();
  // third jets in v coordinates (z = z0 + L v): l'_{ijkbar} = L_pi L_qj conj(L_rk) l_{pq rbar}
  out.Q.assign(D, CMatrix::Zero(D, D));
  for (std::size_t i = 0; i < D; ++i)
    for (std::size_t jj = 0; jj < D; ++jj)
      for (std::size_t k = 0; k < D; ++k) {
        cd s = 0;
        for (std::size_t pp = 0; pp < D; ++pp)
          for (std::size_t q = 0; q < D; ++q)
            for (std::size_t r = 0; r < D; ++r)
              s += out.L(static_cast<Eigen::Index>(pp), static_cast<Eigen::Index>(i)) *
                   out.L(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(jj)) *
                   std::conj(out.L(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k))) * l0.l21[pp][q][r];
        // with the v-metric the identity, Q^k_{ij} = -l'_{i j kbar}
        out.Q[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(jj)) = -s;
      }
  // z_i = z0_i + sum_p L_ip (w_p + 1/2 Q^p(w, w))
  std::vector<CPoly> subs(nv, CPoly(nv));
  for (std::size_t i = 0; i < D; ++i) {
    CPoly zi = CPoly::constant(nv, z0[i]);
    for (std::size_t pp = 0; pp < D; ++pp) {
      cd lip = out.L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(pp));
      CPoly vp = CPoly::variable(nv, pp);
      for (std::size_t a = 0; a < D; ++a)
        for (std::size_t b = 0; b < D; ++b)
          vp += CPoly::variable(nv, a) * CPoly::variable(nv, b) * (0.5 * out.Q[pp](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
      zi += vp * lip;
    }
    subs[i] = zi;
    subs[D + i] = detail::conj_poly(zi, D);
  }
  CPoly composed = p.poly.substitute(subs);
  Potential mid{D, composed};
  PotentialJets j1 = jets_at(mid, std::vector<cd>(D, 0.0));
  detail::LogJets l1 = detail::log_jets(j1);
  // frame: f = -(l_i w_i + 1/2 l_ij w_i w_j), a -> a exp(f + fbar)
  CPoly f(nv);
  out.f_linear.assign(D, 0.0);
  out.f_quadratic = CMatrix::Zero(D, D);
  for (std::size_t i = 0; i < D; ++i) {
    out.f_linear[i] = -l1.l1[i];
    f += CPoly::variable(nv, i) * (-l1.l1[i]);
    for (std::size_t k = 0; k < D; ++k) {
      out.f_quadratic(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = -0.5 * l1.l2[i][k];
      f += CPoly::variable(nv, i) * CPoly::variable(nv, k) * (-0.5 * l1.l2[i][k]);
    }
  }
  CPoly s = f + detail::conj_poly(f, D);
  CPoly e = CPoly::constant(nv, 1.0), term = CPoly::constant(nv, 1.0);
  for (int n = 1; n <= 3; ++n) {
    term = detail::truncate_degree(term * s, 3) * cd(1.0 / n);
    e += term;
  }
  out.potential = Potential{D, composed * e};
  out.a0 = jets_at(out.potential, std::vector<cd>(D, 0.0)).a;
  return out;
}

}  // namespace conedef
