#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "conedef/errors.hpp"
#include "conedef/parse.hpp"
#include "conedef/polynomial.hpp"
#include "conedef/rational.hpp"

namespace conedef {

namespace detail {

template <class T, class = void>
struct has_is_zero : std::false_type {};
template <class T>
struct has_is_zero<T, std::void_t<decltype(std::declval<const T&>().is_zero())>> : std::true_type {};

template <class C>
bool coeff_is_zero(const C& c) {
  if constexpr (has_is_zero<C>::value) return c.is_zero();
  else return field_traits<C>::is_zero(c);
}

template <class C>
struct scalar_of {
  using type = C;
};
template <class S>
struct scalar_of<Polynomial<S>> {
  using type = S;
};

template <class C>
std::string coeff_str(const C& c) {
  if constexpr (std::is_same_v<C, Rational> || std::is_same_v<C, GaussRational>) return to_string(c);
  else return c.to_string();
}

}  // namespace detail

// Finite Laurent polynomial in one variable z. The coefficient ring C may carry its own
// zero (a polynomial ring of fixed arity), so every instance remembers one.
template <class C>
class LaurentPoly {
public:
  using Terms = std::map<int, C>;
  using Scalar = typename detail::scalar_of<C>::type;

  explicit LaurentPoly(C zero = C()) : zero_(std::move(zero)) {}

  static LaurentPoly monomial(int e, const C& c, C zero = C()) {
    LaurentPoly p(std::move(zero));
    p.add_term(e, c);
    return p;
  }

  const Terms& terms() const { return terms_; }
  const C& zero() const { return zero_; }
  bool is_zero() const { return terms_.empty(); }
  int min_exp() const { return terms_.empty() ? 0 : terms_.begin()->first; }
  int max_exp() const { return terms_.empty() ? 0 : terms_.rbegin()->first; }
  bool is_polynomial() const { return terms_.empty() || min_exp() >= 0; }
  bool is_monomial() const { return terms_.size() == 1; }

  C coeff(int e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? zero_ : it->second;
  }

  void add_term(int e, const C& c) {
    if (detail::coeff_is_zero(c)) return;
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      terms_.emplace(e, c);
      return;
    }
    it->second += c;
    if (detail::coeff_is_zero(it->second)) terms_.erase(it);
  }
  void set_term(int e, const C& c) {
    terms_.erase(e);
    add_term(e, c);
  }

  // terms with lo <= exponent <= hi
  LaurentPoly part(int lo, int hi) const {
    LaurentPoly p(zero_);
    for (auto it = terms_.lower_bound(lo); it != terms_.end() && it->first <= hi; ++it) p.terms_.emplace(it->first, it->second);
    return p;
  }

  LaurentPoly shifted(int k) const {
    LaurentPoly p(zero_);
    for (const auto& [e, c] : terms_) p.terms_.emplace(e + k, c);
    return p;
  }

  LaurentPoly derivative() const {
    LaurentPoly p(zero_);
    for (const auto& [e, c] : terms_)
      if (e != 0) p.add_term(e - 1, c * Scalar(e));
    return p;
  }

  // f(1/z)
  LaurentPoly inverted() const {
    LaurentPoly p(zero_);
    for (const auto& [e, c] : terms_) p.terms_.emplace(-e, c);
    return p;
  }

  template <class F>
  LaurentPoly map_coeffs(F&& f, C zero) const {
    LaurentPoly p(std::move(zero));
    for (const auto& [e, c] : terms_) p.add_term(e, f(c));
    return p;
  }

  LaurentPoly& operator+=(const LaurentPoly& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  LaurentPoly& operator-=(const LaurentPoly& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }
  friend LaurentPoly operator+(LaurentPoly a, const LaurentPoly& b) { return a += b; }
  friend LaurentPoly operator-(LaurentPoly a, const LaurentPoly& b) { return a -= b; }
  friend LaurentPoly operator-(const LaurentPoly& a) {
    LaurentPoly p(a.zero_);
    for (const auto& [e, c] : a.terms_) p.terms_.emplace(e, -c);
    return p;
  }

  friend LaurentPoly operator*(const LaurentPoly& a, const LaurentPoly& b) {
    LaurentPoly p(a.zero_);
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) p.add_term(ea + eb, ca * cb);
    return p;
  }
  LaurentPoly& operator*=(const LaurentPoly& o) { return *this = *this * o; }

  LaurentPoly scaled(const C& s) const {
    LaurentPoly p(zero_);
    for (const auto& [e, c] : terms_) p.add_term(e, c * s);
    return p;
  }
  LaurentPoly scaled_by_scalar(const Scalar& s) const {
    LaurentPoly p(zero_);
    for (const auto& [e, c] : terms_) p.add_term(e, c * s);
    return p;
  }

  friend bool operator==(const LaurentPoly& a, const LaurentPoly& b) {
    if (a.terms_.size() != b.terms_.size()) return false;
    auto ib = b.terms_.begin();
    for (auto ia = a.terms_.begin(); ia != a.terms_.end(); ++ia, ++ib)
      if (ia->first != ib->first || !(ia->second == ib->second)) return false;
    return true;
  }
  friend bool operator!=(const LaurentPoly& a, const LaurentPoly& b) { return !(a == b); }

  std::string to_string(const std::string& var = "z") const {
    return to_string_with([](const C& c) { return detail::coeff_str(c); }, var);
  }

  template <class Fmt>
  std::string to_string_with(Fmt&& fmt, const std::string& var = "z") const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      const auto& [e, c] = *it;
      std::string cs = fmt(c);
      bool neg = false;
      if constexpr (std::is_same_v<C, Rational> || std::is_same_v<C, GaussRational>) neg = field_traits<C>::is_negative(c);
      std::string mag = neg ? fmt(C(-c)) : cs;
      bool compound = mag.find_first_of("+-", 1) != std::string::npos || mag.find('i') != std::string::npos ||
                      mag.find('*') != std::string::npos || mag.find_first_of("abcdefghjklmnopqrstuvwxyz") != std::string::npos;
      if (first) out += neg ? "-" : "";
      else out += neg ? " - " : " + ";
      first = false;
      if (e == 0) {
        out += compound ? "(" + mag + ")" : mag;
        continue;
      }
      std::string mono = var;
      if (e != 1) mono += "^" + std::to_string(e);
      if (mag == "1") out += mono;
      else out += (compound ? "(" + mag + ")" : mag) + "*" + mono;
    }
    return out;
  }

private:
  Terms terms_;
  C zero_;
};

using GaussLaurent = LaurentPoly<GaussRational>;

namespace detail {

// coeff := int('/'int)? 'i'? | 'i' | '(' gauss ')'
inline GaussRational gauss_literal(Cursor& c) {
  if (c.accept('(')) {
    GaussRational v;
    bool first = true;
    while (!c.accept(')')) {
      Rational sign(1);
      if (c.accept('-')) sign = -1;
      else if (!c.accept('+') && !first) c.fail("expected '+', '-' or ')'");
      first = false;
      if (c.peek() == 'i') {
        c.expect('i');
        v.im += sign;
        continue;
      }
      Rational r = c.rational_literal();
      if (c.peek() == 'i') {
        c.expect('i');
        v.im += sign * r;
      } else {
        v.re += sign * r;
      }
    }
    return v;
  }
  if (c.peek() == 'i') {
    c.expect('i');
    return GaussRational::i();
  }
  Rational r = c.rational_literal();
  if (c.peek() == 'i') {
    c.expect('i');
    return {Rational(0), r};
  }
  return GaussRational(r);
}

}  // namespace detail

// laurent := lterm (('+'|'-') lterm)*; lterm := coeff? ('*'? 'z' ('^' int)?)?, exponents may be negative
inline GaussLaurent parse_laurent(std::string_view text, int line = 1, int column_offset = 0) {
  Cursor c(text, line);
  GaussLaurent out;
  auto fail = [&](const std::string& msg) { throw ParseError(msg, line, c.column() + column_offset); };
  if (c.at_end()) fail("empty Laurent polynomial");
  bool first = true;
  while (true) {
    GaussRational sign(1);
    if (c.accept('-')) sign = GaussRational(-1);
    else if (c.accept('+')) sign = GaussRational(1);
    else if (!first) fail("expected '+' or '-'");
    first = false;
    if (c.at_end()) fail("expected term");
    GaussRational coeff(1);
    bool have_coeff = false;
    char nx = c.peek();
    if (c.digit_next() || nx == '(' || nx == 'i') {
      try {
        coeff = detail::gauss_literal(c);
      } catch (const ParseError&) {
        fail("malformed coefficient");
      }
      have_coeff = true;
      if (c.accept('*') && c.peek() != 'z') fail("expected 'z' after '*'");
    }
    int e = 0;
    if (c.accept('z')) {
      e = 1;
      if (c.accept('^')) {
        if (!c.digit_next() && c.peek() != '-' && c.peek() != '+') fail("expected exponent after '^'");
        e = static_cast<int>(c.signed_int());
      }
    } else if (!have_coeff) {
      fail("expected coefficient or 'z'");
    }
    out.add_term(e, sign * coeff);
    if (c.at_end()) break;
    nx = c.peek();
    if (nx != '+' && nx != '-') fail(std::string("unexpected character '") + nx + "'");
  }
  return out;
}

// Power series in y truncated after y^order, with Laurent coefficients in z.
template <class C>
struct BiSeries {
  int order = 0;
  std::vector<LaurentPoly<C>> c;
  C zero_coeff;

  BiSeries() : BiSeries(0) {}
  BiSeries(int k, C zero = C()) : order(k), c(static_cast<std::size_t>(k + 1), LaurentPoly<C>(zero)), zero_coeff(zero) {}

  static BiSeries from_coeff(int k, const LaurentPoly<C>& l, int ypow = 0) {
    BiSeries s(k, l.zero());
    if (ypow <= k) s.c[static_cast<std::size_t>(ypow)] = l;
    return s;
  }
  // z itself
  static BiSeries z_var(int k, const C& one, C zero) { return from_coeff(k, LaurentPoly<C>::monomial(1, one, zero)); }
  // y itself
  static BiSeries y_var(int k, const C& one, C zero) { return from_coeff(k, LaurentPoly<C>::monomial(0, one, zero), 1); }

  const LaurentPoly<C>& operator[](int a) const { return c.at(static_cast<std::size_t>(a)); }
  LaurentPoly<C>& operator[](int a) { return c.at(static_cast<std::size_t>(a)); }

  // lowest power of y with a nonzero coefficient, or order+1
  int valuation() const {
    for (int a = 0; a <= order; ++a)
      if (!c[static_cast<std::size_t>(a)].is_zero()) return a;
    return order + 1;
  }
  bool is_zero() const { return valuation() > order; }

  BiSeries& operator+=(const BiSeries& o) {
    for (int a = 0; a <= order; ++a) (*this)[a] += o[a];
    return *this;
  }
  BiSeries& operator-=(const BiSeries& o) {
    for (int a = 0; a <= order; ++a) (*this)[a] -= o[a];
    return *this;
  }
  friend BiSeries operator+(BiSeries a, const BiSeries& b) { return a += b; }
  friend BiSeries operator-(BiSeries a, const BiSeries& b) { return a -= b; }

  friend BiSeries operator*(const BiSeries& a, const BiSeries& b) {
    BiSeries p(a.order, a.zero_coeff);
    int va = a.valuation(), vb = b.valuation();
    for (int i = va; i <= a.order; ++i) {
      if (a[i].is_zero()) continue;
      for (int j = vb; i + j <= a.order; ++j)
        if (!b[j].is_zero()) p[i + j] += a[i] * b[j];
    }
    return p;
  }

  BiSeries scaled(const LaurentPoly<C>& l) const {
    BiSeries p(order, zero_coeff);
    for (int a = 0; a <= order; ++a)
      if (!(*this)[a].is_zero()) p[a] = (*this)[a] * l;
    return p;
  }
  BiSeries scaled_by_scalar(const typename LaurentPoly<C>::Scalar& s) const {
    BiSeries p(order, zero_coeff);
    for (int a = 0; a <= order; ++a) p[a] = (*this)[a].scaled_by_scalar(s);
    return p;
  }

  BiSeries pow(int n, const C& one) const {
    BiSeries r = from_coeff(order, LaurentPoly<C>::monomial(0, one, zero_coeff));
    BiSeries base = *this;
    while (n > 0) {
      if (n & 1) r = r * base;
      n >>= 1;
      if (n > 0) base = base * base;
    }
    return r;
  }

  friend bool operator==(const BiSeries& a, const BiSeries& b) {
    if (a.order != b.order) return false;
    for (int k = 0; k <= a.order; ++k)
      if (a[k] != b[k]) return false;
    return true;
  }
};

namespace detail {

template <class S>
S scalar_pow(const S& c, int e) {
  S r = field_traits<S>::one();
  S b = e < 0 ? field_traits<S>::inverse(c) : c;
  for (int k = 0; k < (e < 0 ? -e : e); ++k) r *= b;
  return r;
}

template <class C>
typename scalar_of<C>::type scalar_value(const C& c) {
  if constexpr (std::is_same_v<C, typename scalar_of<C>::type>) {
    return c;
  } else {
    if (!c.is_constant()) throw ValidationError("expected a constant coefficient");
    return c.constant_term();
  }
}

}  // namespace detail

// f(U) for a Laurent polynomial f and a series U. Polynomial f is evaluated directly;
// otherwise U must be a monomial c*z^k plus terms of positive y-order, and f is
// Taylor-expanded around that monomial.
template <class C>
BiSeries<C> evaluate_at(const LaurentPoly<C>& f, const BiSeries<C>& u, const C& one) {
  using S = typename LaurentPoly<C>::Scalar;
  int K = u.order;
  BiSeries<C> out(K, u.zero_coeff);
  if (f.is_zero()) return out;
  if (f.is_polynomial()) {
    // Horner from the top exponent
    int top = f.max_exp();
    for (int e = top; e >= 0; --e) {
      out = out * u;
      C ce = f.coeff(e);
      if (!detail::coeff_is_zero(ce)) out[0].add_term(0, ce);
    }
    return out;
  }
  const LaurentPoly<C>& u0 = u[0];
  if (!u0.is_monomial()) throw ValidationError("cannot expand a Laurent function around a non-monomial");
  int k = u0.min_exp();
  S c0 = detail::scalar_value(u0.terms().begin()->second);
  BiSeries<C> delta = u;
  delta[0] = LaurentPoly<C>(u.zero_coeff);
  BiSeries<C> dpow = BiSeries<C>::from_coeff(K, LaurentPoly<C>::monomial(0, one, u.zero_coeff));
  LaurentPoly<C> deriv = f;
  S factorial = field_traits<S>::one();
  for (int n = 0; n <= K; ++n) {
    if (n > 0) {
      deriv = deriv.derivative();
      factorial *= S(n);
      dpow = dpow * delta;
    }
    if (deriv.is_zero() || dpow.is_zero()) break;
    // deriv evaluated at c0 z^k
    LaurentPoly<C> at(u.zero_coeff);
    for (const auto& [e, ce] : deriv.terms()) at.add_term(k * e, ce * detail::scalar_pow(c0, e));
    out += dpow.scaled(at).scaled_by_scalar(field_traits<S>::inverse(factorial));
  }
  return out;
}

// sum_a F_a(zs) * ys^a; ys must have no y^0 term.
template <class C>
BiSeries<C> compose(const BiSeries<C>& f, const BiSeries<C>& zs, const BiSeries<C>& ys, const C& one) {
  if (!ys[0].is_zero()) throw ValidationError("substituted normal coordinate must vanish on the curve");
  int K = f.order;
  BiSeries<C> out(K, f.zero_coeff);
  BiSeries<C> ypow = BiSeries<C>::from_coeff(K, LaurentPoly<C>::monomial(0, one, f.zero_coeff));
  for (int a = 0; a <= K; ++a) {
    if (a > 0) ypow = ypow * ys;
    if (ypow.is_zero()) break;
    if (f[a].is_zero()) continue;
    out += evaluate_at(f[a], zs, one) * ypow;
  }
  return out;
}

// A pair (Z, Y) of series: a map (z, y) -> (Z(z,y), Y(z,y)) between chart coordinates.
template <class C>
struct ChartMap {
  BiSeries<C> z;
  BiSeries<C> y;

  static ChartMap identity(int k, const C& one, C zero) {
    return {BiSeries<C>::z_var(k, one, zero), BiSeries<C>::y_var(k, one, zero)};
  }
};

// (g o f)(z, y) = g(f(z, y))
template <class C>
ChartMap<C> compose_maps(const ChartMap<C>& g, const ChartMap<C>& f, const C& one) {
  return {compose(g.z, f.z, f.y, one), compose(g.y, f.z, f.y, one)};
}

// Inverse of a map tangent to the identity along the curve: Z = z + O(y), Y = y + O(y^2)... fixed point
// X = id - (A - id)(X), iterated order+1 times.
template <class C>
ChartMap<C> invert_map(const ChartMap<C>& a, const C& one) {
  int K = a.z.order;
  ChartMap<C> id = ChartMap<C>::identity(K, one, a.z.zero_coeff);
  ChartMap<C> dev{a.z - id.z, a.y - id.y};
  if (!dev.z[0].is_zero() || !dev.y[0].is_zero() || !dev.y[1].is_zero())
    throw ValidationError("coordinate change must restrict to the identity on the curve and its normal bundle");
  ChartMap<C> x = id;
  for (int it = 0; it <= K + 1; ++it) {
    ChartMap<C> d = compose_maps(dev, x, one);
    ChartMap<C> nx{id.z - d.z, id.y - d.y};
    if (nx.z == x.z && nx.y == x.y) break;
    x = nx;
  }
  return x;
}

}  // namespace conedef
