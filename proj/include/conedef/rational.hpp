#pragma once

#include <gmpxx.h>

#include <complex>
#include <ostream>
#include <string>

namespace conedef {

using Rational = mpq_class;

inline Rational make_rational(long num, long den = 1) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

inline std::string to_string(const Rational& r) { return r.get_str(); }

// a + b i with a, b rational
struct GaussRational {
  Rational re;
  Rational im;

  GaussRational() : re(0), im(0) {}
  GaussRational(long v) : re(v), im(0) {}  // NOLINT
  GaussRational(const Rational& r) : re(r), im(0) {}  // NOLINT
  GaussRational(const Rational& r, const Rational& i) : re(r), im(i) {}

  static GaussRational i() { return {Rational(0), Rational(1)}; }

  bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }
  bool is_real() const { return sgn(im) == 0; }
  GaussRational conj() const { return {re, -im}; }
  Rational norm() const { return re * re + im * im; }

  GaussRational inverse() const {
    Rational n = norm();
    return {re / n, -im / n};
  }

  GaussRational& operator+=(const GaussRational& o) { re += o.re; im += o.im; return *this; }
  GaussRational& operator-=(const GaussRational& o) { re -= o.re; im -= o.im; return *this; }
  GaussRational& operator*=(const GaussRational& o) {
    Rational r = re * o.re - im * o.im;
    Rational i = re * o.im + im * o.re;
    re = r;
    im = i;
    return *this;
  }
  GaussRational& operator/=(const GaussRational& o) { return *this *= o.inverse(); }

  friend GaussRational operator+(GaussRational a, const GaussRational& b) { return a += b; }
  friend GaussRational operator-(GaussRational a, const GaussRational& b) { return a -= b; }
  friend GaussRational operator*(GaussRational a, const GaussRational& b) { return a *= b; }
  friend GaussRational operator/(GaussRational a, const GaussRational& b) { return a /= b; }
  friend GaussRational operator-(const GaussRational& a) { return {-a.re, -a.im}; }
  friend bool operator==(const GaussRational& a, const GaussRational& b) { return a.re == b.re && a.im == b.im; }
  friend bool operator!=(const GaussRational& a, const GaussRational& b) { return !(a == b); }

  std::complex<double> to_complex() const { return {re.get_d(), im.get_d()}; }
};

inline std::string to_string(const GaussRational& g) {
  if (g.is_real()) return g.re.get_str();
  std::string imag;
  if (g.im == 1) imag = "i";
  else if (g.im == -1) imag = "-i";
  else imag = g.im.get_str() + "i";
  if (sgn(g.re) == 0) return imag;
  if (sgn(g.im) > 0) return g.re.get_str() + "+" + imag;
  return g.re.get_str() + imag;
}

inline std::ostream& operator<<(std::ostream& os, const GaussRational& g) { return os << to_string(g); }

template <class F>
struct field_traits;

template <>
struct field_traits<Rational> {
  static bool is_zero(const Rational& x) { return sgn(x) == 0; }
  static Rational zero() { return Rational(0); }
  static Rational one() { return Rational(1); }
  static Rational inverse(const Rational& x) { return Rational(1) / x; }
  static std::string str(const Rational& x) { return x.get_str(); }
  static bool is_one(const Rational& x) { return x == 1; }
  static bool is_negative(const Rational& x) { return sgn(x) < 0; }
};

template <>
struct field_traits<GaussRational> {
  static bool is_zero(const GaussRational& x) { return x.is_zero(); }
  static GaussRational zero() { return GaussRational(); }
  static GaussRational one() { return GaussRational(1); }
  static GaussRational inverse(const GaussRational& x) { return x.inverse(); }
  static std::string str(const GaussRational& x) { return to_string(x); }
  static bool is_one(const GaussRational& x) { return x.is_real() && x.re == 1; }
  static bool is_negative(const GaussRational& x) { return x.is_real() && sgn(x.re) < 0; }
};

template <>
struct field_traits<std::complex<double>> {
  static bool is_zero(const std::complex<double>& x) { return x == 0.0; }
  static std::complex<double> zero() { return 0.0; }
  static std::complex<double> one() { return 1.0; }
  static std::complex<double> inverse(const std::complex<double>& x) { return 1.0 / x; }
  static std::string str(const std::complex<double>& x) {
    return "(" + std::to_string(x.real()) + "," + std::to_string(x.imag()) + ")";
  }
  static bool is_one(const std::complex<double>& x) { return x == 1.0; }
  static bool is_negative(const std::complex<double>&) { return false; }
};

}  // namespace conedef
