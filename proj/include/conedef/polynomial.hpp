#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "conedef/rational.hpp"

namespace conedef {

using Exponent = std::vector<int>;

inline int total_degree(const Exponent& e) { return std::accumulate(e.begin(), e.end(), 0); }

// Degree first, then reverse lexicographic: a < b iff deg a < deg b, or equal degrees and
// the last nonzero entry of a - b is positive.
struct DegRevLexLess {
  bool operator()(const Exponent& a, const Exponent& b) const {
    int da = total_degree(a), db = total_degree(b);
    if (da != db) return da < db;
    for (std::size_t k = a.size(); k-- > 0;) {
      if (a[k] != b[k]) return a[k] > b[k];
    }
    return false;
  }
};

// All exponent vectors of total degree d in n variables, descending in degrevlex.
inline std::vector<Exponent> monomials_of_degree(std::size_t n, int d) {
  std::vector<Exponent> out;
  if (d < 0 || n == 0) return out;
  Exponent e(n, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t k, int left) {
    if (k + 1 == n) {
      e[k] = left;
      out.push_back(e);
      return;
    }
    for (int v = left; v >= 0; --v) {
      e[k] = v;
      rec(k + 1, left - v);
    }
  };
  rec(0, d);
  std::sort(out.begin(), out.end(), [](const Exponent& a, const Exponent& b) { return DegRevLexLess{}(b, a); });
  return out;
}

inline std::string default_var_name(std::size_t i) { return "z" + std::to_string(i + 1); }

template <class C>
class Polynomial {
public:
  using Terms = std::map<Exponent, C, DegRevLexLess>;
  using Traits = field_traits<C>;

  explicit Polynomial(std::size_t nvars = 0) : nvars_(nvars) {}

  static Polynomial constant(std::size_t nvars, const C& c) {
    Polynomial p(nvars);
    p.add_term(Exponent(nvars, 0), c);
    return p;
  }
  static Polynomial variable(std::size_t nvars, std::size_t i) {
    Exponent e(nvars, 0);
    e.at(i) = 1;
    return monomial(e, Traits::one());
  }
  static Polynomial monomial(const Exponent& e, const C& c) {
    Polynomial p(e.size());
    p.add_term(e, c);
    return p;
  }

  std::size_t nvars() const { return nvars_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  void add_term(const Exponent& e, const C& c) {
    if (e.size() != nvars_) throw std::invalid_argument("exponent length does not match variable count");
    for (int x : e)
      if (x < 0) throw std::invalid_argument("negative exponent in polynomial");
    if (Traits::is_zero(c)) return;
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      terms_.emplace(e, c);
      return;
    }
    it->second += c;
    if (Traits::is_zero(it->second)) terms_.erase(it);
  }

  C coeff(const Exponent& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? Traits::zero() : it->second;
  }

  // -1 for the zero polynomial
  int degree() const { return terms_.empty() ? -1 : total_degree(terms_.rbegin()->first); }
  int min_degree() const { return terms_.empty() ? -1 : total_degree(terms_.begin()->first); }
  bool is_homogeneous() const { return terms_.empty() || degree() == min_degree(); }
  bool is_constant() const { return degree() <= 0; }
  C constant_term() const { return coeff(Exponent(nvars_, 0)); }

  Polynomial homogeneous_part(int d) const {
    Polynomial p(nvars_);
    for (const auto& [e, c] : terms_)
      if (total_degree(e) == d) p.terms_.emplace(e, c);
    return p;
  }

  std::vector<int> degrees_present() const {
    std::vector<int> ds;
    for (const auto& [e, c] : terms_) {
      int d = total_degree(e);
      if (ds.empty() || ds.back() != d) ds.push_back(d);
    }
    return ds;
  }

  Polynomial derivative(std::size_t i) const {
    Polynomial p(nvars_);
    for (const auto& [e, c] : terms_) {
      if (e[i] == 0) continue;
      Exponent f = e;
      f[i] -= 1;
      p.add_term(f, c * C(e[i]));
    }
    return p;
  }

  Polynomial& operator+=(const Polynomial& o) {
    check_compatible(o);
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    check_compatible(o);
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }
  Polynomial& operator*=(const C& s) {
    if (Traits::is_zero(s)) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator-(Polynomial a) {
    for (auto& [e, c] : a.terms_) c = -c;
    return a;
  }
  friend Polynomial operator*(Polynomial a, const C& s) { return a *= s; }
  friend Polynomial operator*(const C& s, Polynomial a) { return a *= s; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_compatible(b);
    Polynomial p(a.nvars_);
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) {
        Exponent e(ea.size());
        for (std::size_t k = 0; k < e.size(); ++k) e[k] = ea[k] + eb[k];
        p.add_term(e, ca * cb);
      }
    return p;
  }
  Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    if (a.nvars_ != b.nvars_ || a.terms_.size() != b.terms_.size()) return false;
    auto ib = b.terms_.begin();
    for (auto ia = a.terms_.begin(); ia != a.terms_.end(); ++ia, ++ib)
      if (ia->first != ib->first || !(ia->second == ib->second)) return false;
    return true;
  }
  friend bool operator!=(const Polynomial& a, const Polynomial& b) { return !(a == b); }

  Polynomial pow(int k) const {
    Polynomial r = constant(nvars_, Traits::one());
    for (int i = 0; i < k; ++i) r *= *this;
    return r;
  }

  template <class T>
  T evaluate(const std::vector<T>& x) const {
    T sum = T(0);
    for (const auto& [e, c] : terms_) {
      T t = to_value<T>(c);
      for (std::size_t k = 0; k < e.size(); ++k)
        for (int j = 0; j < e[k]; ++j) t *= x[k];
      sum += t;
    }
    return sum;
  }

  // Replace variable k by subs[k]; every subs entry must share one variable count.
  Polynomial substitute(const std::vector<Polynomial>& subs) const {
    if (subs.size() != nvars_) throw std::invalid_argument("substitution size mismatch");
    std::size_t m = subs.empty() ? 0 : subs[0].nvars();
    Polynomial out(m);
    for (const auto& [e, c] : terms_) {
      Polynomial t = constant(m, c);
      for (std::size_t k = 0; k < e.size(); ++k)
        if (e[k] > 0) t *= subs[k].pow(e[k]);
      out += t;
    }
    return out;
  }

  // Same polynomial read in a ring with more variables (new ones appended).
  Polynomial extended(std::size_t new_nvars) const {
    if (new_nvars < nvars_) throw std::invalid_argument("cannot shrink variable count");
    Polynomial p(new_nvars);
    for (const auto& [e, c] : terms_) {
      Exponent f = e;
      f.resize(new_nvars, 0);
      p.terms_.emplace(f, c);
    }
    return p;
  }

  std::vector<std::size_t> variables_used() const {
    std::vector<bool> used(nvars_, false);
    for (const auto& [e, c] : terms_)
      for (std::size_t k = 0; k < e.size(); ++k)
        if (e[k] > 0) used[k] = true;
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < nvars_; ++k)
      if (used[k]) out.push_back(k);
    return out;
  }

  std::string to_string(const std::function<std::string(std::size_t)>& name = default_var_name) const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      const auto& [e, c] = *it;
      bool constant = total_degree(e) == 0;
      std::string cs = Traits::str(c);
      bool neg = Traits::is_negative(c);
      std::string mag = neg ? Traits::str(-c) : cs;
      if (!neg && (cs.find_first_of("+-", 1) != std::string::npos || cs.find_first_of("i(") != std::string::npos))
        mag = "(" + cs + ")";
      if (first) out += neg ? "-" : "";
      else out += neg ? " - " : " + ";
      first = false;
      std::string mono;
      for (std::size_t k = 0; k < e.size(); ++k) {
        if (e[k] == 0) continue;
        if (!mono.empty()) mono += "*";
        mono += name(k);
        if (e[k] > 1) mono += "^" + std::to_string(e[k]);
      }
      bool unit = neg ? Traits::is_one(-c) : Traits::is_one(c);
      if (constant) out += mag;
      else if (unit) out += mono;
      else out += mag + "*" + mono;
    }
    return out;
  }

private:
  template <class T>
  static T to_value(const C& c) {
    if constexpr (std::is_same_v<C, Rational>) {
      return T(c.get_d());
    } else if constexpr (std::is_same_v<C, GaussRational>) {
      return T(c.to_complex());
    } else {
      return T(c);
    }
  }

  void check_compatible(const Polynomial& o) const {
    if (o.nvars_ != nvars_) throw std::invalid_argument("polynomials live in different rings");
  }

  std::size_t nvars_;
  Terms terms_;
};

using QPoly = Polynomial<Rational>;

}  // namespace conedef
