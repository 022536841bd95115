#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "conedef/errors.hpp"
#include "conedef/laurent.hpp"
#include "conedef/linalg.hpp"
#include "conedef/polynomial.hpp"
#include "conedef/rational.hpp"

namespace conedef {

// ---------------------------------------------------------------------------
// H^1 of O(m) on the two-chart cover of P^1

struct CoboundaryWindow {
  int twist = 0;
  // exponents m+1 .. -1, listed from -1 downwards
  std::vector<int> forbidden_exponents() const {
    std::vector<int> out;
    for (int e = -1; e > twist; --e) out.push_back(e);
    return out;
  }
  std::size_t dimension() const { return twist <= -2 ? static_cast<std::size_t>(-twist - 1) : 0; }
};

template <class C>
std::vector<C> h1_class(const LaurentPoly<C>& f, const CoboundaryWindow& w) {
  std::vector<C> out;
  for (int e : w.forbidden_exponents()) out.push_back(f.coeff(e));
  return out;
}

template <class C>
bool class_is_zero(const std::vector<C>& v) {
  return std::all_of(v.begin(), v.end(), [](const C& c) { return detail::coeff_is_zero(c); });
}

// ---------------------------------------------------------------------------
// Transitions

// y2 = sum_a c_a(z1) y1^a, z2 = sum_a phi_a(z1) y1^a, both truncated after y1^order.
struct TruncatedTransition {
  int order = 0;
  int normal_degree = 0;
  std::vector<GaussLaurent> series_y;
  std::vector<GaussLaurent> series_z;

  void validate() const {
    if (order < 1) throw ValidationError("truncation order must be at least 1");
    if (series_y.size() != static_cast<std::size_t>(order + 1) || series_z.size() != static_cast<std::size_t>(order + 1))
      throw ValidationError("series length must equal order + 1");
    if (!series_y[0].is_zero()) throw ValidationError("y-series must have no y^0 term (the curve is y = 0)");
    const GaussLaurent& c1 = series_y[1];
    if (!c1.is_monomial() || c1.min_exp() != -normal_degree)
      throw ValidationError("y-series coefficient a1 must be a single term c*z^" + std::to_string(-normal_degree) +
                            " for normal degree " + std::to_string(normal_degree));
    if (series_z[0] != GaussLaurent::monomial(-1, GaussRational(1)))
      throw ValidationError("z-series coefficient a0 must be z^-1 (the base curve is P^1)");
  }

  GaussRational kappa() const { return series_y[1].coeff(-normal_degree); }
};

inline TruncatedTransition p1p1_diagonal_transition(int order = 3) {
  TruncatedTransition t;
  t.order = order;
  t.normal_degree = 2;
  t.series_y.assign(static_cast<std::size_t>(order + 1), GaussLaurent());
  t.series_z.assign(static_cast<std::size_t>(order + 1), GaussLaurent());
  for (int a = 1; a <= order; ++a) t.series_y[static_cast<std::size_t>(a)] = GaussLaurent::monomial(-(a + 1), GaussRational(-1));
  t.series_z[0] = GaussLaurent::monomial(-1, GaussRational(1));
  return t;
}

inline TruncatedTransition p2_conic_transition(int order = 3) {
  TruncatedTransition t;
  t.order = order;
  t.normal_degree = 4;
  t.series_y.assign(static_cast<std::size_t>(order + 1), GaussLaurent());
  t.series_z.assign(static_cast<std::size_t>(order + 1), GaussLaurent());
  for (int a = 1; a <= order; ++a)
    t.series_y[static_cast<std::size_t>(a)] = GaussLaurent::monomial(-2 * a - 2, GaussRational(a));
  for (int a = 0; a <= order; ++a) t.series_z[static_cast<std::size_t>(a)] = GaussLaurent::monomial(-1 - 2 * a, GaussRational(1));
  return t;
}

inline TruncatedTransition linear_transition(int order, int d, const GaussRational& kappa) {
  TruncatedTransition t;
  t.order = order;
  t.normal_degree = d;
  t.series_y.assign(static_cast<std::size_t>(order + 1), GaussLaurent());
  t.series_z.assign(static_cast<std::size_t>(order + 1), GaussLaurent());
  t.series_y[1] = GaussLaurent::monomial(-d, kappa);
  t.series_z[0] = GaussLaurent::monomial(-1, GaussRational(1));
  return t;
}

inline std::string format_transition(const TruncatedTransition& t) {
  std::ostringstream os;
  os << "[normal-degree] d=" << t.normal_degree << "\n[y-series]\n";
  // the top coefficient is always written so the truncation order survives a round trip
  for (int a = 0; a <= t.order; ++a)
    if (!t.series_y[static_cast<std::size_t>(a)].is_zero() || a == t.order)
      os << "a" << a << ": " << t.series_y[static_cast<std::size_t>(a)].to_string() << "\n";
  os << "[z-series]\n";
  for (int a = 0; a <= t.order; ++a)
    if (!t.series_z[static_cast<std::size_t>(a)].is_zero()) os << "a" << a << ": " << t.series_z[static_cast<std::size_t>(a)].to_string() << "\n";
  return os.str();
}

inline TruncatedTransition parse_transition_text(const std::string& text) {
  std::istringstream ss(text);
  std::string raw;
  int line = 0;
  enum class Section { None, Y, Z, Degree } section = Section::None;
  std::map<int, GaussLaurent> ys, zs;
  std::optional<int> degree;
  auto trim = [](const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  auto parse_degree = [&](const std::string& body, int col) {
    std::string b = trim(body);
    if (b.rfind("d=", 0) != 0) throw ParseError("expected d=<int>", line, col);
    try {
      std::size_t used = 0;
      int d = std::stoi(b.substr(2), &used);
      if (used + 2 != b.size()) throw ParseError("trailing characters after normal degree", line, col);
      degree = d;
    } catch (const std::logic_error&) {
      throw ParseError("malformed normal degree", line, col);
    }
  };
  while (std::getline(ss, raw)) {
    ++line;
    auto hash = raw.find('#');
    std::string nocomment = hash == std::string::npos ? raw : raw.substr(0, hash);
    std::string body = trim(nocomment);
    if (body.empty()) continue;
    if (body.front() == '[') {
      auto close = body.find(']');
      if (close == std::string::npos) throw ParseError("unterminated section header", line, 1);
      std::string name = body.substr(1, close - 1);
      std::string rest = trim(body.substr(close + 1));
      if (name == "y-series") section = Section::Y;
      else if (name == "z-series") section = Section::Z;
      else if (name == "normal-degree") section = Section::Degree;
      else throw ParseError("unknown section [" + name + "]", line, 2);
      if (!rest.empty()) {
        if (section != Section::Degree) throw ParseError("unexpected text after section header", line, static_cast<int>(close) + 2);
        parse_degree(rest, static_cast<int>(close) + 2);
      }
      continue;
    }
    if (section == Section::None) throw ParseError("content before any section header", line, 1);
    if (section == Section::Degree) {
      parse_degree(body, 1);
      continue;
    }
    auto lead = nocomment.find_first_not_of(" \t");
    if (nocomment[lead] != 'a') throw ParseError("expected a<k>: <laurent>", line, static_cast<int>(lead) + 1);
    auto colon = nocomment.find(':');
    if (colon == std::string::npos) throw ParseError("missing ':'", line, static_cast<int>(nocomment.size()) + 1);
    std::string idx = nocomment.substr(lead + 1, colon - lead - 1);
    if (idx.empty() || idx.find_first_not_of("0123456789") != std::string::npos)
      throw ParseError("expected power index after 'a'", line, static_cast<int>(lead) + 2);
    int k = std::stoi(idx);
    GaussLaurent l = parse_laurent(std::string_view(nocomment).substr(colon + 1), line, static_cast<int>(colon) + 1);
    auto& target = section == Section::Y ? ys : zs;
    if (target.count(k)) throw ParseError("duplicate coefficient a" + idx, line, static_cast<int>(lead) + 1);
    target[k] = l;
  }
  if (!degree) throw ValidationError("missing [normal-degree] d=<int>");
  int order = 1;
  for (const auto& [k, l] : ys) order = std::max(order, k);
  for (const auto& [k, l] : zs) order = std::max(order, k);
  TruncatedTransition t;
  t.order = order;
  t.normal_degree = *degree;
  t.series_y.assign(static_cast<std::size_t>(order + 1), GaussLaurent());
  t.series_z.assign(static_cast<std::size_t>(order + 1), GaussLaurent());
  for (const auto& [k, l] : ys) t.series_y[static_cast<std::size_t>(k)] = l;
  for (const auto& [k, l] : zs) t.series_z[static_cast<std::size_t>(k)] = l;
  t.validate();
  return t;
}

inline TruncatedTransition parse_transition_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_transition_text(buf.str());
}

// ---------------------------------------------------------------------------
// Parametrized transitions: coefficients are polynomials in lifting parameters over Q(i).

using PPoly = Polynomial<GaussRational>;
using PLaurent = LaurentPoly<PPoly>;
using PSeries = BiSeries<PPoly>;
using PMap = ChartMap<PPoly>;

struct ParamContext {
  std::size_t nparams = 0;
  std::vector<std::string> names;

  PPoly zero() const { return PPoly(nparams); }
  PPoly one() const { return PPoly::constant(nparams, GaussRational(1)); }
  PPoly constant(const GaussRational& c) const { return PPoly::constant(nparams, c); }
  PPoly var(std::size_t i) const { return PPoly::variable(nparams, i); }
  std::string name(std::size_t i) const { return i < names.size() ? names[i] : "p" + std::to_string(i); }
  std::string str(const PPoly& p) const {
    return p.to_string([this](std::size_t i) { return name(i); });
  }
  std::string str(const PLaurent& l) const {
    return l.to_string_with([this](const PPoly& c) { return str(c); });
  }
};

inline std::string param_name(std::size_t i) { return i == 0 ? "a" : "a" + std::to_string(i + 1); }

struct ParamTransition {
  int order = 0;
  int normal_degree = 0;
  GaussRational kappa;
  PMap map;  // (z1, y1) -> (z2, y2)
};

inline PLaurent lift(const GaussLaurent& l, const ParamContext& ctx) {
  PLaurent out(ctx.zero());
  for (const auto& [e, c] : l.terms()) out.add_term(e, ctx.constant(c));
  return out;
}

inline ParamTransition lift(const TruncatedTransition& t, const ParamContext& ctx) {
  t.validate();
  ParamTransition p;
  p.order = t.order;
  p.normal_degree = t.normal_degree;
  p.kappa = t.kappa();
  p.map = {PSeries(t.order, ctx.zero()), PSeries(t.order, ctx.zero())};
  for (int a = 0; a <= t.order; ++a) {
    p.map.z[a] = lift(t.series_z[static_cast<std::size_t>(a)], ctx);
    p.map.y[a] = lift(t.series_y[static_cast<std::size_t>(a)], ctx);
  }
  return p;
}

inline PLaurent substitute(const PLaurent& l, const std::vector<PPoly>& subs, const PPoly& zero) {
  PLaurent out(zero);
  for (const auto& [e, c] : l.terms()) out.add_term(e, c.substitute(subs));
  return out;
}

inline ParamTransition substitute(const ParamTransition& t, const std::vector<PPoly>& subs, const ParamContext& ctx) {
  ParamTransition out = t;
  for (int a = 0; a <= t.order; ++a) {
    out.map.z[a] = substitute(t.map.z[a], subs, ctx.zero());
    out.map.y[a] = substitute(t.map.y[a], subs, ctx.zero());
  }
  return out;
}

// Drop parameters: every coefficient must be constant after the substitution.
inline TruncatedTransition specialize(const ParamTransition& t, const std::vector<PPoly>& subs, const ParamContext& ctx) {
  ParamTransition s = substitute(t, subs, ctx);
  TruncatedTransition out;
  out.order = t.order;
  out.normal_degree = t.normal_degree;
  out.series_y.assign(static_cast<std::size_t>(t.order + 1), GaussLaurent());
  out.series_z.assign(static_cast<std::size_t>(t.order + 1), GaussLaurent());
  for (int a = 0; a <= t.order; ++a) {
    for (const auto& [e, c] : s.map.y[a].terms()) out.series_y[static_cast<std::size_t>(a)].add_term(e, detail::scalar_value(c));
    for (const auto& [e, c] : s.map.z[a].terms()) out.series_z[static_cast<std::size_t>(a)].add_term(e, detail::scalar_value(c));
  }
  return out;
}

// New transition after coordinate changes A on chart 1 and B on chart 2: B o T o A^-1.
inline ParamTransition change_coordinates(const ParamTransition& t, const PMap& a, const PMap& b, const ParamContext& ctx) {
  PPoly one = ctx.one();
  PMap ainv = invert_map(a, one);
  PMap inner = compose_maps(t.map, ainv, one);
  ParamTransition out = t;
  out.map = compose_maps(b, inner, one);
  return out;
}

// ---------------------------------------------------------------------------
// Obstruction classes

enum class StageKind { Splitting, Comfortable };

inline std::string stage_label(StageKind kind, int k) {
  return (kind == StageKind::Splitting ? "g" : "h") + std::to_string(k);
}

// Twist of the window: 2 - k d for g_k (tangent twist), -k d for h_k.
inline int stage_twist(StageKind kind, int k, int d) { return kind == StageKind::Splitting ? 2 - k * d : -k * d; }

inline void require_normalized(const ParamTransition& t, StageKind kind, int k) {
  int need = kind == StageKind::Splitting ? k : k + 1;
  if (need > t.order) throw TruncationExhausted("order " + std::to_string(need) + " exceeds the truncation order " + std::to_string(t.order));
  int z_upto = kind == StageKind::Splitting ? k - 1 : k;
  for (int a = 1; a <= z_upto; ++a)
    if (!t.map.z[a].is_zero())
      throw NotNormalized("z-series coefficient a" + std::to_string(a) + " is not yet normalized away");
  if (kind == StageKind::Splitting) return;
  for (int a = 2; a <= k; ++a)
    if (!t.map.y[a].is_zero())
      throw NotNormalized("y-series coefficient a" + std::to_string(a) + " is not yet normalized away");
}

// The Laurent function whose H^1 window class is the obstruction.
inline PLaurent obstruction_cochain(const ParamTransition& t, StageKind kind, int k) {
  require_normalized(t, kind, k);
  if (kind == StageKind::Splitting) return t.map.z[k].shifted(2);
  return t.map.y[k + 1].shifted(t.normal_degree);
}

inline std::vector<PPoly> splitting_obstruction(const ParamTransition& t, int k) {
  return h1_class(obstruction_cochain(t, StageKind::Splitting, k), CoboundaryWindow{stage_twist(StageKind::Splitting, k, t.normal_degree)});
}

inline std::vector<PPoly> comfortable_obstruction(const ParamTransition& t, int k) {
  return h1_class(obstruction_cochain(t, StageKind::Comfortable, k), CoboundaryWindow{stage_twist(StageKind::Comfortable, k, t.normal_degree)});
}

inline int stage_kernel_dim(StageKind kind, int k, int d) {
  int m = stage_twist(kind, k, d);
  return m >= 0 ? m + 1 : 0;
}

// Coordinate changes killing the coboundary part of the stage cochain. Kernel directions
// (present when the twist is >= 0) are added with the parameters first_param.. .
inline std::pair<PMap, PMap> stage_change(const ParamTransition& t, StageKind kind, int k, std::size_t first_param,
                                          const ParamContext& ctx) {
  int K = t.order;
  int d = t.normal_degree;
  int m = stage_twist(kind, k, d);
  PPoly zero = ctx.zero(), one = ctx.one();
  GaussRational kk = detail::scalar_pow(t.kappa, k);
  GaussRational inv_kk = kk.inverse();
  PLaurent f = obstruction_cochain(t, kind, k);
  if (kind == StageKind::Comfortable) f = f.scaled_by_scalar(t.kappa.inverse());  // c_{k+1}/c_1
  // chart-1 part: nonnegative exponents; chart-2 part: exponents <= min(m, -1)
  PLaurent p1 = f.part(0, f.max_exp() < 0 ? -1 : f.max_exp());
  PLaurent p2(zero);
  for (const auto& [e, c] : f.terms())
    if (e < 0 && e <= m) p2.add_term(m - e, c * inv_kk);
  std::size_t idx = first_param;
  for (int e = 0; e <= m; ++e, ++idx) {
    PPoly t_e = ctx.var(idx);
    p1.add_term(e, -t_e);
    p2.add_term(m - e, t_e * inv_kk);
  }
  // S_k: z1^ = z1 + q y1^k with q = -p1; z2^ = z2 + r(z2) y2^k with r = -p2.
  // C_k: y1^ = y1 + p y1^(k+1) with p = p1; y2^ = y2 + s(z2) y2^(k+1) with s = -p2.
  PMap a = PMap::identity(K, one, zero), b = PMap::identity(K, one, zero);
  if (kind == StageKind::Splitting) {
    a.z += PSeries::from_coeff(K, -p1, k);
    PSeries y2k = b.y.pow(k, one);
    b.z += y2k.scaled(-p2);
  } else {
    a.y += PSeries::from_coeff(K, p1, k + 1);
    PSeries y2k1 = b.y.pow(k + 1, one);
    b.y += y2k1.scaled(-p2);
  }
  return {a, b};
}

// ---------------------------------------------------------------------------
// Solving for the vanishing locus of a class

using UPoly = std::vector<GaussRational>;  // coefficients, low degree first

namespace detail {

inline void trim(UPoly& p) {
  while (!p.empty() && p.back().is_zero()) p.pop_back();
}

inline UPoly poly_mod(UPoly a, const UPoly& b) {
  trim(a);
  GaussRational lead_inv = b.back().inverse();
  while (a.size() >= b.size()) {
    GaussRational f = a.back() * lead_inv;
    std::size_t shift = a.size() - b.size();
    for (std::size_t i = 0; i < b.size(); ++i) a[shift + i] -= f * b[i];
    a.pop_back();
    trim(a);
  }
  return a;
}

inline UPoly poly_gcd(UPoly a, UPoly b) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    UPoly r = poly_mod(a, b);
    a = std::move(b);
    b = std::move(r);
  }
  if (!a.empty()) {
    GaussRational inv = a.back().inverse();
    for (auto& c : a) c *= inv;
  }
  return a;
}

inline GaussRational poly_eval(const UPoly& p, const GaussRational& x) {
  GaussRational r;
  for (std::size_t i = p.size(); i-- > 0;) r = r * x + p[i];
  return r;
}

// divide by (x - r), assuming r is a root
inline UPoly deflate(const UPoly& p, const GaussRational& r) {
  UPoly q(p.size() - 1);
  GaussRational carry;
  for (std::size_t i = p.size(); i-- > 1;) {
    carry = p[i] + carry * r;
    q[i - 1] = carry;
  }
  return q;
}

inline std::optional<Rational> rational_sqrt(const Rational& q) {
  if (sgn(q) < 0) return std::nullopt;
  mpz_class n = q.get_num(), d = q.get_den();
  if (!mpz_perfect_square_p(n.get_mpz_t()) || !mpz_perfect_square_p(d.get_mpz_t())) return std::nullopt;
  mpz_class sn, sd;
  mpz_sqrt(sn.get_mpz_t(), n.get_mpz_t());
  mpz_sqrt(sd.get_mpz_t(), d.get_mpz_t());
  Rational r(sn, sd);
  r.canonicalize();
  return r;
}

inline std::optional<GaussRational> gauss_sqrt(const GaussRational& z) {
  if (z.is_real()) {
    if (sgn(z.re) >= 0) {
      auto s = rational_sqrt(z.re);
      if (s) return GaussRational(*s);
      return std::nullopt;
    }
    auto s = rational_sqrt(-z.re);
    if (s) return GaussRational(Rational(0), *s);
    return std::nullopt;
  }
  auto n = rational_sqrt(z.norm());
  if (!n) return std::nullopt;
  auto x = rational_sqrt((z.re + *n) / 2);
  if (!x || sgn(*x) == 0) return std::nullopt;
  return GaussRational(*x, z.im / (2 * *x));
}

inline std::vector<mpz_class> divisors(mpz_class n) {
  if (n < 0) n = -n;
  std::vector<mpz_class> out;
  if (n == 0) return out;
  for (mpz_class k = 1; k * k <= n; ++k)
    if (n % k == 0) {
      out.push_back(k);
      if (k * k != n) out.push_back(n / k);
    }
  return out;
}

}  // namespace detail

struct RootSearch {
  std::vector<GaussRational> roots;  // distinct roots found in Q(i)
  bool complete = true;              // false when an irreducible factor of degree >= 2 was left over
};

inline RootSearch roots_in_gaussian_rationals(UPoly p) {
  detail::trim(p);
  RootSearch rs;
  auto add_root = [&](const GaussRational& r) {
    if (std::find(rs.roots.begin(), rs.roots.end(), r) == rs.roots.end()) rs.roots.push_back(r);
  };
  while (p.size() > 1 && p[0].is_zero()) {
    add_root(GaussRational());
    p.erase(p.begin());
  }
  // rational roots when the coefficients are real
  bool real = std::all_of(p.begin(), p.end(), [](const GaussRational& c) { return c.is_real(); });
  if (real && p.size() > 3) {
    mpz_class lcm_den = 1;
    for (const auto& c : p) {
      mpz_class den = c.re.get_den();
      mpz_lcm(lcm_den.get_mpz_t(), lcm_den.get_mpz_t(), den.get_mpz_t());
    }
    std::vector<mpz_class> ints;
    for (const auto& c : p) {
      Rational v = c.re * Rational(lcm_den);
      ints.push_back(v.get_num());
    }
    for (const auto& num : detail::divisors(ints.front()))
      for (const auto& den : detail::divisors(ints.back()))
        for (int s : {1, -1}) {
          Rational cand(num * s, den);
          cand.canonicalize();
          while (p.size() > 1 && detail::poly_eval(p, GaussRational(cand)).is_zero()) {
            add_root(GaussRational(cand));
            p = detail::deflate(p, GaussRational(cand));
          }
        }
  }
  detail::trim(p);
  if (p.size() == 2) {
    add_root(-p[0] / p[1]);
  } else if (p.size() == 3) {
    GaussRational disc = p[1] * p[1] - GaussRational(4) * p[0] * p[2];
    auto s = detail::gauss_sqrt(disc);
    if (s) {
      GaussRational two_a = GaussRational(2) * p[2];
      add_root((-p[1] + *s) / two_a);
      add_root((-p[1] - *s) / two_a);
    } else {
      rs.complete = false;
    }
  } else if (p.size() > 3) {
    rs.complete = false;
  }
  return rs;
}

// Outcome of imposing "class = 0" on the current parameter family.
struct LocusSolve {
  enum class Kind { Everywhere, Nowhere, Branches } kind = Kind::Everywhere;
  std::vector<std::vector<PPoly>> branches;  // substitutions (one PPoly per parameter)
  std::vector<std::string> descriptions;
  std::vector<std::string> notes;
};

namespace detail {

inline bool is_affine(const PPoly& p) { return p.degree() <= 1; }

inline std::vector<std::size_t> vars_of(const std::vector<PPoly>& ps) {
  std::vector<std::size_t> out;
  for (const auto& p : ps)
    for (auto v : p.variables_used())
      if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<PPoly> identity_subs(const ParamContext& ctx) {
  std::vector<PPoly> s;
  for (std::size_t i = 0; i < ctx.nparams; ++i) s.push_back(ctx.var(i));
  return s;
}

inline UPoly to_univariate(const PPoly& p, std::size_t v) {
  UPoly u;
  for (const auto& [e, c] : p.terms()) {
    std::size_t deg = static_cast<std::size_t>(e[v]);
    if (u.size() <= deg) u.resize(deg + 1);
    u[deg] += c;
  }
  return u;
}

}  // namespace detail

inline LocusSolve solve_vanishing(const std::vector<PPoly>& cls, const ParamContext& ctx) {
  LocusSolve out;
  std::vector<PPoly> eqs;
  for (const auto& p : cls)
    if (!p.is_zero()) eqs.push_back(p);
  if (eqs.empty()) {
    out.kind = LocusSolve::Kind::Everywhere;
    return out;
  }
  for (const auto& p : eqs)
    if (p.is_constant()) {
      out.kind = LocusSolve::Kind::Nowhere;
      return out;
    }
  std::vector<std::size_t> vars = detail::vars_of(eqs);
  bool affine = std::all_of(eqs.begin(), eqs.end(), detail::is_affine);
  if (affine) {
    Matrix<GaussRational> m(eqs.size(), vars.size());
    std::vector<GaussRational> rhs(eqs.size());
    for (std::size_t r = 0; r < eqs.size(); ++r) {
      for (std::size_t j = 0; j < vars.size(); ++j) {
        Exponent e(ctx.nparams, 0);
        e[vars[j]] = 1;
        m(r, j) = eqs[r].coeff(e);
      }
      rhs[r] = -eqs[r].constant_term();
    }
    Matrix<GaussRational> aug(eqs.size(), vars.size() + 1);
    for (std::size_t r = 0; r < eqs.size(); ++r) {
      for (std::size_t j = 0; j < vars.size(); ++j) aug(r, j) = m(r, j);
      aug(r, vars.size()) = rhs[r];
    }
    Echelon<GaussRational> e = rref(aug);
    std::vector<PPoly> subs = detail::identity_subs(ctx);
    std::string desc;
    for (std::size_t i = 0; i < e.pivots.size(); ++i) {
      if (e.pivots[i] == vars.size()) {
        out.kind = LocusSolve::Kind::Nowhere;
        return out;
      }
    }
    for (std::size_t i = 0; i < e.pivots.size(); ++i) {
      std::size_t pv = vars[e.pivots[i]];
      PPoly val = ctx.constant(e.reduced(i, vars.size()));
      for (std::size_t j = 0; j < vars.size(); ++j) {
        if (j == e.pivots[i] || e.reduced(i, j).is_zero()) continue;
        val -= ctx.var(vars[j]) * e.reduced(i, j);
      }
      subs[pv] = val;
      if (!desc.empty()) desc += ", ";
      desc += ctx.name(pv) + " = " + ctx.str(val);
    }
    out.kind = LocusSolve::Kind::Branches;
    out.branches.push_back(subs);
    out.descriptions.push_back(desc);
    return out;
  }
  std::vector<PPoly> work = eqs;
  if (vars.size() > 1) {
    // sample every variable but the last at 0
    std::vector<PPoly> subs = detail::identity_subs(ctx);
    std::string sampled;
    for (std::size_t j = 0; j + 1 < vars.size(); ++j) {
      subs[vars[j]] = ctx.zero();
      sampled += (sampled.empty() ? "" : ", ") + ctx.name(vars[j]) + " = 0";
    }
    out.notes.push_back("nonlinear multi-parameter locus: sampled " + sampled);
    for (auto& p : work) p = p.substitute(subs);
    LocusSolve inner = solve_vanishing(work, ctx);
    inner.notes.insert(inner.notes.begin(), out.notes.begin(), out.notes.end());
    for (std::size_t b = 0; b < inner.branches.size(); ++b) {
      for (std::size_t j = 0; j + 1 < vars.size(); ++j) inner.branches[b][vars[j]] = ctx.zero();
      inner.descriptions[b] = sampled + ", " + inner.descriptions[b];
    }
    return inner;
  }
  std::size_t v = vars.front();
  UPoly g;
  for (const auto& p : work) g = detail::poly_gcd(g, detail::to_univariate(p, v));
  if (g.size() <= 1) {
    out.kind = LocusSolve::Kind::Nowhere;
    return out;
  }
  RootSearch rs = roots_in_gaussian_rationals(g);
  if (!rs.complete) out.notes.push_back("some roots of the obstruction lie outside Q(i) and were not followed");
  if (rs.roots.empty()) {
    out.kind = LocusSolve::Kind::Nowhere;
    return out;
  }
  out.kind = LocusSolve::Kind::Branches;
  for (const auto& r : rs.roots) {
    std::vector<PPoly> subs = detail::identity_subs(ctx);
    subs[v] = ctx.constant(r);
    out.branches.push_back(subs);
    out.descriptions.push_back(ctx.name(v) + " = " + to_string(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization

struct LiftingFamily {
  std::vector<std::string> parameters;            // introduced lifting parameters
  std::vector<GaussRational> base_point;          // their values with all free parameters at 0
  std::vector<std::vector<GaussRational>> basis;  // derivative along each free parameter
  std::vector<std::string> free_parameters;
  bool affine = true;
  std::string to_string() const;
};

inline std::string LiftingFamily::to_string() const {
  if (parameters.empty()) return "no lifting parameters";
  std::string s = "(";
  for (std::size_t i = 0; i < parameters.size(); ++i) s += (i ? ", " : "") + parameters[i];
  s += ") = (";
  for (std::size_t i = 0; i < base_point.size(); ++i) s += (i ? ", " : "") + conedef::to_string(base_point[i]);
  s += ")";
  for (std::size_t j = 0; j < basis.size(); ++j) {
    s += " + " + free_parameters[j] + "*(";
    for (std::size_t i = 0; i < basis[j].size(); ++i) s += (i ? ", " : "") + conedef::to_string(basis[j][i]);
    s += ")";
  }
  return s;
}

struct StageRecord {
  StageKind kind = StageKind::Splitting;
  int k = 0;
  int twist = 0;
  std::vector<PPoly> class_coords;    // window coordinates, exponents -1, -2, ...
  std::vector<std::string> class_text;
  std::string cochain;                // Laurent representative of the class
  std::string verdict;                // "vanishes", "vanishes on <locus>", "obstructed"
  std::string locus;
  bool passed = false;
  std::size_t new_parameters = 0;
  LiftingFamily family;               // surviving family after this stage
  std::vector<std::string> notes;
};

struct Chain {
  std::vector<StageRecord> stages;
  int splitting_order = 0;    // k such that every S_j, j <= k, passed
  int comfortable_order = 0;  // same for C_j
  bool completed = false;     // reached the target without obstruction
  TruncatedTransition transition;  // free parameters specialized to 0
  std::size_t nontrivial_changes = 0;  // counted at the chosen member of the family
  std::vector<std::pair<PMap, PMap>> changes;
  int m_xd() const { return comfortable_order + 1; }
  int linearizable_order() const { return std::min(splitting_order, comfortable_order + 1); }
};

struct NormalizeResult {
  int target_order = 0;
  std::vector<std::string> parameter_names;
  std::vector<Chain> chains;
  std::size_t best = 0;
  int m_xd = 0;
  int linearizable_order = 0;
  TruncatedTransition normalized;
  std::vector<Chain> splitting_chains;  // S-stages only: which liftings extend
  int max_splitting_order = 0;
  std::vector<std::string> notes;
  const Chain& best_chain() const { return chains.at(best); }
};

namespace detail {

struct Stage {
  StageKind kind;
  int k;
  std::size_t first_param;
};

inline LiftingFamily family_of(const std::vector<PPoly>& values, std::size_t introduced, const ParamContext& ctx) {
  LiftingFamily f;
  std::vector<std::size_t> free_vars;
  for (std::size_t i = 0; i < introduced; ++i)
    for (auto v : values[i].variables_used())
      if (std::find(free_vars.begin(), free_vars.end(), v) == free_vars.end()) free_vars.push_back(v);
  std::sort(free_vars.begin(), free_vars.end());
  std::vector<PPoly> zero_subs(ctx.nparams, ctx.zero());
  for (std::size_t i = 0; i < introduced; ++i) {
    f.parameters.push_back(ctx.name(i));
    f.base_point.push_back(values[i].substitute(zero_subs).constant_term());
    if (values[i].degree() > 1) f.affine = false;
  }
  for (auto v : free_vars) {
    f.free_parameters.push_back(ctx.name(v));
    std::vector<GaussRational> dir;
    for (std::size_t i = 0; i < introduced; ++i) {
      PPoly dv = values[i].derivative(v);
      dir.push_back(dv.is_constant() ? dv.constant_term() : GaussRational());
    }
    f.basis.push_back(dir);
  }
  return f;
}

class Normalizer {
public:
  Normalizer(const ParamContext& ctx, std::vector<Stage> stages) : ctx_(ctx), stages_(std::move(stages)) {}

  std::vector<Chain> run(const ParamTransition& t) {
    chains_.clear();
    Chain c;
    std::vector<PPoly> values = identity_subs(ctx_);
    descend(0, t, values, 0, c);
    return chains_;
  }

private:
  void finish(const ParamTransition& t, Chain chain, const std::vector<PPoly>& values, bool completed) {
    chain.completed = completed;
    std::vector<PPoly> zero_subs(ctx_.nparams, ctx_.zero());
    chain.transition = specialize(t, zero_subs, ctx_);
    PMap id = PMap::identity(t.order, ctx_.one(), ctx_.zero());
    auto at_point = [&](const PSeries& s) {
      PSeries o(s.order, ctx_.zero());
      for (int a = 0; a <= s.order; ++a) o[a] = substitute(substitute(s[a], values, ctx_.zero()), zero_subs, ctx_.zero());
      return o;
    };
    chain.nontrivial_changes = 0;
    for (const auto& [ca, cb] : chain.changes)
      if (!(at_point(ca.z) == id.z && at_point(ca.y) == id.y && at_point(cb.z) == id.z && at_point(cb.y) == id.y))
        ++chain.nontrivial_changes;
    chains_.push_back(std::move(chain));
  }

  void descend(std::size_t s, const ParamTransition& t, const std::vector<PPoly>& values, std::size_t introduced, Chain chain) {
    if (s == stages_.size()) {
      finish(t, std::move(chain), values, true);
      return;
    }
    const Stage& st = stages_[s];
    StageRecord rec;
    rec.kind = st.kind;
    rec.k = st.k;
    rec.twist = stage_twist(st.kind, st.k, t.normal_degree);
    PLaurent cochain = obstruction_cochain(t, st.kind, st.k);
    rec.cochain = ctx_.str(cochain);
    rec.class_coords = h1_class(cochain, CoboundaryWindow{rec.twist});
    for (const auto& c : rec.class_coords) rec.class_text.push_back(ctx_.str(c));
    LocusSolve sol = solve_vanishing(rec.class_coords, ctx_);
    rec.notes = sol.notes;
    int kernel = stage_kernel_dim(st.kind, st.k, t.normal_degree);
    if (sol.kind == LocusSolve::Kind::Nowhere) {
      rec.verdict = "obstructed";
      rec.passed = false;
      rec.family = family_of(values, introduced, ctx_);
      chain.stages.push_back(rec);
      finish(t, std::move(chain), values, false);
      return;
    }
    std::vector<std::vector<PPoly>> branches;
    std::vector<std::string> descs;
    if (sol.kind == LocusSolve::Kind::Everywhere) {
      branches.push_back(identity_subs(ctx_));
      descs.push_back("");
    } else {
      branches = sol.branches;
      descs = sol.descriptions;
    }
    for (std::size_t b = 0; b < branches.size(); ++b) {
      Chain next = chain;
      StageRecord r = rec;
      r.passed = true;
      r.locus = descs[b];
      r.verdict = descs[b].empty() ? "vanishes" : "vanishes iff " + descs[b];
      ParamTransition tb = sol.kind == LocusSolve::Kind::Everywhere ? t : substitute(t, branches[b], ctx_);
      std::vector<PPoly> vb = values;
      if (sol.kind != LocusSolve::Kind::Everywhere)
        for (auto& v : vb) v = v.substitute(branches[b]);
      auto [ca, cb] = stage_change(tb, st.kind, st.k, introduced, ctx_);
      ParamTransition tn = change_coordinates(tb, ca, cb, ctx_);
      PLaurent check = st.kind == StageKind::Splitting ? tn.map.z[st.k] : tn.map.y[st.k + 1];
      if (!check.is_zero())
        throw Error("internal: stage " + stage_label(st.kind, st.k) + " change left " + ctx_.str(check));
      next.changes.emplace_back(ca, cb);
      std::size_t intro = introduced + static_cast<std::size_t>(kernel);
      r.new_parameters = static_cast<std::size_t>(kernel);
      r.family = family_of(vb, intro, ctx_);
      next.stages.push_back(r);
      if (st.kind == StageKind::Splitting) next.splitting_order = st.k;
      else next.comfortable_order = st.k;
      descend(s + 1, tn, vb, intro, std::move(next));
    }
  }

  const ParamContext& ctx_;
  std::vector<Stage> stages_;
  std::vector<Chain> chains_;
};

}  // namespace detail

inline NormalizeResult normalize(const TruncatedTransition& t, int target_order = -1) {
  t.validate();
  if (target_order < 0) target_order = t.order - 1;
  if (target_order < 1) throw ValidationError("target order must be at least 1");
  if (target_order > t.order - 1)
    throw TruncationExhausted("target order " + std::to_string(target_order) + " needs series data through order " +
                              std::to_string(target_order + 1) + ", truncation order is " + std::to_string(t.order));
  int d = t.normal_degree;
  std::vector<detail::Stage> stages, split_stages;
  std::size_t np = 0, np_split = 0;
  for (int k = 1; k <= target_order; ++k) {
    stages.push_back({StageKind::Splitting, k, np});
    np += static_cast<std::size_t>(stage_kernel_dim(StageKind::Splitting, k, d));
    split_stages.push_back({StageKind::Splitting, k, np_split});
    np_split += static_cast<std::size_t>(stage_kernel_dim(StageKind::Splitting, k, d));
    if (k < target_order) {
      stages.push_back({StageKind::Comfortable, k, np});
      np += static_cast<std::size_t>(stage_kernel_dim(StageKind::Comfortable, k, d));
    }
  }
  ParamContext ctx;
  ctx.nparams = std::max(np, np_split);
  for (std::size_t i = 0; i < ctx.nparams; ++i) ctx.names.push_back(param_name(i));
  ParamTransition pt = lift(t, ctx);

  NormalizeResult res;
  res.target_order = target_order;
  res.parameter_names = ctx.names;
  detail::Normalizer main(ctx, stages);
  res.chains = main.run(pt);
  for (std::size_t i = 0; i < res.chains.size(); ++i) {
    const Chain& c = res.chains[i];
    const Chain& b = res.chains[res.best];
    if (c.m_xd() > b.m_xd() || (c.m_xd() == b.m_xd() && c.linearizable_order() > b.linearizable_order())) res.best = i;
  }
  for (const auto& c : res.chains) {
    res.m_xd = std::max(res.m_xd, c.m_xd());
    res.linearizable_order = std::max(res.linearizable_order, c.linearizable_order());
  }
  res.normalized = res.chains[res.best].transition;
  detail::Normalizer split(ctx, split_stages);
  res.splitting_chains = split.run(pt);
  for (const auto& c : res.splitting_chains) res.max_splitting_order = std::max(res.max_splitting_order, c.splitting_order);
  if (res.chains[res.best].completed)
    res.notes.push_back("no obstruction through the target order: m(X,D) >= " + std::to_string(res.m_xd) +
                        " is a lower bound limited by the truncation");
  return res;
}

struct WeightFromOrder {
  int weight = 0;
  std::vector<std::string> notes;
};

inline WeightFromOrder weight_from_order(int m_xd, int dim_d = 1) {
  if (m_xd < 1) throw ValidationError("embedding order must be at least 1");
  WeightFromOrder w;
  w.weight = -m_xd;
  if (dim_d + 1 < 3)
    w.notes.push_back("weight = -m(X,D) is proved for n >= 3; here n = " + std::to_string(dim_d + 1) + " and it is expected, not proved");
  return w;
}

// Leading cocycle of a map tangent to the identity: (dz coefficient at y^k, dy coefficient at y^(k+1))
// for the smallest k where the map differs from the identity.
template <class C>
std::pair<int, std::pair<LaurentPoly<C>, LaurentPoly<C>>> leading_cocycle(const ChartMap<C>& m, const C& one) {
  int K = m.z.order;
  ChartMap<C> id = ChartMap<C>::identity(K, one, m.z.zero_coeff);
  BiSeries<C> dz = m.z - id.z, dy = m.y - id.y;
  for (int k = 1; k <= K; ++k) {
    bool zk = !dz[k].is_zero();
    bool yk = k + 1 <= K && !dy[k + 1].is_zero();
    if (zk || yk) return {k, {dz[k], k + 1 <= K ? dy[k + 1] : LaurentPoly<C>(m.z.zero_coeff)}};
  }
  return {K + 1, {LaurentPoly<C>(m.z.zero_coeff), LaurentPoly<C>(m.z.zero_coeff)}};
}

}  // namespace conedef
