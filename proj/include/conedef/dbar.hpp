#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "conedef/errors.hpp"

namespace conedef::dbar {

using cd = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Grids and fields

// Radial nodes are uniform in t = log r and cover the rings A(s, 2s), s = R 2^-k, k = 1..K.
// Node i sits at r_i = R 2^-K exp(i h), h = log 2 / per_ring; angles theta_j = 2 pi j / M + offset.
struct DiskGrid {
  double R = 1;
  int K = 8;
  int per_ring = 12;
  int M = 64;
  int degree = 6;  // Lagrange degree of the radial panels
  double angle_offset = 0;

  static DiskGrid make(double R, int K, int M, int per_ring = 12, int degree = 6, double angle_offset = 0) {
    DiskGrid g{R, K, per_ring, M, degree, angle_offset};
    g.validate();
    return g;
  }

  void validate() const {
    if (!(R > 0) || !std::isfinite(R)) throw ValidationError("disk radius R must be positive");
    if (K < 1) throw ValidationError("ring count K must be at least 1");
    if (M < 4 || M % 2 != 0) throw ValidationError("angular count M must be even and at least 4");
    if (degree < 1 || per_ring < degree || per_ring % degree != 0)
      throw ValidationError("points per ring must be a positive multiple of the panel degree");
  }

  int nr() const { return K * per_ring + 1; }
  std::size_t size() const { return static_cast<std::size_t>(nr()) * static_cast<std::size_t>(M); }
  double h() const { return std::log(2.0) / per_ring; }
  double r_min() const { return std::ldexp(R, -K); }
  double t0() const { return std::log(r_min()); }
  double t(int i) const { return t0() + i * h(); }
  double radius(int i) const { return i == nr() - 1 ? R : std::exp(t(i)); }
  double theta(int j) const { return 2 * pi * j / M + angle_offset; }
  cd point(int i, int j) const { return std::polar(radius(i), theta(j)); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * static_cast<std::size_t>(M) + static_cast<std::size_t>(j); }
  // ring k = 1..K spans nodes [first, last]; the puncture-side ring is k = K
  int ring_first(int k) const { return (K - k) * per_ring; }
  int ring_last(int k) const { return (K - k + 1) * per_ring; }
  bool puncture_ring(int k) const { return k == K; }

  DiskGrid refined(int factor = 2) const {
    DiskGrid g = *this;
    g.per_ring *= factor;
    g.M *= factor;
    return g;
  }
};

struct DiskField {
  DiskGrid grid;
  std::vector<cd> v;
  double eta = 0;  // declared decay: |f| <~ |zeta|^eta near 0

  DiskField() = default;
  DiskField(const DiskGrid& g, double decl = 0) : grid(g), v(g.size(), cd(0)), eta(decl) {}

  cd& at(int i, int j) { return v[grid.index(i, j)]; }
  const cd& at(int i, int j) const { return v[grid.index(i, j)]; }

  void require_finite() const {
    for (const auto& x : v)
      if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) throw ValidationError("field has non-finite samples");
  }

  DiskField& operator+=(const DiskField& o) {
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += o.v[k];
    return *this;
  }
  DiskField& operator-=(const DiskField& o) {
    for (std::size_t k = 0; k < v.size(); ++k) v[k] -= o.v[k];
    return *this;
  }
  friend DiskField operator+(DiskField a, const DiskField& b) { return a += b; }
  friend DiskField operator-(DiskField a, const DiskField& b) { return a -= b; }
  double sup() const {
    double m = 0;
    for (const auto& x : v) m = std::max(m, std::abs(x));
    return m;
  }
};

inline DiskField sample(const DiskGrid& g, const std::function<cd(cd)>& f, double eta = 0) {
  DiskField out(g, eta);
  for (int i = 0; i < g.nr(); ++i)
    for (int j = 0; j < g.M; ++j) out.at(i, j) = f(g.point(i, j));
  return out;
}

// ---------------------------------------------------------------------------
// Small numerical helpers

namespace detail {

struct GaussLegendre {
  std::vector<double> x, w;  // on [-1, 1]
  explicit GaussLegendre(int n) : x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n)) {
    for (int k = 0; k < n; ++k) {
      double z = std::cos(pi * (k + 0.75) / (n + 0.5));
      double dp = 0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1, p1 = z;
        for (int l = 2; l <= n; ++l) {
          double p2 = ((2 * l - 1) * z * p1 - (l - 1) * p0) / l;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1);
        double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[static_cast<std::size_t>(k)] = z;
      w[static_cast<std::size_t>(k)] = 2 / ((1 - z * z) * dp * dp);
    }
  }
};

inline const GaussLegendre& gauss24() {
  static const GaussLegendre g(24);
  return g;
}

// Lagrange basis on nodes 0, h, ..., p h
inline double lagrange(int j, int p, double h, double tau) {
  double v = 1;
  for (int k = 0; k <= p; ++k)
    if (k != j) v *= (tau - k * h) / ((j - k) * h);
  return v;
}

// Fornberg weights for derivative `order` at x0 from nodes xs
inline std::vector<double> fd_weights(double x0, const std::vector<double>& xs, int order) {
  int n = static_cast<int>(xs.size());
  std::vector<std::vector<double>> c(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(order + 1), 0.0));
  double c1 = 1, c4 = xs[0] - x0;
  c[0][0] = 1;
  for (int i = 1; i < n; ++i) {
    int mn = std::min(i, order);
    double c2 = 1, c5 = c4;
    c4 = xs[static_cast<std::size_t>(i)] - x0;
    for (int j = 0; j < i; ++j) {
      double c3 = xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
              c1 * (k * c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k - 1)] - c5 * c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k)]) / c2;
        c[static_cast<std::size_t>(i)][0] = -c1 * c5 * c[static_cast<std::size_t>(i - 1)][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
            (c4 * c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] - k * c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k - 1)]) / c3;
      c[static_cast<std::size_t>(j)][0] = c4 * c[static_cast<std::size_t>(j)][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)][static_cast<std::size_t>(order)];
  return out;
}

// first-derivative stencil of given (even) order on a uniform grid of n points, at node i, in units of h
inline std::vector<std::pair<int, double>> stencil(int i, int n, int order) {
  int width = order + 1;
  if (width > n) width = n;
  int lo = i - order / 2;
  lo = std::max(0, std::min(lo, n - width));
  std::vector<double> xs;
  for (int k = 0; k < width; ++k) xs.push_back(lo + k);
  auto w = fd_weights(i, xs, 1);
  std::vector<std::pair<int, double>> out;
  for (int k = 0; k < width; ++k) out.push_back({lo + k, w[static_cast<std::size_t>(k)]});
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Cauchy transform  Tf(zeta) = (1/pi) iint f(tau) / (zeta - tau) dA(tau), so that dbar Tf = f and T(1) = conj(zeta).
// Mode by mode (f = sum f_q(r) e^{i q theta}):
//   (Tf)_m(r) =  2 r^m int_0^r s^-m f_{m+1}(s) ds   (m <= -1)
//   (Tf)_m(r) = -2 r^m int_r^R s^-m f_{m+1}(s) ds   (m >= 0)

struct Modes {
  int M = 0;
  // c[i][k]: radial node i; for input modes q = k - M/2, for output modes m = k - M/2 - 1
  std::vector<std::vector<cd>> c;
};

struct Transformed {
  DiskGrid grid;
  Modes f;        // input modes f_q
  Modes tf;       // (Tf)_m at the nodes
  cd origin{0};   // Tf(0)
  std::vector<double> tail_exponent;  // per input mode
};

class CauchyTransform {
public:
  explicit CauchyTransform(const DiskGrid& g) : g_(g) {
    g_.validate();
    build_tables();
    build_twiddles();
  }

  const DiskGrid& grid() const { return g_; }

  Modes analyze(const DiskField& f) const {
    Modes md;
    md.M = g_.M;
    int M = g_.M;
    md.c.assign(static_cast<std::size_t>(g_.nr()), std::vector<cd>(static_cast<std::size_t>(M)));
    for (int i = 0; i < g_.nr(); ++i)
      for (int k = 0; k < M; ++k) {
        int q = k - M / 2;
        cd s = 0;
        for (int j = 0; j < M; ++j) s += f.at(i, j) * twiddle(-q * j);
        md.c[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = s * std::polar(1.0 / M, -q * g_.angle_offset);
      }
    return md;
  }

  Transformed apply(const DiskField& f) const {
    if (f.eta <= -1) throw ValidationError("declared decay eta <= -1: the transform integral diverges at the puncture");
    f.require_finite();
    Transformed out;
    out.grid = g_;
    out.f = analyze(f);
    int M = g_.M, nr = g_.nr(), p = g_.degree;
    out.tf.M = M;
    out.tf.c.assign(static_cast<std::size_t>(nr), std::vector<cd>(static_cast<std::size_t>(M)));
    out.tail_exponent.assign(static_cast<std::size_t>(M), f.eta);
    double scale = 0;
    for (const auto& row : out.f.c)
      for (const auto& x : row) scale = std::max(scale, std::abs(x));
    double rmin = g_.r_min();
    for (int k = 0; k < M; ++k) {
      int q = k - M / 2;
      int m = q - 1;
      auto g = [&](int i) { return out.f.c[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]; };
      auto& T = out.tf.c;
      // tail model below r_min: f_q(s) = f_q(r_min) (s / r_min)^e with e fitted, never below the declared eta
      double e = f.eta;
      cd g0 = g(0), g1 = g(1);
      if (std::abs(g0) > 1e-14 * scale && std::abs(g1) > 1e-14 * scale) {
        double fit = std::log(std::abs(g1) / std::abs(g0)) / g_.h();
        if (std::isfinite(fit)) e = std::max(e, std::min(fit, 64.0));
      }
      out.tail_exponent[static_cast<std::size_t>(k)] = e;
      if (m <= -1) {
        int kappa = -m;
        cd I = 2.0 * g0 * rmin / (kappa + 1 + e);
        T[0][static_cast<std::size_t>(k)] = I;
        for (int a = 0; a + p < nr; a += p) {
          double ra = std::exp(g_.t(a));
          const auto& W = fwd_[static_cast<std::size_t>(kappa)];
          for (int i = 1; i <= p; ++i) {
            cd s = 0;
            for (int j = 0; j <= p; ++j) s += W[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * g(a + j);
            T[static_cast<std::size_t>(a + i)][static_cast<std::size_t>(k)] = std::exp(-kappa * i * g_.h()) * I + 2.0 * ra * s;
          }
          I = T[static_cast<std::size_t>(a + p)][static_cast<std::size_t>(k)];
        }
      } else {
        int kappa = m;
        cd J = 0;
        T[static_cast<std::size_t>(nr - 1)][static_cast<std::size_t>(k)] = 0;
        for (int a = nr - 1 - p; a >= 0; a -= p) {
          double ra = std::exp(g_.t(a));
          const auto& W = bwd_[static_cast<std::size_t>(kappa)];
          for (int i = p - 1; i >= 0; --i) {
            cd s = 0;
            for (int j = 0; j <= p; ++j) s += W[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * g(a + j);
            T[static_cast<std::size_t>(a + i)][static_cast<std::size_t>(k)] = std::exp(-kappa * (p - i) * g_.h()) * J - 2.0 * ra * s;
          }
          J = T[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)];
        }
        if (m == 0) out.origin = J - 2.0 * g0 * rmin / (1 + e);
      }
    }
    return out;
  }

  // T f (subtract_origin = false) or the modified transform T f - T f(0)
  DiskField values(const Transformed& t, bool subtract_origin = true) const {
    DiskField out(g_);
    int M = g_.M;
    for (int i = 0; i < g_.nr(); ++i) synthesize(t.tf.c[static_cast<std::size_t>(i)], -M / 2 - 1, out, i);
    if (subtract_origin)
      for (auto& x : out.v) x -= t.origin;
    return out;
  }

  // d/dzeta of T f: mode m - 1 receives (m / r)(Tf)_m + f_{m+1}
  DiskField dzeta(const Transformed& t) const {
    DiskField out(g_);
    int M = g_.M;
    std::vector<cd> row(static_cast<std::size_t>(M));
    for (int i = 0; i < g_.nr(); ++i) {
      double r = g_.radius(i);
      for (int k = 0; k < M; ++k) {
        int m = k - M / 2 - 1;
        row[static_cast<std::size_t>(k)] = (m / r) * t.tf.c[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] + t.f.c[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      }
      synthesize(row, -M / 2 - 2, out, i);
    }
    return out;
  }

  // (Tf)_m at an arbitrary radius in [r_min, R]
  std::vector<cd> modes_at(const Transformed& t, double r) const {
    double rmin = g_.r_min();
    if (r < rmin * (1 - 1e-12) || r > g_.R * (1 + 1e-12)) throw ValidationError("evaluation radius outside the grid");
    int M = g_.M, p = g_.degree, nr = g_.nr();
    double tt = std::clamp(std::log(r) - g_.t0(), 0.0, (nr - 1) * g_.h());
    int a = std::min(static_cast<int>(tt / (p * g_.h())) * p, nr - 1 - p);
    double tau = tt - a * g_.h();
    double ra = std::exp(g_.t(a));
    std::vector<cd> out(static_cast<std::size_t>(M));
    const auto& gl = detail::gauss24();
    for (int k = 0; k < M; ++k) {
      int m = k - M / 2 - 1;
      auto g = [&](int i) { return t.f.c[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]; };
      cd s = 0;
      if (m <= -1) {
        int kappa = -m;
        // int_0^tau e^{kappa (sigma - tau)} e^sigma g(sigma)
        for (std::size_t n = 0; n < gl.x.size(); ++n) {
          double sg = 0.5 * tau * (gl.x[n] + 1);
          double w = 0.5 * tau * gl.w[n] * std::exp(kappa * (sg - tau) + sg);
          for (int j = 0; j <= p; ++j) s += w * detail::lagrange(j, p, g_.h(), sg) * g(a + j);
        }
        out[static_cast<std::size_t>(k)] = std::exp(-kappa * tau) * t.tf.c[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)] + 2.0 * ra * s;
      } else {
        int kappa = m;
        double tp = p * g_.h();
        for (std::size_t n = 0; n < gl.x.size(); ++n) {
          double sg = tau + 0.5 * (tp - tau) * (gl.x[n] + 1);
          double w = 0.5 * (tp - tau) * gl.w[n] * std::exp(-kappa * (sg - tau) + sg);
          for (int j = 0; j <= p; ++j) s += w * detail::lagrange(j, p, g_.h(), sg) * g(a + j);
        }
        out[static_cast<std::size_t>(k)] = std::exp(-kappa * (tp - tau)) * t.tf.c[static_cast<std::size_t>(a + p)][static_cast<std::size_t>(k)] - 2.0 * ra * s;
      }
    }
    return out;
  }

  // f_q at an arbitrary radius by panel interpolation
  std::vector<cd> input_modes_at(const Transformed& t, double r) const {
    int M = g_.M, p = g_.degree, nr = g_.nr();
    double tt = std::clamp(std::log(r) - g_.t0(), 0.0, (nr - 1) * g_.h());
    int a = std::min(static_cast<int>(tt / (p * g_.h())) * p, nr - 1 - p);
    double tau = tt - a * g_.h();
    std::vector<cd> out(static_cast<std::size_t>(M));
    for (int k = 0; k < M; ++k)
      for (int j = 0; j <= p; ++j) out[static_cast<std::size_t>(k)] += detail::lagrange(j, p, g_.h(), tau) * t.f.c[static_cast<std::size_t>(a + j)][static_cast<std::size_t>(k)];
    return out;
  }

  cd twiddle(long k) const {
    long M = g_.M;
    long r = ((k % M) + M) % M;
    return tw_[static_cast<std::size_t>(r)];
  }

private:
  // out(i, .) = sum_k row[k] e^{i (k + first) theta_j}
  void synthesize(const std::vector<cd>& row, int first, DiskField& out, int i) const {
    int M = g_.M;
    for (int j = 0; j < M; ++j) {
      cd s = 0;
      if (g_.angle_offset == 0)
        for (int k = 0; k < M; ++k) s += row[static_cast<std::size_t>(k)] * twiddle(static_cast<long>(k + first) * j);
      else
        for (int k = 0; k < M; ++k) s += row[static_cast<std::size_t>(k)] * std::polar(1.0, (k + first) * g_.theta(j));
      out.at(i, j) = s;
    }
  }

  void build_twiddles() {
    tw_.resize(static_cast<std::size_t>(g_.M));
    for (int k = 0; k < g_.M; ++k) tw_[static_cast<std::size_t>(k)] = std::polar(1.0, 2 * pi * k / g_.M);
  }

  // fwd_[kappa][i][j] = int_0^{tau_i} e^{kappa (s - tau_i)} e^s L_j(s) ds
  // bwd_[kappa][i][j] = int_{tau_i}^{tau_p} e^{-kappa (s - tau_i)} e^s L_j(s) ds
  void build_tables() {
    int p = g_.degree;
    double h = g_.h();
    int kmax = g_.M / 2 + 2;
    const auto& gl = detail::gauss24();
    fwd_.assign(static_cast<std::size_t>(kmax + 1), std::vector<std::vector<double>>(static_cast<std::size_t>(p + 1), std::vector<double>(static_cast<std::size_t>(p + 1))));
    bwd_ = fwd_;
    for (int kappa = 0; kappa <= kmax; ++kappa)
      for (int i = 0; i <= p; ++i) {
        double ti = i * h, tp = p * h;
        for (std::size_t n = 0; n < gl.x.size(); ++n) {
          double sf = 0.5 * ti * (gl.x[n] + 1);
          double wf = 0.5 * ti * gl.w[n] * std::exp(kappa * (sf - ti) + sf);
          double sb = ti + 0.5 * (tp - ti) * (gl.x[n] + 1);
          double wb = 0.5 * (tp - ti) * gl.w[n] * std::exp(-kappa * (sb - ti) + sb);
          for (int j = 0; j <= p; ++j) {
            fwd_[static_cast<std::size_t>(kappa)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += wf * detail::lagrange(j, p, h, sf);
            bwd_[static_cast<std::size_t>(kappa)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += wb * detail::lagrange(j, p, h, sb);
          }
        }
      }
  }

  DiskGrid g_;
  std::vector<cd> tw_;
  std::vector<std::vector<std::vector<double>>> fwd_, bwd_;
};

inline DiskField cauchy_transform(const DiskField& f) {
  CauchyTransform T(f.grid);
  return T.values(T.apply(f), false);
}

inline DiskField modified_transform(const DiskField& f) {
  CauchyTransform T(f.grid);
  return T.values(T.apply(f), true);
}

// ---------------------------------------------------------------------------
// Derivatives on the polar grid: dzeta = e^{-i theta}/(2r) (d_t - i d_theta), dzetabar = e^{i theta}/(2r) (d_t + i d_theta)

enum class DerivativeScheme {
  SecondOrder,  // 3-point differences in t and theta
  High,         // 6th-order differences in t, spectral in theta
};

struct PolarDerivatives {
  DiskField dz, dzb;
};

inline PolarDerivatives polar_derivatives(const DiskField& f, DerivativeScheme s = DerivativeScheme::High) {
  const DiskGrid& g = f.grid;
  int nr = g.nr(), M = g.M;
  DiskField dt(g), dth(g);
  int order = s == DerivativeScheme::SecondOrder ? 2 : 6;
  double h = g.h();
  for (int i = 0; i < nr; ++i) {
    auto st = detail::stencil(i, nr, order);
    for (int j = 0; j < M; ++j) {
      cd v = 0;
      for (auto [ii, w] : st) v += w * f.at(ii, j);
      dt.at(i, j) = v / h;
    }
  }
  double ht = 2 * pi / M;
  if (s == DerivativeScheme::SecondOrder) {
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < M; ++j) dth.at(i, j) = (f.at(i, (j + 1) % M) - f.at(i, (j + M - 1) % M)) / (2 * ht);
  } else {
    std::vector<cd> tw(static_cast<std::size_t>(M));
    for (int k = 0; k < M; ++k) tw[static_cast<std::size_t>(k)] = std::polar(1.0, 2 * pi * k / M);
    auto W = [&](long k) { return tw[static_cast<std::size_t>(((k % M) + M) % M)]; };
    std::vector<cd> c(static_cast<std::size_t>(M));
    for (int i = 0; i < nr; ++i) {
      for (int k = 0; k < M; ++k) {
        int q = k - M / 2;
        cd sum = 0;
        for (int j = 0; j < M; ++j) sum += f.at(i, j) * W(static_cast<long>(-q) * j);
        c[static_cast<std::size_t>(k)] = sum / static_cast<double>(M);
      }
      c[0] = 0;  // Nyquist mode has no well-defined derivative
      for (int j = 0; j < M; ++j) {
        cd sum = 0;
        for (int k = 1; k < M; ++k) {
          int q = k - M / 2;
          sum += cd(0, q) * c[static_cast<std::size_t>(k)] * W(static_cast<long>(q) * j);
        }
        dth.at(i, j) = sum;
      }
    }
  }
  PolarDerivatives out{DiskField(g), DiskField(g)};
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < M; ++j) {
      double r = g.radius(i);
      cd e = std::polar(1.0, g.theta(j));
      out.dz.at(i, j) = std::conj(e) / (2 * r) * (dt.at(i, j) - cd(0, 1) * dth.at(i, j));
      out.dzb.at(i, j) = e / (2 * r) * (dt.at(i, j) + cd(0, 1) * dth.at(i, j));
    }
  return out;
}

// ---------------------------------------------------------------------------
// Norms

struct HolderParams {
  double alpha = 0.5;
  double nu = 0.5;

  // 0 < alpha < 1 and 0 < nu < eta; the unweighted case nu = eta = 0 is admitted for constant coefficients
  void validate(double eta) const {
    if (!(alpha > 0 && alpha < 1)) throw ValidationError("Hoelder exponent alpha must lie in (0,1)");
    bool weighted = nu > 0 && nu < eta;
    bool flat = nu == 0 && eta == 0;
    if (!weighted && !flat) throw ValidationError("weight nu must satisfy 0 < nu < eta");
  }
};

struct RingNorm {
  double sup = 0;      // sup_s s^-nu sup_A |w|
  double d1 = 0;       // sup_s s^-nu s sup_A |D_1 w|
  double holder0 = 0;  // sup_s s^-nu s^alpha [w]_alpha
  double holder1 = 0;  // sup_s s^-nu s^{1+alpha} [D_1 w]_alpha
  double total = 0;    // sup_s s^-nu [w]_{1,alpha,s}
  int dominant_ring = 0;
};

namespace detail {

inline double ring_holder(const DiskField& f, int first, int last, double alpha, int max_points = 384) {
  const DiskGrid& g = f.grid;
  std::vector<std::pair<cd, cd>> pts;
  long count = static_cast<long>(last - first + 1) * g.M;
  long stride = std::max(1L, count / max_points);
  long idx = 0;
  for (int i = first; i <= last; ++i)
    for (int j = 0; j < g.M; ++j, ++idx)
      if (idx % stride == 0) pts.push_back({g.point(i, j), f.at(i, j)});
  double best = 0;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      double d = std::abs(pts[a].first - pts[b].first);
      if (d <= 0) continue;
      best = std::max(best, std::abs(pts[a].second - pts[b].second) / std::pow(d, alpha));
    }
  return best;
}

}  // namespace detail

// ||w||_{C^{1,alpha}_nu} = sup_{s in (0, R/2]} s^-nu [w]_{1,alpha,s} over the grid rings; D_1 is the larger of d/dzeta, d/dzetabar.
inline RingNorm ring_norm(const DiskField& w, double alpha, double nu, const PolarDerivatives* given = nullptr) {
  const DiskGrid& g = w.grid;
  PolarDerivatives local;
  if (!given) {
    local = polar_derivatives(w);
    given = &local;
  }
  DiskField d1(g);
  for (std::size_t k = 0; k < d1.v.size(); ++k) {
    cd a = given->dz.v[k], b = given->dzb.v[k];
    d1.v[k] = std::abs(a) >= std::abs(b) ? a : b;
  }
  RingNorm out;
  for (int k = 1; k <= g.K; ++k) {
    double s = std::ldexp(g.R, -k);
    int first = g.ring_first(k), last = g.ring_last(k);
    double sup = 0, sd = 0;
    for (int i = first; i <= last; ++i)
      for (int j = 0; j < g.M; ++j) {
        sup = std::max(sup, std::abs(w.at(i, j)));
        sd = std::max(sd, std::max(std::abs(given->dz.at(i, j)), std::abs(given->dzb.at(i, j))));
      }
    double wt = std::pow(s, -nu);
    double h0 = detail::ring_holder(w, first, last, alpha);
    double h1 = std::max(detail::ring_holder(given->dz, first, last, alpha), detail::ring_holder(given->dzb, first, last, alpha));
    double parts[4] = {wt * sup, wt * s * sd, wt * std::pow(s, alpha) * h0, wt * std::pow(s, 1 + alpha) * h1};
    out.sup = std::max(out.sup, parts[0]);
    out.d1 = std::max(out.d1, parts[1]);
    out.holder0 = std::max(out.holder0, parts[2]);
    out.holder1 = std::max(out.holder1, parts[3]);
    double tot = parts[0] + parts[1] + parts[2] + parts[3];
    if (tot > out.total) {
      out.total = tot;
      out.dominant_ring = k;
    }
  }
  return out;
}

// One-variable anisotropic norm: sup |u| / rho^{nu+1} + R sup |D_1 u| / rho^nu
struct AnisotropicNorm {
  double sup = 0;
  double d1 = 0;
  double total() const { return sup + d1; }
};

inline AnisotropicNorm anisotropic_norm(const DiskField& u, const DiskField& dz, const DiskField& dzb, double nu) {
  const DiskGrid& g = u.grid;
  AnisotropicNorm n;
  for (int i = 0; i < g.nr(); ++i) {
    double r = g.radius(i);
    double w0 = std::pow(r, -(nu + 1)), w1 = g.R * std::pow(r, -nu);
    for (int j = 0; j < g.M; ++j) {
      n.sup = std::max(n.sup, w0 * std::abs(u.at(i, j)));
      n.d1 = std::max(n.d1, w1 * std::max(std::abs(dz.at(i, j)), std::abs(dzb.at(i, j))));
    }
  }
  return n;
}

// sup rho^{-nu} |T~ f| / sup rho^{1-nu} |f|
inline double weighted_bound_ratio(const DiskField& f, double nu) {
  CauchyTransform T(f.grid);
  DiskField tf = T.values(T.apply(f), true);
  const DiskGrid& g = f.grid;
  double num = 0, den = 0;
  for (int i = 0; i < g.nr(); ++i) {
    double r = g.radius(i);
    for (int j = 0; j < g.M; ++j) {
      num = std::max(num, std::pow(r, -nu) * std::abs(tf.at(i, j)));
      den = std::max(den, std::pow(r, 1 - nu) * std::abs(f.at(i, j)));
    }
  }
  return den == 0 ? 0 : num / den;
}

// ---------------------------------------------------------------------------
// Beltrami problem  dz/dzetabar + a(z) dzbar/dzetabar = 0,  z = zeta + zz,  zz = T~(-a(zeta + zz)(1 + conj(dzeta zz)))

struct PerturbationModel {
  std::string name;
  std::function<cd(cd)> a;
  double eta = 0;
  double smallness = 0;  // |a(zeta)| <= smallness |zeta|^eta

  static PerturbationModel constant(cd c) {
    return {"const", [c](cd) { return c; }, 0.0, std::abs(c)};
  }
  // a(z) = c (zbar / |z|) |z|^eta
  static PerturbationModel power(cd c, double eta) {
    if (!(eta > 0)) throw ValidationError("power model needs eta > 0");
    return {"power", [c, eta](cd z) {
              double r = std::abs(z);
              if (r == 0) return cd(0);
              return c * std::conj(z) / r * std::pow(r, eta);
            },
            eta, std::abs(c)};
  }

  void validate_on(const DiskGrid& g) const {
    for (int i = 0; i < g.nr(); ++i)
      for (int j = 0; j < g.M; ++j) {
        cd z = g.point(i, j);
        if (std::abs(a(z)) > smallness * std::pow(std::abs(z), eta) * (1 + 1e-12) + 1e-300)
          throw ValidationError("model coefficient exceeds its declared bound smallness*|zeta|^eta");
      }
  }
};

struct SolverOptions {
  int K = 8;
  int per_ring = 12;
  int M = 64;
  int degree = 6;
  double tol = 1e-10;
  int max_iter = 60;
  double threshold = 0.25;  // refuse unless ||J[0]|| <= threshold
};

struct BeltramiResult {
  DiskField zz;       // z - zeta
  DiskField dz_zz;    // d zz / dzeta
  int iterations = 0;
  double residual = 0;       // on the verification grid
  double j0_norm = 0;        // anisotropic norm of J[0]
  std::vector<double> increments;
  AnisotropicNorm norm;      // of the solution
  RingNorm ring;             // C^{1,alpha}_{nu+1} of the solution
  double decay_slope = 0;    // log-log slope of ring sup |zz| against s
  double holder_at_puncture = 0;  // [z]_alpha over pairs straddling the innermost rings
  std::vector<std::string> notes;
};

namespace detail {

struct Iterate {
  Transformed t;
  DiskField zz, dz, f;
};

inline DiskField beltrami_rhs(const PerturbationModel& m, const DiskGrid& g, const DiskField& zz, const DiskField& dz, double eta) {
  DiskField f(g, eta);
  for (int i = 0; i < g.nr(); ++i)
    for (int j = 0; j < g.M; ++j) {
      cd zeta = g.point(i, j);
      f.at(i, j) = -m.a(zeta + zz.at(i, j)) * (1.0 + std::conj(dz.at(i, j)));
    }
  return f;
}

inline Iterate step(const CauchyTransform& T, const PerturbationModel& m, const DiskField& zz, const DiskField& dz) {
  Iterate it;
  // declared decay of the right-hand side: |a| <~ rho^eta; the floor keeps the tail integrable
  it.f = beltrami_rhs(m, T.grid(), zz, dz, std::max(m.eta, -0.5));
  it.t = T.apply(it.f);
  it.zz = T.values(it.t, true);
  it.dz = T.dzeta(it.t);
  return it;
}

}  // namespace detail

// J[zz] with derivatives, for probing
struct JImage {
  DiskField value, dz, dzb;
};

inline JImage apply_J(const CauchyTransform& T, const PerturbationModel& m, const DiskField& zz, const DiskField& dz) {
  auto it = detail::step(T, m, zz, dz);
  return {it.zz, it.dz, it.f};
}

// Residual sup |dz/dzetabar + a(z) dzbar/dzetabar| on a finer, angularly offset grid, derivatives by differences there.
inline double verification_residual(const CauchyTransform& T, const Transformed& t, const PerturbationModel& m) {
  DiskGrid g = T.grid();
  DiskGrid fine = DiskGrid::make(g.R, g.K, 2 * g.M, 2 * g.per_ring, g.degree, pi / (2 * g.M));
  DiskField zz(fine);
  for (int i = 0; i < fine.nr(); ++i) {
    auto md = T.modes_at(t, fine.radius(i));
    for (int j = 0; j < fine.M; ++j) {
      cd s = 0;
      double th = fine.theta(j);
      for (int k = 0; k < g.M; ++k) s += md[static_cast<std::size_t>(k)] * std::polar(1.0, (k - g.M / 2 - 1) * th);
      zz.at(i, j) = s - t.origin;
    }
  }
  PolarDerivatives d = polar_derivatives(zz, DerivativeScheme::High);
  double res = 0;
  for (int i = 0; i < fine.nr(); ++i)
    for (int j = 0; j < fine.M; ++j) {
      cd z = fine.point(i, j) + zz.at(i, j);
      cd r = d.dzb.at(i, j) + m.a(z) * (1.0 + std::conj(d.dz.at(i, j)));
      res = std::max(res, std::abs(r));
    }
  return res;
}

inline BeltramiResult solve_beltrami(const PerturbationModel& model, const HolderParams& hp, double R, const SolverOptions& o = {}) {
  hp.validate(model.eta);
  DiskGrid g = DiskGrid::make(R, o.K, o.M, o.per_ring, o.degree);
  model.validate_on(g);
  CauchyTransform T(g);
  BeltramiResult res;
  DiskField zero(g);
  auto it = detail::step(T, model, zero, zero);
  res.j0_norm = anisotropic_norm(it.zz, it.dz, it.f, hp.nu).total();
  if (res.j0_norm > o.threshold)
    throw PreconditionFailure("contraction threshold not met: ||J[0]|| = " + std::to_string(res.j0_norm) + " > " + std::to_string(o.threshold));
  res.iterations = 1;
  double prev = anisotropic_norm(it.zz, it.dz, it.f, hp.nu).total();
  res.increments.push_back(prev);
  bool converged = prev < o.tol;
  while (!converged) {
    if (res.iterations >= o.max_iter)
      throw ContractionFailure("no convergence within " + std::to_string(o.max_iter) + " iterations", res.increments.size() > 1 ? res.increments.back() / res.increments[res.increments.size() - 2] : 1.0);
    auto next = detail::step(T, model, it.zz, it.dz);
    ++res.iterations;
    double inc = anisotropic_norm(next.zz - it.zz, next.dz - it.dz, next.f - it.f, hp.nu).total();
    res.increments.push_back(inc);
    it = std::move(next);
    if (inc < o.tol) {
      converged = true;
      break;
    }
    // allow rounding-level stalls; a real increase means the map is not contracting here
    if (inc >= prev && inc > 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, res.j0_norm))
      throw ContractionFailure("increments stopped decreasing", inc / prev);
    prev = inc;
  }
  res.zz = it.zz;
  res.dz_zz = it.dz;
  res.norm = anisotropic_norm(it.zz, it.dz, it.f, hp.nu);
  PolarDerivatives pd{it.dz, it.f};
  res.ring = ring_norm(it.zz, hp.alpha, hp.nu + 1, &pd);
  res.residual = verification_residual(T, it.t, model);
  // decay of sup |zz| over rings
  std::vector<double> xs, ys;
  for (int k = 1; k <= g.K; ++k) {
    double sup = 0;
    for (int i = g.ring_first(k); i <= g.ring_last(k); ++i)
      for (int j = 0; j < g.M; ++j) sup = std::max(sup, std::abs(it.zz.at(i, j)));
    if (sup > 0) {
      xs.push_back(std::log(std::ldexp(R, -k)));
      ys.push_back(std::log(sup));
    }
  }
  if (xs.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) mx += xs[k], my += ys[k];
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) sxy += (xs[k] - mx) * (ys[k] - my), sxx += (xs[k] - mx) * (xs[k] - mx);
    res.decay_slope = sxy / sxx;
  }
  // Hoelder quotient of z = zeta + zz between the two innermost rings and the origin, where z(0) = 0
  {
    double best = 0;
    int last = g.ring_last(g.K - 1 >= 1 ? g.K - 1 : g.K);
    for (int i = 0; i <= last; ++i)
      for (int j = 0; j < g.M; ++j) {
        cd zeta = g.point(i, j);
        double d = std::abs(zeta);
        best = std::max(best, std::abs(zeta + it.zz.at(i, j)) / std::pow(d, hp.alpha));
      }
    res.holder_at_puncture = best;
  }
  if (res.residual > 10 * o.tol)
    res.notes.push_back("verification residual exceeds 10*tol: discretization error dominates the iteration tolerance");
  return res;
}

// ---------------------------------------------------------------------------
// Contraction study

struct ContractionRow {
  double R = 0;
  double j0_ring = 0;       // C^{1,alpha}_{nu+1} norm of J[0]
  double j0_aniso = 0;      // anisotropic norm of J[0]
  double lipschitz = 0;     // max probed ratio of ring norms
};

struct ContractionStudy {
  std::vector<ContractionRow> rows;
  double j0_slope = 0;
  double lipschitz_slope = 0;
  double j0_spread = 0;        // max/min - 1 of j0_ring across R
  double lipschitz_spread = 0;
};

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < x.size(); ++k)
    if (x[k] > 0 && y[k] > 0) lx.push_back(std::log(x[k])), ly.push_back(std::log(y[k]));
  if (lx.size() < 2) return 0;
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) mx += lx[k], my += ly[k];
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(lx.size());
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) sxy += (lx[k] - mx) * (ly[k] - my), sxx += (lx[k] - mx) * (lx[k] - mx);
  return sxy / sxx;
}

// Random self-similar probe rho^{nu+1} sum c_k e^{ik theta} (1 + b_k rho/R), scaled to anisotropic norm `radius`.
inline std::pair<DiskField, DiskField> random_probe(const DiskGrid& g, double nu, std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> U(-1, 1);
  std::vector<cd> c(5), b(5);
  for (int k = 0; k < 5; ++k) c[static_cast<std::size_t>(k)] = cd(U(rng), U(rng)), b[static_cast<std::size_t>(k)] = cd(U(rng), U(rng)) * 0.5;
  DiskField f = sample(g, [&](cd z) {
    double r = std::abs(z), th = std::arg(z);
    cd s = 0;
    for (int k = -2; k <= 2; ++k) s += c[static_cast<std::size_t>(k + 2)] * std::polar(1.0, k * th) * (1.0 + b[static_cast<std::size_t>(k + 2)] * (r / g.R));
    return std::pow(r, nu + 1) * s;
  });
  PolarDerivatives d = polar_derivatives(f);
  double n = anisotropic_norm(f, d.dz, d.dzb, nu).total();
  double sc = n > 0 ? radius / n : 0;
  for (auto& x : f.v) x *= sc;
  for (auto& x : d.dz.v) x *= sc;
  return {f, d.dz};
}

inline ContractionStudy contraction_study(const PerturbationModel& model, const HolderParams& hp, const std::vector<double>& Rs,
                                          const SolverOptions& o = {}, std::uint64_t seed = 1, int probes = 3) {
  hp.validate(model.eta);
  ContractionStudy st;
  for (double R : Rs) {
    DiskGrid g = DiskGrid::make(R, o.K, o.M, o.per_ring, o.degree);
    CauchyTransform T(g);
    DiskField zero(g);
    JImage j0 = apply_J(T, model, zero, zero);
    ContractionRow row;
    row.R = R;
    PolarDerivatives pd{j0.dz, j0.dzb};
    row.j0_ring = ring_norm(j0.value, hp.alpha, hp.nu + 1, &pd).total;
    row.j0_aniso = anisotropic_norm(j0.value, j0.dz, j0.dzb, hp.nu).total();
    std::mt19937_64 rng(seed);
    for (int p = 0; p < probes; ++p) {
      auto [u, du] = random_probe(g, hp.nu, rng, 0.5);
      auto [v, dv] = random_probe(g, hp.nu, rng, 0.5);
      JImage ju = apply_J(T, model, u, du), jv = apply_J(T, model, v, dv);
      PolarDerivatives dj{ju.dz - jv.dz, ju.dzb - jv.dzb};
      double num = ring_norm(ju.value - jv.value, hp.alpha, hp.nu + 1, &dj).total;
      double den = ring_norm(u - v, hp.alpha, hp.nu + 1).total;
      if (den > 0) row.lipschitz = std::max(row.lipschitz, num / den);
    }
    st.rows.push_back(row);
  }
  std::vector<double> x, y0, y1;
  for (const auto& r : st.rows) x.push_back(r.R), y0.push_back(r.j0_ring), y1.push_back(r.lipschitz);
  st.j0_slope = loglog_slope(x, y0);
  st.lipschitz_slope = loglog_slope(x, y1);
  auto spread = [](const std::vector<double>& v) {
    double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
    return lo > 0 ? hi / lo - 1 : (hi > 0 ? std::numeric_limits<double>::infinity() : 0.0);
  };
  if (!st.rows.empty()) {
    st.j0_spread = spread(y0);
    st.lipschitz_spread = spread(y1);
  }
  return st;
}

// ---------------------------------------------------------------------------
// Identity checks

// max |dbar(T~ f) - f| / max |f| with 3-point differences on the grid
inline double dbar_identity_defect(const DiskField& f) {
  DiskField tf = modified_transform(f);
  PolarDerivatives d = polar_derivatives(tf, DerivativeScheme::SecondOrder);
  double m = f.sup();
  double e = 0;
  for (std::size_t k = 0; k < f.v.size(); ++k) e = std::max(e, std::abs(d.dzb.v[k] - f.v[k]));
  return m > 0 ? e / m : e;
}

struct IdentityOrder {
  std::vector<double> defects;
  double order = 0;  // log2 ratio of the last refinement
};

inline IdentityOrder dbar_identity_order(const std::function<cd(cd)>& f, double eta, const DiskGrid& base, int levels = 3) {
  IdentityOrder out;
  DiskGrid g = base;
  for (int l = 0; l < levels; ++l) {
    out.defects.push_back(dbar_identity_defect(sample(g, f, eta)));
    g = g.refined(2);
  }
  std::size_t n = out.defects.size();
  if (n >= 2 && out.defects[n - 1] > 0) out.order = std::log2(out.defects[n - 2] / out.defects[n - 1]);
  return out;
}

// Two variables (zeta1, zeta2) on D_R^* x D_R. T~^1 acts in zeta1 with the origin subtracted, T^2 = T~^2 acts in zeta2.
struct TestField2 {
  std::string name;
  std::function<cd(cd, cd)> f, dbar1, dbar2;
};

struct Identity2Defects {
  std::string name;
  double dbar1_T1 = 0;  // |dbar_1 T~^1 f - f|
  double dbar2_T2 = 0;  // |dbar_2 T~^2 f - f|
  double comm_21 = 0;   // |dbar_2 T~^1 f - T~^1 dbar_2 f|
  double comm_12 = 0;   // |dbar_1 T~^2 f - T~^2 dbar_1 f|
  double max() const { return std::max({dbar1_T1, dbar2_T2, comm_21, comm_12}); }
};

struct Identity2Report {
  int resolution = 0;
  std::vector<Identity2Defects> fields;
};

namespace detail {

// T (variable `which`) applied to f with the other variable frozen at `other`
inline DiskField transform_slice(const CauchyTransform& T, const std::function<cd(cd, cd)>& f, int which, cd other) {
  DiskField s = sample(T.grid(), [&](cd z) { return which == 1 ? f(z, other) : f(other, z); });
  return T.values(T.apply(s), which == 1);
}

inline double commutation_defect(const CauchyTransform& T, const TestField2& tf, int which, const std::vector<cd>& others, double h) {
  // which = transformed variable; the derivative acts in the other one
  auto dother = which == 1 ? tf.dbar2 : tf.dbar1;
  double e = 0;
  for (cd w : others) {
    DiskField xp = transform_slice(T, tf.f, which, w + h), xm = transform_slice(T, tf.f, which, w - h);
    DiskField yp = transform_slice(T, tf.f, which, w + cd(0, h)), ym = transform_slice(T, tf.f, which, w - cd(0, h));
    DiskField rhs = transform_slice(T, dother, which, w);
    for (std::size_t k = 0; k < rhs.v.size(); ++k) {
      cd dx = (xp.v[k] - xm.v[k]) / (2 * h), dy = (yp.v[k] - ym.v[k]) / (2 * h);
      cd lhs = 0.5 * (dx + cd(0, 1) * dy);
      e = std::max(e, std::abs(lhs - rhs.v[k]));
    }
  }
  return e;
}

inline double own_identity_defect(const CauchyTransform& T, const TestField2& tf, int which, const std::vector<cd>& others) {
  double e = 0;
  for (cd w : others) {
    DiskField s = sample(T.grid(), [&](cd z) { return which == 1 ? tf.f(z, w) : tf.f(w, z); });
    DiskField v = T.values(T.apply(s), which == 1);
    PolarDerivatives d = polar_derivatives(v, DerivativeScheme::SecondOrder);
    for (std::size_t k = 0; k < s.v.size(); ++k) e = std::max(e, std::abs(d.dzb.v[k] - s.v[k]));
  }
  return e;
}

}  // namespace detail

inline std::vector<TestField2> standard_fields2(double R) {
  std::vector<TestField2> out;
  out.push_back({"zero", [](cd, cd) { return cd(0); }, [](cd, cd) { return cd(0); }, [](cd, cd) { return cd(0); }});
  out.push_back({"conj(z1)*z2", [](cd a, cd b) { return std::conj(a) * b; }, [](cd, cd b) { return b; }, [](cd, cd) { return cd(0); }});
  out.push_back({"z1*conj(z2)^2", [](cd a, cd b) { return a * std::conj(b) * std::conj(b); }, [](cd, cd) { return cd(0); },
                 [](cd a, cd b) { return 2.0 * a * std::conj(b); }});
  out.push_back({"exp(conj(z1)*conj(z2))", [](cd a, cd b) { return std::exp(std::conj(a) * std::conj(b)); },
                 [](cd a, cd b) { return std::conj(b) * std::exp(std::conj(a) * std::conj(b)); },
                 [](cd a, cd b) { return std::conj(a) * std::exp(std::conj(a) * std::conj(b)); }});
  // smooth bump in zeta1 centred at R/2, radius R/4, times exp(conj(z2) z2 / 2)
  double c = R / 2, w = R / 4;
  auto bump = [c, w](cd a) {
    double q = std::norm(a - c) / (w * w);
    return q < 1 ? std::exp(-1 / (1 - q)) : 0.0;
  };
  auto bump_dbar = [c, w, bump](cd a) {
    double q = std::norm(a - c) / (w * w);
    if (q >= 1) return cd(0);
    // d/dabar of exp(-1/(1-q)) with dq/dabar = (a - c) / w^2
    return cd(bump(a) * (-1 / ((1 - q) * (1 - q)))) * ((a - c) / (w * w));
  };
  out.push_back({"bump(z1)*exp(|z2|^2/2)", [=](cd a, cd b) { return bump(a) * std::exp(std::norm(b) / 2); },
                 [=](cd a, cd b) { return bump_dbar(a) * std::exp(std::norm(b) / 2); },
                 [=](cd a, cd b) { return bump(a) * std::exp(std::norm(b) / 2) * b * 0.5; }});
  return out;
}

inline Identity2Report operator_identities_2var(int resolution, double R = 0.5, int K = 6) {
  int per_ring = std::max(6, resolution / 8 / 6 * 6);
  DiskGrid g = DiskGrid::make(R, K, resolution, per_ring, 6);
  CauchyTransform T(g);
  double h = 2 * R / resolution;
  std::vector<cd> others{cd(0.3 * R, 0.1 * R), cd(-0.2 * R, 0.4 * R), cd(0.05 * R, -0.6 * R)};
  Identity2Report rep;
  rep.resolution = resolution;
  for (const auto& tf : standard_fields2(R)) {
    Identity2Defects d;
    d.name = tf.name;
    d.dbar1_T1 = detail::own_identity_defect(T, tf, 1, others);
    d.dbar2_T2 = detail::own_identity_defect(T, tf, 2, others);
    d.comm_21 = detail::commutation_defect(T, tf, 1, others, h);
    d.comm_12 = detail::commutation_defect(T, tf, 2, others, h);
    rep.fields.push_back(d);
  }
  return rep;
}

}  // namespace conedef::dbar
