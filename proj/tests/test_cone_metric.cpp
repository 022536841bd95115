#include <gtest/gtest.h>

#include <random>

#include "conedef/cone_metric.hpp"

using namespace conedef;

namespace {

// a = 1 + sum |z_i|^2 + small hermitian terms of bidegree up to (3, 3)
Potential random_potential(std::mt19937_64& rng, std::size_t D, double size = 0.15) {
  std::uniform_real_distribution<double> u(-size, size);
  Potential p;
  p.dim = D;
  p.poly = CPoly(2 * D);
  Exponent e0(2 * D, 0);
  p.poly.add_term(e0, cd(1));
  for (std::size_t i = 0; i < D; ++i) {
    Exponent e(2 * D, 0);
    e[i] = 1;
    e[D + i] = 1;
    p.poly.add_term(e, cd(1));
  }
  for (int t = 0; t < 6; ++t) {
    std::uniform_int_distribution<int> deg(0, 3);
    std::uniform_int_distribution<std::size_t> var(0, D - 1);
    int dp = deg(rng), dq = deg(rng);
    if (dp + dq == 0) continue;
    Exponent e(2 * D, 0), f(2 * D, 0);
    for (int k = 0; k < dp; ++k) {
      std::size_t v = var(rng);
      ++e[v];
      ++f[D + v];
    }
    for (int k = 0; k < dq; ++k) {
      std::size_t v = var(rng);
      ++e[D + v];
      ++f[v];
    }
    cd c(u(rng), u(rng));
    p.poly.add_term(e, c);
    p.poly.add_term(f, std::conj(c));
  }
  p.validate_hermitian(1e-12);
  return p;
}

std::vector<cd> random_point(std::mt19937_64& rng, std::size_t D, double r) {
  std::uniform_real_distribution<double> u(-r, r);
  std::vector<cd> z;
  for (std::size_t i = 0; i < D; ++i) z.emplace_back(u(rng), u(rng));
  return z;
}

cd random_xi(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.2, 2.0), ang(-3.1, 3.1);
  return std::polar(mag(rng), ang(rng));
}

// g_{A Bbar} = d_A dbar_B Phi by second differences of Phi = a^delta |xi|^(-2 delta)
CMatrix hessian_at_step(const Potential& p, double delta, const std::vector<cd>& z, cd xi, double h) {
  std::size_t n = p.dim + 1;
  auto phi = [&](std::vector<cd> w) {
    std::vector<cd> zz(w.begin() + 1, w.end());
    return std::pow(p.value(zz).real(), delta) * std::pow(std::norm(w[0]), -delta);
  };
  std::vector<cd> w{xi};
  w.insert(w.end(), z.begin(), z.end());
  auto second = [&](std::size_t a, cd da, std::size_t b, cd db) {
    auto at = [&](double sa, double sb) {
      auto v = w;
      v[a] += sa * da;
      v[b] += sb * db;
      return phi(v);
    };
    return (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4 * h * h);
  };
  CMatrix g(n, n);
  const cd one(1, 0), I(0, 1);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      double xx = second(a, one, b, one), yy = second(a, I, b, I), xy = second(a, one, b, I), yx = second(a, I, b, one);
      g(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = 0.25 * cd(xx + yy, xy - yx);
    }
  return g;
}

CMatrix hessian_oracle(const Potential& p, double delta, const std::vector<cd>& z, cd xi) {
  CMatrix a = hessian_at_step(p, delta, z, xi, 2e-3), b = hessian_at_step(p, delta, z, xi, 1e-3);
  return (4.0 * b - a) / 3.0;
}

const std::vector<Rational> deltas{Rational(1, 4), Rational(1, 3), Rational(1, 2), Rational(2, 3), Rational(1), Rational(3, 2)};

}  // namespace

TEST(Potential, ParseForms) {
  Potential a = parse_potential("1+|z|^2", 1), b = parse_potential("1 + z*zb", 1), c = parse_potential("1+z*zbar", 1);
  std::vector<cd> z{cd(0.3, -0.2)};
  EXPECT_NEAR(std::abs(a.value(z) - b.value(z)), 0, 1e-15);
  EXPECT_NEAR(std::abs(a.value(z) - c.value(z)), 0, 1e-15);
  Potential d = parse_potential("2+|z1|^2+3*|z2|^4 + (1+i)*z1*zb2 + (1-i)*z2*zb1", 2);
  EXPECT_NEAR(d.value({cd(0), cd(0)}).real(), 2, 1e-15);
  EXPECT_THROW(parse_potential("z", 1), ValidationError);
  EXPECT_THROW(parse_potential("1+|z|^3", 1), ParseError);
  EXPECT_THROW(parse_potential("1+z3*zb3", 2), ParseError);
  EXPECT_THROW(parse_potential("1+", 1), ParseError);
}

TEST(Metric, GeneralFormulaMatchesHessianOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t D = 1 + trial % 2;
    Potential p = random_potential(rng, D);
    auto z = random_point(rng, D, 0.4);
    cd xi = random_xi(rng);
    double delta = deltas[static_cast<std::size_t>(trial) % deltas.size()].get_d();
    CMatrix g = calabi_metric(p, delta, z, xi), o = hessian_oracle(p, delta, z, xi);
    EXPECT_LT((g - o).norm() / g.norm(), 1e-6) << trial;
    EXPECT_LT((g - g.adjoint()).norm(), 1e-12 * g.norm());
  }
}

TEST(Metric, NormalizeChartProducesNormalizedJets) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t D = 1 + trial % 2;
    Potential p = random_potential(rng, D);
    NormalizedChart nc = normalize_chart(p, random_point(rng, D, 0.4));
    EXPECT_LT(normalization_defect(jets_at(nc.potential, std::vector<cd>(D, cd(0)))).max(), 1e-12);
    EXPECT_GT(nc.a0, 0);
  }
}

TEST(Metric, ChristoffelClosedFormAgreesWithFiniteDifferences) {
  std::mt19937_64 rng(3);
  int charts = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t D = 1 + trial % 2;
    NormalizedChart nc = normalize_chart(random_potential(rng, D), random_point(rng, D, 0.4));
    Rational delta = deltas[static_cast<std::size_t>(trial) % deltas.size()];
    ConeChart c{delta, D, std::vector<cd>(D, cd(0)), random_xi(rng), nc.potential};
    MetricAtPoint m = metric_at(c);
    Christoffel fd = christoffel_fd(c.potential, delta.get_d(), c.z, c.xi, {1e-5, true});
    double scale = std::abs(m.gamma[0][0][0]);
    EXPECT_LT(christoffel_difference(m.gamma, fd), 1e-6 * std::max(1.0, scale)) << trial;
    // closed forms at a normalized point
    double d = delta.get_d();
    EXPECT_NEAR(std::abs(m.gamma[0][0][0] + (d + 1) / c.xi), 0, 1e-14);
    for (std::size_t i = 1; i <= D; ++i) EXPECT_NEAR(std::abs(m.gamma[i][i][0] + d / c.xi), 0, 1e-14);
    ++charts;
  }
  EXPECT_EQ(charts, 50);
}

TEST(Metric, RejectsUnnormalizedChart) {
  Potential p = parse_potential("1+|z|^2+1/3*z+1/3*zb", 1);
  ConeChart c{Rational(1, 2), 1, {cd(0)}, cd(1), p};
  EXPECT_THROW(metric_at(c), NotNormalizedChart);
}

TEST(Metric, RadialFunctionHasUnitGradient) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t D = 1 + trial % 2;
    Potential p = random_potential(rng, D);
    double d = deltas[static_cast<std::size_t>(trial) % deltas.size()].get_d();
    double v = radial_gradient_norm2(p, d, random_point(rng, D, 0.4), random_xi(rng));
    EXPECT_LT(std::abs(std::sqrt(v) - 1), 1e-6);
  }
}

TEST(Metric, ScalingExponentsMatchSlopes) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 6; ++trial) {
    std::size_t D = 1 + trial % 2;
    NormalizedChart nc = normalize_chart(random_potential(rng, D), random_point(rng, D, 0.3));
    Rational delta = deltas[static_cast<std::size_t>(trial)];
    ConeChart c{delta, D, std::vector<cd>(D, cd(0)), random_xi(rng), nc.potential};
    for (const auto& s : scaling_slopes(c, 4, 12)) {
      if (s.predicted == 0) EXPECT_LT(std::abs(s.measured), 1e-2) << s.name;
      else EXPECT_LT(s.relative_error(), 1e-2) << s.name;
    }
  }
}

TEST(Metric, ScalingExponentArithmetic) {
  Rational d(2, 5);
  EXPECT_EQ(scaling_exponent({0, 1, 1, 0}, d), Rational(1));
  EXPECT_EQ(scaling_exponent({1, 0, 0, 1}, d), Rational(-1));
  EXPECT_EQ(scaling_exponent({1, 0, 1, 0}, d), Rational(0));
  EXPECT_EQ(scaling_exponent({2, 1, 0, 0}, d), Rational(11, 5));
  EXPECT_THROW(scaling_exponent({-1, 0, 0, 0}, d), ValidationError);
}

TEST(Metric, DerivativeRatioIsScaleFree) {
  Potential p = parse_potential("1+|z|^2", 1);
  for (double d : {0.5, 1.0, 1.5}) {
    double expect = std::sqrt(d * d + (d + 1) * (d + 1)) / d;
    for (int k = 0; k <= 8; ++k) {
      double x = std::ldexp(1.0, -k);
      double r = derivative_norm_ratio(p, d, {cd(0)}, cd(x, 0), {1e-4 * x, true});
      EXPECT_NEAR(r, expect, 1e-6 * expect);
      EXPECT_LE(r, 4.0);
      EXPECT_GE(r, 0.25);
    }
  }
}

TEST(Curvature, FlatConeAtDeltaOne) {
  Potential p = parse_potential("1+|z|^2", 1);
  std::vector<GridPoint> grid{{{cd(0.2, 0.1)}, cd(0.8, 0.1)}, {{cd(-0.5, 0.3)}, cd(1.5, -0.4)}, {{cd(0)}, cd(0.3, 0.3)}};
  CurvatureReport r = curvature_check(p, 1.0, std::nullopt, grid, {1e-4, true});
  EXPECT_LT(r.max_value, 1e-6);
  EXPECT_TRUE(r.converged);
}

TEST(Curvature, CurvedConeIsNotFlat) {
  Potential p = parse_potential("1+|z|^2", 1);
  CurvatureReport r = full_curvature(p, 0.5, {cd(0.1)}, cd(0.7), {1e-4, true});
  EXPECT_GT(r.max_value, 1e-2);
}

TEST(Curvature, RicciProportionality) {
  for (std::size_t D : {1u, 2u}) {
    std::string s = "1";
    for (std::size_t i = 1; i <= D; ++i) s += "+|z" + std::to_string(i) + "|^2";
    Potential p = parse_potential(s, D);
    double mu = static_cast<double>(D + 1);
    std::vector<GridPoint> grid{{std::vector<cd>(D, cd(0.1, 0.2)), cd(0.7, 0.2)}, {std::vector<cd>(D, cd(-0.3, 0)), cd(1.3, 0)}};
    for (double d : {0.5, 1.0, 0.25}) {
      CurvatureReport r = curvature_check(p, d, mu, grid, {1e-4, true});
      EXPECT_LT(r.max_value, 1e-5) << D << " " << d;
    }
  }
}

TEST(Curvature, DegeneratePotentialRejected) {
  Potential p = parse_potential("3", 1);
  std::vector<GridPoint> grid{{{cd(0.1)}, cd(1)}};
  EXPECT_THROW(curvature_check(p, 1.0, std::nullopt, grid), ValidationError);
}

TEST(Calabi, ExponentFromEinsteinConstant) {
  EXPECT_EQ(calabi_exponent(Rational(2), 1), Rational(1));
  EXPECT_EQ(calabi_exponent(Rational(3), 2), Rational(1));
  EXPECT_EQ(calabi_exponent(Rational(1), 2), Rational(1, 3));
}
