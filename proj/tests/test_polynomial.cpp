#include <gtest/gtest.h>

#include <random>

#include "conedef/cone_file.hpp"
#include "conedef/parse.hpp"
#include "conedef/polynomial.hpp"

using namespace conedef;

namespace {

QPoly random_poly(std::mt19937_64& rng, std::size_t n, int max_deg, int terms) {
  std::uniform_int_distribution<int> deg(0, max_deg), num(-12, 12), den(1, 7);
  std::uniform_int_distribution<std::size_t> var(0, n - 1);
  QPoly p(n);
  for (int t = 0; t < terms; ++t) {
    Exponent e(n, 0);
    int d = deg(rng);
    for (int k = 0; k < d; ++k) ++e[var(rng)];
    Rational c(num(rng), den(rng));
    c.canonicalize();
    p.add_term(e, c);
  }
  return p;
}

}  // namespace

TEST(Parse, CubicForm) {
  QPoly p = parse_polynomial("z1^3+z2^3+z3^3+z4^3");
  EXPECT_EQ(p.nvars(), 4u);
  EXPECT_EQ(p.degree(), 3);
  EXPECT_TRUE(p.is_homogeneous());
  EXPECT_EQ(p.coeff({0, 0, 3, 0}), Rational(1));
  EXPECT_EQ(p.terms().size(), 4u);
}

TEST(Parse, RationalCoefficient) {
  QPoly p = parse_polynomial("1/2*z1*z2 - z3^2");
  EXPECT_EQ(p.terms().size(), 2u);
  EXPECT_EQ(p.coeff({1, 1, 0}), Rational(1, 2));
  EXPECT_EQ(p.coeff({0, 0, 2}), Rational(-1));
}

TEST(Parse, MalformedExponentReportsColumn) {
  try {
    parse_polynomial("z1^");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1);
    EXPECT_EQ(e.column(), 4);
  }
}

TEST(Parse, Errors) {
  EXPECT_THROW(parse_polynomial(""), ParseError);
  EXPECT_THROW(parse_polynomial("z0"), ParseError);
  EXPECT_THROW(parse_polynomial("2*"), ParseError);
  EXPECT_THROW(parse_polynomial("z1 z2"), ParseError);
  EXPECT_THROW(parse_polynomial("z1 + + z2"), ParseError);
  EXPECT_THROW(parse_polynomial("x1"), ParseError);
}

TEST(Parse, LikeTermsCombine) {
  QPoly p = parse_polynomial("z1*z2 + z2*z1 - 2*z1*z2 + 3");
  EXPECT_EQ(p.terms().size(), 1u);
  EXPECT_EQ(p.degree(), 0);
}

TEST(RoundTrip, RandomPolynomials) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t n = 1 + trial % 5;
    QPoly p = random_poly(rng, n, 5, 1 + trial % 9);
    std::string s = p.to_string();
    QPoly q = parse_polynomial(s, n);
    EXPECT_EQ(q.to_string(), s);
    for (const auto& [e, c] : p.terms()) EXPECT_EQ(q.coeff(e), c) << s;
    EXPECT_EQ(q.terms().size(), p.terms().size()) << s;
  }
}

TEST(Arithmetic, RingAxiomsOnRandomInputs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    QPoly a = random_poly(rng, 3, 3, 4), b = random_poly(rng, 3, 3, 4), c = random_poly(rng, 3, 2, 3);
    EXPECT_EQ((a * b).to_string(), (b * a).to_string());
    EXPECT_EQ(((a + b) * c).to_string(), (a * c + b * c).to_string());
    EXPECT_EQ(((a * b) * c).to_string(), (a * (b * c)).to_string());
    if (!a.is_zero() && !b.is_zero()) EXPECT_EQ((a * b).degree(), a.degree() + b.degree());
  }
}

TEST(Arithmetic, DerivativeLeibniz) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    QPoly a = random_poly(rng, 3, 4, 5), b = random_poly(rng, 3, 4, 5);
    for (std::size_t k = 0; k < 3; ++k)
      EXPECT_EQ((a * b).derivative(k).to_string(), (a.derivative(k) * b + a * b.derivative(k)).to_string());
  }
}

TEST(Arithmetic, EvaluateMatchesExactValue) {
  QPoly p = parse_polynomial("1/2*z1*z2 - z3^2 + 3");
  std::vector<double> x{2.0, -3.0, 0.5};
  EXPECT_DOUBLE_EQ(p.evaluate(x), -0.25);
}

TEST(ConeFile, SectionsAndParams) {
  ConeInput in = parse_cone_text(
      "# comment\n[defining]\nz1^2 + z2^2 + z3^2 + z4^2 ; deg=2\n[perturbation]\n1\n[params] n=3 alpha=3\ncompact=true\n");
  EXPECT_EQ(in.cone.ambient_dim, 4u);
  ASSERT_TRUE(in.perturbation.has_value());
  EXPECT_EQ(in.perturbation->declared_degrees[0], 0);
  EXPECT_EQ(*in.n, 3);
  EXPECT_EQ(*in.alpha, Rational(3));
  EXPECT_TRUE(*in.compact);
}

TEST(ConeFile, Errors) {
  EXPECT_THROW(parse_cone_text("[defining]\nz1^3 + z2^3 ; deg=2\n"), DegreeMismatch);
  EXPECT_THROW(parse_cone_text("[defining]\nz1^3 + z2^2 + z3^3\n"), ValidationError);
  EXPECT_THROW(parse_cone_text("z1^2\n"), ParseError);
  EXPECT_THROW(parse_cone_text("[bogus]\n"), ParseError);
  EXPECT_THROW(parse_cone_text("[defining]\nz1^2+z2^2+z3^2\n[perturbation]\n1\n2\n"), ValidationError);
  try {
    parse_cone_text("[defining]\nz1^3 + z2^3\nz1^\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.column(), 4);
  }
}
