#include <gtest/gtest.h>

#include <random>

#include "conedef/dbar.hpp"
#include "conedef/errors.hpp"

using namespace conedef;
using namespace conedef::dbar;

namespace {

double max_diff(const DiskField& a, const DiskField& b) {
  double e = 0;
  for (std::size_t k = 0; k < a.v.size(); ++k) e = std::max(e, std::abs(a.v[k] - b.v[k]));
  return e;
}

// r^(nu-1) times a random trigonometric polynomial with a smooth radial factor
std::function<cd(cd)> random_decaying(std::mt19937_64& rng, double nu) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<cd> c(5);
  for (auto& x : c) x = cd(n01(rng), n01(rng));
  double b = u(rng);
  return [c, b, nu](cd z) {
    double r = std::abs(z), th = std::arg(z);
    cd s = 0;
    for (int q = -2; q <= 2; ++q) s += c[static_cast<std::size_t>(q + 2)] * std::polar(1.0, q * th);
    return std::pow(r, nu - 1) * (1 + b * r) * s;
  };
}

}  // namespace

TEST(Transform, OneMapsToConjugate) {
  auto g = DiskGrid::make(1.0, 8, 128, 12, 6);
  DiskField t = modified_transform(sample(g, [](cd) { return cd(1); }));
  double e = 0;
  for (int i = 0; i < g.nr(); ++i)
    for (int j = 0; j < g.M; ++j) e = std::max(e, std::abs(t.at(i, j) - std::conj(g.point(i, j))));
  EXPECT_LT(e, 1e-6);
}

TEST(Transform, DbarIdentityConvergesAtSecondOrder) {
  std::vector<std::pair<std::function<cd(cd)>, double>> fields = {
      {[](cd) { return cd(1); }, 0.0},
      {[](cd z) { return std::conj(z); }, 0.0},
      {[](cd z) { return z; }, 0.0},
      {[](cd z) { return cd(std::norm(z)); }, 0.0},
      {[](cd z) { return std::exp(std::conj(z)); }, 0.0},
      {[](cd z) { return z * std::conj(z) * std::conj(z); }, 0.0},
      {[](cd z) { return cd(std::cos(3 * z.real())); }, 0.0},
      {[](cd z) { return std::pow(std::abs(z), 1.5) * z / std::abs(z); }, 0.0},
      {[](cd z) { return std::sin(z) * std::conj(z); }, 0.0},
      {[](cd z) { return cd(std::pow(std::abs(z), -0.4)); }, -0.4},
  };
  for (std::size_t k = 0; k < fields.size(); ++k) {
    auto o = dbar_identity_order(fields[k].first, fields[k].second, DiskGrid::make(1.0, 6, 32, 6, 6), 3);
    ASSERT_EQ(o.defects.size(), 3u);
    EXPECT_GE(o.order, 1.8) << "field " << k;
    EXPECT_LT(o.defects[2], o.defects[0]) << "field " << k;
  }
}

TEST(Transform, DivergentDecayRejected) {
  auto g = DiskGrid::make(1.0, 4, 16, 6, 6);
  EXPECT_THROW(modified_transform(sample(g, [](cd z) { return cd(1 / std::norm(z)); }, -1.0)), ValidationError);
  EXPECT_THROW(modified_transform(sample(g, [](cd) { return cd(1); }, -1.5)), ValidationError);
}

TEST(Transform, NonFiniteSamplesRejected) {
  auto g = DiskGrid::make(1.0, 4, 16, 6, 6);
  DiskField f = sample(g, [](cd) { return cd(1); });
  f.v[3] = cd(std::nan(""), 0);
  EXPECT_THROW(modified_transform(f), ValidationError);
}

TEST(Grid, Validation) {
  EXPECT_THROW(DiskGrid::make(0.0, 4, 16), ValidationError);
  EXPECT_THROW(DiskGrid::make(1.0, 0, 16), ValidationError);
  EXPECT_THROW(DiskGrid::make(1.0, 4, 15), ValidationError);
  EXPECT_THROW(DiskGrid::make(1.0, 4, 16, 7, 6), ValidationError);
  auto g = DiskGrid::make(0.5, 3, 16, 6, 6);
  EXPECT_DOUBLE_EQ(g.radius(g.nr() - 1), 0.5);
  EXPECT_NEAR(g.radius(0), 0.5 / 8, 1e-15);
}

TEST(WeightedBound, StableUnderRefinementPerWeight) {
  for (double nu : {0.2, 0.5, 0.8, 1.3}) {
    auto f = [nu](cd z) {
      double r = std::abs(z);
      return std::pow(r, nu - 1) * (cd(0.3, 0.2) + 0.5 * z / r + cd(0, 0.7) * std::conj(z) * std::conj(z) / (r * r) * (1 + r));
    };
    std::vector<double> cs;
    for (int lv = 0; lv < 3; ++lv) {
      auto g = DiskGrid::make(1.0, 8, 32 << lv, 6 << lv, 6);
      cs.push_back(weighted_bound_ratio(sample(g, f, nu - 1), nu));
    }
    double lo = *std::min_element(cs.begin(), cs.end()), hi = *std::max_element(cs.begin(), cs.end());
    EXPECT_GT(lo, 0) << nu;
    EXPECT_LT(hi / lo - 1, 0.15) << nu;
  }
}

TEST(WeightedBound, RandomFieldsRefinementStable) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    double nu = 0.2 + 0.05 * trial;
    auto f = random_decaying(rng, nu);
    auto g = DiskGrid::make(1.0, 7, 32, 6, 6);
    double c0 = weighted_bound_ratio(sample(g, f, nu - 1), nu);
    double c1 = weighted_bound_ratio(sample(g.refined(2), f, nu - 1), nu);
    ASSERT_TRUE(std::isfinite(c0) && c0 > 0) << trial;
    EXPECT_NEAR(c1 / c0, 1.0, 0.15) << "trial " << trial << " nu " << nu;
  }
}

TEST(Holder, ParamsValidation) {
  EXPECT_NO_THROW((HolderParams{0.5, 0.4}.validate(0.8)));
  EXPECT_NO_THROW((HolderParams{0.5, 0.0}.validate(0.0)));
  EXPECT_THROW((HolderParams{0.0, 0.4}.validate(0.8)), ValidationError);
  EXPECT_THROW((HolderParams{1.0, 0.4}.validate(0.8)), ValidationError);
  EXPECT_THROW((HolderParams{0.5, 0.8}.validate(0.8)), ValidationError);
  EXPECT_THROW((HolderParams{0.5, 0.0}.validate(0.8)), ValidationError);
  EXPECT_THROW((HolderParams{0.5, 0.2}.validate(0.0)), ValidationError);
}

TEST(Beltrami, ConstantCoefficientExactSolution) {
  cd a(0.1, 0.05);
  SolverOptions so;
  so.tol = 1e-12;
  auto r = solve_beltrami(PerturbationModel::constant(a), HolderParams{0.5, 0.0}, 0.4, so);
  double e = 0;
  for (int i = 0; i < r.zz.grid.nr(); ++i)
    for (int j = 0; j < r.zz.grid.M; ++j) e = std::max(e, std::abs(r.zz.at(i, j) + a * std::conj(r.zz.grid.point(i, j))));
  EXPECT_LT(e, 1e-8);
  EXPECT_LT(r.residual, 1e-8);
}

TEST(Beltrami, PowerModelResidualAndDecay) {
  SolverOptions so;
  so.tol = 1e-9;
  for (double R : {0.4, 0.2}) {
    auto r = solve_beltrami(PerturbationModel::power(0.05, 0.8), HolderParams{0.5, 0.5}, R, so);
    EXPECT_LT(r.residual, 10 * so.tol) << R;
    EXPECT_LT(r.j0_norm, so.threshold);
    EXPECT_GT(r.decay_slope, 1.5) << R;
    EXPECT_TRUE(std::isfinite(r.holder_at_puncture));
    EXPECT_LT(r.holder_at_puncture, 1.0);
    for (std::size_t k = 1; k < r.increments.size(); ++k) EXPECT_LT(r.increments[k], r.increments[k - 1]);
  }
}

TEST(Beltrami, PunctureRegularity) {
  auto r = solve_beltrami(PerturbationModel::power(0.05, 0.8), HolderParams{0.5, 0.5}, 0.4);
  const auto& g = r.zz.grid;
  double inner = 0;
  for (int j = 0; j < g.M; ++j) inner = std::max(inner, std::abs(r.zz.at(0, j)));
  EXPECT_LT(inner, 10 * std::pow(g.r_min(), 1.5));
}

TEST(Beltrami, Deterministic) {
  auto a = solve_beltrami(PerturbationModel::power(cd(0.03, 0.02), 0.8), HolderParams{0.5, 0.5}, 0.3);
  auto b = solve_beltrami(PerturbationModel::power(cd(0.03, 0.02), 0.8), HolderParams{0.5, 0.5}, 0.3);
  EXPECT_EQ(max_diff(a.zz, b.zz), 0.0);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.residual, b.residual);
}

TEST(Beltrami, RefusesLargePerturbation) {
  EXPECT_THROW(solve_beltrami(PerturbationModel::constant(0.3), HolderParams{0.5, 0.0}, 0.4), PreconditionFailure);
}

TEST(Beltrami, RejectsBadInputs) {
  EXPECT_THROW(PerturbationModel::power(0.05, 0.0), ValidationError);
  EXPECT_THROW(solve_beltrami(PerturbationModel::power(0.05, 0.8), HolderParams{0.5, 0.9}, 0.4), ValidationError);
  EXPECT_THROW(solve_beltrami(PerturbationModel::constant(0.05), HolderParams{0.5, 0.3}, 0.4), ValidationError);
}

TEST(Contraction, JZeroSlopeMatchesDecayGap) {
  auto st = contraction_study(PerturbationModel::power(0.05, 0.8), HolderParams{0.5, 0.5}, {0.4, 0.2, 0.1});
  ASSERT_EQ(st.rows.size(), 3u);
  EXPECT_NEAR(st.j0_slope, 0.3, 0.1);
  EXPECT_GE(st.lipschitz_slope, 0.8 - 0.1);
  for (std::size_t k = 1; k < st.rows.size(); ++k) EXPECT_LT(st.rows[k].j0_ring, st.rows[k - 1].j0_ring);
}

TEST(Contraction, ConstantModelIsScaleFree) {
  auto st = contraction_study(PerturbationModel::constant(0.05), HolderParams{0.5, 0.0}, {0.4, 0.2, 0.1});
  EXPECT_LT(st.j0_spread, 0.05);
  EXPECT_LT(st.lipschitz_spread, 0.05);
}

TEST(TwoVariables, CommutationAndOwnIdentities) {
  auto lo = operator_identities_2var(64), hi = operator_identities_2var(128);
  ASSERT_EQ(lo.fields.size(), hi.fields.size());
  for (std::size_t k = 0; k < lo.fields.size(); ++k) {
    const auto& a = lo.fields[k];
    const auto& b = hi.fields[k];
    EXPECT_LE(b.dbar1_T1, a.dbar1_T1 + 1e-14) << a.name;
    EXPECT_LE(b.dbar2_T2, a.dbar2_T2 + 1e-14) << a.name;
    EXPECT_LE(b.comm_21, a.comm_21 + 1e-12) << a.name;
    EXPECT_LE(b.comm_12, a.comm_12 + 1e-12) << a.name;
    EXPECT_LT(b.max(), 0.05) << a.name;
  }
  EXPECT_EQ(hi.fields[0].max(), 0.0);
}
