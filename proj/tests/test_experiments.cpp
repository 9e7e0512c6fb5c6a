#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "hcbloch/experiments.hpp"

using namespace hcbloch;

namespace {

ExperimentOptions quick() {
  ExperimentOptions o;
  o.mesh_check = false;
  return o;
}

}  // namespace

TEST(Resolution, UnitCellsFollowTheRule) {
  const ResolutionRule rule;
  EXPECT_EQ(rule.unit_cells(0.5), 16);
  EXPECT_EQ(rule.unit_cells(0.25), 32);
  EXPECT_EQ(rule.unit_cells(0.125), 64);
  std::vector<int> fib;
  for (double eps : {1.0 / 3, 0.25, 0.2, 1.0 / 6}) fib.push_back(fiber_cells(eps, 2.0, rule));
  EXPECT_EQ(fib, (std::vector<int>{56, 96, 184, 448}));
  EXPECT_EQ(rule.unit_cells(1e-5), 2048);
  ResolutionRule fixed;
  fixed.override_n = 24;
  EXPECT_EQ(fixed.unit_cells(0.01), 24);
}

TEST(Thm22, ConstantMediumHasOnlyTheLatticeTerm) {
  const std::vector<double> eta{0.3, 0.2};
  const auto t = run_thm22(
      {0.5, 0.25, 0.125}, eta, [](double, int n) { return CoefficientField::constant(cubic_grid(2, n), 1.0); },
      [](double) { return 16; }, quick());
  ASSERT_EQ(t.rows.size(), 3u);
  for (const auto& r : t.rows) {
    // discrete band of the eps-periodic grid, h = 2 pi eps / n
    const double h = kTwoPi * r.eps / 16;
    const double sym = 4 / (h * h) * (std::pow(std::sin(0.15 * h), 2) + std::pow(std::sin(0.1 * h), 2));
    EXPECT_NEAR(r.lambda1, sym, 1e-10) << r.eps;
    EXPECT_NEAR(*r.q_eta_eta, 0.13, 1e-12);
    EXPECT_NEAR(r.gap, 0.13 - sym, 1e-10);
    EXPECT_LE(r.gap, 1e-3 * r.eps * r.eps);
    EXPECT_LE(std::abs(*r.dispersion_value), 1e-10);
  }
  EXPECT_TRUE(t.passed());
}

TEST(Thm22, GapAndDispersionShrink) {
  const auto t = run_thm22({0.5, 0.25}, {1.0, 0.0}, quick());
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].n, 16);
  EXPECT_EQ(t.rows[1].n, 32);
  EXPECT_LT(t.rows[1].gap, t.rows[0].gap);
  EXPECT_LT(std::abs(*t.rows[1].dispersion_value), std::abs(*t.rows[0].dispersion_value));
  EXPECT_TRUE(t.passed());
  ASSERT_NE(t.check("gap_non_increasing"), nullptr);
  EXPECT_TRUE(t.check("gap_non_increasing")->passed);
  EXPECT_EQ(t.check("mesh_doubling_within_1pct"), nullptr);
  for (const auto& r : t.rows) {
    EXPECT_EQ(r.cells.size(), t.columns.size());
    EXPECT_GT(r.lambda1, 0.0);
    EXPECT_LT(r.gap, r.lambda1);
  }
}

TEST(Thm22, MeshCheckIsAdvisory) {
  ExperimentOptions o;
  const auto t = run_thm22({0.5}, {1.0, 0.0}, o);
  const auto* c = t.check("mesh_doubling_within_1pct");
  ASSERT_NE(c, nullptr);
  EXPECT_FALSE(c->gating);
  EXPECT_LE(t.rows[0].cells[13], 0.01);
}

TEST(Thm22, Errors) {
  EXPECT_THROW(run_thm22({}, {1.0, 0.0}, quick()), Error);
  EXPECT_THROW(run_thm22({0.3}, {1.0, 0.0}, quick()), Error);
  EXPECT_THROW(run_thm22({0.5}, {1.0, 0.0, 0.0}, quick()), Error);
}

TEST(Thm31, ExcessGrowsTowardGammaWithSmallControl) {
  const std::vector<double> eta{0.2, 0.1, 0.3};
  const auto t = run_thm31({1.0 / 3, 0.25}, eta, {}, quick());
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].n, 56);
  EXPECT_EQ(t.rows[1].n, 96);
  EXPECT_TRUE(t.check("excess_approaches_gamma")->passed);
  EXPECT_TRUE(t.check("control_excess_small")->passed);
  for (const auto& r : t.rows) {
    EXPECT_EQ(r.cells.size(), t.columns.size());
    EXPECT_GT(r.gap, 0.0);
    EXPECT_LT(r.gap, 2.0);
    EXPECT_EQ(r.cells[10], 2.0);
    EXPECT_LE(r.cells[12], 0.5);
  }
  EXPECT_GT(t.rows[1].gap, t.rows[0].gap);
}

TEST(Thm31, HalvingGammaHalvesTheTarget) {
  const std::vector<double> eta{0.0, 0.0, 0.3};
  FiberOptions one;
  one.gamma = 1.0;
  const auto a = run_thm31({1.0 / 3}, eta, {}, quick());
  const auto b = run_thm31({1.0 / 3}, eta, one, quick());
  EXPECT_EQ(b.rows[0].cells[10], 0.5 * a.rows[0].cells[10]);
  // thinner fibers: the excess drops with gamma
  EXPECT_LT(b.rows[0].gap, a.rows[0].gap);
  EXPECT_GT(b.rows[0].gap, 0.0);
}

TEST(Thm31, Errors) {
  EXPECT_THROW(run_thm31({0.25}, {0.2, 0.1, 0.0}, {}, quick()), Error);
  EXPECT_THROW(run_thm31({0.25}, {0.2, 0.1}, {}, quick()), Error);
  FiberOptions bad;
  bad.gamma = -1.0;
  try {
    run_thm31({0.25}, {0.0, 0.0, 0.3}, bad, quick());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::strstr(e.what(), "gamma must be positive"), nullptr);
  }
}

TEST(GapMap, ContinuousInTAtFixedEps) {
  const auto t = run_gap_map({0.25}, {0.0, 0.0, 1.0}, {1.0, 0.25, 1.0 / 64}, {}, quick());
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_TRUE(t.check("continuous_at_fixed_eps")->passed) << t.check("continuous_at_fixed_eps")->detail;
  EXPECT_TRUE(t.check("t1_bounded_below")->passed) << t.check("t1_bounded_below")->detail;
  EXPECT_GT(t.rows[0].lambda1, t.rows[1].lambda1);
  EXPECT_GT(t.rows[1].lambda1, t.rows[2].lambda1);
  EXPECT_EQ(t.rows[0].cells[9], 1.0);
  for (const auto& r : t.rows) EXPECT_EQ(r.cells.size(), t.columns.size());
}

TEST(GapMap, ConstantMediumIsTheSymbol) {
  const auto a = CoefficientField::constant(cubic_grid(2, 32), 1.0);
  const double eps = 0.25;
  for (double s : {1.0, 0.5, 1.0 / 64}) {
    const std::vector<double> ep{0.2 * s, 0.1 * s};
    const auto r = fiber_lambda1_2d(a, eps, ep, 0.3 * s);
    const double h = a.grid().width(0);
    const double sym = 4 / (h * h) * (std::pow(std::sin(eps * ep[0] * h / 2), 2) + std::pow(std::sin(eps * ep[1] * h / 2), 2));
    EXPECT_NEAR(r.lambda1, sym / (eps * eps) + 0.09 * s * s, 1e-12);
    EXPECT_NEAR(r.lambda1, 0.14 * s * s, 1e-3 * s * s);
  }
}

TEST(GapMap, Errors) {
  EXPECT_THROW(run_gap_map({0.25}, {0.0, 0.0, 0.0}, {1.0, 0.5}, {}, quick()), Error);
  EXPECT_THROW(run_gap_map({0.25}, {0.0, 0.0, 1.0}, {1.0}, {}, quick()), Error);
  EXPECT_THROW(run_gap_map({0.25}, {0.0, 0.0, 1.0}, {0.5, 1.0}, {}, quick()), Error);
  EXPECT_THROW(run_gap_map({0.25}, {0.0, 0.0, 1.0}, {1.0, -0.5}, {}, quick()), Error);
}

TEST(Pw, Thm22ScaledConstantDecreases) {
  const auto t = run_pw({0.5, 0.25}, PwFamily::thm22, {1.0, 0.0}, {}, quick());
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_TRUE(t.check("eps2_c_decreasing")->passed) << t.check("eps2_c_decreasing")->detail;
  for (const auto& r : t.rows) {
    EXPECT_EQ(r.cells.size(), t.columns.size());
    EXPECT_GT(r.cells[4], 0.0);
  }
}

TEST(Pw, FiberRatioBounded) {
  const auto t = run_pw({1.0 / 3, 0.25}, PwFamily::fiber, {0.0, 0.0, 1.0}, {}, quick());
  EXPECT_TRUE(t.check("ratio_bounded_by_10")->passed) << t.check("ratio_bounded_by_10")->detail;
  EXPECT_THROW(run_pw({0.25}, PwFamily::fiber, {1.0, 0.0}, {}, quick()), Error);
  EXPECT_THROW(run_pw({0.25}, PwFamily::thm22, {1.0, 0.0, 0.0}, {}, quick()), Error);
}

TEST(Experiments, BitwiseReproducible) {
  const auto a = run_thm31({1.0 / 3}, {0.2, 0.1, 0.3}, {}, quick());
  const auto b = run_thm31({1.0 / 3}, {0.2, 0.1, 0.3}, {}, quick());
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i)
    for (std::size_t k = 0; k < a.rows[i].cells.size(); ++k)
      EXPECT_EQ(std::memcmp(&a.rows[i].cells[k], &b.rows[i].cells[k], sizeof(double)), 0) << a.columns[k];
}
