#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hcbloch/cell_problems.hpp"
#include "hcbloch/microstructure.hpp"

using namespace hcbloch;

namespace {

// (1, 4) half-half along axis 0
CoefficientField two_phase_1d(int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i < n / 2 ? 1.0 : 4.0;
  return CoefficientField::isotropic(cubic_grid(1, n), std::move(v));
}

CoefficientField laminate_2d(int n) {
  const auto g = cubic_grid(2, n);
  std::vector<double> v(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) v[c] = g.coords(c)[0] < n / 2 ? 1.0 : 4.0;
  return CoefficientField::isotropic(g, std::move(v));
}

CoefficientField checkerboard(int n, double hi) {
  const auto g = cubic_grid(2, n);
  std::vector<double> v(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) {
    const auto j = g.coords(c);
    v[c] = ((j[0] < n / 2) != (j[1] < n / 2)) ? hi : 1.0;
  }
  return CoefficientField::isotropic(g, std::move(v));
}

CoefficientField disc_cell(int n, double beta = 6.0) {
  return rasterize(TwoPhaseInclusion{1.0, beta, 0.5, InclusionShape::disc}, cubic_grid(2, n));
}

// dispersion value of two_phase_1d at eta = 1, from a dense numpy solve of the same discrete problems
constexpr double kDisp1d64 = -0.47193383271206468;
constexpr double kDisp1d256 = -0.47362602951804605;
// quartic coefficient of lambda1(t) from dense Bloch eigenvalues at n = 256, t in {0.02, ..., 0.1}
constexpr double kQuarticFit256 = -0.473229911577;

double sup(const RealField& f) {
  double m = 0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST(Corrector, ConstantAndLaminateAreZero) {
  const auto c = CoefficientField::constant(cubic_grid(2, 8), 3.0);
  const std::vector<double> e1{1.0, 0.0}, e2{0.0, 1.0};
  EXPECT_EQ(sup(corrector(c, e1)), 0.0);
  EXPECT_LE(sup(corrector(laminate_2d(16), e2)), 1e-14);
  EXPECT_EQ(sup(corrector(disc_cell(16), std::vector<double>{0.0, 0.0})), 0.0);
}

TEST(Corrector, OneDimensionalClosedForm) {
  const int n = 16;
  const auto a = two_phase_1d(n);
  const auto sol = solve_corrector(a, std::vector<double>{1.0});
  EXPECT_LE(sol.residual, 1e-12);
  const double h = a.grid().width(0);
  double mean = 0;
  for (double v : sol.field.values) mean += v / n;
  EXPECT_NEAR(mean, 0.0, 1e-14);
  // faces inside a phase: slope q / a - 1; interface faces carry the harmonic mean itself, slope 0
  for (int c = 0; c < n; ++c) {
    const int u = (c + 1) % n;
    const double slope = (sol.field[static_cast<std::size_t>(u)] - sol.field[static_cast<std::size_t>(c)]) / h;
    const bool interface = c == n / 2 - 1 || c == n - 1;
    const double expect = interface ? 0.0 : 1.6 / a.scalar(static_cast<std::size_t>(c)) - 1.0;
    EXPECT_NEAR(slope, expect, 1e-12) << "face " << c;
  }
}

TEST(Corrector, LinearInDirection) {
  const auto a = disc_cell(16);
  const auto x1 = corrector(a, std::vector<double>{1.0, 0.0});
  const auto x2 = corrector(a, std::vector<double>{0.0, 1.0});
  const auto x = corrector(a, std::vector<double>{0.3, -2.0});
  for (std::size_t c = 0; c < x.size(); ++c) EXPECT_NEAR(x[c], 0.3 * x1[c] - 2.0 * x2[c], 1e-10);
}

TEST(Homogenized, ExactValues) {
  const auto c = homogenized(CoefficientField::constant(cubic_grid(2, 8), 2.5));
  EXPECT_NEAR(c(0, 0), 2.5, 1e-14);
  EXPECT_NEAR(c(1, 1), 2.5, 1e-14);
  EXPECT_NEAR(c(0, 1), 0.0, 1e-14);
  EXPECT_EQ(c.convention, "cell-average");

  EXPECT_NEAR(homogenized(two_phase_1d(16))(0, 0), 1.6, 1e-12);
  const auto lam = homogenized(laminate_2d(16));
  EXPECT_NEAR(lam(0, 0), 1.6, 1e-12);
  EXPECT_NEAR(lam(1, 1), 2.5, 1e-12);
  EXPECT_NEAR(lam(0, 1), 0.0, 1e-12);
}

TEST(Homogenized, FluxFormEqualsEnergyFormAndBounds) {
  for (const auto& a : {disc_cell(32, 20.0), checkerboard(16, 9.0)}) {
    const auto h = homogenized(a);
    EXPECT_LE(h.max_corrector_residual, 1e-12);
    EXPECT_NEAR(h(0, 1), h(1, 0), 1e-12);
    for (int j = 0; j < 2; ++j) {
      std::vector<double> e(2, 0.0);
      e[j] = 1.0;
      const auto flux = mean_flux(a, e, h.correctors[j].values);
      for (int k = 0; k < 2; ++k) EXPECT_NEAR(flux[k], h(j, k), 1e-12 * h(j, j));
    }
    const double r = std::sqrt(0.5);
    for (const std::vector<double>& dir : {std::vector<double>{1, 0}, {0, 1}, {r, r}, {r, -r}}) {
      EXPECT_LE(h.quadratic(dir), h.voigt_quadratic(dir) + 1e-10);
      EXPECT_GE(h.quadratic(dir), 1.0 - 1e-10);
    }
  }
}

TEST(RescaleCorrector, IdentitiesAndEnergy) {
  const auto unit = disc_cell(16, 12.0);
  const auto h = homogenized(unit);
  const auto zero = rescale_corrector(RealField(unit.grid()), 0.5, 0);
  for (std::size_t c = 0; c < zero.w.size(); ++c) EXPECT_EQ(zero.w[c], zero.w.grid.center(0, zero.w.grid.coords(c)[0]));
  const auto one = rescale_corrector(h.correctors[1], 1.0, 1);
  for (std::size_t c = 0; c < one.w.size(); ++c)
    EXPECT_DOUBLE_EQ(one.w[c], unit.grid().center(1, unit.grid().coords(c)[1]) + h.correctors[1][c]);
  for (double eps : {0.5, 0.25}) {
    const auto tiled = tile(unit, eps);
    for (int j = 0; j < 2; ++j) {
      const auto w = rescale_corrector(h.correctors[j], eps, j);
      EXPECT_NEAR(rescaled_energy(tiled, w), h(j, j), 1e-10);
    }
  }
  EXPECT_THROW(rescale_corrector(h.correctors[0], 0.3, 0), Error);
}

TEST(Chi1, ConsistencyAndScaling) {
  const auto unit = disc_cell(16, 12.0);
  const auto h = homogenized(unit);
  const std::vector<double> eta{0.7, -0.4};
  double prev = 0;
  for (double eps : {0.5, 0.25}) {
    const auto tiled = tile(unit, eps);
    const auto x1 = chi1(tiled, eta);
    const auto w1 = rescale_corrector(h.correctors[0], eps, 0);
    const auto w2 = rescale_corrector(h.correctors[1], eps, 1);
    for (std::size_t c = 0; c < x1.size(); ++c) EXPECT_NEAR(x1[c], eta[0] * w1.periodic[c] + eta[1] * w2.periodic[c], 1e-12);
    if (prev > 0) EXPECT_NEAR(sup(x1) / prev, 0.5, 1e-9);
    prev = sup(x1);
  }
  EXPECT_EQ(sup(chi1(CoefficientField::constant(cubic_grid(2, 8), 2.0), eta)), 0.0);
  EXPECT_EQ(sup(chi1(unit, std::vector<double>{0.0, 0.0})), 0.0);
}

TEST(Chi2, TrivialCasesAndCompatibility) {
  const auto c = CoefficientField::constant(cubic_grid(2, 8), 2.0);
  const std::vector<double> eta{0.3, 0.5};
  EXPECT_LE(sup(chi2(c, eta, homogenized(c))), 1e-14);
  const auto a = disc_cell(32, 30.0);
  const auto q = homogenized(a);
  EXPECT_EQ(sup(chi2(a, std::vector<double>{0.0, 0.0}, q)), 0.0);
  const auto sol = solve_chi2(a, eta, chi1(a, eta), q);
  EXPECT_LE(sol.compatibility, 1e-10);
  double m = 0;
  for (double v : sol.field.values) m += v;
  EXPECT_NEAR(m, 0.0, 1e-9);
  // a q that does not belong to this discretization is caught
  auto wrong = q;
  for (auto& v : wrong.q) v *= 1.01;
  EXPECT_THROW(solve_chi2(a, eta, chi1(a, eta), wrong), Error);
}

TEST(Dispersion, OneDimensionalOracle) {
  const std::vector<double> eta{1.0};
  EXPECT_NEAR(dispersion(two_phase_1d(64), eta).value, kDisp1d64, 1e-10);
  const auto d = dispersion(two_phase_1d(256), eta);
  EXPECT_NEAR(d.value, kDisp1d256, 1e-9);
  EXPECT_NEAR(d.q_eta_eta, 1.6, 1e-12);
  EXPECT_NEAR(d.value, kQuarticFit256, 0.01 * std::abs(kQuarticFit256));
}

TEST(Dispersion, SignSymmetryAndScaling) {
  EXPECT_LE(std::abs(dispersion(CoefficientField::constant(cubic_grid(2, 8), 3.0), std::vector<double>{0.4, 0.2}).value), 1e-14);
  const auto cb = checkerboard(16, 5.0);
  const double d1 = dispersion(cb, std::vector<double>{1.0, 0.0}).value;
  const double d2 = dispersion(cb, std::vector<double>{0.0, 1.0}).value;
  EXPECT_LT(d1, 0.0);
  EXPECT_NEAR(d1, d2, 1e-10 * std::abs(d1));

  const auto unit = disc_cell(16, 12.0);
  const std::vector<double> eta{0.6, 0.3};
  const double du = dispersion(unit, eta).value;
  EXPECT_LE(du, 1e-12);
  for (double eps : {0.5, 0.25}) EXPECT_NEAR(dispersion(tile(unit, eps), eta).value, eps * eps * du, 1e-9 * std::abs(du));
}

TEST(Dispersion, HighContrastFamilyDecreases) {
  const std::vector<double> eta{0.25, 0.0};
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {0.5, 0.25}) {
    const int n = 16 * reciprocal_integer(eps);
    const auto a = rasterize(TwoPhaseInclusion{eps, 1 / (eps * eps), eps, InclusionShape::square}, cubic_grid(2, n));
    const double v = std::abs(dispersion(a, eta).value);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(PwConstant, IdentityMatchesFourierSymbol) {
  const int n = 32;
  const double h = kTwoPi / n;
  const auto I = CoefficientField::constant(cubic_grid(2, n), 1.0);
  const auto p = pw_constant(I, std::vector<double>{1.0, 0.0});
  EXPECT_NEAR(p.value, h * h / (4 * std::pow(std::sin(h / 2), 2)), 1e-9);
  EXPECT_NEAR(p.value, 1.0, 4 * h * h);
  EXPECT_EQ(pw_constant(I, std::vector<double>{0.0, 0.0}).value, 0.0);
}

TEST(PwConstant, HomogeneityAndScaleInvariance) {
  for (double beta : {6.0, 1000.0}) {
    const auto a = disc_cell(32, beta);
    const std::vector<double> lam{0.6, 0.2}, lam2{1.2, 0.4};
    const double c1 = pw_constant(a, lam).value;
    EXPECT_GT(c1, 0.0);
    EXPECT_NEAR(pw_constant(a, lam2).value, 4 * c1, 1e-12 * 4 * c1);
    std::vector<double> scaled(a.size());
    for (std::size_t c = 0; c < a.size(); ++c) scaled[c] = 7.0 * a.scalar(c);
    const auto b = CoefficientField::isotropic(a.grid(), scaled);
    EXPECT_NEAR(pw_constant(b, lam).value, c1, 1e-9 * c1);
  }
}
