#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hcbloch/grid.hpp"

using namespace hcbloch;

TEST(Grid, TwoByFourByFour) {
  const auto g = make_grid(2, {4, 4});
  EXPECT_EQ(g.size(), 16u);
  EXPECT_DOUBLE_EQ(g.width(0), std::numbers::pi / 2);
  EXPECT_DOUBLE_EQ(g.width(1), std::numbers::pi / 2);
  EXPECT_DOUBLE_EQ(g.cell_volume(), std::numbers::pi * std::numbers::pi / 4);
}

TEST(Grid, ThreeDimensionalEightCells) { EXPECT_EQ(make_grid(3, {2, 2, 2}).size(), 8u); }

TEST(Grid, DegenerateAxisRejected) {
  try {
    make_grid(2, {0, 4});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate axis"), std::string::npos);
  }
  EXPECT_THROW(make_grid(2, {1, 4}), Error);
  EXPECT_THROW(make_grid(4, {2, 2, 2, 2}), Error);
  EXPECT_THROW(make_grid(0, {}), Error);
  EXPECT_THROW(make_grid(2, {4}), Error);
}

TEST(Grid, RowMajorEnumerationLastAxisFastest) {
  const auto g = make_grid(3, {2, 3, 4});
  EXPECT_EQ(g.index({0, 0, 1}), 1u);
  EXPECT_EQ(g.index({0, 1, 0}), 4u);
  EXPECT_EQ(g.index({1, 0, 0}), 12u);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g.index(g.coords(i)), i);
}

TEST(Grid, NeighborWrapAndBijection) {
  const auto g = make_grid(3, {3, 4, 5});
  EXPECT_EQ(g.coords(g.neighbor(g.index({2, 0, 0}), 0, +1))[0], 0);
  EXPECT_EQ(g.coords(g.neighbor(g.index({0, 0, 0}), 2, -1))[2], 4);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(g.neighbor(g.neighbor(i, k, +1), k, -1), i);
      EXPECT_EQ(g.neighbor(g.neighbor(i, k, -1), k, +1), i);
    }
}

TEST(Grid, CellCenters) {
  const auto g = cubic_grid(1, 4);
  EXPECT_DOUBLE_EQ(g.center(0, 0), std::numbers::pi / 4);
  EXPECT_DOUBLE_EQ(g.center(0, 3), 7 * std::numbers::pi / 4);
}

TEST(Grid, ReciprocalInteger) {
  EXPECT_EQ(reciprocal_integer(0.25), 4);
  EXPECT_EQ(reciprocal_integer(1.0 / 3), 3);
  EXPECT_EQ(reciprocal_integer(1.0), 1);
  EXPECT_THROW(reciprocal_integer(0.3), Error);
  EXPECT_THROW(reciprocal_integer(0.0), Error);
  EXPECT_THROW(reciprocal_integer(2.0), Error);
}

TEST(BlockAverage, ConstantFieldUnchanged) {
  RealField f(cubic_grid(2, 8), 3.25);
  for (double eps : {1.0, 0.5, 0.25, 0.125}) EXPECT_EQ(block_average(f, eps).values, f.values);
}

TEST(BlockAverage, EpsOneGivesGlobalMean) {
  RealField f(cubic_grid(2, 4));
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<double>(i * i);
  const auto b = block_average(f, 1.0);
  const double m = mean(f);
  for (double v : b.values) EXPECT_DOUBLE_EQ(v, m);
}

TEST(BlockAverage, OneDimensionalHalves) {
  RealField f(cubic_grid(1, 4), std::vector<double>{0, 1, 2, 3});
  const auto b = block_average(f, 0.5);
  EXPECT_EQ(b.values, (std::vector<double>{0.5, 0.5, 2.5, 2.5}));
}

TEST(BlockAverage, IdempotentAndMeanPreserving) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int d = 1; d <= 3; ++d) {
    RealField f(cubic_grid(d, d == 3 ? 8 : 16));
    for (auto& v : f.values) v = u(rng);
    for (double eps : {0.5, 0.25}) {
      const auto b = block_average(f, eps);
      const auto bb = block_average(b, eps);
      for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(bb[i], b[i], 1e-15);
      EXPECT_NEAR(mean(b), mean(f), 1e-13 * std::max(1.0, std::abs(mean(f))));
    }
  }
}

TEST(BlockAverage, RejectsNonDividingEps) {
  RealField f(cubic_grid(1, 6));
  EXPECT_THROW(block_average(f, 0.25), Error);
  EXPECT_THROW(block_average(f, 0.3), Error);
  EXPECT_NO_THROW(block_average(f, 1.0 / 3));
}

TEST(GridField, NormsAndMean) {
  const auto g = cubic_grid(2, 4);
  RealField one(g, 1.0);
  EXPECT_NEAR(l2_norm(one), 2 * std::numbers::pi, 1e-14);
  std::vector<double> v{1, 2, 3, 6};
  EXPECT_DOUBLE_EQ(mean(std::span<const double>(v)), 3.0);
  subtract_mean(std::span<double>(v));
  EXPECT_DOUBLE_EQ(max_abs(std::span<const double>(v)), 3.0);
  EXPECT_THROW(RealField(g, std::vector<double>(3)), Error);
}
