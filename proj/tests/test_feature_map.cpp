#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ltts/feature_map.hpp"

using namespace ltts;

TEST(Normalize, Examples) {
  PatchSpec patch{{0.5, 0.5}, 0.25, 2, 1};
  std::vector<double> x0{0.5, 0.5};
  EXPECT_EQ(normalize(x0, patch), (std::vector<double>{0.0, 0.0}));
  std::vector<double> edge{0.75, 0.5};
  EXPECT_EQ(normalize(edge, patch), (std::vector<double>{1.0, 0.0}));
  std::vector<double> x{0.625, 0.375};
  auto xi = normalize(x, patch);
  EXPECT_DOUBLE_EQ(xi[0], 0.5);
  EXPECT_DOUBLE_EQ(xi[1], -0.5);
  auto back = denormalize(xi, patch);
  EXPECT_DOUBLE_EQ(back[0], 0.625);
  EXPECT_DOUBLE_EQ(back[1], 0.375);
}

TEST(Normalize, OutOfPatchNamesCoordinate) {
  PatchSpec patch{{0.0, 0.0, 0.0}, 0.1, 2, 1};
  std::vector<double> x{0.0, 0.0, 0.2};
  try {
    normalize(x, patch);
    FAIL() << "expected OutOfPatchError";
  } catch (const OutOfPatchError& e) {
    EXPECT_EQ(e.coordinate(), 2u);
    EXPECT_NEAR(e.normalized_offset(), 2.0, 1e-12);
  }
  // boundary slack
  std::vector<double> edge{0.1 + 1e-14, 0.0, 0.0};
  EXPECT_NO_THROW(normalize(edge, patch));
}

TEST(PatchSpec, Validate) {
  EXPECT_NO_THROW((PatchSpec{{0.0}, 0.1, 2, 1}.validate()));
  EXPECT_THROW((PatchSpec{{0.0}, 0.0, 2, 1}.validate()), DomainError);
  EXPECT_THROW((PatchSpec{{0.0}, 0.1, -1, 1}.validate()), DomainError);
  EXPECT_THROW((PatchSpec{{0.0}, 0.1, 2, 0}.validate()), DomainError);
  EXPECT_THROW((PatchSpec{{}, 0.1, 2, 1}.validate()), DomainError);
}

TEST(FactorVector, Examples) {
  EXPECT_EQ(factor_vector(0.0, 3).entries, (std::vector<double>{1, 0, 0, 0}));
  auto one = factor_vector(1.0, 3);
  EXPECT_DOUBLE_EQ(one[1], 1.0);
  EXPECT_DOUBLE_EQ(one[2], 0.5);
  EXPECT_DOUBLE_EQ(one[3], 1.0 / 6.0);
  auto half = factor_vector(0.5, 3);
  EXPECT_DOUBLE_EQ(half[1], 0.5);
  EXPECT_DOUBLE_EQ(half[2], 0.125);
  EXPECT_NEAR(half[3], 0.0208333333333333, 1e-15);
  EXPECT_THROW(factor_vector(1.5, 2), DomainError);
}

TEST(FactorVector, NormBoundedByBesselConstant) {
  const double k = bessel_constant();
  for (int p = 0; p <= 12; ++p) {
    for (int i = 0; i <= 1000; ++i) {
      const double xi = -1.0 + 2.0 * i / 1000.0;
      auto v = factor_vector(xi, p);
      EXPECT_EQ(v[0], 1.0);
      ASSERT_LE(v.norm(), k);
    }
  }
}

TEST(PhiEntry, Examples) {
  std::vector<double> xi{0.3, -0.7};
  EXPECT_EQ(phi_entry(xi, MultiIndex({0, 0})), 1.0);
  std::vector<double> zero{0.0, 0.0};
  EXPECT_EQ(phi_entry(zero, MultiIndex({1, 0})), 0.0);
  std::vector<double> ones{1.0, 1.0};
  EXPECT_DOUBLE_EQ(phi_entry(ones, MultiIndex({2, 1})), 0.5);
}

TEST(PhiEntry, ProductOfFactorVectorsBitExact) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xi{u(rng), u(rng), u(rng)};
    for (const auto& a : box_indices(3, 3)) {
      double prod = 1.0;
      for (std::size_t i = 0; i < 3; ++i) prod *= factor_vector(xi[i], 3)[a[i]];
      EXPECT_EQ(phi_entry(xi, a), prod);
    }
  }
}

TEST(BesselConstant, Value) {
  const double k = bessel_constant();
  EXPECT_NEAR(k, 1.50983, 1e-5);
  // I0(2) = 2.2795853023360673 (high-precision reference)
  EXPECT_NEAR(k * k, 2.2795853023360673, 1e-15);
  EXPECT_EQ(feature_norm_bound(1), k);
  EXPECT_NEAR(feature_norm_bound(6), std::pow(k, 6), 1e-12);
  EXPECT_NEAR(feature_norm_bound(6), 11.85, 5e-3);
}

TEST(BesselConstant, FeatureNormBoundOnSamples) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n = 1; n <= 4; ++n) {
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> xi(n);
      double prod = 1.0;
      for (auto& v : xi) {
        v = u(rng);
        prod *= factor_vector(v, 4).norm();
      }
      EXPECT_LE(prod, feature_norm_bound(n));
      EXPECT_NEAR(frobenius_norm(phi_dense(xi, 4)), prod, 1e-12);
    }
  }
}
