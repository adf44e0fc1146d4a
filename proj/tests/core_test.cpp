#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dpbl/types.hpp"

namespace dpbl {
namespace {

DemandVector dv(std::vector<double> v) { return DemandVector(std::move(v)); }

TEST(DemandVector, RejectsNonFiniteEntries) {
  EXPECT_THROW(dv({1.0, std::numeric_limits<double>::quiet_NaN()}), std::invalid_argument);
  EXPECT_THROW(dv({std::numeric_limits<double>::infinity()}), std::invalid_argument);
}

TEST(DemandVector, RoleTagIsKept) {
  const DemandVector d({0.1, 0.2}, DemandRole::Noisy);
  EXPECT_EQ(d.role(), DemandRole::Noisy);
  EXPECT_EQ(d.with_role(DemandRole::Released).role(), DemandRole::Released);
  EXPECT_EQ(d.with_role(DemandRole::Released)[1], 0.2);
}

TEST(L2sq, Examples) {
  EXPECT_EQ(l2sq_distance(dv({1, 2}), dv({1, 2})), 0.0);
  EXPECT_NEAR(l2sq_distance(dv({0.3}), dv({0.49})), 0.0361, 1e-15);
  EXPECT_EQ(l2sq_distance(dv({1, 0}), dv({0, 1})), 2.0);
}

TEST(L2sq, LengthMismatchThrows) {
  EXPECT_THROW(l2sq_distance(dv({1}), dv({1, 2})), DimensionError);
}

TEST(L2sq, SymmetricAndTriangleAfterRoot) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(4), b(4), c(4);
    for (int i = 0; i < 4; ++i) {
      a[static_cast<std::size_t>(i)] = g(rng);
      b[static_cast<std::size_t>(i)] = g(rng);
      c[static_cast<std::size_t>(i)] = g(rng);
    }
    const double ab = l2sq_distance(dv(a), dv(b));
    EXPECT_EQ(ab, l2sq_distance(dv(b), dv(a)));
    EXPECT_LE(std::sqrt(l2sq_distance(dv(a), dv(c))),
              std::sqrt(ab) + std::sqrt(l2sq_distance(dv(b), dv(c))) + 1e-12);
  }
}

TEST(DistanceRatio, Examples) {
  EXPECT_DOUBLE_EQ(*theorem2_ratio(dv({0.3}), dv({0.3}), dv({0.5})), 1.0);
  EXPECT_DOUBLE_EQ(*theorem2_ratio(dv({0.5}), dv({0.3}), dv({0.5})), 0.0);
  EXPECT_NEAR(*theorem2_ratio(dv({0.49}), dv({0.3}), dv({0.5})), 0.05, 1e-12);
}

TEST(DistanceRatio, NoiselessInputHasNoRatio) {
  EXPECT_FALSE(theorem2_ratio(dv({0.4}), dv({0.5}), dv({0.5})).has_value());
}

TEST(PrivacyParams, Validation) {
  PrivacyParams p;
  EXPECT_NO_THROW(p.validate());
  p.epsilon = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = PrivacyParams{};
  p.eta = -1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = PrivacyParams{};
  p.beta = 0.01;
  p.beta_floor = 0.02;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.beta_floor = 0.005;
  EXPECT_NO_THROW(p.validate());
  p.max_oracle_calls = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace dpbl
