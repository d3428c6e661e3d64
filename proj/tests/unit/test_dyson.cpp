#include <gtest/gtest.h>

#include <cmath>

#include "specloc/dyson.hpp"

using namespace specloc;
using cd = std::complex<double>;

TEST(Dyson, BandExample) {
  const auto m = sample_matrix(generate_pattern(PatternKind::band, 512, 65, 0), 1);
  const auto r = dyson_residual_check(m, cd(0.5, 1.0), 50, 2);
  EXPECT_NEAR(r.bound, 2.0 / 65.0, 1e-15);
  EXPECT_NEAR(r.bound, 0.0308, 1e-4);
  EXPECT_EQ(r.n_samples, 50u);
  EXPECT_GT(r.mc_std, 0.0);
  EXPECT_TRUE(r.holds) << r.max_deviation << " " << r.mc_std;
}

TEST(Dyson, HigherSpectralParameterShrinksDeviation) {
  const auto m = sample_matrix(generate_pattern(PatternKind::random_regular, 256, 16, 3), 1);
  const auto low = dyson_residual_check(m, cd(0.5, 1.0), 20, 4);
  const auto high = dyson_residual_check(m, cd(0.5, 2.0), 20, 4);
  EXPECT_NEAR(low.bound / high.bound, 32.0, 1e-12);
  EXPECT_LT(high.max_deviation, low.max_deviation);
  EXPECT_TRUE(high.holds);
}

TEST(Dyson, DenseAveragingAgreesAndIsNearlyScalar) {
  const auto m = sample_matrix(generate_pattern(PatternKind::band, 32, 9, 0), 1);
  const cd z(0.3, 1.0);
  const auto dense = dense_dyson_check(m, z, 200, 8);
  const auto diag = dyson_residual_check(m, z, 200, 8);
  EXPECT_NEAR(dense.max_diag_deviation, diag.max_deviation, 1e-10);
  EXPECT_LE(dense.max_offdiag, dense.bound);
  EXPECT_LE(dense.max_offdiag, dense.max_diag_deviation + 3.0 * diag.mc_std);
  EXPECT_LE(dense.norm_deviation, dense.bound);
}

TEST(Dyson, Preconditions) {
  const auto m = sample_matrix(generate_pattern(PatternKind::band, 32, 9, 0), 1);
  EXPECT_THROW(dyson_residual_check(m, cd(0.5, 0.0), 5, 1), InvalidParams);
  EXPECT_THROW(dyson_residual_check(m, cd(0.5, 1.0), 1, 1), InvalidParams);
  EXPECT_THROW(dense_dyson_check(m, cd(0.5, -1.0), 5, 1), InvalidParams);
  const auto big = sample_matrix(generate_pattern(PatternKind::band, 200, 9, 0), 1);
  EXPECT_THROW(dense_dyson_check(big, cd(0.5, 1.0), 5, 1), CapExceeded);
}

TEST(Dyson, Deterministic) {
  const auto m = sample_matrix(generate_pattern(PatternKind::band, 64, 9, 0), 1);
  const auto a = dyson_residual_check(m, cd(0.1, 0.5), 6, 3);
  const auto b = dyson_residual_check(m, cd(0.1, 0.5), 6, 3);
  EXPECT_EQ(a.max_deviation, b.max_deviation);
  EXPECT_EQ(a.mc_std, b.mc_std);
}
