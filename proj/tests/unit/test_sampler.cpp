#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "specloc/sampler.hpp"
#include "specloc/spectral.hpp"

using namespace specloc;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::vector<double> v(n);
  CounterRng(seed, 99).fill_normal(v);
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST(Sample, Deterministic) {
  const auto p = generate_pattern(PatternKind::band, 64, 9, 0);
  const auto a = sample_matrix(p, 5), b = sample_matrix(p, 5), c = sample_matrix(p, 6);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
}

TEST(Sample, KeyedByEdgeIndex) {
  // Edge k's value depends only on (seed, k), not on pattern size.
  const auto small = sample_matrix(generate_pattern(PatternKind::diagonal, 10, 1, 0), 3);
  const auto big = sample_matrix(generate_pattern(PatternKind::diagonal, 20, 1, 0), 3);
  for (std::size_t k = 0; k < 10; ++k) EXPECT_EQ(small.values()[k], big.values()[k]);
}

TEST(Sample, DiagonalMoments) {
  const std::size_t n = 10000;
  const auto m = sample_matrix(generate_pattern(PatternKind::diagonal, n, 1, 0), 1);
  double s = 0.0, s2 = 0.0;
  for (double v : m.values()) s += v;
  const double mean = s / double(n);
  for (double v : m.values()) s2 += (v - mean) * (v - mean);
  EXPECT_LT(std::abs(mean), 4.0 / std::sqrt(double(n)));
  EXPECT_NEAR(s2 / double(n - 1), 1.0, 0.1);
}

TEST(Sample, RejectsInvalidPattern) {
  EXPECT_THROW(sample_matrix(SparsityPattern(2, 1, {{0, 1}, {0, 0}}), 0), ValidationError);
}

TEST(Matvec, SingleEdge) {
  auto p = std::make_shared<const SparsityPattern>(2, 1, std::vector<Edge>{{0, 1}});
  const GaussianSparseMatrix m(p, {2.5});
  EXPECT_EQ(matvec(m, std::vector<double>{1.0, 0.0}), (std::vector<double>{0.0, 2.5}));
  EXPECT_EQ(matvec(m, std::vector<double>{0.0, 0.0}), (std::vector<double>{0.0, 0.0}));
  EXPECT_THROW(matvec(m, std::vector<double>{1.0}), DimensionMismatch);
}

TEST(Matvec, SelfAdjoint) {
  const auto m = sample_matrix(generate_pattern(PatternKind::random_regular, 300, 7, 2), 4);
  const auto u = random_vector(300, 1), v = random_vector(300, 2);
  const double lhs = dot(matvec(m, u), v), rhs = dot(u, matvec(m, v));
  EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
}

TEST(Matvec, ScaleApplies) {
  const auto m = sample_matrix(generate_pattern(PatternKind::band, 50, 9, 0), 4);
  const auto v = random_vector(50, 3);
  const auto x = matvec(m, v), y = matvec(m.normalized(), v);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR(y[i], x[i] / 3.0, 1e-13);
}

TEST(Dense, MatchesSparse) {
  const auto m = sample_matrix(generate_pattern(PatternKind::band, 64, 7, 0), 8);
  const auto a = to_dense(m);
  const auto v = random_vector(64, 5);
  const auto sv = matvec(m, v);
  const Eigen::VectorXd dv = a * Eigen::Map<const Eigen::VectorXd>(v.data(), 64);
  for (Eigen::Index i = 0; i < 64; ++i) EXPECT_NEAR(dv[i], sv[std::size_t(i)], 1e-12);
}

TEST(Dense, SymmetricSupportAndCount) {
  const auto p = generate_pattern(PatternKind::random_regular, 40, 5, 1);
  const auto m = sample_matrix(p, 3);
  const auto a = to_dense(m);
  std::size_t nnz = 0;
  for (Eigen::Index i = 0; i < 40; ++i) {
    for (Eigen::Index j = 0; j < 40; ++j) {
      EXPECT_EQ(a(i, j), a(j, i));
      if (a(i, j) != 0.0) ++nnz;
      EXPECT_EQ(a(i, j), m.entry(std::size_t(i), std::size_t(j)));
    }
  }
  EXPECT_EQ(nnz, 40u * 5u);
  // Off-pattern entries are exactly zero.
  const auto nb = p.neighbors(0);
  for (std::size_t y = 0; y < 40; ++y) {
    if (std::find(nb.begin(), nb.end(), Vertex(y)) == nb.end()) {
      EXPECT_EQ(a(0, Eigen::Index(y)), 0.0);
    }
  }
}

TEST(Dense, CapExceeded) {
  const auto m = sample_matrix(generate_pattern(PatternKind::diagonal, 100, 1, 0), 0);
  EXPECT_THROW(to_dense(m, 50), CapExceeded);
}

TEST(Moments, FrobeniusMass) {
  const auto p = std::make_shared<const SparsityPattern>(generate_pattern(PatternKind::band, 512, 33, 0));
  double total = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto m = sample_matrix(p, s);
    double f = 0.0;
    for (std::size_t x = 0; x < m.n(); ++x) m.for_each_in_row(x, [&](std::size_t, double v) { f += v * v; });
    total += f;
  }
  EXPECT_NEAR(total / 50.0 / (512.0 * 33.0), 1.0, 0.05);
}

TEST(Moments, NormConcentration) {
  const auto p = std::make_shared<const SparsityPattern>(generate_pattern(PatternKind::band, 512, 33, 0));
  std::vector<double> norms;
  for (std::uint64_t s = 0; s < 50; ++s) norms.push_back(operator_norm(sample_matrix(p, s)));
  double mean = 0.0;
  for (double x : norms) mean += x / 50.0;
  double var = 0.0;
  for (double x : norms) var += (x - mean) * (x - mean) / 49.0;
  EXPECT_LE(std::sqrt(var), 3.0);
}

TEST(Dump, Format) {
  auto p = std::make_shared<const SparsityPattern>(2, 1, std::vector<Edge>{{0, 1}});
  const GaussianSparseMatrix m(p, {0.1}, 9);
  std::ostringstream os;
  write_matrix_dump(os, m);
  EXPECT_EQ(os.str(), "2 1 9\n0 1 0.10000000000000001\n");
}
