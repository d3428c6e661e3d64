#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "specloc/spectral.hpp"

using namespace specloc;

namespace {

GaussianSparseMatrix sample(PatternKind kind, std::size_t n, std::size_t d, std::uint64_t seed) {
  return sample_matrix(generate_pattern(kind, n, d, seed), seed);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double max_orthonormality_error(const Eigen::MatrixXd& v) {
  const Eigen::MatrixXd g = v.transpose() * v - Eigen::MatrixXd::Identity(v.cols(), v.cols());
  return g.cwiseAbs().maxCoeff();
}

}  // namespace

TEST(FullSpectrum, TwoByTwo) {
  auto p = std::make_shared<const SparsityPattern>(2, 1, std::vector<Edge>{{0, 1}});
  const GaussianSparseMatrix m(p, {1.0});
  SpectralOptions o;
  o.scaled = false;
  const auto s = full_spectrum(m, o);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s.eigenvalues[0], 1.0, 1e-14);
  EXPECT_NEAR(s.eigenvalues[1], -1.0, 1e-14);
}

TEST(FullSpectrum, DiagonalPattern) {
  const auto m = sample(PatternKind::diagonal, 50, 1, 3);
  const auto s = full_spectrum(m);
  std::vector<double> g(m.values().begin(), m.values().end());
  std::sort(g.begin(), g.end(), std::greater<>());
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(s.eigenvalues[Eigen::Index(i)], g[i], 1e-14);
  const auto& v = *s.eigenvectors;
  for (Eigen::Index k = 0; k < v.cols(); ++k) EXPECT_NEAR(v.col(k).cwiseAbs().maxCoeff(), 1.0, 1e-14);
}

TEST(FullSpectrum, TraceOrthonormalityResiduals) {
  const auto m = sample(PatternKind::band, 128, 9, 4);
  const auto s = full_spectrum(m);
  double trace = 0.0;
  for (std::size_t x = 0; x < m.n(); ++x) trace += m.normalized().entry(x, x);
  EXPECT_NEAR(s.eigenvalues.sum(), trace, 1e-8 * 128);
  EXPECT_LE(max_orthonormality_error(*s.eigenvectors), 1e-8);
  for (double r : s.residuals) EXPECT_LE(r, 1e-10 * 3.0);
  EXPECT_TRUE(std::is_sorted(s.eigenvalues.data(), s.eigenvalues.data() + s.size(), std::greater<>()));
}

TEST(Extreme, MatchesDenseOnBand) {
  const auto m = sample(PatternKind::band, 512, 33, 1);
  const auto dense = full_spectrum(m, SpectralOptions{true, false});
  const auto lz = extreme_eigenpairs(m, 5, 1e-10);
  for (Eigen::Index i = 0; i < 5; ++i) {
    EXPECT_NEAR(lz.eigenvalues[i], dense.eigenvalues[i], 1e-8);
    EXPECT_NEAR(lz.eigenvalues[lz.eigenvalues.size() - 1 - i], dense.eigenvalues[dense.eigenvalues.size() - 1 - i],
                1e-8);
  }
  const double norm_est = std::max(std::abs(lz.eigenvalues[0]), std::abs(lz.eigenvalues[lz.eigenvalues.size() - 1]));
  for (double r : lz.residuals) EXPECT_LE(r, 1e-10 * norm_est * 10);
  EXPECT_EQ(lz.method, SpectralMethod::lanczos);
}

TEST(Extreme, DiagonalGivesMaxAndMin) {
  const auto m = sample(PatternKind::diagonal, 200, 1, 7);
  const auto lz = extreme_eigenpairs(m, 1, 1e-10);
  const auto [mn, mx] = std::minmax_element(m.values().begin(), m.values().end());
  EXPECT_NEAR(lz.eigenvalues[0], *mx, 1e-9);
  EXPECT_NEAR(lz.eigenvalues[lz.eigenvalues.size() - 1], *mn, 1e-9);
}

TEST(Extreme, AgreesWithDenseForAllKinds) {
  struct Case {
    PatternKind kind;
    std::size_t n, d;
  };
  for (const auto& c : {Case{PatternKind::complete, 256, 256}, Case{PatternKind::band, 512, 17},
                        Case{PatternKind::block, 1024, 64}, Case{PatternKind::random_regular, 1024, 6},
                        Case{PatternKind::diagonal, 300, 1}}) {
    const auto m = sample(c.kind, c.n, c.d, 2);
    const auto dense = full_spectrum(m, SpectralOptions{true, false});
    const auto lz = extreme_eigenpairs(m, 3, 1e-10);
    for (Eigen::Index i = 0; i < 3; ++i) {
      EXPECT_NEAR(lz.eigenvalues[i], dense.eigenvalues[i], 1e-8) << to_string(c.kind);
    }
  }
}

TEST(Extreme, InvalidArguments) {
  const auto m = sample(PatternKind::band, 20, 3, 0);
  EXPECT_THROW(extreme_eigenpairs(m, 0, 1e-10), InvalidParams);
  EXPECT_THROW(extreme_eigenpairs(m, 21, 1e-10), InvalidParams);
  EXPECT_THROW(extreme_eigenpairs(m, 1, 0.0), InvalidParams);
}

TEST(Extreme, DeterministicGivenSeed) {
  const auto m = sample(PatternKind::random_regular, 600, 5, 1);
  SpectralOptions o;
  o.seed = 17;
  const auto a = extreme_eigenpairs(m, 2, 1e-10, o), b = extreme_eigenpairs(m, 2, 1e-10, o);
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
  EXPECT_EQ(*a.eigenvectors, *b.eigenvectors);
}

TEST(OperatorNorm, DiagonalIsMaxAbs) {
  const auto m = sample(PatternKind::diagonal, 500, 1, 9);
  double mx = 0.0;
  for (double v : m.values()) mx = std::max(mx, std::abs(v));
  EXPECT_NEAR(operator_norm(m), mx, 1e-9 * mx);
}

TEST(OperatorNorm, SymmetricUnderNegation) {
  const auto m = sample(PatternKind::random_regular, 400, 4, 5);
  EXPECT_NEAR(operator_norm(m), operator_norm(m.negated()), 1e-9 * operator_norm(m));
}

TEST(OperatorNorm, MatchesDense) {
  const auto m = sample(PatternKind::band, 300, 11, 2);
  const auto s = full_spectrum(m, SpectralOptions{false, false});
  const double want = std::max(std::abs(s.eigenvalues[0]), std::abs(s.eigenvalues[s.eigenvalues.size() - 1]));
  EXPECT_NEAR(operator_norm(m), want, 1e-9 * want);
}

TEST(OperatorNorm, CompleteNearSemicircleEdge) {
  const auto p = std::make_shared<const SparsityPattern>(generate_pattern(PatternKind::complete, 2048, 2048, 0));
  for (std::uint64_t s = 0; s < 5; ++s) {
    const double r = operator_norm(sample_matrix(p, s)) / std::sqrt(2048.0);
    EXPECT_GE(r, 1.85);
    EXPECT_LE(r, 2.2);
  }
}

TEST(Interval, LanczosCountMatchesDense) {
  const auto m = sample(PatternKind::block, 1024, 256, 3);
  const double eps = std::pow(std::log(1024.0) / 256.0, 1.0 / 17.0);
  const auto dense = eigenpairs_in_interval(m, 2.0 - eps, 3.0);
  SpectralOptions o;
  o.dense_cap = 512;
  const auto lz = eigenpairs_in_interval(m, 2.0 - eps, 3.0, o);
  EXPECT_EQ(dense.method, SpectralMethod::dense);
  EXPECT_EQ(lz.method, SpectralMethod::lanczos);
  ASSERT_EQ(lz.size(), dense.size());
  ASSERT_GT(dense.size(), 0u);
  for (Eigen::Index i = 0; i < dense.eigenvalues.size(); ++i) EXPECT_NEAR(lz.eigenvalues[i], dense.eigenvalues[i], 1e-8);
  EXPECT_LE(max_orthonormality_error(*lz.eigenvectors), 1e-8);
}

TEST(Interval, InteriorWindowAboveCapIsRefused) {
  const auto m = sample(PatternKind::band, 600, 9, 3);
  SpectralOptions o;
  o.dense_cap = 100;
  EXPECT_THROW(eigenpairs_in_interval(m, -0.5, 0.5, o), CapExceeded);
}

TEST(Interval, EmptyAndDegenerateWindows) {
  const auto m = sample(PatternKind::band, 256, 17, 1);
  const auto e = eigenpairs_in_interval(m, 5.0, 6.0);
  EXPECT_EQ(e.size(), 0u);
  EXPECT_EQ(e.eigenvectors->rows(), 256);
  EXPECT_EQ(eigenpairs_in_interval(m, 0.123456789, 0.123456789).size(), 0u);
  EXPECT_THROW(eigenpairs_in_interval(m, 1.0, 0.0), InvalidParams);
}

TEST(Interval, EigenvaluesInsideWindow) {
  const auto m = sample(PatternKind::random_regular, 300, 10, 4);
  const auto e = eigenpairs_in_interval(m, 1.0, 3.0);
  for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i) {
    EXPECT_GE(e.eigenvalues[i], 1.0);
    EXPECT_LE(e.eigenvalues[i], 3.0);
  }
  for (double r : e.residuals) EXPECT_LE(r, 1e-6);
}

TEST(Esd, MassesSumToOneAndKsRange) {
  const auto s = full_spectrum(sample(PatternKind::band, 200, 9, 0), SpectralOptions{true, false});
  const auto h = esd_histogram(s, 20);
  double sum = 0.0;
  for (double x : h.masses) sum += x;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_EQ(h.n_eigenvalues, 200u);
  EXPECT_GE(h.ks_semicircle, 0.0);
  EXPECT_LE(h.ks_semicircle, 1.0);
}

TEST(Esd, CompleteIsSemicircle) {
  const auto s = full_spectrum(sample(PatternKind::complete, 2048, 2048, 1), SpectralOptions{true, false});
  EXPECT_LT(esd_histogram(s, 64).ks_semicircle, 0.05);
}

TEST(Esd, DiagonalIsGaussian) {
  const auto s = full_spectrum(sample(PatternKind::diagonal, 2048, 1, 1), SpectralOptions{true, false});
  std::vector<double> ev(s.eigenvalues.data(), s.eigenvalues.data() + s.size());
  std::sort(ev.begin(), ev.end());
  EXPECT_LT(ks_distance(ev, normal_cdf), 0.05);
}

TEST(Esd, KsDecreasesWithDegree) {
  auto median_ks = [](std::size_t d) {
    std::vector<double> ks;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto s = full_spectrum(sample(PatternKind::band, 2048, d, seed), SpectralOptions{true, false});
      ks.push_back(esd_histogram(s, 64).ks_semicircle);
    }
    std::sort(ks.begin(), ks.end());
    return ks[2];
  };
  const double k3 = median_ks(3), k33 = median_ks(33), k257 = median_ks(257);
  EXPECT_GT(k3, k33);
  EXPECT_GT(k33, k257);
}

TEST(Resolvent, ScalarCase) {
  auto p = std::make_shared<const SparsityPattern>(1, 1, std::vector<Edge>{{0, 0}});
  const GaussianSparseMatrix m(p, {0.0});
  const std::complex<double> z(0.3, 0.7);
  const auto g = resolvent_diag(m, z);
  EXPECT_NEAR(std::abs(g[0] - (-1.0 / z)), 0.0, 1e-14);
}

TEST(Resolvent, SpectralIdentityAndNevanlinna) {
  const auto m = sample(PatternKind::random_regular, 64, 5, 2);
  const auto s = full_spectrum(m);
  const auto& v = *s.eigenvectors;
  for (const std::complex<double> z : {std::complex<double>(0.1, 0.05), std::complex<double>(-1.5, 1.0)}) {
    const auto g = resolvent_diag(m, z);
    for (std::size_t x = 0; x < 64; ++x) {
      std::complex<double> want = 0.0;
      for (Eigen::Index k = 0; k < v.cols(); ++k) {
        want += v(Eigen::Index(x), k) * v(Eigen::Index(x), k) / (s.eigenvalues[k] - z);
      }
      EXPECT_LT(std::abs(g[x] - want), 1e-8);
      EXPECT_GT(g[x].imag(), 0.0);
    }
  }
}

TEST(Resolvent, IterativeMatchesDense) {
  const auto m = sample(PatternKind::band, 200, 9, 6);
  const std::complex<double> z(0.4, 0.5);
  const auto dense = resolvent_diag(m, z);
  ResolventOptions o;
  o.dense_cap = 10;
  const auto it = resolvent_diag(m, z, o);
  for (std::size_t x = 0; x < 200; ++x) EXPECT_LT(std::abs(dense[x] - it[x]), 1e-7);
}

TEST(Resolvent, RejectsRealZ) {
  const auto m = sample(PatternKind::band, 10, 3, 0);
  EXPECT_THROW(resolvent_diag(m, {0.5, 0.0}), InvalidParams);
}

TEST(Resolvent, SolveFailureReportsResidual) {
  const auto m = sample(PatternKind::band, 200, 9, 6);
  ResolventOptions o;
  o.dense_cap = 10;
  o.max_iterations = 2;
  try {
    resolvent_diag(m, {0.0, 0.01}, o);
    FAIL();
  } catch (const SolveFailure& e) {
    EXPECT_GT(e.worst_residual(), 1e-8);
  }
}

TEST(Dumps, SpectrumCsvAndVectorsRoundTrip) {
  const auto s = full_spectrum(sample(PatternKind::band, 10, 3, 0));
  std::ostringstream csv;
  write_spectrum_csv(csv, s);
  EXPECT_EQ(csv.str().substr(0, 26), "index,eigenvalue,residual\n");
  std::stringstream bin;
  write_eigenvectors_binary(bin, *s.eigenvectors);
  EXPECT_EQ(bin.str().substr(0, 8), "SPECLOCV");
  EXPECT_EQ(read_eigenvectors_binary(bin), *s.eigenvectors);
}
