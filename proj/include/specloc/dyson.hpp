#pragma once

// Monte Carlo check that E[G(z)] is close to msc(z) times the identity,
// with deviation at most 2 / (d (Im z)^5) in operator norm.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "specloc/errors.hpp"
#include "specloc/rng.hpp"
#include "specloc/sampler.hpp"
#include "specloc/semicircle.hpp"
#include "specloc/spectral.hpp"

namespace specloc {

struct DysonReport {
  std::complex<double> z;
  std::size_t n_samples = 0;
  double max_deviation = 0.0;  // max_x |avg G_xx - msc(z)|
  double mc_std = 0.0;         // standard error of avg G_xx at the worst x
  double bound = 0.0;          // 2 / (d (Im z)^5)
  bool holds = false;          // max_deviation <= bound + 3 mc_std
};

inline std::uint64_t dyson_sample_seed(std::uint64_t seed, std::size_t s) {
  return mix_seed(seed, {fnv1a("dyson"), s});
}

inline double dyson_bound(double d, double im_z) { return 2.0 / (d * std::pow(im_z, 5)); }

/// Averages the resolvent diagonal of d^{-1/2} X over n_samples fresh draws
/// of the values on m's pattern.
inline DysonReport dyson_residual_check(const GaussianSparseMatrix& m, std::complex<double> z, std::size_t n_samples,
                                        std::uint64_t seed, const ResolventOptions& opts = {}) {
  if (!(z.imag() > 0.0)) throw InvalidParams("dyson_residual_check: Im z must be positive");
  if (n_samples < 2) throw InvalidParams("dyson_residual_check: need at least 2 samples");
  const std::size_t n = m.n();
  std::vector<std::complex<double>> sum(n, 0.0);
  std::vector<double> sumsq(n, 0.0);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const auto sample = sample_matrix(m.shared_pattern(), dyson_sample_seed(seed, s));
    const auto g = resolvent_diag(sample, z, opts);
    for (std::size_t x = 0; x < n; ++x) {
      sum[x] += g[x];
      sumsq[x] += std::norm(g[x]);
    }
  }
  const double ns = double(n_samples);
  const auto target = msc(z);
  DysonReport r;
  r.z = z;
  r.n_samples = n_samples;
  r.bound = dyson_bound(double(m.degree()), z.imag());
  for (std::size_t x = 0; x < n; ++x) {
    const auto mean = sum[x] / ns;
    const double dev = std::abs(mean - target);
    if (dev >= r.max_deviation) {
      r.max_deviation = dev;
      const double var = std::max(0.0, (sumsq[x] - ns * std::norm(mean)) / (ns - 1.0));
      r.mc_std = std::sqrt(var / ns);
    }
  }
  r.holds = r.max_deviation <= r.bound + 3.0 * r.mc_std;
  return r;
}

/// Operator-norm deviation ||avg G(z) - msc(z) I|| from dense inverses;
/// also returns the largest averaged off-diagonal magnitude.
struct DenseDysonReport {
  double norm_deviation = 0.0;
  double max_diag_deviation = 0.0;
  double max_offdiag = 0.0;
  double bound = 0.0;
};

inline constexpr std::size_t kDenseDysonCap = 128;

inline DenseDysonReport dense_dyson_check(const GaussianSparseMatrix& m, std::complex<double> z, std::size_t n_samples,
                                          std::uint64_t seed) {
  if (!(z.imag() > 0.0)) throw InvalidParams("dense_dyson_check: Im z must be positive");
  if (m.n() > kDenseDysonCap) throw CapExceeded("dense_dyson_check is limited to N <= 128");
  if (n_samples == 0) throw InvalidParams("dense_dyson_check: need at least 1 sample");
  const auto n = Eigen::Index(m.n());
  Eigen::MatrixXcd avg = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const auto sample = sample_matrix(m.shared_pattern(), dyson_sample_seed(seed, s));
    Eigen::MatrixXcd a = to_dense(sample.normalized(), kDenseDysonCap).cast<std::complex<double>>();
    a.diagonal().array() -= z;
    avg += a.inverse();
  }
  avg /= double(n_samples);
  const auto target = msc(z);
  DenseDysonReport r;
  r.bound = dyson_bound(double(m.degree()), z.imag());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) {
        r.max_diag_deviation = std::max(r.max_diag_deviation, std::abs(avg(i, i) - target));
      } else {
        r.max_offdiag = std::max(r.max_offdiag, std::abs(avg(i, j)));
      }
    }
  }
  avg.diagonal().array() -= target;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(avg);
  r.norm_deviation = svd.singularValues()(0);
  return r;
}

}  // namespace specloc
