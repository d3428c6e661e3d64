#pragma once

// Uniform random vectors on the sphere: the delocalization baseline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "specloc/deloc.hpp"
#include "specloc/errors.hpp"
#include "specloc/rng.hpp"

namespace specloc {

inline constexpr int kDegenerateRetries = 3;

/// Z / ||Z||_2 for Z standard Gaussian in R^n.
inline std::vector<double> sample_sphere(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidParams("sample_sphere: n must be positive");
  std::vector<double> z(n);
  for (int attempt = 0; attempt < kDegenerateRetries; ++attempt) {
    CounterRng(seed, fnv1a("sphere") + std::uint64_t(attempt)).fill_normal(z);
    const double nrm = detail::l2_norm(z);
    if (nrm >= 1e-30) {
      for (double& x : z) x /= nrm;
      return z;
    }
  }
  throw DegenerateDraw("sample_sphere: Gaussian draw vanished");
}

struct SphereBaselineResult {
  std::size_t n = 0;
  double kappa = 0.0;
  std::vector<double> nu_grid;
  std::vector<double> deloc_probability;
  std::vector<double> mean_norm_sq;  // E ||V||^2_(nu n)
  std::vector<double> std_norm_sq;
  std::vector<double> mean_norm;     // E ||V||_(nu n)
  std::vector<double> std_norm;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
};

inline std::uint64_t sphere_trial_seed(std::uint64_t seed, std::size_t trial) {
  return mix_seed(seed, {fnv1a("sphere-trial"), trial});
}

/// Per-nu fraction of trials whose V is (floor(nu n), kappa)-delocalized,
/// with mean and standard deviation of ||V||^2_(nu n).
inline SphereBaselineResult sphere_deloc_probability(std::size_t n, double kappa, std::vector<double> nu_grid,
                                                     std::size_t trials, std::uint64_t seed) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw InvalidParams("kappa must lie in (0, 1)");
  if (trials == 0) throw InvalidParams("trials must be positive");
  if (nu_grid.empty()) throw InvalidParams("nu grid must be nonempty");
  for (double nu : nu_grid) {
    if (!(nu > 1.0 / double(n) && nu < 1.0)) throw InvalidParams("nu must lie in (1/n, 1)");
  }
  SphereBaselineResult r;
  r.n = n;
  r.kappa = kappa;
  r.nu_grid = nu_grid;
  r.trials = trials;
  r.seed = seed;
  const std::size_t g = nu_grid.size();
  std::vector<std::size_t> ls(g);
  for (std::size_t i = 0; i < g; ++i) ls[i] = detail::floor_L(nu_grid[i] * double(n), n);
  const std::size_t lmax = *std::max_element(ls.begin(), ls.end());

  std::vector<double> hits(g, 0.0), s1(g, 0.0), s2(g, 0.0), t1(g, 0.0), t2(g, 0.0);
  std::vector<double> sq(n);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto v = sample_sphere(n, sphere_trial_seed(seed, t));
    for (std::size_t i = 0; i < n; ++i) sq[i] = v[i] * v[i];
    std::nth_element(sq.begin(), sq.begin() + std::ptrdiff_t(lmax - 1), sq.end(), std::greater<>());
    std::sort(sq.begin(), sq.begin() + std::ptrdiff_t(lmax), std::greater<>());
    std::vector<double> prefix(lmax + 1, 0.0);
    for (std::size_t i = 0; i < lmax; ++i) prefix[i + 1] = prefix[i] + sq[i];
    for (std::size_t i = 0; i < g; ++i) {
      const double m2 = std::min(prefix[ls[i]], 1.0);
      const double m1 = std::sqrt(m2);
      if (m1 <= kappa) hits[i] += 1.0;
      s1[i] += m2;
      s2[i] += m2 * m2;
      t1[i] += m1;
      t2[i] += m1 * m1;
    }
  }
  const double tr = double(trials);
  for (std::size_t i = 0; i < g; ++i) {
    r.deloc_probability.push_back(hits[i] / tr);
    const double mean = s1[i] / tr;
    r.mean_norm_sq.push_back(mean);
    r.std_norm_sq.push_back(trials > 1 ? std::sqrt(std::max(0.0, (s2[i] - tr * mean * mean) / (tr - 1.0))) : 0.0);
    const double mean1 = t1[i] / tr;
    r.mean_norm.push_back(mean1);
    r.std_norm.push_back(trials > 1 ? std::sqrt(std::max(0.0, (t2[i] - tr * mean1 * mean1) / (tr - 1.0))) : 0.0);
  }
  return r;
}

/// CSV "nu,deloc_probability,mean_norm_sq,std_norm_sq".
inline void write_sphere_csv(std::ostream& os, const SphereBaselineResult& r) {
  os << "nu,deloc_probability,mean_norm_sq,std_norm_sq\n";
  char buf[160];
  for (std::size_t i = 0; i < r.nu_grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.nu_grid[i], r.deloc_probability[i],
                  r.mean_norm_sq[i], r.std_norm_sq[i]);
    os << buf;
  }
}

}  // namespace specloc
