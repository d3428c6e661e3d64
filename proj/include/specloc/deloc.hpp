#pragma once

// Delocalization metrics built on the decreasing rearrangement of |v|.
//
// ||v||_(L) is the l2 mass of the floor(L) largest-magnitude coordinates;
// v is (L, kappa)-delocalized iff ||v||_(L) <= kappa, since the top-L
// coordinate set is the worst set A with |A| <= L.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "specloc/errors.hpp"
#include "specloc/rng.hpp"
#include "specloc/sampler.hpp"

namespace specloc {

inline constexpr double kUnitTolerance = 1e-8;

namespace detail {

inline double l2_norm(std::span<const double> v) noexcept {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline void require_unit(std::span<const double> v) {
  if (v.empty()) throw DimensionError("empty vector");
  const double nrm = l2_norm(v);
  if (std::abs(nrm - 1.0) > kUnitTolerance) {
    throw InvalidParams("expected a unit vector, got norm " + std::to_string(nrm));
  }
}

// Floors a real L exactly once; the result must lie in [1, n].
inline std::size_t floor_L(double L, std::size_t n) {
  if (!(L >= 1.0)) throw DimensionError("L must be at least 1");
  const double f = std::floor(L);
  if (f > double(n)) throw DimensionError("L exceeds the vector length");
  return static_cast<std::size_t>(f);
}

}  // namespace detail

/// Indices of the floor(L) largest |v_i|; ties broken toward the lower index.
inline std::vector<std::size_t> top_coordinates(std::span<const double> v, double L) {
  const std::size_t l = detail::floor_L(L, v.size());
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto before = [&](std::size_t a, std::size_t b) {
    const double fa = std::abs(v[a]), fb = std::abs(v[b]);
    return fa > fb || (fa == fb && a < b);
  };
  std::nth_element(idx.begin(), idx.begin() + std::ptrdiff_t(l - 1), idx.end(), before);
  idx.resize(l);
  std::sort(idx.begin(), idx.end(), before);
  return idx;
}

/// ||v||_(L) via partial selection (expected O(N)).
inline double rearrangement_norm(std::span<const double> v, double L) {
  detail::require_unit(v);
  const std::size_t l = detail::floor_L(L, v.size());
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = v[i] * v[i];
  if (l < sq.size()) std::nth_element(sq.begin(), sq.begin() + std::ptrdiff_t(l - 1), sq.end(), std::greater<>());
  double s = 0.0;
  for (std::size_t i = 0; i < l; ++i) s += sq[i];
  return std::sqrt(std::min(s, 1.0 + 2.0 * kUnitTolerance));
}

inline bool is_delocalized(std::span<const double> v, double L, double kappa) {
  return rearrangement_norm(v, L) <= kappa;
}

inline double lq_norm(std::span<const double> v, double q) {
  if (!(q >= 1.0)) throw InvalidParams("lq_norm: q must be at least 1");
  // Scale by the max entry so large q does not underflow.
  double mx = 0.0;
  for (double x : v) mx = std::max(mx, std::abs(x));
  if (mx == 0.0) return 0.0;
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x) / mx, q);
  return mx * std::pow(s, 1.0 / q);
}

/// kappa_cert = L^{1/2 - 1/q} ||v||_q, which certifies v is (L, kappa)-delocalized
/// for every kappa >= kappa_cert (Hoelder on the top-L set).
inline double lq_deloc_bound(std::span<const double> v, double L, double q) {
  if (!(q >= 2.0)) throw InvalidParams("lq_deloc_bound: q must be at least 2");
  detail::require_unit(v);
  const double l = double(detail::floor_L(L, v.size()));
  return std::pow(l, 0.5 - 1.0 / q) * lq_norm(v, q);
}

/// q = 2 log(e / nu), the exponent used for candidate selection.
inline double selection_exponent(double nu) {
  if (!(nu > 0.0 && nu <= 1.0)) throw InvalidParams("nu must lie in (0, 1]");
  return 2.0 * std::log(std::exp(1.0) / nu);
}

/// ||X v||_2 / ||X|| with `norm` the operator norm of the unscaled X.
inline double approx_top_ratio(const GaussianSparseMatrix& m, std::span<const double> v, double norm) {
  if (v.size() != m.n()) throw DimensionError("approx_top_ratio: length mismatch");
  if (!(norm > 0.0)) throw InvalidParams("approx_top_ratio: norm must be positive");
  std::vector<double> xv(m.n());
  m.unscaled().apply(v, xv);
  return detail::l2_norm(xv) / norm;
}

struct PeakFlatSplit {
  std::vector<double> peak;  // v_i where |v_i| > L^{-1/2}
  std::vector<double> flat;  // the rest; ||flat||_inf <= L^{-1/2}
};

inline PeakFlatSplit peak_flat_split(std::span<const double> v, double L) {
  detail::require_unit(v);
  const double l = double(detail::floor_L(L, v.size()));
  const double threshold = 1.0 / std::sqrt(l);
  PeakFlatSplit out{std::vector<double>(v.size(), 0.0), std::vector<double>(v.size(), 0.0)};
  for (std::size_t i = 0; i < v.size(); ++i) {
    (std::abs(v[i]) > threshold ? out.peak : out.flat)[i] = v[i];
  }
  return out;
}

/// Upper bound on sup_{||w||_inf <= 1} ||X w||_2 by absolute row sums:
/// (sum_x (sum_y |X_xy|)^2)^{1/2}.
inline double sign_sup_upper_bound(const GaussianSparseMatrix& m) {
  double s = 0.0;
  for (std::size_t x = 0; x < m.n(); ++x) {
    double row = 0.0;
    m.for_each_in_row(x, [&](std::size_t, double val) { row += std::abs(val); });
    s += row * row;
  }
  return std::sqrt(s);
}

/// ||X w||_2 for a random sign vector w; a lower-bound probe of the same sup.
inline double sign_probe(const GaussianSparseMatrix& m, std::uint64_t seed) {
  CounterRng rng(seed, fnv1a("sign-probe"));
  std::vector<double> w(m.n()), xw(m.n());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = (rng.bits(i) & 1) ? 1.0 : -1.0;
  m.apply(w, xw);
  return detail::l2_norm(xw);
}

struct DelocProfile {
  std::string vector_id;
  std::vector<std::size_t> L_grid;
  std::vector<double> norms;
};

/// ||v||_(L) over an increasing grid, from one sort of the squared entries.
inline DelocProfile deloc_profile(std::span<const double> v, std::vector<std::size_t> L_grid, std::string id = "v") {
  detail::require_unit(v);
  if (!std::is_sorted(L_grid.begin(), L_grid.end())) throw InvalidParams("L grid must be increasing");
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = v[i] * v[i];
  std::sort(sq.begin(), sq.end(), std::greater<>());
  std::vector<double> prefix(sq.size() + 1, 0.0);
  for (std::size_t i = 0; i < sq.size(); ++i) prefix[i + 1] = prefix[i] + sq[i];
  DelocProfile out{std::move(id), std::move(L_grid), {}};
  for (auto L : out.L_grid) {
    const std::size_t l = detail::floor_L(double(L), v.size());
    out.norms.push_back(std::sqrt(std::min(prefix[l], 1.0 + 2.0 * kUnitTolerance)));
  }
  return out;
}

/// CSV "L,norm_L".
inline void write_deloc_profile_csv(std::ostream& os, const DelocProfile& p) {
  os << "L,norm_L\n";
  char buf[64];
  for (std::size_t i = 0; i < p.L_grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", p.norms[i]);
    os << p.L_grid[i] << ',' << buf << '\n';
  }
}

}  // namespace specloc
