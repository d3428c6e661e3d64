#pragma once

// Sampling X_N with (X_N)_{xy} = 1_{x~y} g_{xy} and products against it.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "specloc/errors.hpp"
#include "specloc/patterns.hpp"
#include "specloc/rng.hpp"

namespace specloc {

inline constexpr std::size_t kDefaultDenseCap = 4096;

/// Sampled symmetric matrix on a sparsity pattern. One value per edge;
/// the (x,y)/(y,x) identification is structural. Immutable.
class GaussianSparseMatrix {
 public:
  /// Takes explicit edge values (length = edge count). Used directly for
  /// forced-value instances; sample_matrix is the usual entry point.
  GaussianSparseMatrix(std::shared_ptr<const SparsityPattern> pattern, std::vector<double> values,
                       std::uint64_t seed = 0, double scale = 1.0)
      : pattern_(std::move(pattern)), values_(std::move(values)), seed_(seed), scale_(scale) {
    if (!pattern_) throw InvalidParams("null pattern");
    if (values_.size() != pattern_->edge_count()) {
      throw DimensionMismatch("expected " + std::to_string(pattern_->edge_count()) + " edge values, got " +
                              std::to_string(values_.size()));
    }
    slot_values_.reserve(pattern_->row_offsets().back());
    for (std::size_t x = 0; x < pattern_->n(); ++x) {
      for (std::size_t k : pattern_->neighbor_edges(x)) slot_values_.push_back(values_[k]);
    }
  }

  const SparsityPattern& pattern() const noexcept { return *pattern_; }
  const std::shared_ptr<const SparsityPattern>& shared_pattern() const noexcept { return pattern_; }
  std::span<const double> values() const noexcept { return values_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double scale() const noexcept { return scale_; }
  std::size_t n() const noexcept { return pattern_->n(); }
  std::size_t degree() const noexcept { return pattern_->degree(); }

  /// Same values at another scale.
  GaussianSparseMatrix with_scale(double scale) const {
    GaussianSparseMatrix m = *this;
    m.scale_ = scale;
    return m;
  }
  /// d^{-1/2} X.
  GaussianSparseMatrix normalized() const { return with_scale(1.0 / std::sqrt(double(degree()))); }
  GaussianSparseMatrix unscaled() const { return with_scale(1.0); }
  GaussianSparseMatrix negated() const {
    std::vector<double> neg(values_.size());
    for (std::size_t k = 0; k < neg.size(); ++k) neg[k] = -values_[k];
    return GaussianSparseMatrix(pattern_, std::move(neg), seed_, scale_);
  }

  /// out = scale * X * v. Sizes are not checked here.
  void apply(std::span<const double> v, std::span<double> out) const noexcept {
    const auto rows = pattern_->row_offsets();
    const std::size_t n = pattern_->n();
    for (std::size_t x = 0; x < n; ++x) {
      const auto nb = pattern_->neighbors(x);
      const double* val = slot_values_.data() + rows[x];
      double acc = 0.0;
      for (std::size_t j = 0; j < nb.size(); ++j) acc += val[j] * v[nb[j]];
      out[x] = scale_ * acc;
    }
  }

  /// Entry (x, y) of scale * X; zero off the pattern.
  double entry(std::size_t x, std::size_t y) const {
    const auto nb = pattern_->neighbors(x);
    const auto it = std::lower_bound(nb.begin(), nb.end(), Vertex(y));
    if (it == nb.end() || *it != y) return 0.0;
    return scale_ * slot_values_[pattern_->row_offsets()[x] + std::size_t(it - nb.begin())];
  }

  /// Row x as (neighbor, scaled value) pairs via callback.
  template <class F>
  void for_each_in_row(std::size_t x, F&& f) const {
    const auto nb = pattern_->neighbors(x);
    const double* val = slot_values_.data() + pattern_->row_offsets()[x];
    for (std::size_t j = 0; j < nb.size(); ++j) f(std::size_t(nb[j]), scale_ * val[j]);
  }

 private:
  std::shared_ptr<const SparsityPattern> pattern_;
  std::vector<double> values_;
  std::vector<double> slot_values_;
  std::uint64_t seed_;
  double scale_;
};

/// One standard normal per edge, keyed by (seed, canonical edge index).
inline GaussianSparseMatrix sample_matrix(std::shared_ptr<const SparsityPattern> pattern, std::uint64_t seed) {
  if (!pattern) throw InvalidParams("null pattern");
  require_valid(*pattern);
  const CounterRng rng(seed, fnv1a("edge-values"));
  std::vector<double> values(pattern->edge_count());
  rng.fill_normal(values);
  return GaussianSparseMatrix(std::move(pattern), std::move(values), seed, 1.0);
}

inline GaussianSparseMatrix sample_matrix(const SparsityPattern& pattern, std::uint64_t seed) {
  return sample_matrix(std::make_shared<const SparsityPattern>(pattern), seed);
}

inline std::vector<double> matvec(const GaussianSparseMatrix& m, std::span<const double> v) {
  if (v.size() != m.n()) {
    throw DimensionMismatch("vector length " + std::to_string(v.size()) + " != N = " + std::to_string(m.n()));
  }
  std::vector<double> out(m.n());
  m.apply(v, out);
  return out;
}

inline Eigen::MatrixXd to_dense(const GaussianSparseMatrix& m, std::size_t cap = kDefaultDenseCap) {
  if (m.n() > cap) {
    throw CapExceeded("N = " + std::to_string(m.n()) + " exceeds dense cap " + std::to_string(cap));
  }
  const std::size_t n = m.n();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
  const auto& edges = m.pattern().edges();
  const auto values = m.values();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const double v = m.scale() * values[k];
    a(edges[k].u, edges[k].v) = v;
    a(edges[k].v, edges[k].u) = v;
  }
  return a;
}

/// Debug dump: "N d seed" header, then "x y value" per edge (17 significant digits).
inline void write_matrix_dump(std::ostream& os, const GaussianSparseMatrix& m) {
  os << m.n() << ' ' << m.degree() << ' ' << m.seed() << '\n';
  const auto& edges = m.pattern().edges();
  const auto values = m.values();
  char buf[64];
  for (std::size_t k = 0; k < edges.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", values[k]);
    os << edges[k].u << ' ' << edges[k].v << ' ' << buf << '\n';
  }
}

}  // namespace specloc
