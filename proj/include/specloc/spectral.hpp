#pragma once

// Eigenpairs, operator norm, empirical spectral distribution and
// resolvent diagonals of a sampled matrix.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "specloc/detail/lapack.hpp"
#include "specloc/errors.hpp"
#include "specloc/rng.hpp"
#include "specloc/sampler.hpp"
#include "specloc/semicircle.hpp"

namespace specloc {

enum class SpectralMethod { dense, lanczos };

inline std::string_view to_string(SpectralMethod m) { return m == SpectralMethod::dense ? "dense" : "lanczos"; }

/// Eigenvalues (descending) and optionally eigenvectors of d^{-1/2} X,
/// or of X itself when `scaled` is false.
struct SpectralData {
  Eigen::VectorXd eigenvalues;
  std::optional<Eigen::MatrixXd> eigenvectors;
  std::vector<double> residuals;  // ||A v - lambda v||_2 per stored pair
  SpectralMethod method = SpectralMethod::dense;
  bool scaled = true;

  std::size_t size() const noexcept { return std::size_t(eigenvalues.size()); }
};

struct SpectralOptions {
  bool scaled = true;
  bool vectors = true;
  std::size_t dense_cap = kDefaultDenseCap;
  /// Lanczos start vector seed.
  std::uint64_t seed = 0;
  /// 0 selects the default 10k + 200.
  std::size_t max_iterations = 0;
};

/// The matrix the spectral routines act on: d^{-1/2} X or X.
inline GaussianSparseMatrix spectral_operator(const GaussianSparseMatrix& m, bool scaled) {
  return scaled ? m.normalized() : m.unscaled();
}

namespace detail {

inline std::vector<double> pair_residuals(const GaussianSparseMatrix& a, const Eigen::VectorXd& values,
                                          const Eigen::MatrixXd& vectors) {
  std::vector<double> res(std::size_t(values.size()));
  Eigen::VectorXd av(vectors.rows());
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    a.apply({vectors.col(k).data(), std::size_t(vectors.rows())}, {av.data(), std::size_t(av.size())});
    res[std::size_t(k)] = (av - values[k] * vectors.col(k)).norm();
  }
  return res;
}

// Reorders an ascending LAPACK result into descending order.
inline SpectralData descending(const GaussianSparseMatrix& a, DenseEigen eig, bool scaled, bool vectors) {
  SpectralData out;
  out.scaled = scaled;
  out.method = SpectralMethod::dense;
  out.eigenvalues = eig.values.reverse();
  if (vectors) {
    Eigen::MatrixXd v = eig.vectors.rowwise().reverse();
    if (v.rows() == 0) v.resize(Eigen::Index(a.n()), 0);
    out.residuals = pair_residuals(a, out.eigenvalues, v);
    out.eigenvectors = std::move(v);
  }
  return out;
}

struct LanczosResult {
  Eigen::VectorXd values;  // descending
  Eigen::MatrixXd vectors;
  std::vector<double> residual_bounds;
  std::size_t steps = 0;
  double norm_estimate = 0.0;
};

// Lanczos with full (two-pass Gram-Schmidt) reorthogonalization. Returns
// the k largest and k smallest Ritz pairs once their residual bounds drop
// below tol * (largest |Ritz value|).
inline LanczosResult lanczos_extremes(const GaussianSparseMatrix& a, std::size_t k, double tol, std::uint64_t seed,
                                      std::size_t max_iterations) {
  const std::size_t n = a.n();
  const std::size_t max_steps = std::min(n, max_iterations);
  Eigen::MatrixXd q(Eigen::Index(n), Eigen::Index(std::max<std::size_t>(max_steps, 1)));
  std::vector<double> alpha, beta;
  std::uint64_t restart = 0;

  auto random_start = [&](std::size_t filled) -> bool {
    for (int tries = 0; tries < 3; ++tries) {
      CounterRng rng(seed, fnv1a("lanczos-start") + restart++);
      Eigen::VectorXd v(static_cast<Eigen::Index>(n));
      rng.fill_normal({v.data(), n});
      for (int pass = 0; pass < 2 && filled > 0; ++pass) {
        const Eigen::VectorXd h = q.leftCols(Eigen::Index(filled)).transpose() * v;
        v -= q.leftCols(Eigen::Index(filled)) * h;
      }
      const double nv = v.norm();
      if (nv > 1e-8) {
        q.col(Eigen::Index(filled)) = v / nv;
        return true;
      }
    }
    return false;
  };

  if (!random_start(0)) throw ConvergenceFailure("lanczos: degenerate start vector", 0.0);

  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  Eigen::VectorXd theta;
  Eigen::MatrixXd s;
  double last_beta = 0.0;
  double norm_est = 0.0;
  bool converged = false;
  std::size_t steps = 0;
  std::size_t next_check = std::min(max_steps, std::max<std::size_t>(2 * k, 8));

  auto ritz = [&](std::size_t m) {
    Eigen::VectorXd dg = Eigen::Map<Eigen::VectorXd>(alpha.data(), Eigen::Index(m));
    Eigen::VectorXd sub = m > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), Eigen::Index(m - 1)))
                                : Eigen::VectorXd();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(dg, sub, Eigen::ComputeEigenvectors);
    theta = es.eigenvalues();
    s = es.eigenvectors();
    norm_est = std::max(std::abs(theta[0]), std::abs(theta[Eigen::Index(m) - 1]));
  };

  auto wanted_converged = [&](std::size_t m) {
    const double thresh = tol * std::max(norm_est, std::numeric_limits<double>::min());
    const std::size_t kk = std::min(k, m);
    for (std::size_t i = 0; i < kk; ++i) {
      for (Eigen::Index idx : {Eigen::Index(i), Eigen::Index(m - 1 - i)}) {
        if (std::abs(last_beta * s(Eigen::Index(m) - 1, idx)) > thresh) return false;
      }
    }
    return true;
  };

  for (std::size_t j = 0; j < max_steps; ++j) {
    const auto qj = q.col(Eigen::Index(j));
    a.apply({qj.data(), n}, {w.data(), n});
    const double aj = qj.dot(w);
    w -= aj * qj;
    if (j > 0) w -= beta[j - 1] * q.col(Eigen::Index(j - 1));
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd h = q.leftCols(Eigen::Index(j + 1)).transpose() * w;
      w -= q.leftCols(Eigen::Index(j + 1)) * h;
    }
    alpha.push_back(aj);
    last_beta = w.norm();
    steps = j + 1;
    norm_est = std::max(norm_est, std::abs(aj) + last_beta);

    const bool full = steps == n;
    if (full || steps == max_steps || steps >= next_check) {
      ritz(steps);
      if (full || wanted_converged(steps)) {
        converged = true;
        if (full) last_beta = 0.0;
        break;
      }
      next_check = steps + std::max<std::size_t>(4, steps / 8);
    }
    if (steps == max_steps) break;

    if (last_beta <= 1e-12 * std::max(norm_est, 1e-300)) {
      // Invariant subspace: continue in the orthogonal complement.
      beta.push_back(0.0);
      if (!random_start(steps)) {
        ritz(steps);
        last_beta = 0.0;
        converged = true;
        break;
      }
    } else {
      beta.push_back(last_beta);
      q.col(Eigen::Index(steps)) = w / last_beta;
    }
  }

  const std::size_t m = steps;
  if (theta.size() != Eigen::Index(m)) ritz(m);
  std::vector<Eigen::Index> pick;
  const std::size_t kk = std::min(k, m);
  for (std::size_t i = 0; i < kk; ++i) pick.push_back(Eigen::Index(m - 1 - i));
  for (std::size_t i = kk; i-- > 0;) {
    if (Eigen::Index(i) < Eigen::Index(m) - Eigen::Index(kk)) pick.push_back(Eigen::Index(i));
  }

  LanczosResult out;
  out.steps = m;
  out.norm_estimate = norm_est;
  out.values.resize(Eigen::Index(pick.size()));
  out.vectors.resize(Eigen::Index(n), Eigen::Index(pick.size()));
  for (std::size_t c = 0; c < pick.size(); ++c) {
    out.values[Eigen::Index(c)] = theta[pick[c]];
    out.vectors.col(Eigen::Index(c)) = q.leftCols(Eigen::Index(m)) * s.col(pick[c]);
    out.vectors.col(Eigen::Index(c)).normalize();
    out.residual_bounds.push_back(std::abs(last_beta * s(Eigen::Index(m) - 1, pick[c])));
  }
  if (!converged) {
    double worst = 0.0;
    for (double r : out.residual_bounds) worst = std::max(worst, r);
    throw ConvergenceFailure("lanczos: not converged after " + std::to_string(m) + " steps (worst residual " +
                                 std::to_string(worst) + ")",
                             worst);
  }
  return out;
}

}  // namespace detail

/// All N eigenpairs by dense LAPACK.
inline SpectralData full_spectrum(const GaussianSparseMatrix& m, const SpectralOptions& opts = {}) {
  const auto a = spectral_operator(m, opts.scaled);
  auto eig = detail::symmetric_eigen(to_dense(a, opts.dense_cap), opts.vectors);
  return detail::descending(a, std::move(eig), opts.scaled, opts.vectors);
}

/// The k algebraically largest and k smallest eigenpairs by Lanczos
/// (full reorthogonalization), sorted descending; duplicates merged when
/// 2k exceeds the Krylov dimension.
inline SpectralData extreme_eigenpairs(const GaussianSparseMatrix& m, std::size_t k, double tol,
                                       const SpectralOptions& opts = {}) {
  if (k < 1 || k > m.n()) throw InvalidParams("extreme_eigenpairs: need 1 <= k <= N");
  if (!(tol > 0.0)) throw InvalidParams("extreme_eigenpairs: tol must be positive");
  const auto a = spectral_operator(m, opts.scaled);
  const std::size_t max_iter = opts.max_iterations ? opts.max_iterations : 10 * k + 200;
  auto lr = detail::lanczos_extremes(a, k, tol, opts.seed, max_iter);

  std::vector<Eigen::Index> order(std::size_t(lr.values.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = Eigen::Index(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return lr.values[x] > lr.values[y]; });

  SpectralData out;
  out.method = SpectralMethod::lanczos;
  out.scaled = opts.scaled;
  out.eigenvalues.resize(Eigen::Index(order.size()));
  Eigen::MatrixXd vecs(lr.vectors.rows(), Eigen::Index(order.size()));
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.eigenvalues[Eigen::Index(i)] = lr.values[order[i]];
    vecs.col(Eigen::Index(i)) = lr.vectors.col(order[i]);
  }
  out.residuals = detail::pair_residuals(a, out.eigenvalues, vecs);
  if (opts.vectors) out.eigenvectors = std::move(vecs);
  return out;
}

/// max(|lambda_max|, |lambda_min|) of the unscaled X.
inline double operator_norm(const GaussianSparseMatrix& m, double tol = 1e-10, std::size_t dense_cap = kDefaultDenseCap,
                            std::uint64_t seed = 0) {
  if (!(tol > 0.0)) throw InvalidParams("operator_norm: tol must be positive");
  SpectralOptions opts;
  opts.scaled = false;
  opts.vectors = false;
  opts.seed = seed;
  opts.max_iterations = 400;
  try {
    const auto sd = extreme_eigenpairs(m, 1, tol, opts);
    return std::max(std::abs(sd.eigenvalues[0]), std::abs(sd.eigenvalues[sd.eigenvalues.size() - 1]));
  } catch (const ConvergenceFailure&) {
    if (m.n() > dense_cap) throw;
  }
  const auto a = m.unscaled();
  const auto n = double(m.n());
  const auto hi = detail::symmetric_eigen(to_dense(a, dense_cap), false, detail::EigenRange::index, n, n);
  const auto lo = detail::symmetric_eigen(to_dense(a, dense_cap), false, detail::EigenRange::index, 1, 1);
  return std::max(std::abs(hi.values[0]), std::abs(lo.values[0]));
}

/// Top eigenpair of the scaled matrix: dense below the cap, Lanczos above.
inline SpectralData top_eigenpair(const GaussianSparseMatrix& m, const SpectralOptions& opts = {}) {
  const auto a = spectral_operator(m, opts.scaled);
  if (m.n() <= opts.dense_cap) {
    const auto n = double(m.n());
    auto eig = detail::symmetric_eigen(to_dense(a, opts.dense_cap), true, detail::EigenRange::index, n, n);
    return detail::descending(a, std::move(eig), opts.scaled, true);
  }
  SpectralOptions o = opts;
  o.vectors = true;
  auto sd = extreme_eigenpairs(m, 1, 1e-10, o);
  SpectralData out;
  out.method = SpectralMethod::lanczos;
  out.scaled = opts.scaled;
  out.eigenvalues = sd.eigenvalues.head(1);
  out.eigenvectors = sd.eigenvectors->leftCols(1);
  out.residuals = {sd.residuals.front()};
  return out;
}

/// All eigenpairs of the (scaled) matrix with eigenvalue in [a, b].
/// Dense below the cap. Above it, Lanczos is used only for windows at an
/// edge of the spectrum, and only once converged Ritz values bracket the
/// window; otherwise CapExceeded.
inline SpectralData eigenpairs_in_interval(const GaussianSparseMatrix& m, double a, double b,
                                           const SpectralOptions& opts = {}) {
  if (a > b) throw InvalidParams("eigenpairs_in_interval: need a <= b");
  const auto op = spectral_operator(m, opts.scaled);
  if (m.n() <= opts.dense_cap) {
    double lo = a, hi = b;
    if (a == b) {
      lo = a - 1e-12;
      hi = b + 1e-12;
    }
    auto eig = detail::symmetric_eigen(to_dense(op, opts.dense_cap), true, detail::EigenRange::value, lo, hi);
    return detail::descending(op, std::move(eig), opts.scaled, true);
  }

  const double tol = 1e-10;
  const auto ends = extreme_eigenpairs(m, 1, tol, SpectralOptions{opts.scaled, false, opts.dense_cap, opts.seed, 0});
  const double top = ends.eigenvalues[0];
  const double bottom = ends.eigenvalues[ends.eigenvalues.size() - 1];
  const bool at_top = b >= top;
  const bool at_bottom = a <= bottom;
  if (!at_top && !at_bottom) {
    throw CapExceeded("eigenpairs_in_interval: interior window above the dense cap cannot be certified");
  }
  for (std::size_t k = 16; k <= m.n() / 2; k *= 2) {
    SpectralData sd;
    try {
      sd = extreme_eigenpairs(m, k, tol, SpectralOptions{opts.scaled, true, opts.dense_cap, opts.seed, 0});
    } catch (const ConvergenceFailure&) {
      continue;
    }
    const Eigen::Index cnt = sd.eigenvalues.size();
    const Eigen::Index kk = std::min<Eigen::Index>(Eigen::Index(k), cnt);
    // Top block is [0, kk), bottom block is the last kk entries.
    const bool covered = at_top ? sd.eigenvalues[kk - 1] < a : sd.eigenvalues[cnt - kk] > b;
    if (!covered) continue;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < cnt; ++i) {
      if (sd.eigenvalues[i] >= a && sd.eigenvalues[i] <= b) keep.push_back(i);
    }
    SpectralData out;
    out.method = SpectralMethod::lanczos;
    out.scaled = opts.scaled;
    out.eigenvalues.resize(Eigen::Index(keep.size()));
    Eigen::MatrixXd v(Eigen::Index(m.n()), Eigen::Index(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
      out.eigenvalues[Eigen::Index(i)] = sd.eigenvalues[keep[i]];
      v.col(Eigen::Index(i)) = sd.eigenvectors->col(keep[i]);
      out.residuals.push_back(sd.residuals[std::size_t(keep[i])]);
    }
    out.eigenvectors = std::move(v);
    return out;
  }
  throw CapExceeded("eigenpairs_in_interval: Lanczos could not bracket the window");
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `sorted`
/// (ascending) and a continuous CDF.
inline double ks_distance(std::span<const double> sorted, const std::function<double(double)>& cdf) {
  const double n = double(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, double(i + 1) / n - f, f - double(i) / n});
  }
  return std::clamp(d, 0.0, 1.0);
}

struct ESDHistogram {
  std::vector<double> bin_edges;
  std::vector<double> masses;
  std::size_t n_eigenvalues = 0;
  double ks_semicircle = 0.0;
};

/// Normalized histogram of the eigenvalues plus the KS distance of their
/// empirical CDF to the semicircle CDF.
inline ESDHistogram esd_histogram(const SpectralData& s, std::size_t n_bins) {
  if (n_bins == 0) throw InvalidParams("esd_histogram: need at least one bin");
  if (s.size() == 0) throw InvalidParams("esd_histogram: empty spectrum");
  std::vector<double> ev(s.eigenvalues.data(), s.eigenvalues.data() + s.eigenvalues.size());
  std::sort(ev.begin(), ev.end());
  double lo = ev.front(), hi = ev.back();
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  ESDHistogram h;
  h.n_eigenvalues = ev.size();
  h.bin_edges.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) h.bin_edges[i] = lo + (hi - lo) * double(i) / double(n_bins);
  h.bin_edges.back() = hi;
  std::vector<std::size_t> counts(n_bins, 0);
  for (double x : ev) {
    auto bin = static_cast<std::size_t>((x - lo) / (hi - lo) * double(n_bins));
    ++counts[std::min(bin, n_bins - 1)];
  }
  h.masses.resize(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) h.masses[i] = double(counts[i]) / double(ev.size());
  h.ks_semicircle = ks_distance(ev, sc_cdf);
  return h;
}

// Resolvent diagonals --------------------------------------------------------

struct ResolventOptions {
  bool scaled = true;
  std::size_t dense_cap = kDefaultDenseCap;
  double tol = 1e-8;
  std::size_t max_iterations = 0;  // 0 selects max(1000, 4N)
};

/// Diagonal of (A - z)^{-1} for many z from one tridiagonal reduction
/// A = Q T Q^T: each z costs an O(N) LDL^T factorization of T - z and N
/// tridiagonal solves, O(N^2) in total.
class DenseResolvent {
 public:
  explicit DenseResolvent(const GaussianSparseMatrix& m, bool scaled = true, std::size_t dense_cap = kDefaultDenseCap)
      : n_(m.n()) {
    auto tri = detail::tridiagonalize(to_dense(spectral_operator(m, scaled), dense_cap));
    diag_ = std::move(tri.diag);
    off_ = std::move(tri.offdiag);
    qt_ = tri.q.transpose();
  }

  std::size_t n() const noexcept { return n_; }

  std::vector<std::complex<double>> diagonal(std::complex<double> z) const {
    std::vector<std::complex<double>> out(n_);
    visit(z, [&](std::size_t x, double re, double im) { out[x] = {re, im}; });
    return out;
  }

  /// acc[x] += weight * Im G_xx(z).
  void accumulate_imag(std::complex<double> z, double weight, std::span<double> acc) const {
    visit(z, [&](std::size_t x, double, double im) { acc[x] += weight * im; });
  }

 private:
  template <class Sink>
  void visit(std::complex<double> z, Sink&& sink) const {
    if (!(z.imag() > 0.0)) throw InvalidParams("resolvent: Im z must be positive");
    const std::size_t n = n_;
    // T - z = L D L^T with unit lower bidiagonal L (multipliers l) and D = diag(p).
    std::vector<double> lre(n, 0.0), lim(n, 0.0), ipre(n), ipim(n);
    double pre = diag_[0] - z.real(), pim = -z.imag();
    for (std::size_t i = 0;; ++i) {
      const double den = pre * pre + pim * pim;
      ipre[i] = pre / den;
      ipim[i] = -pim / den;
      if (i + 1 == n) break;
      const double e = off_[Eigen::Index(i)];
      lre[i] = e * ipre[i];
      lim[i] = e * ipim[i];
      pre = diag_[Eigen::Index(i + 1)] - z.real() - e * lre[i];
      pim = -z.imag() - e * lim[i];
    }
    std::vector<double> yre(n), yim(n);
    for (std::size_t x = 0; x < n; ++x) {
      const double* r = qt_.col(Eigen::Index(x)).data();
      // L u = r
      double ure = r[0], uim = 0.0;
      yre[0] = ure;
      yim[0] = uim;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const double nre = r[i + 1] - (lre[i] * ure - lim[i] * uim);
        const double nim = -(lre[i] * uim + lim[i] * ure);
        ure = nre;
        uim = nim;
        yre[i + 1] = ure;
        yim[i + 1] = uim;
      }
      // D w = u, then L^T y = w, accumulating r . y on the way back.
      double accre = 0.0, accim = 0.0;
      double nre = 0.0, nim = 0.0;
      for (std::size_t i = n; i-- > 0;) {
        double wre = yre[i] * ipre[i] - yim[i] * ipim[i];
        double wim = yre[i] * ipim[i] + yim[i] * ipre[i];
        if (i + 1 < n) {
          wre -= lre[i] * nre - lim[i] * nim;
          wim -= lre[i] * nim + lim[i] * nre;
        }
        nre = wre;
        nim = wim;
        accre += r[i] * wre;
        accim += r[i] * wim;
      }
      sink(x, accre, accim);
    }
  }

  std::size_t n_;
  Eigen::VectorXd diag_;
  Eigen::VectorXd off_;
  Eigen::MatrixXd qt_;
};

namespace detail {

// Conjugate orthogonal CG for the complex symmetric system (A - z) y = e_x.
// Returns y_x and the final relative residual.
inline std::pair<std::complex<double>, double> cocg_diagonal_entry(const GaussianSparseMatrix& a,
                                                                    std::complex<double> z, std::size_t x,
                                                                    double tol, std::size_t max_iter) {
  using cd = std::complex<double>;
  const std::size_t n = a.n();
  std::vector<cd> y(n, 0.0), r(n, 0.0), p(n), q(n);
  r[x] = 1.0;
  p = r;
  std::vector<double> pre(n), pim(n), are(n), aim(n);
  auto bilinear = [](const std::vector<cd>& u, const std::vector<cd>& v) {
    cd s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
  };
  auto norm2 = [](const std::vector<cd>& u) {
    double s = 0.0;
    for (const auto& c : u) s += std::norm(c);
    return std::sqrt(s);
  };
  cd rho = bilinear(r, r);
  double rel = 1.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      pre[i] = p[i].real();
      pim[i] = p[i].imag();
    }
    a.apply(pre, are);
    a.apply(pim, aim);
    for (std::size_t i = 0; i < n; ++i) q[i] = cd(are[i], aim[i]) - z * p[i];
    const cd pq = bilinear(p, q);
    if (std::abs(pq) == 0.0) break;
    const cd alpha = rho / pq;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    rel = norm2(r);
    if (rel <= tol) break;
    const cd rho_next = bilinear(r, r);
    const cd beta = rho_next / rho;
    rho = rho_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  return {y[x], rel};
}

}  // namespace detail

/// Diagonal of G(z) = (A - z)^{-1}, A = d^{-1/2} X (or X when unscaled).
inline std::vector<std::complex<double>> resolvent_diag(const GaussianSparseMatrix& m, std::complex<double> z,
                                                        const ResolventOptions& opts = {}) {
  if (!(z.imag() > 0.0)) throw InvalidParams("resolvent_diag: Im z must be positive");
  if (m.n() <= opts.dense_cap) return DenseResolvent(m, opts.scaled, opts.dense_cap).diagonal(z);
  const auto a = spectral_operator(m, opts.scaled);
  const std::size_t max_iter = opts.max_iterations ? opts.max_iterations : std::max<std::size_t>(1000, 4 * m.n());
  std::vector<std::complex<double>> out(m.n());
  double worst = 0.0;
  for (std::size_t x = 0; x < m.n(); ++x) {
    auto [g, rel] = detail::cocg_diagonal_entry(a, z, x, opts.tol, max_iter);
    out[x] = g;
    worst = std::max(worst, rel);
  }
  if (worst > opts.tol) throw SolveFailure("resolvent_diag: iterative solves did not converge", worst);
  return out;
}

// Dumps ----------------------------------------------------------------------

/// CSV "index,eigenvalue,residual"; residual left empty when not computed.
inline void write_spectrum_csv(std::ostream& os, const SpectralData& s) {
  os << "index,eigenvalue,residual\n";
  char buf[64];
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", s.eigenvalues[Eigen::Index(i)]);
    os << i << ',' << buf << ',';
    if (i < s.residuals.size()) {
      std::snprintf(buf, sizeof buf, "%.17g", s.residuals[i]);
      os << buf;
    }
    os << '\n';
  }
}

/// "SPECLOCV", then rows and cols as little-endian uint64, then the
/// column-major doubles.
inline void write_eigenvectors_binary(std::ostream& os, const Eigen::MatrixXd& v) {
  os.write("SPECLOCV", 8);
  const std::uint64_t dims[2] = {std::uint64_t(v.rows()), std::uint64_t(v.cols())};
  os.write(reinterpret_cast<const char*>(dims), sizeof dims);
  os.write(reinterpret_cast<const char*>(v.data()), std::streamsize(sizeof(double) * std::size_t(v.size())));
}

inline Eigen::MatrixXd read_eigenvectors_binary(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, "SPECLOCV", 8) != 0) throw ParseError("bad eigenvector magic");
  std::uint64_t dims[2];
  if (!is.read(reinterpret_cast<char*>(dims), sizeof dims)) throw ParseError("truncated eigenvector header");
  Eigen::MatrixXd v(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
  if (!is.read(reinterpret_cast<char*>(v.data()), std::streamsize(sizeof(double) * std::size_t(v.size())))) {
    throw ParseError("truncated eigenvector payload");
  }
  return v;
}

}  // namespace specloc
