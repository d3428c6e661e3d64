#pragma once

// Thin wrappers over the LAPACK symmetric eigensolver and tridiagonal
// reduction. Matrices are Eigen column-major, which is LAPACK's layout.

#include <lapacke.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specloc/errors.hpp"

namespace specloc::detail {

struct DenseEigen {
  Eigen::VectorXd values;   // ascending, as LAPACK returns them
  Eigen::MatrixXd vectors;  // empty unless requested
};

enum class EigenRange { all, value, index };

/// dsyevr on a copy of `a`. For EigenRange::value the window is the closed
/// interval [lo, hi]; for EigenRange::index lo/hi are 1-based positions.
inline DenseEigen symmetric_eigen(Eigen::MatrixXd a, bool vectors, EigenRange range = EigenRange::all,
                                  double lo = 0.0, double hi = 0.0) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  DenseEigen out;
  if (n == 0) return out;
  char rng = 'A';
  double vl = 0.0, vu = 0.0;
  lapack_int il = 0, iu = 0;
  lapack_int max_found = n;
  if (range == EigenRange::value) {
    rng = 'V';
    // dsyevr searches the half-open (vl, vu].
    vl = std::nextafter(lo, -std::numeric_limits<double>::infinity());
    vu = hi;
  } else if (range == EigenRange::index) {
    rng = 'I';
    il = static_cast<lapack_int>(lo);
    iu = static_cast<lapack_int>(hi);
    max_found = iu - il + 1;
  }
  Eigen::VectorXd w(n);
  Eigen::MatrixXd z;
  if (vectors) z.resize(n, max_found);
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(n));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', rng, 'L', n, a.data(), n, vl, vu,
                                         il, iu, 0.0, &found, w.data(), vectors ? z.data() : nullptr, n,
                                         isuppz.data());
  if (info != 0) throw ConvergenceFailure("dsyevr failed with info = " + std::to_string(info), 0.0);
  out.values = w.head(found);
  if (vectors) out.vectors = z.leftCols(found);
  return out;
}

/// A = Q T Q^T with T symmetric tridiagonal.
struct Tridiagonal {
  Eigen::VectorXd diag;
  Eigen::VectorXd offdiag;  // length n-1
  Eigen::MatrixXd q;
};

inline Tridiagonal tridiagonalize(Eigen::MatrixXd a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Tridiagonal out;
  out.diag.resize(n);
  out.offdiag.resize(std::max<lapack_int>(n - 1, 0));
  if (n == 0) return out;
  std::vector<double> e(static_cast<std::size_t>(std::max<lapack_int>(n - 1, 1)));
  std::vector<double> tau(static_cast<std::size_t>(std::max<lapack_int>(n - 1, 1)));
  lapack_int info = LAPACKE_dsytrd(LAPACK_COL_MAJOR, 'L', n, a.data(), n, out.diag.data(), e.data(), tau.data());
  if (info != 0) throw SolveFailure("dsytrd failed with info = " + std::to_string(info), 0.0);
  info = LAPACKE_dorgtr(LAPACK_COL_MAJOR, 'L', n, a.data(), n, tau.data());
  if (info != 0) throw SolveFailure("dorgtr failed with info = " + std::to_string(info), 0.0);
  for (lapack_int i = 0; i + 1 < n; ++i) out.offdiag[i] = e[static_cast<std::size_t>(i)];
  out.q = std::move(a);
  return out;
}

}  // namespace specloc::detail
