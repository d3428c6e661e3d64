#pragma once

// Delocalized approximate top eigenvectors from edge eigenspaces.
//
// E is spanned by the eigenvectors of d^{-1/2} X with eigenvalues in
// [2 - eps, 3]. A uniform unit vector in E is delocalized whenever the
// diagonal of the projection P_E is flat (max_x P_xx <= C m / N); we draw
// several and keep the one with the smallest l^q norm, q = 2 log(e/nu).
// The diagonal of P_E can also be bracketed without eigenvectors, from
// strip integrals of the resolvent.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "specloc/deloc.hpp"
#include "specloc/errors.hpp"
#include "specloc/quadrature.hpp"
#include "specloc/rng.hpp"
#include "specloc/sampler.hpp"
#include "specloc/semicircle.hpp"
#include "specloc/spectral.hpp"
#include "specloc/sphere.hpp"

namespace specloc {

struct EigenspaceBasis {
  Eigen::MatrixXd basis;  // N x m, orthonormal columns
  double a = 0.0;
  double b = 0.0;
  SpectralMethod source = SpectralMethod::dense;

  std::size_t dim() const noexcept { return std::size_t(basis.cols()); }
  std::size_t n() const noexcept { return std::size_t(basis.rows()); }
};

/// Eigenspace of the scaled matrix for eigenvalues in [a, b].
inline EigenspaceBasis eigenspace(const GaussianSparseMatrix& m, double a, double b,
                                  std::size_t dense_cap = kDefaultDenseCap, std::uint64_t seed = 0) {
  SpectralOptions opts;
  opts.dense_cap = dense_cap;
  opts.seed = seed;
  auto sd = eigenpairs_in_interval(m, a, b, opts);
  return {std::move(*sd.eigenvectors), a, b, sd.method};
}

/// (P_E)_xx = sum_k B[x,k]^2.
inline std::vector<double> projection_diag(const EigenspaceBasis& e) {
  std::vector<double> out(e.n());
  for (std::size_t x = 0; x < out.size(); ++x) out[x] = e.basis.row(Eigen::Index(x)).squaredNorm();
  return out;
}

/// V = B g / ||B g|| with g standard Gaussian in R^m, i.e. uniform on the
/// unit sphere of E.
inline std::vector<double> sample_uniform_in_subspace(const EigenspaceBasis& e, std::uint64_t seed) {
  if (e.dim() == 0) throw InvalidParams("sample_uniform_in_subspace: empty subspace");
  Eigen::VectorXd g(Eigen::Index(e.dim()));
  for (int attempt = 0; attempt < kDegenerateRetries; ++attempt) {
    CounterRng(seed, fnv1a("subspace") + std::uint64_t(attempt)).fill_normal({g.data(), e.dim()});
    Eigen::VectorXd v = e.basis * g;
    const double nrm = v.norm();
    if (nrm >= 1e-30) {
      v /= nrm;
      return {v.data(), v.data() + v.size()};
    }
  }
  throw DegenerateDraw("sample_uniform_in_subspace: Gaussian draw vanished");
}

/// eps = (log N / d)^{1/17}.
inline double default_edge_epsilon(std::size_t n, std::size_t d) {
  return std::pow(std::log(double(n)) / double(d), 1.0 / 17.0);
}

inline constexpr double kEdgeWindowTop = 3.0;
inline constexpr std::size_t kDefaultCandidates = 32;

struct ConstructionReport {
  double epsilon_used = 0.0;
  std::pair<double, double> window{0.0, 0.0};
  std::size_t m = 0;
  std::size_t candidate_count = 0;
  double chosen_q = 0.0;
  double kappa_achieved = 0.0;
  double ratio_achieved = 0.0;
  double proj_diag_max = 0.0;
  double proj_diag_min = 0.0;
};

inline nlohmann::ordered_json to_json(const ConstructionReport& r) {
  nlohmann::ordered_json j;
  j["epsilon_used"] = r.epsilon_used;
  j["window"] = {r.window.first, r.window.second};
  j["m"] = r.m;
  j["candidate_count"] = r.candidate_count;
  j["chosen_q"] = r.chosen_q;
  j["kappa_achieved"] = r.kappa_achieved;
  j["ratio_achieved"] = r.ratio_achieved;
  j["proj_diag_max"] = r.proj_diag_max;
  j["proj_diag_min"] = r.proj_diag_min;
  return j;
}

struct ConstructionOptions {
  /// Overrides the (log N / d)^{1/17} default.
  std::optional<double> epsilon;
  /// Overrides the window entirely; epsilon_used is then 2 - a.
  std::optional<std::pair<double, double>> window;
  std::size_t dense_cap = kDefaultDenseCap;
};

struct Construction {
  std::vector<double> vector;
  ConstructionReport report;
};

inline std::uint64_t candidate_seed(std::uint64_t seed, std::size_t i) {
  return mix_seed(seed, {fnv1a("candidate"), i});
}

/// Best-of-n_candidates uniform vector in the edge eigenspace, ranked by
/// ||V||_q with q = 2 log(e/nu).
inline Construction construct_delocalized_candidate(const GaussianSparseMatrix& m, double nu, double kappa,
                                                    std::size_t n_candidates, std::uint64_t seed,
                                                    const ConstructionOptions& opts = {}) {
  if (m.degree() < 2) throw InvalidParams("construct: need d >= 2");
  if (!(nu > 0.0 && nu < 1.0)) throw InvalidParams("construct: nu must lie in (0, 1)");
  if (!(kappa > 0.0 && kappa < 1.0)) throw InvalidParams("construct: kappa must lie in (0, 1)");
  if (n_candidates == 0) throw InvalidParams("construct: need at least one candidate");
  const std::size_t n = m.n();
  const double L = nu * double(n);
  if (L < 1.0) throw InvalidParams("construct: nu * N must be at least 1");

  ConstructionReport rep;
  if (opts.window) {
    rep.window = *opts.window;
    rep.epsilon_used = 2.0 - rep.window.first;
  } else {
    rep.epsilon_used = opts.epsilon.value_or(default_edge_epsilon(n, m.degree()));
    if (!(rep.epsilon_used > 0.0)) throw InvalidParams("construct: epsilon must be positive");
    rep.window = {2.0 - rep.epsilon_used, kEdgeWindowTop};
  }
  const auto e = eigenspace(m, rep.window.first, rep.window.second, opts.dense_cap, seed);
  rep.m = e.dim();
  if (rep.m == 0) {
    throw EmptyWindow("construct: no eigenvalues in [" + std::to_string(rep.window.first) + ", " +
                      std::to_string(rep.window.second) + "]");
  }
  const auto pd = projection_diag(e);
  rep.proj_diag_max = *std::max_element(pd.begin(), pd.end());
  rep.proj_diag_min = *std::min_element(pd.begin(), pd.end());
  rep.chosen_q = selection_exponent(nu);
  rep.candidate_count = n_candidates;

  std::vector<double> best;
  double best_q = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_candidates; ++i) {
    auto v = sample_uniform_in_subspace(e, candidate_seed(seed, i));
    const double qn = lq_norm(v, rep.chosen_q);
    if (qn < best_q) {
      best_q = qn;
      best = std::move(v);
    }
  }
  rep.kappa_achieved = rearrangement_norm(best, L);
  rep.ratio_achieved = approx_top_ratio(m, best, operator_norm(m, 1e-10, opts.dense_cap, seed));
  return {std::move(best), rep};
}

// Resolvent sandwich ---------------------------------------------------------

struct ProjectionSandwich {
  std::vector<double> upper;
  std::vector<double> lower;
  double quad_error = 0.0;
};

namespace detail {

// (1/pi) Im int_lo^hi G(lambda + i delta)_xx d lambda for every x, at two
// panel counts; returns the finer value and max_x |fine - coarse|.
template <class Accumulate>
std::pair<std::vector<double>, double> strip_integral_diag(Accumulate&& accumulate, std::size_t n, double lo,
                                                           double hi, double delta, std::size_t quad_points) {
  std::vector<double> fine(n, 0.0);
  if (!(hi > lo)) return {fine, 0.0};
  const auto rule = gauss_legendre(quad_points);
  const std::size_t panels = panels_for_density(hi - lo, delta, quad_points);
  std::vector<double> coarse(n, 0.0);
  for (auto [p, acc] : {std::pair{panels, &coarse}, std::pair{2 * panels, &fine}}) {
    const auto comp = composite_rule(rule, lo, hi, p);
    for (std::size_t i = 0; i < comp.nodes.size(); ++i) {
      accumulate(std::complex<double>(comp.nodes[i], delta), comp.weights[i] / std::numbers::pi, *acc);
    }
  }
  double err = 0.0;
  for (std::size_t x = 0; x < n; ++x) err = std::max(err, std::abs(fine[x] - coarse[x]));
  return {fine, err};
}

}  // namespace detail

/// Entrywise bounds lower_x <= (P_{E[a,b]})_xx <= upper_x from the resolvent:
///   upper = (1 + 2 delta/gamma) (1/pi) Im int_{a-gamma}^{b+gamma} G(lambda + i delta)_xx
///   lower = (1/pi) Im int_{a+gamma}^{b-gamma} G(lambda + i delta)_xx - delta / (pi gamma)
inline ProjectionSandwich resolvent_projection_diag(const GaussianSparseMatrix& m, double a, double b, double gamma,
                                                    double delta, std::size_t quad_points = 64,
                                                    std::size_t dense_cap = kDefaultDenseCap) {
  if (!(a < b)) throw InvalidParams("resolvent_projection_diag: need a < b");
  if (!(delta > 0.0 && delta <= gamma)) throw InvalidParams("resolvent_projection_diag: need 0 < delta <= gamma");
  if (quad_points < 16) throw InvalidParams("resolvent_projection_diag: need quad_points >= 16");
  const std::size_t n = m.n();

  std::optional<DenseResolvent> dense;
  if (n <= dense_cap) dense.emplace(m, true, dense_cap);
  auto accumulate = [&](std::complex<double> z, double w, std::vector<double>& acc) {
    if (dense) {
      dense->accumulate_imag(z, w, acc);
    } else {
      ResolventOptions ro;
      ro.dense_cap = dense_cap;
      const auto g = resolvent_diag(m, z, ro);
      for (std::size_t x = 0; x < n; ++x) acc[x] += w * g[x].imag();
    }
  };

  auto [outer, outer_err] = detail::strip_integral_diag(accumulate, n, a - gamma, b + gamma, delta, quad_points);
  auto [inner, inner_err] = detail::strip_integral_diag(accumulate, n, a + gamma, b - gamma, delta, quad_points);
  const double factor = 1.0 + 2.0 * delta / gamma;
  const double shift = delta / (std::numbers::pi * gamma);
  ProjectionSandwich out;
  out.upper.resize(n);
  out.lower.resize(n);
  for (std::size_t x = 0; x < n; ++x) {
    out.upper[x] = factor * outer[x];
    out.lower[x] = inner[x] - shift;
  }
  out.quad_error = std::max(factor * outer_err, inner_err);
  if (out.quad_error > kQuadratureErrorBudget) {
    throw QuadratureBudget("resolvent_projection_diag: error estimate exceeds budget", out.quad_error);
  }
  return out;
}

/// High-probability brackets on max_x / min_x P_xx, given the semicircle
/// strip integrals I = Im int msc(lambda + i delta) d lambda over the outer
/// and inner intervals (not divided by pi).
inline double projection_upper_bracket(double i_outer, double delta, double gamma, double d, double n) {
  return (1.0 + 2.0 * delta / gamma) / std::numbers::pi *
         (i_outer + 10.0 / (std::pow(delta, 5) * d) + 20.0 * std::sqrt(std::log(n)) / (delta * delta * std::sqrt(d)));
}

inline double projection_lower_bracket(double i_inner, double delta, double gamma, double d, double n) {
  return (i_inner - delta / gamma - 6.0 / (std::pow(delta, 5) * d) -
          12.0 * std::sqrt(std::log(n)) / (delta * delta * std::sqrt(d))) /
         std::numbers::pi;
}

struct ProjectionEstimateReport {
  double upper_bracket = 0.0;
  double lower_bracket = 0.0;
  double exact_max = 0.0;
  double exact_min = 0.0;
  bool upper_holds = false;
  bool lower_holds = false;
  std::size_t m = 0;
};

/// Compares the semicircle-based brackets against the exact projection
/// diagonal from the dense oracle.
inline ProjectionEstimateReport projection_estimate_check(const GaussianSparseMatrix& m, double a, double b,
                                                          double gamma, double delta,
                                                          std::size_t dense_cap = kDefaultDenseCap,
                                                          std::size_t quad_points = 64) {
  if (!(a >= 0.0 && a < b && b <= 3.0)) throw InvalidParams("projection_estimate_check: need 0 <= a < b <= 3");
  if (!(delta > 0.0 && delta <= gamma && gamma <= 1.0)) {
    throw InvalidParams("projection_estimate_check: need 0 < delta <= gamma <= 1");
  }
  if (m.n() > dense_cap) throw CapExceeded("projection_estimate_check needs the dense oracle");
  const double i_outer = std::numbers::pi * msc_strip_integral(a - gamma, b + gamma, delta, quad_points).value;
  const double i_inner =
      a + gamma < b - gamma ? std::numbers::pi * msc_strip_integral(a + gamma, b - gamma, delta, quad_points).value
                            : 0.0;
  ProjectionEstimateReport r;
  const double d = double(m.degree()), n = double(m.n());
  r.upper_bracket = projection_upper_bracket(i_outer, delta, gamma, d, n);
  r.lower_bracket = projection_lower_bracket(i_inner, delta, gamma, d, n);
  const auto e = eigenspace(m, a, b, dense_cap);
  r.m = e.dim();
  const auto pd = projection_diag(e);
  r.exact_max = *std::max_element(pd.begin(), pd.end());
  r.exact_min = *std::min_element(pd.begin(), pd.end());
  r.upper_holds = r.exact_max < r.upper_bracket;
  r.lower_holds = r.exact_min > r.lower_bracket;
  return r;
}

}  // namespace specloc
