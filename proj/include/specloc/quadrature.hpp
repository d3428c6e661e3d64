#pragma once

// Composite Gauss-Legendre rules.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "specloc/errors.hpp"

namespace specloc {

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

/// n-point rule by Newton iteration on P_n.
inline GaussLegendreRule gauss_legendre(std::size_t n) {
  if (n == 0) throw InvalidParams("Gauss-Legendre rule needs at least one node");
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (double(i) + 0.75) / (double(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * double(k) - 1.0) * x * p1 - (double(k) - 1.0) * p0) / double(k);
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = double(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double pk = ((2.0 * double(k) - 1.0) * x * p1 - (double(k) - 1.0) * p0) / double(k);
      p0 = p1;
      p1 = pk;
    }
    dp = (n == 1) ? 1.0 : double(n) * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[n - 1 - i] = x;
    rule.nodes[i] = -x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

/// Nodes and weights of `panels` equal panels on [a, b], each carrying `rule`.
struct CompositeRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline CompositeRule composite_rule(const GaussLegendreRule& rule, double a, double b, std::size_t panels) {
  CompositeRule out;
  if (!(b > a) || panels == 0) return out;
  const double width = (b - a) / double(panels);
  out.nodes.reserve(panels * rule.nodes.size());
  out.weights.reserve(panels * rule.nodes.size());
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + width * double(p);
    const double mid = lo + 0.5 * width;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      out.nodes.push_back(mid + 0.5 * width * rule.nodes[i]);
      out.weights.push_back(0.5 * width * rule.weights[i]);
    }
  }
  return out;
}

/// Panel count giving at least `density` nodes per length `scale`.
inline std::size_t panels_for_density(double length, double scale, std::size_t nodes_per_panel, double density = 8.0) {
  if (!(length > 0.0)) return 0;
  const double needed = density * length / (scale * double(nodes_per_panel));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(needed)));
}

}  // namespace specloc
