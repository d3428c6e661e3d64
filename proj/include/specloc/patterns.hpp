#pragma once

// d-regular sparsity patterns: the graph G = ([N], E) that fixes which
// entries of the random matrix are nonzero. Vertices are 0-based.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "specloc/errors.hpp"
#include "specloc/rng.hpp"

namespace specloc {

using Vertex = std::uint32_t;

/// Unordered edge stored with u <= v; u == v is a self-loop.
struct Edge {
  Vertex u = 0;
  Vertex v = 0;

  constexpr Edge() = default;
  constexpr Edge(Vertex a, Vertex b) noexcept : u(a < b ? a : b), v(a < b ? b : a) {}

  constexpr bool is_loop() const noexcept { return u == v; }
  friend constexpr auto operator<=>(const Edge&, const Edge&) = default;
};

enum class PatternKind { complete, diagonal, band, block, random_regular };

inline std::string_view to_string(PatternKind kind) {
  switch (kind) {
    case PatternKind::complete: return "complete";
    case PatternKind::diagonal: return "diagonal";
    case PatternKind::band: return "band";
    case PatternKind::block: return "block";
    case PatternKind::random_regular: return "random_regular";
  }
  return "unknown";
}

inline PatternKind pattern_kind_from_string(std::string_view s) {
  for (auto k : {PatternKind::complete, PatternKind::diagonal, PatternKind::band, PatternKind::block,
                 PatternKind::random_regular}) {
    if (s == to_string(k)) return k;
  }
  if (s == "random-regular") return PatternKind::random_regular;
  throw InvalidParams("unknown pattern kind '" + std::string(s) + "'");
}

/// Immutable edge set plus a CSR adjacency. The constructor sorts the
/// edges but does not enforce regularity; see validate_pattern.
class SparsityPattern {
 public:
  SparsityPattern(std::size_t n, std::size_t d, std::vector<Edge> edges, std::string label = "custom")
      : n_(n), d_(d), edges_(std::move(edges)), label_(std::move(label)) {
    if (n_ == 0) throw InvalidParams("pattern needs at least one vertex");
    if (n_ > std::numeric_limits<Vertex>::max()) throw InvalidParams("too many vertices");
    for (const auto& e : edges_) {
      if (e.v >= n_) {
        throw InvalidParams("edge {" + std::to_string(e.u) + "," + std::to_string(e.v) +
                            "} out of range for N=" + std::to_string(n_));
      }
    }
    std::sort(edges_.begin(), edges_.end());
    build_adjacency();
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t degree() const noexcept { return d_; }
  const std::string& label() const noexcept { return label_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  /// Row x of the adjacency: neighbors (ascending) and the index of the
  /// corresponding edge in edges().
  std::span<const Vertex> neighbors(std::size_t x) const noexcept {
    return {adj_.data() + row_ptr_[x], adj_.data() + row_ptr_[x + 1]};
  }
  std::span<const std::size_t> neighbor_edges(std::size_t x) const noexcept {
    return {adj_edge_.data() + row_ptr_[x], adj_edge_.data() + row_ptr_[x + 1]};
  }
  std::span<const std::size_t> row_offsets() const noexcept { return row_ptr_; }

  friend bool operator==(const SparsityPattern& a, const SparsityPattern& b) {
    return a.n_ == b.n_ && a.d_ == b.d_ && a.edges_ == b.edges_;
  }

 private:
  void build_adjacency() {
    std::vector<std::size_t> count(n_, 0);
    for (const auto& e : edges_) {
      ++count[e.u];
      if (!e.is_loop()) ++count[e.v];
    }
    row_ptr_.assign(n_ + 1, 0);
    for (std::size_t x = 0; x < n_; ++x) row_ptr_[x + 1] = row_ptr_[x] + count[x];
    adj_.resize(row_ptr_[n_]);
    adj_edge_.resize(row_ptr_[n_]);
    std::vector<std::size_t> fill(row_ptr_.begin(), row_ptr_.end() - 1);
    // Edges are sorted, so filling in edge order leaves every row sorted.
    // Row x receives first the edges {y, x} with y < x (sorted by y), then {x, v} by v.
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      const auto& e = edges_[k];
      if (!e.is_loop()) {
        adj_[fill[e.v]] = e.u;
        adj_edge_[fill[e.v]++] = k;
      }
    }
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      const auto& e = edges_[k];
      adj_[fill[e.u]] = e.v;
      adj_edge_[fill[e.u]++] = k;
    }
  }

  std::size_t n_;
  std::size_t d_;
  std::vector<Edge> edges_;
  std::string label_;
  std::vector<std::size_t> row_ptr_;
  std::vector<Vertex> adj_;
  std::vector<std::size_t> adj_edge_;
};

struct Violation {
  enum class Kind { degree_mismatch, duplicate_edge, bad_degree_parameter };
  Kind kind;
  std::size_t vertex;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

/// Lists every invariant violation; never throws.
inline ValidationReport validate_pattern(const SparsityPattern& p) {
  ValidationReport report;
  const std::size_t n = p.n();
  const std::size_t d = p.degree();
  if (d < 1 || d > n) {
    report.violations.push_back({Violation::Kind::bad_degree_parameter, 0,
                                 "degree " + std::to_string(d) + " outside [1, " + std::to_string(n) + "]"});
  }
  const auto& edges = p.edges();
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (edges[k] == edges[k - 1]) {
      report.violations.push_back({Violation::Kind::duplicate_edge, edges[k].u,
                                   "duplicate edge {" + std::to_string(edges[k].u) + "," +
                                       std::to_string(edges[k].v) + "}"});
    }
  }
  for (std::size_t x = 0; x < n; ++x) {
    auto nb = p.neighbors(x);
    // Rows are sorted; distinct neighbors are counted once.
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < nb.size(); ++i) {
      if (i == 0 || nb[i] != nb[i - 1]) ++distinct;
    }
    if (distinct != d) {
      report.violations.push_back({Violation::Kind::degree_mismatch, x,
                                   "vertex " + std::to_string(x) + " has degree " + std::to_string(distinct) +
                                       ", expected " + std::to_string(d)});
    }
  }
  return report;
}

/// Throws ValidationError naming the first violation.
inline void require_valid(const SparsityPattern& p) {
  auto report = validate_pattern(p);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw ValidationError(v.message, v.vertex);
  }
}

namespace detail {

inline std::vector<Edge> complete_edges(std::size_t n, bool loops) {
  std::vector<Edge> edges;
  edges.reserve(n * (n + (loops ? 1 : -1)) / 2);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = loops ? u : u + 1; v < n; ++v) edges.emplace_back(Vertex(u), Vertex(v));
  }
  return edges;
}

// Steger-Wormald variant of the pairing model: points are paired one
// random pair at a time and pairs that would create a self-loop or a
// repeated edge are rejected; a stuck attempt restarts from scratch.
inline std::optional<std::vector<Edge>> pairing_attempt(std::size_t n, std::size_t d, CounterStream& rng) {
  std::vector<Vertex> points;
  points.reserve(n * d);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t j = 0; j < d; ++j) points.push_back(Vertex(x));
  }
  std::vector<std::vector<Vertex>> adjacent(n);
  std::vector<Edge> edges;
  edges.reserve(n * d / 2);
  const std::size_t max_rejections = 64 * n * d + 1024;
  std::size_t rejections = 0;
  while (!points.empty()) {
    const std::size_t i = rng.next_below(points.size());
    std::size_t j = rng.next_below(points.size() - 1);
    if (j >= i) ++j;
    const Vertex a = points[i];
    const Vertex b = points[j];
    const bool repeat = std::find(adjacent[a].begin(), adjacent[a].end(), b) != adjacent[a].end();
    if (a == b || repeat) {
      if (++rejections > max_rejections) return std::nullopt;
      continue;
    }
    adjacent[a].push_back(b);
    adjacent[b].push_back(a);
    edges.emplace_back(a, b);
    // Remove the larger index first so the smaller stays valid.
    for (std::size_t idx : {std::max(i, j), std::min(i, j)}) {
      points[idx] = points.back();
      points.pop_back();
    }
  }
  return edges;
}

}  // namespace detail

inline constexpr std::size_t kRandomRegularRetryBudget = 500;

struct PatternOptions {
  /// Complete pattern without self-loops (strict off-diagonal Wigner, d = n - 1).
  bool no_loops = false;
};

inline SparsityPattern generate_pattern(PatternKind kind, std::size_t n, std::size_t d, std::uint64_t seed,
                                        PatternOptions opts = {}) {
  if (n == 0 || d == 0) throw InvalidParams("n and d must be positive");
  const std::string label(to_string(kind));
  switch (kind) {
    case PatternKind::complete: {
      const std::size_t expected = opts.no_loops ? n - 1 : n;
      if (d != expected) {
        throw InvalidParams("complete pattern requires d = " + std::to_string(expected) + " (got " +
                            std::to_string(d) + ")");
      }
      return SparsityPattern(n, d, detail::complete_edges(n, !opts.no_loops), label);
    }
    case PatternKind::diagonal: {
      if (d != 1) throw InvalidParams("diagonal pattern requires d = 1");
      std::vector<Edge> edges;
      edges.reserve(n);
      for (std::size_t x = 0; x < n; ++x) edges.emplace_back(Vertex(x), Vertex(x));
      return SparsityPattern(n, 1, std::move(edges), label);
    }
    case PatternKind::band: {
      if (d % 2 == 0 || d > n) throw InvalidParams("band pattern requires odd d <= n");
      const std::size_t half = (d - 1) / 2;
      std::vector<Edge> edges;
      edges.reserve(n * (half + 1));
      for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t off = 0; off <= half; ++off) edges.emplace_back(Vertex(x), Vertex((x + off) % n));
      }
      std::sort(edges.begin(), edges.end());
      edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
      return SparsityPattern(n, d, std::move(edges), label);
    }
    case PatternKind::block: {
      if (d > n || n % d != 0) throw InvalidParams("block pattern requires d to divide n");
      std::vector<Edge> edges;
      edges.reserve(n * (d + 1) / 2);
      for (std::size_t start = 0; start < n; start += d) {
        for (std::size_t u = start; u < start + d; ++u) {
          for (std::size_t v = u; v < start + d; ++v) edges.emplace_back(Vertex(u), Vertex(v));
        }
      }
      return SparsityPattern(n, d, std::move(edges), label);
    }
    case PatternKind::random_regular: {
      if (d >= n) throw InvalidParams("random_regular requires 1 <= d < n");
      if ((n * d) % 2 != 0) throw InvalidParams("random_regular requires n*d even");
      CounterStream rng(seed, fnv1a("random_regular"));
      for (std::size_t attempt = 0; attempt < kRandomRegularRetryBudget; ++attempt) {
        if (auto edges = detail::pairing_attempt(n, d, rng)) {
          return SparsityPattern(n, d, std::move(*edges), label);
        }
      }
      throw GenerationFailure("random_regular: no simple pairing after " +
                              std::to_string(kRandomRegularRetryBudget) + " attempts");
    }
  }
  throw InvalidParams("unhandled pattern kind");
}

/// Text format: "N d" header, then one sorted "u v" line per edge (u <= v).
inline void write_pattern(std::ostream& os, const SparsityPattern& p) {
  os << p.n() << ' ' << p.degree() << '\n';
  for (const auto& e : p.edges()) os << e.u << ' ' << e.v << '\n';
}

inline void save_pattern(const std::string& path, const SparsityPattern& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_pattern(out, p);
  if (!out) throw Error("write to '" + path + "' failed");
}

inline SparsityPattern read_pattern(std::istream& in) {
  auto parse_line = [](const std::string& line, std::size_t lineno, unsigned long long& a, unsigned long long& b) {
    std::size_t pos = 0;
    auto field = [&](unsigned long long& out) {
      if (pos >= line.size() || line[pos] < '0' || line[pos] > '9') throw ParseError("expected two integers", lineno);
      out = 0;
      while (pos < line.size() && line[pos] >= '0' && line[pos] <= '9') {
        out = out * 10 + static_cast<unsigned>(line[pos] - '0');
        if (out > (1ULL << 40)) throw ParseError("integer too large", lineno);
        ++pos;
      }
    };
    field(a);
    if (pos >= line.size() || line[pos] != ' ') throw ParseError("expected single space separator", lineno);
    ++pos;
    field(b);
    if (pos != line.size()) throw ParseError("trailing characters", lineno);
  };

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file", 1);
  unsigned long long n = 0, d = 0;
  parse_line(line, 1, n, d);
  if (n == 0 || d == 0) throw ParseError("N and d must be positive", 1);
  if (n > std::numeric_limits<Vertex>::max()) throw ParseError("N too large", 1);

  std::vector<Edge> edges;
  std::vector<std::size_t> degree(n, 0);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    unsigned long long u = 0, v = 0;
    parse_line(line, lineno, u, v);
    if (v >= n) throw ParseError("vertex index " + std::to_string(v) + " out of range", lineno);
    if (u > v) throw ParseError("edge must be written with u <= v", lineno);
    const Edge e{Vertex(u), Vertex(v)};
    if (!edges.empty()) {
      if (e == edges.back()) {
        throw ValidationError("duplicate edge {" + std::to_string(u) + "," + std::to_string(v) + "}", u, lineno);
      }
      if (e < edges.back()) throw ParseError("edges not sorted", lineno);
    }
    edges.push_back(e);
    // Degree overflow is reported at the first line that exceeds d.
    for (auto x : {u, v}) {
      if (++degree[x] > d) {
        throw ValidationError("vertex " + std::to_string(x) + " has degree " + std::to_string(degree[x]) +
                                  " > " + std::to_string(d),
                              x, lineno);
      }
      if (u == v) break;
    }
  }
  SparsityPattern p(n, d, std::move(edges), "file");
  require_valid(p);
  return p;
}

inline SparsityPattern load_pattern(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read_pattern(in);
}

}  // namespace specloc
