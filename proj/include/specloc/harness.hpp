#pragma once

// Experiment orchestration: configs, per-trial records, CSV output and the
// run manifest. Every trial is a pure function of its derived seed, so
// trials run on a worker pool and are written back in (N, d, trial) order.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "specloc/deloc.hpp"
#include "specloc/dyson.hpp"
#include "specloc/errors.hpp"
#include "specloc/patterns.hpp"
#include "specloc/rng.hpp"
#include "specloc/sampler.hpp"
#include "specloc/semicircle.hpp"
#include "specloc/spectral.hpp"
#include "specloc/sphere.hpp"
#include "specloc/subspace.hpp"

namespace specloc {

inline constexpr const char* kVersion = "0.1.0";

enum class Experiment { transition_sweep, norm_phase, esd_check, deloc_construct, sphere_baseline, resolvent_check };

inline std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::transition_sweep: return "transition_sweep";
    case Experiment::norm_phase: return "norm_phase";
    case Experiment::esd_check: return "esd_check";
    case Experiment::deloc_construct: return "deloc_construct";
    case Experiment::sphere_baseline: return "sphere_baseline";
    case Experiment::resolvent_check: return "resolvent_check";
  }
  return "?";
}

inline Experiment experiment_from_string(std::string_view s) {
  for (auto e : {Experiment::transition_sweep, Experiment::norm_phase, Experiment::esd_check,
                 Experiment::deloc_construct, Experiment::sphere_baseline, Experiment::resolvent_check}) {
    if (to_string(e) == s) return e;
  }
  throw InvalidParams("unknown experiment '" + std::string(s) + "'");
}

struct ExperimentConfig {
  Experiment experiment = Experiment::norm_phase;
  PatternKind pattern = PatternKind::random_regular;
  bool no_loops = false;
  std::vector<std::size_t> N_grid{512};
  std::vector<std::size_t> d_grid{8};
  std::size_t trials = 1;
  std::uint64_t base_seed = 0;
  std::optional<double> epsilon;
  double nu = 0.02;
  double kappa = 0.5;
  double gamma = 0.15;
  double delta = 0.027;
  std::size_t n_candidates = kDefaultCandidates;
  std::string output_dir = ".";
  std::size_t dense_cap = kDefaultDenseCap;
  // sphere_baseline
  std::vector<double> nu_grid{0.001, 0.01, 0.1};
  // resolvent_check
  std::pair<double, double> window{1.7, 3.0};
  std::complex<double> z{0.5, 1.0};
  std::size_t n_samples = 50;
  std::size_t quad_points = 64;
  std::size_t esd_bins = 64;
  // Worker count; not part of the resolved config since it cannot change results.
  std::size_t threads = 1;
};

inline void validate_config(const ExperimentConfig& c) {
  auto open01 = [](double v) { return v > 0.0 && v < 1.0; };
  if (c.N_grid.empty()) throw InvalidParams("N_grid must be nonempty");
  if (c.d_grid.empty() && c.experiment != Experiment::sphere_baseline) throw InvalidParams("d_grid must be nonempty");
  if (c.trials < 1) throw InvalidParams("trials must be at least 1");
  if (!open01(c.nu)) throw InvalidParams("nu must lie in (0, 1)");
  if (!open01(c.kappa)) throw InvalidParams("kappa must lie in (0, 1)");
  if (c.epsilon && !(*c.epsilon > 0.0 && *c.epsilon < 2.0)) throw InvalidParams("epsilon must lie in (0, 2)");
  if (!(c.delta > 0.0 && c.delta <= c.gamma && c.gamma <= 1.0)) {
    throw InvalidParams("need 0 < delta <= gamma <= 1");
  }
  if (c.n_candidates < 1) throw InvalidParams("n_candidates must be at least 1");
  if (!(c.window.first < c.window.second)) throw InvalidParams("window must satisfy a < b");
  if (!(c.z.imag() > 0.0)) throw InvalidParams("z must have positive imaginary part");
  if (c.n_samples < 2) throw InvalidParams("n_samples must be at least 2");
  if (c.quad_points < 16) throw InvalidParams("quad_points must be at least 16");
  for (double nu : c.nu_grid) {
    if (!open01(nu)) throw InvalidParams("nu_grid entries must lie in (0, 1)");
  }
  if (c.experiment == Experiment::sphere_baseline && c.nu_grid.empty()) throw InvalidParams("nu_grid must be nonempty");
}

/// Parses a JSON config; every key except "experiment" is optional.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidParams("config must be a JSON object");
  if (!j.contains("experiment")) throw InvalidParams("config is missing \"experiment\"");
  static const std::vector<std::string> known = {
      "experiment", "pattern", "no_loops", "N_grid", "d_grid", "trials", "base_seed", "epsilon", "nu",
      "kappa", "gamma", "delta", "n_candidates", "output_dir", "dense_cap", "nu_grid", "window", "z",
      "n_samples", "quad_points", "esd_bins"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) throw InvalidParams("unknown config key '" + k + "'");
  }
  ExperimentConfig c;
  try {
    c.experiment = experiment_from_string(j.at("experiment").get<std::string>());
    if (j.contains("pattern")) c.pattern = pattern_kind_from_string(j["pattern"].get<std::string>());
    if (j.contains("no_loops")) c.no_loops = j["no_loops"].get<bool>();
    if (j.contains("N_grid")) c.N_grid = j["N_grid"].get<std::vector<std::size_t>>();
    if (j.contains("d_grid")) c.d_grid = j["d_grid"].get<std::vector<std::size_t>>();
    if (j.contains("trials")) c.trials = j["trials"].get<std::size_t>();
    if (j.contains("base_seed")) c.base_seed = j["base_seed"].get<std::uint64_t>();
    if (j.contains("epsilon") && !j["epsilon"].is_null()) c.epsilon = j["epsilon"].get<double>();
    if (j.contains("nu")) c.nu = j["nu"].get<double>();
    if (j.contains("kappa")) c.kappa = j["kappa"].get<double>();
    if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
    if (j.contains("delta")) c.delta = j["delta"].get<double>();
    if (j.contains("n_candidates")) c.n_candidates = j["n_candidates"].get<std::size_t>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("dense_cap")) c.dense_cap = j["dense_cap"].get<std::size_t>();
    if (j.contains("nu_grid")) c.nu_grid = j["nu_grid"].get<std::vector<double>>();
    if (j.contains("window")) {
      const auto w = j["window"].get<std::vector<double>>();
      if (w.size() != 2) throw InvalidParams("window must be [a, b]");
      c.window = {w[0], w[1]};
    }
    if (j.contains("z")) {
      const auto z = j["z"].get<std::vector<double>>();
      if (z.size() != 2) throw InvalidParams("z must be [re, im]");
      c.z = {z[0], z[1]};
    }
    if (j.contains("n_samples")) c.n_samples = j["n_samples"].get<std::size_t>();
    if (j.contains("quad_points")) c.quad_points = j["quad_points"].get<std::size_t>();
    if (j.contains("esd_bins")) c.esd_bins = j["esd_bins"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParams(std::string("bad config value: ") + e.what());
  }
  validate_config(c);
  return c;
}

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["experiment"] = to_string(c.experiment);
  j["pattern"] = to_string(c.pattern);
  j["no_loops"] = c.no_loops;
  j["N_grid"] = c.N_grid;
  j["d_grid"] = c.d_grid;
  j["trials"] = c.trials;
  j["base_seed"] = c.base_seed;
  j["epsilon"] = c.epsilon ? nlohmann::ordered_json(*c.epsilon) : nlohmann::ordered_json(nullptr);
  j["nu"] = c.nu;
  j["kappa"] = c.kappa;
  j["gamma"] = c.gamma;
  j["delta"] = c.delta;
  j["n_candidates"] = c.n_candidates;
  j["output_dir"] = c.output_dir;
  j["dense_cap"] = c.dense_cap;
  j["nu_grid"] = c.nu_grid;
  j["window"] = {c.window.first, c.window.second};
  j["z"] = {c.z.real(), c.z.imag()};
  j["n_samples"] = c.n_samples;
  j["quad_points"] = c.quad_points;
  j["esd_bins"] = c.esd_bins;
  return j;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParams("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParams("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

// Seeds ----------------------------------------------------------------------

/// seed = mix_seed(base, {fnv1a(experiment), N, d, trial}).
inline std::uint64_t derive_trial_seed(std::uint64_t base, std::string_view experiment, std::size_t n, std::size_t d,
                                       std::size_t trial) {
  return mix_seed(base, {fnv1a(experiment), n, d, trial});
}

inline std::uint64_t substream_seed(std::uint64_t trial_seed, std::string_view purpose) {
  return mix_seed(trial_seed, {fnv1a(purpose)});
}

/// Degree actually used for a kind: complete and diagonal patterns force it.
inline std::size_t effective_degree(PatternKind kind, std::size_t n, std::size_t d, bool no_loops) {
  switch (kind) {
    case PatternKind::complete: return no_loops ? n - 1 : n;
    case PatternKind::diagonal: return 1;
    default: return d;
  }
}

// Records --------------------------------------------------------------------

struct TrialRecord {
  std::string experiment;
  std::size_t N = 0;
  std::size_t d = 0;
  std::string pattern;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> values;
  std::string error;

  void set(const std::string& key, double v) {
    for (auto& kv : values) {
      if (kv.first == key) {
        kv.second = v;
        return;
      }
    }
    values.emplace_back(key, v);
  }
  std::optional<double> get(const std::string& key) const {
    for (const auto& kv : values) {
      if (kv.first == key) return kv.second;
    }
    return std::nullopt;
  }
};

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

/// Header "experiment,N,d,pattern,trial,seed,<columns>,error"; absent values
/// are left empty.
inline void write_records_csv(std::ostream& os, const std::vector<std::string>& columns,
                              const std::vector<TrialRecord>& records) {
  os << "experiment,N,d,pattern,trial,seed";
  for (const auto& c : columns) os << ',' << c;
  os << ",error\n";
  for (const auto& r : records) {
    os << r.experiment << ',' << r.N << ',' << r.d << ',' << r.pattern << ',' << r.trial << ',' << r.seed;
    for (const auto& c : columns) {
      os << ',';
      if (auto v = r.get(c)) os << format_number(*v);
    }
    os << ',' << csv_escape(r.error) << '\n';
  }
}

struct SummaryTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

inline void write_summary_csv(std::ostream& os, const SummaryTable& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {std::nan(""), std::nan("")};
  double s = 0.0;
  for (double x : v) s += x;
  const double mean = s / double(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double q = 0.0;
  for (double x : v) q += (x - mean) * (x - mean);
  return {mean, std::sqrt(q / double(v.size() - 1))};
}

// Worker pool ------------------------------------------------------------------

/// SPECLOC_THREADS overrides the requested count; at least one worker.
inline std::size_t resolve_threads(std::size_t requested) {
  if (const char* env = std::getenv("SPECLOC_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return std::size_t(v);
  }
  return std::max<std::size_t>(1, requested);
}

/// Runs job(i) for i in [0, count) on `threads` workers.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& job) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Trials -----------------------------------------------------------------------

struct TrialKey {
  std::size_t N;
  std::size_t d;  // effective degree
  std::size_t trial;
};

inline std::vector<TrialKey> trial_grid(const ExperimentConfig& c) {
  std::vector<TrialKey> keys;
  std::vector<std::size_t> ds = c.d_grid;
  if (ds.empty()) ds = {0};
  for (std::size_t n : c.N_grid) {
    std::vector<std::size_t> seen;
    for (std::size_t d : ds) {
      const std::size_t de = c.experiment == Experiment::sphere_baseline ? 0 : effective_degree(c.pattern, n, d, c.no_loops);
      if (std::find(seen.begin(), seen.end(), de) != seen.end()) continue;
      seen.push_back(de);
      for (std::size_t t = 0; t < c.trials; ++t) keys.push_back({n, de, t});
    }
  }
  return keys;
}

inline GaussianSparseMatrix trial_matrix(const ExperimentConfig& c, const TrialKey& k, std::uint64_t seed) {
  auto pattern = std::make_shared<const SparsityPattern>(
      generate_pattern(c.pattern, k.N, k.d, substream_seed(seed, "pattern"), PatternOptions{c.no_loops}));
  return sample_matrix(std::move(pattern), substream_seed(seed, "matrix"));
}

inline double top_mass(std::span<const double> v, double L) {
  return rearrangement_norm(v, std::clamp(std::floor(L), 1.0, double(v.size())));
}

inline void fill_transition(const ExperimentConfig& c, const GaussianSparseMatrix& m, std::uint64_t seed,
                            TrialRecord& r) {
  const double n = double(m.n());
  const double norm = operator_norm(m, 1e-10, c.dense_cap, substream_seed(seed, "lanczos"));
  r.set("norm", norm);
  r.set("norm_over_sqrt_d", norm / std::sqrt(double(m.degree())));
  SpectralOptions so;
  so.dense_cap = c.dense_cap;
  so.seed = substream_seed(seed, "lanczos");
  const auto top = top_eigenpair(m, so);
  const Eigen::VectorXd v = top.eigenvectors->col(0);
  const std::span<const double> vs(v.data(), std::size_t(v.size()));
  r.set("top_eigenvalue", top.eigenvalues[0]);
  const double w = top_mass(vs, c.nu * n);
  r.set("top_witness", w);
  r.set("top_witness_sq", w * w);
  const double w1 = top_mass(vs, 0.01 * n);
  r.set("top_mass_sq_1pct", w1 * w1);
  const double wd = top_mass(vs, double(m.degree()));
  r.set("top_mass_sq_d", wd * wd);

  r.set("epsilon_default", default_edge_epsilon(m.n(), m.degree()));
  ConstructionOptions co;
  co.epsilon = c.epsilon;
  co.dense_cap = c.dense_cap;
  const auto built =
      construct_delocalized_candidate(m, c.nu, c.kappa, c.n_candidates, substream_seed(seed, "construct"), co);
  const auto& rep = built.report;
  r.set("epsilon_used", rep.epsilon_used);
  r.set("m", double(rep.m));
  r.set("chosen_q", rep.chosen_q);
  r.set("ratio", rep.ratio_achieved);
  r.set("kappa_achieved", rep.kappa_achieved);
  r.set("delocalized", rep.kappa_achieved <= c.kappa ? 1.0 : 0.0);
  r.set("proj_diag_max", rep.proj_diag_max);
  r.set("proj_diag_min", rep.proj_diag_min);
  r.set("proj_diag_max_over_mean", rep.proj_diag_max * n / double(rep.m));
  const double cd = top_mass(built.vector, double(m.degree()));
  r.set("constructed_mass_sq_d", cd * cd);
}

inline const std::vector<std::string>& record_columns(Experiment e) {
  static const std::map<Experiment, std::vector<std::string>> cols = {
      {Experiment::transition_sweep,
       {"norm", "norm_over_sqrt_d", "top_eigenvalue", "top_witness", "top_witness_sq", "top_mass_sq_1pct",
        "top_mass_sq_d", "epsilon_default", "epsilon_used", "m", "chosen_q", "ratio", "kappa_achieved",
        "delocalized", "proj_diag_max", "proj_diag_min", "proj_diag_max_over_mean", "constructed_mass_sq_d"}},
      {Experiment::deloc_construct,
       {"norm", "norm_over_sqrt_d", "top_eigenvalue", "top_witness", "top_witness_sq", "top_mass_sq_1pct",
        "top_mass_sq_d", "epsilon_default", "epsilon_used", "m", "chosen_q", "ratio", "kappa_achieved",
        "delocalized", "proj_diag_max", "proj_diag_min", "proj_diag_max_over_mean", "constructed_mass_sq_d"}},
      {Experiment::norm_phase, {"norm", "norm_over_sqrt_d", "norm_over_sqrt_2logN"}},
      {Experiment::esd_check, {"ks", "top_eigenvalue", "bottom_eigenvalue"}},
      {Experiment::sphere_baseline, {}},
      {Experiment::resolvent_check,
       {"m", "quad_error", "sandwich_holds", "upper_gap", "lower_gap", "bracket_upper", "bracket_lower",
        "exact_max", "exact_min", "bracket_upper_holds", "bracket_lower_holds", "diag_deviation"}},
  };
  return cols.at(e);
}

inline void run_trial(const ExperimentConfig& c, const TrialKey& k, TrialRecord& r) {
  const std::uint64_t seed = r.seed;
  const double n = double(k.N);
  const auto m = trial_matrix(c, k, seed);
  switch (c.experiment) {
    case Experiment::transition_sweep:
    case Experiment::deloc_construct:
      fill_transition(c, m, seed, r);
      break;
    case Experiment::norm_phase: {
      const double norm = operator_norm(m, 1e-10, c.dense_cap, substream_seed(seed, "lanczos"));
      r.set("norm", norm);
      r.set("norm_over_sqrt_d", norm / std::sqrt(double(k.d)));
      r.set("norm_over_sqrt_2logN", norm / std::sqrt(2.0 * std::log(n)));
      break;
    }
    case Experiment::esd_check: {
      if (k.N > c.dense_cap) throw CapExceeded("esd_check requires N <= dense_cap");
      SpectralOptions so;
      so.vectors = false;
      so.dense_cap = c.dense_cap;
      const auto s = full_spectrum(m, so);
      const auto h = esd_histogram(s, c.esd_bins);
      r.set("ks", h.ks_semicircle);
      r.set("top_eigenvalue", s.eigenvalues[0]);
      r.set("bottom_eigenvalue", s.eigenvalues[s.eigenvalues.size() - 1]);
      break;
    }
    case Experiment::resolvent_check: {
      const auto [a, b] = c.window;
      const auto exact = eigenspace(m, a, b, c.dense_cap);
      const auto pd = projection_diag(exact);
      r.set("m", double(exact.dim()));
      const auto sw = resolvent_projection_diag(m, a, b, c.gamma, c.delta, c.quad_points, c.dense_cap);
      r.set("quad_error", sw.quad_error);
      double up = std::numeric_limits<double>::infinity(), lo = up;
      for (std::size_t x = 0; x < pd.size(); ++x) {
        up = std::min(up, sw.upper[x] - pd[x]);
        lo = std::min(lo, pd[x] - sw.lower[x]);
      }
      r.set("upper_gap", up);
      r.set("lower_gap", lo);
      r.set("sandwich_holds", up >= -sw.quad_error && lo >= -sw.quad_error ? 1.0 : 0.0);
      if (a >= 0.0 && b <= 3.0 && c.gamma <= 1.0) {
        const auto pe = projection_estimate_check(m, a, b, c.gamma, c.delta, c.dense_cap, c.quad_points);
        r.set("bracket_upper", pe.upper_bracket);
        r.set("bracket_lower", pe.lower_bracket);
        r.set("exact_max", pe.exact_max);
        r.set("exact_min", pe.exact_min);
        r.set("bracket_upper_holds", pe.upper_holds ? 1.0 : 0.0);
        r.set("bracket_lower_holds", pe.lower_holds ? 1.0 : 0.0);
      }
      ResolventOptions ro;
      ro.dense_cap = c.dense_cap;
      const auto g = resolvent_diag(m, c.z, ro);
      const auto target = msc(c.z);
      double dev = 0.0;
      for (const auto& gx : g) dev = std::max(dev, std::abs(gx - target));
      r.set("diag_deviation", dev);
      break;
    }
    case Experiment::sphere_baseline:
      break;
  }
}

struct RunResult {
  std::vector<TrialRecord> records;
  SummaryTable summary;
  std::vector<std::string> columns;
  std::size_t failures = 0;
};

namespace detail {

inline std::vector<double> collect(const std::vector<TrialRecord>& recs, const std::string& key) {
  std::vector<double> out;
  for (const auto& r : recs) {
    if (auto v = r.get(key)) out.push_back(*v);
  }
  return out;
}

inline SummaryTable summarize(const ExperimentConfig& c, const std::vector<TrialRecord>& records) {
  SummaryTable t;
  std::vector<std::vector<TrialRecord>> groups;
  for (const auto& r : records) {
    if (groups.empty() || groups.back().front().N != r.N || groups.back().front().d != r.d) groups.emplace_back();
    groups.back().push_back(r);
  }
  auto base = [](const std::vector<TrialRecord>& g) {
    std::size_t failures = 0;
    for (const auto& r : g) failures += r.error.empty() ? 0 : 1;
    return std::vector<std::string>{std::to_string(g.front().N), std::to_string(g.front().d), g.front().pattern,
                                    std::to_string(g.size()), std::to_string(failures)};
  };
  std::vector<std::string> head = {"N", "d", "pattern", "trials", "failures"};
  auto fmt = [](double v) { return format_number(v); };
  switch (c.experiment) {
    case Experiment::transition_sweep:
    case Experiment::deloc_construct:
      t.columns = head;
      for (auto s : {"d_over_logN", "median_norm_over_sqrt_d", "median_top_witness_sq", "median_top_mass_sq_1pct",
                     "median_ratio", "median_kappa_achieved", "deloc_fraction", "median_m"}) {
        t.columns.push_back(s);
      }
      for (const auto& g : groups) {
        auto row = base(g);
        row.push_back(fmt(double(g.front().d) / std::log(double(g.front().N))));
        for (auto key : {"norm_over_sqrt_d", "top_witness_sq", "top_mass_sq_1pct", "ratio", "kappa_achieved"}) {
          row.push_back(fmt(median(collect(g, key))));
        }
        row.push_back(fmt(mean_std(collect(g, "delocalized")).first));
        row.push_back(fmt(median(collect(g, "m"))));
        t.rows.push_back(std::move(row));
      }
      break;
    case Experiment::norm_phase:
      t.columns = head;
      for (auto s : {"mean_norm", "std_norm", "mean_norm_over_sqrt_d", "mean_norm_over_sqrt_2logN"}) {
        t.columns.push_back(s);
      }
      for (const auto& g : groups) {
        auto row = base(g);
        const auto [mean, sd] = mean_std(collect(g, "norm"));
        row.push_back(fmt(mean));
        row.push_back(fmt(sd));
        row.push_back(fmt(mean_std(collect(g, "norm_over_sqrt_d")).first));
        row.push_back(fmt(mean_std(collect(g, "norm_over_sqrt_2logN")).first));
        t.rows.push_back(std::move(row));
      }
      break;
    case Experiment::esd_check:
      t.columns = head;
      t.columns.push_back("median_ks");
      for (const auto& g : groups) {
        auto row = base(g);
        row.push_back(fmt(median(collect(g, "ks"))));
        t.rows.push_back(std::move(row));
      }
      break;
    case Experiment::resolvent_check:
      t.columns = head;
      for (auto s : {"sandwich_pass", "bracket_upper_pass", "bracket_lower_pass", "dyson_max_deviation",
                     "dyson_mc_std", "dyson_bound", "dyson_holds"}) {
        t.columns.push_back(s);
      }
      for (const auto& g : groups) {
        auto row = base(g);
        for (auto key : {"sandwich_holds", "bracket_upper_holds", "bracket_lower_holds"}) {
          double s = 0.0;
          for (double v : collect(g, key)) s += v;
          row.push_back(fmt(s));
        }
        try {
          const TrialKey k{g.front().N, g.front().d, 0};
          const std::uint64_t seed = derive_trial_seed(c.base_seed, "resolvent_check/dyson", k.N, k.d, 0);
          const auto m = trial_matrix(c, k, seed);
          ResolventOptions ro;
          ro.dense_cap = c.dense_cap;
          const auto dr = dyson_residual_check(m, c.z, c.n_samples, substream_seed(seed, "dyson"), ro);
          row.push_back(fmt(dr.max_deviation));
          row.push_back(fmt(dr.mc_std));
          row.push_back(fmt(dr.bound));
          row.push_back(dr.holds ? "1" : "0");
        } catch (const std::exception&) {
          for (int i = 0; i < 4; ++i) row.push_back("");
        }
        t.rows.push_back(std::move(row));
      }
      break;
    case Experiment::sphere_baseline:
      break;
  }
  return t;
}

inline RunResult run_sphere(const ExperimentConfig& c) {
  RunResult out;
  out.summary.columns = {"n", "nu", "deloc_probability", "mean_norm_sq", "std_norm_sq", "normalized_mean_norm_sq"};
  for (std::size_t n : c.N_grid) {
    const std::uint64_t seed = derive_trial_seed(c.base_seed, "sphere_baseline", n, 0, 0);
    const auto res = sphere_deloc_probability(n, c.kappa, c.nu_grid, c.trials, seed);
    for (std::size_t i = 0; i < res.nu_grid.size(); ++i) {
      const double nu = res.nu_grid[i];
      out.summary.rows.push_back({std::to_string(n), format_number(nu), format_number(res.deloc_probability[i]),
                                  format_number(res.mean_norm_sq[i]), format_number(res.std_norm_sq[i]),
                                  format_number(res.mean_norm_sq[i] / (nu * std::log(std::exp(1.0) / nu)))});
    }
  }
  return out;
}

}  // namespace detail

/// Runs every (N, d, trial) of the grid; failed trials keep the values
/// computed before the failure and carry the error message.
inline RunResult run_experiment(const ExperimentConfig& c) {
  validate_config(c);
  if (c.experiment == Experiment::sphere_baseline) return detail::run_sphere(c);
  const auto keys = trial_grid(c);
  const std::string exp(to_string(c.experiment));
  RunResult out;
  out.columns = record_columns(c.experiment);
  out.records.resize(keys.size());
  parallel_for(keys.size(), resolve_threads(c.threads), [&](std::size_t i) {
    const auto& k = keys[i];
    auto& r = out.records[i];
    r.experiment = exp;
    r.N = k.N;
    r.d = k.d;
    r.pattern = std::string(to_string(c.pattern));
    r.trial = k.trial;
    r.seed = derive_trial_seed(c.base_seed, exp, k.N, k.d, k.trial);
    try {
      run_trial(c, k, r);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  });
  for (const auto& r : out.records) out.failures += r.error.empty() ? 0 : 1;
  out.summary = detail::summarize(c, out.records);
  return out;
}

inline RunResult run_transition_sweep(ExperimentConfig c) {
  c.experiment = Experiment::transition_sweep;
  return run_experiment(c);
}
inline RunResult run_norm_phase(ExperimentConfig c) {
  c.experiment = Experiment::norm_phase;
  return run_experiment(c);
}
inline RunResult run_esd_check(ExperimentConfig c) {
  c.experiment = Experiment::esd_check;
  return run_experiment(c);
}

// Persistence ------------------------------------------------------------------

inline void write_json_file(const std::filesystem::path& p, const nlohmann::ordered_json& j) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write '" + p.string() + "'");
  os << j.dump(2) << '\n';
}

/// Writes <exp>.csv (per trial), <exp>_summary.csv, <exp>.config.json and
/// <exp>.manifest.json into output_dir. Returns the written paths.
inline std::vector<std::filesystem::path> write_run(const ExperimentConfig& c, const RunResult& r,
                                                    double wall_clock_seconds) {
  namespace fs = std::filesystem;
  const fs::path dir(c.output_dir);
  fs::create_directories(dir);
  const std::string exp(to_string(c.experiment));
  std::vector<fs::path> written;
  if (c.experiment != Experiment::sphere_baseline) {
    const auto p = dir / (exp + ".csv");
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error("cannot write '" + p.string() + "'");
    write_records_csv(os, r.columns, r.records);
    written.push_back(p);
  }
  {
    const auto p = dir / (exp + (c.experiment == Experiment::sphere_baseline ? ".csv" : "_summary.csv"));
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error("cannot write '" + p.string() + "'");
    write_summary_csv(os, r.summary);
    written.push_back(p);
  }
  const auto cfg_path = dir / (exp + ".config.json");
  write_json_file(cfg_path, config_to_json(c));
  written.push_back(cfg_path);

  nlohmann::ordered_json m;
  m["experiment"] = exp;
  m["code_version"] = std::string("specloc ") + kVersion;
  m["config"] = config_to_json(c);
  m["records"] = r.records.size();
  m["failures"] = r.failures;
  nlohmann::ordered_json outs = nlohmann::ordered_json::array();
  for (const auto& p : written) outs.push_back(p.filename().string());
  m["outputs"] = outs;
  m["wall_clock_seconds"] = wall_clock_seconds;
  const auto man = dir / (exp + ".manifest.json");
  write_json_file(man, m);
  written.push_back(man);
  return written;
}

/// run_experiment + write_run, timing the run for the manifest.
inline RunResult run_and_write(const ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  auto r = run_experiment(c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run(c, r, secs);
  return r;
}

}  // namespace specloc
