// specloc command-line interface.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "specloc/specloc.hpp"

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A flag bound to a variable that can also be filled from a JSON config and
// reported in the resolved config.
struct Param {
  std::string key;
  CLI::Option* opt;
  std::function<void(const json&)> load;
  std::function<ojson()> dump;
};

template <class T>
struct is_optional : std::false_type {};
template <class T>
struct is_optional<std::optional<T>> : std::true_type {};

class Registry {
 public:
  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& flag, T& var, const std::string& desc) {
    auto* opt = app->add_option(flag, var, desc);
    push(app, flag, opt, var);
    return opt;
  }
  CLI::Option* add_flag(CLI::App* app, const std::string& flag, bool& var, const std::string& desc) {
    auto* opt = app->add_flag(flag, var, desc);
    push(app, flag, opt, var);
    return opt;
  }

  // Config values fill only flags that were not given on the command line.
  void apply(const CLI::App* app, const json& cfg) const {
    for (const auto& [owner, p] : params_) {
      if (owner != app || p.opt->count() > 0 || !cfg.contains(p.key)) continue;
      try {
        p.load(cfg.at(p.key));
      } catch (const json::exception& e) {
        throw UsageError("config key '" + p.key + "': " + e.what());
      }
    }
  }
  void check_keys(const std::vector<const CLI::App*>& apps, const json& cfg) const {
    for (const auto& [k, v] : cfg.items()) {
      bool found = false;
      for (const auto& [owner, p] : params_) {
        if (p.key == k && std::find(apps.begin(), apps.end(), owner) != apps.end()) found = true;
      }
      if (!found) throw UsageError("unknown config key '" + k + "'");
    }
  }
  ojson resolved(const std::vector<const CLI::App*>& apps) const {
    ojson j;
    for (const auto* app : apps) {
      for (const auto& [owner, p] : params_) {
        if (owner == app) j[p.key] = p.dump();
      }
    }
    return j;
  }

 private:
  template <class T>
  void push(CLI::App* app, const std::string& flag, CLI::Option* opt, T& var) {
    std::string key = flag;
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    for (char& c : key) {
      if (c == '-') c = '_';
    }
    T* ptr = &var;
    Param p{key, opt, {}, {}};
    if constexpr (is_optional<T>::value) {
      using V = typename T::value_type;
      p.load = [ptr](const json& j) { *ptr = j.is_null() ? T{} : T{j.get<V>()}; };
      p.dump = [ptr] { return *ptr ? ojson(**ptr) : ojson(nullptr); };
    } else {
      p.load = [ptr](const json& j) { *ptr = j.get<T>(); };
      p.dump = [ptr] { return ojson(*ptr); };
    }
    params_.emplace_back(app, std::move(p));
  }

  std::vector<std::pair<const CLI::App*, Param>> params_;
};

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  std::size_t threads = 1;
  std::string config;
};

struct MatrixSource {
  std::string pattern_file;
  std::string kind = "random_regular";
  std::size_t n = 0;
  std::size_t d = 0;
  bool no_loops = false;
};

void add_matrix_flags(Registry& reg, CLI::App* app, MatrixSource& src) {
  reg.add(app, "--pattern", src.pattern_file, "Pattern file (overrides --kind/--n/--d)");
  reg.add(app, "--kind", src.kind, "complete|diagonal|band|block|random_regular");
  reg.add(app, "--n", src.n, "Dimension N");
  reg.add(app, "--d", src.d, "Degree d");
  reg.add_flag(app, "--no-loops", src.no_loops, "Complete pattern without self-loops");
}

std::shared_ptr<const specloc::SparsityPattern> make_pattern(const MatrixSource& src, std::uint64_t seed) {
  if (!src.pattern_file.empty()) {
    return std::make_shared<const specloc::SparsityPattern>(specloc::load_pattern(src.pattern_file));
  }
  if (src.n == 0) throw UsageError("either --pattern or --n (with --kind and --d) is required");
  const auto kind = specloc::pattern_kind_from_string(src.kind);
  const std::size_t d = specloc::effective_degree(kind, src.n, src.d, src.no_loops);
  if (d == 0) throw UsageError("--d is required for kind " + src.kind);
  return std::make_shared<const specloc::SparsityPattern>(
      specloc::generate_pattern(kind, src.n, d, seed, specloc::PatternOptions{src.no_loops}));
}

// Writes to --out when given, otherwise to stdout.
template <class F>
void emit(const std::string& out, F&& write) {
  if (out.empty()) {
    write(std::cout);
    return;
  }
  if (auto parent = fs::path(out).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream os(out, std::ios::binary);
  if (!os) throw specloc::Error("cannot write '" + out + "'");
  write(os);
}

void write_sidecar(const std::string& out, const std::string& command, ojson resolved) {
  if (out.empty()) return;
  ojson j;
  j["command"] = command;
  j["version"] = specloc::kVersion;
  for (auto& [k, v] : resolved.items()) j[k] = v;
  std::ofstream os(out + ".config.json", std::ios::binary);
  if (!os) throw specloc::Error("cannot write '" + out + ".config.json'");
  os << j.dump(2) << '\n';
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  try {
    json j;
    in >> j;
    if (!j.is_object()) throw UsageError("config file '" + path + "' must hold a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + std::string(e.what()));
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Sparse Gaussian random matrices: spectra, eigenvector delocalization and experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string("specloc ") + specloc::kVersion);

  Registry reg;
  Globals g;
  reg.add(&app, "--seed", g.seed, "Base seed");
  reg.add(&app, "--out", g.out, "Output path (directory for sweep)");
  reg.add(&app, "--threads", g.threads, "Worker threads (SPECLOC_THREADS overrides)");
  app.add_option("--config", g.config, "JSON config; flags given on the command line take precedence");

  // pattern gen | validate
  auto* pattern = app.add_subcommand("pattern", "Generate or validate sparsity patterns");
  pattern->require_subcommand(1);
  auto* pgen = pattern->add_subcommand("gen", "Generate a d-regular pattern");
  MatrixSource pg;
  reg.add(pgen, "--kind", pg.kind, "complete|diagonal|band|block|random_regular");
  reg.add(pgen, "--n", pg.n, "Dimension N");
  reg.add(pgen, "--d", pg.d, "Degree d");
  reg.add_flag(pgen, "--no-loops", pg.no_loops, "Complete pattern without self-loops");
  auto* pval = pattern->add_subcommand("validate", "Check a pattern file");
  std::string validate_file;
  reg.add(pval, "file", validate_file, "Pattern file")->required();

  auto* sample = app.add_subcommand("sample", "Sample a matrix and dump its entries");
  MatrixSource ss;
  add_matrix_flags(reg, sample, ss);

  auto* spectrum = app.add_subcommand("spectrum", "Eigenvalues of d^{-1/2} X");
  MatrixSource sp;
  add_matrix_flags(reg, spectrum, sp);
  std::string sp_mode = "full";
  double sp_a = 0.0, sp_b = 3.0;
  std::size_t sp_k = 1, sp_bins = 64, sp_cap = specloc::kDefaultDenseCap;
  bool sp_unscaled = false;
  std::string sp_vectors, sp_esd;
  reg.add(spectrum, "--mode", sp_mode, "full|top|extreme|interval")
      ->check(CLI::IsMember({"full", "top", "extreme", "interval"}));
  reg.add(spectrum, "--a", sp_a, "Window lower end (interval mode)");
  reg.add(spectrum, "--b", sp_b, "Window upper end (interval mode)");
  reg.add(spectrum, "--k", sp_k, "Pairs per end (extreme mode)");
  reg.add_flag(spectrum, "--unscaled", sp_unscaled, "Use X instead of d^{-1/2} X");
  reg.add(spectrum, "--dense-cap", sp_cap, "Largest N for dense routines");
  reg.add(spectrum, "--vectors-out", sp_vectors, "Binary eigenvector dump");
  reg.add(spectrum, "--esd-out", sp_esd, "ESD histogram JSON (full mode)");
  reg.add(spectrum, "--bins", sp_bins, "Histogram bins");

  auto* sweep = app.add_subcommand("sweep", "Run an experiment from a JSON config");

  auto* construct = app.add_subcommand("construct", "Delocalized approximate top eigenvector");
  MatrixSource cs;
  add_matrix_flags(reg, construct, cs);
  double c_nu = 0.02, c_kappa = 0.5;
  std::optional<double> c_eps;
  std::size_t c_cand = specloc::kDefaultCandidates, c_cap = specloc::kDefaultDenseCap;
  std::string c_vec;
  reg.add(construct, "--nu", c_nu, "Fraction nu; L = floor(nu N)");
  reg.add(construct, "--kappa", c_kappa, "Delocalization level kappa");
  reg.add(construct, "--epsilon", c_eps, "Window [2 - epsilon, 3]; default (log N / d)^{1/17}");
  reg.add(construct, "--n-candidates", c_cand, "Candidates drawn");
  reg.add(construct, "--dense-cap", c_cap, "Largest N for dense routines");
  reg.add(construct, "--vector-out", c_vec, "CSV of the chosen vector");

  auto* sphere = app.add_subcommand("sphere", "Uniform sphere delocalization baseline");
  std::size_t s_n = 10000, s_trials = 200;
  double s_kappa = 0.3;
  std::vector<double> s_nu{0.001, 0.01, 0.1};
  reg.add(sphere, "--n", s_n, "Dimension n");
  reg.add(sphere, "--kappa", s_kappa, "Delocalization level kappa");
  reg.add(sphere, "--nu-grid", s_nu, "Fractions nu")->delimiter(',');
  reg.add(sphere, "--trials", s_trials, "Monte Carlo trials");

  auto* rcheck = app.add_subcommand("resolvent-check", "Resolvent sandwich, brackets and Dyson residual");
  MatrixSource rs;
  add_matrix_flags(reg, rcheck, rs);
  double r_a = 1.7, r_b = 3.0, r_gamma = 0.15, r_delta = 0.027, r_zre = 0.5, r_zim = 1.0;
  std::size_t r_qp = 64, r_samples = 0, r_cap = specloc::kDefaultDenseCap;
  std::string r_diag;
  reg.add(rcheck, "--a", r_a, "Window lower end");
  reg.add(rcheck, "--b", r_b, "Window upper end");
  reg.add(rcheck, "--gamma", r_gamma, "Window padding gamma");
  reg.add(rcheck, "--delta", r_delta, "Strip height delta");
  reg.add(rcheck, "--quad-points", r_qp, "Gauss-Legendre nodes per panel");
  reg.add(rcheck, "--z-re", r_zre, "Re z for the Dyson residual");
  reg.add(rcheck, "--z-im", r_zim, "Im z for the Dyson residual");
  reg.add(rcheck, "--samples", r_samples, "Dyson samples (0 skips the check)");
  reg.add(rcheck, "--dense-cap", r_cap, "Largest N for dense routines");
  reg.add(rcheck, "--diag-out", r_diag, "CSV x,lower,exact,upper");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  std::vector<const CLI::App*> chain{&app};
  for (const CLI::App* cur = &app; !cur->get_subcommands().empty();) {
    cur = cur->get_subcommands().front();
    chain.push_back(cur);
  }
  const CLI::App* leaf = chain.back();
  std::string command;
  for (std::size_t i = 1; i < chain.size(); ++i) command += (i > 1 ? " " : "") + chain[i]->get_name();

  if (leaf == sweep) {
    if (g.config.empty()) throw UsageError("sweep requires --config");
    auto cfg = specloc::load_config(g.config);
    if (!g.out.empty()) cfg.output_dir = g.out;
    if (app.get_option("--seed")->count() > 0) cfg.base_seed = g.seed;
    cfg.threads = g.threads;
    const auto r = specloc::run_and_write(cfg);
    std::cerr << "sweep " << specloc::to_string(cfg.experiment) << ": " << r.records.size() << " records, "
              << r.failures << " failures -> " << cfg.output_dir << '\n';
    return 0;
  }

  if (!g.config.empty()) {
    const auto cfg = read_json_file(g.config);
    reg.check_keys(chain, cfg);
    for (const auto* a : chain) reg.apply(a, cfg);
  }
  const auto resolved = reg.resolved(chain);

  if (leaf == pgen) {
    if (pg.n == 0) throw UsageError("pattern gen requires --n");
    const auto kind = specloc::pattern_kind_from_string(pg.kind);
    const std::size_t d = specloc::effective_degree(kind, pg.n, pg.d, pg.no_loops);
    if (d == 0) throw UsageError("--d is required for kind " + pg.kind);
    const auto p = specloc::generate_pattern(kind, pg.n, d, g.seed, specloc::PatternOptions{pg.no_loops});
    emit(g.out, [&](std::ostream& os) { specloc::write_pattern(os, p); });
  } else if (leaf == pval) {
    const auto p = specloc::load_pattern(validate_file);
    std::cout << "ok: N=" << p.n() << " d=" << p.degree() << " edges=" << p.edge_count() << '\n';
  } else if (leaf == sample) {
    const auto m = specloc::sample_matrix(make_pattern(ss, g.seed), g.seed);
    emit(g.out, [&](std::ostream& os) { specloc::write_matrix_dump(os, m); });
  } else if (leaf == spectrum) {
    const auto m = specloc::sample_matrix(make_pattern(sp, g.seed), g.seed);
    specloc::SpectralOptions so;
    so.scaled = !sp_unscaled;
    so.vectors = !sp_vectors.empty();
    so.dense_cap = sp_cap;
    so.seed = g.seed;
    specloc::SpectralData s;
    if (sp_mode == "full") {
      s = specloc::full_spectrum(m, so);
    } else if (sp_mode == "top") {
      s = specloc::top_eigenpair(m, so);
    } else if (sp_mode == "extreme") {
      s = specloc::extreme_eigenpairs(m, sp_k, 1e-10, so);
    } else {
      s = specloc::eigenpairs_in_interval(m, sp_a, sp_b, so);
    }
    emit(g.out, [&](std::ostream& os) { specloc::write_spectrum_csv(os, s); });
    if (!sp_vectors.empty()) {
      if (!s.eigenvectors) throw specloc::Error("no eigenvectors computed");
      emit(sp_vectors, [&](std::ostream& os) { specloc::write_eigenvectors_binary(os, *s.eigenvectors); });
    }
    if (!sp_esd.empty()) {
      if (sp_mode != "full") throw UsageError("--esd-out needs --mode full");
      const auto h = specloc::esd_histogram(s, sp_bins);
      ojson j;
      j["n_eigenvalues"] = h.n_eigenvalues;
      j["ks_semicircle"] = h.ks_semicircle;
      j["bin_edges"] = h.bin_edges;
      j["masses"] = h.masses;
      emit(sp_esd, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }
  } else if (leaf == construct) {
    const auto m = specloc::sample_matrix(make_pattern(cs, g.seed), g.seed);
    specloc::ConstructionOptions co;
    co.epsilon = c_eps;
    co.dense_cap = c_cap;
    const auto built = specloc::construct_delocalized_candidate(m, c_nu, c_kappa, c_cand, g.seed, co);
    emit(g.out, [&](std::ostream& os) { os << specloc::to_json(built.report).dump(2) << '\n'; });
    if (!c_vec.empty()) {
      emit(c_vec, [&](std::ostream& os) {
        os << "x,v\n";
        for (std::size_t x = 0; x < built.vector.size(); ++x) {
          os << x << ',' << specloc::format_number(built.vector[x]) << '\n';
        }
      });
    }
  } else if (leaf == sphere) {
    const auto r = specloc::sphere_deloc_probability(s_n, s_kappa, s_nu, s_trials, g.seed);
    emit(g.out, [&](std::ostream& os) { specloc::write_sphere_csv(os, r); });
  } else if (leaf == rcheck) {
    const auto m = specloc::sample_matrix(make_pattern(rs, g.seed), g.seed);
    const auto exact = specloc::projection_diag(specloc::eigenspace(m, r_a, r_b, r_cap));
    const auto sw = specloc::resolvent_projection_diag(m, r_a, r_b, r_gamma, r_delta, r_qp, r_cap);
    double up = 1e300, lo = 1e300;
    for (std::size_t x = 0; x < exact.size(); ++x) {
      up = std::min(up, sw.upper[x] - exact[x]);
      lo = std::min(lo, exact[x] - sw.lower[x]);
    }
    ojson j;
    j["m"] = [&] {
      double s = 0.0;
      for (double v : exact) s += v;
      return std::llround(s);
    }();
    j["quad_error"] = sw.quad_error;
    j["upper_gap"] = up;
    j["lower_gap"] = lo;
    j["sandwich_holds"] = up >= -sw.quad_error && lo >= -sw.quad_error;
    if (r_a >= 0.0 && r_b <= 3.0 && r_gamma <= 1.0) {
      const auto pe = specloc::projection_estimate_check(m, r_a, r_b, r_gamma, r_delta, r_cap, r_qp);
      j["bracket_upper"] = pe.upper_bracket;
      j["bracket_lower"] = pe.lower_bracket;
      j["exact_max"] = pe.exact_max;
      j["exact_min"] = pe.exact_min;
      j["bracket_upper_holds"] = pe.upper_holds;
      j["bracket_lower_holds"] = pe.lower_holds;
    }
    if (r_samples > 0) {
      specloc::ResolventOptions ro;
      ro.dense_cap = r_cap;
      const auto dr = specloc::dyson_residual_check(m, {r_zre, r_zim}, r_samples, g.seed, ro);
      j["dyson_max_deviation"] = dr.max_deviation;
      j["dyson_mc_std"] = dr.mc_std;
      j["dyson_bound"] = dr.bound;
      j["dyson_holds"] = dr.holds;
    }
    emit(g.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    if (!r_diag.empty()) {
      emit(r_diag, [&](std::ostream& os) {
        os << "x,lower,exact,upper\n";
        for (std::size_t x = 0; x < exact.size(); ++x) {
          os << x << ',' << specloc::format_number(sw.lower[x]) << ',' << specloc::format_number(exact[x]) << ','
             << specloc::format_number(sw.upper[x]) << '\n';
        }
      });
    }
  }
  write_sidecar(g.out, command, resolved);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const specloc::InvalidParams& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
