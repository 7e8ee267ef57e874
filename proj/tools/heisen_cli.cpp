// heisen: batch driver for index computations, verification suites and sweeps.
//
// Exit codes: 0 pass, 1 suite failure, 2 certificate failure, 3 config error.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "heisen/io.hpp"
#include "heisen/verify.hpp"

namespace {

using namespace heisen;
using io::json;

enum exit_code { pass = 0, suite_failure = 1, certificate_failure = 2, config_error = 3 };

struct RunConfig {
  std::string model = "sublaplacian";
  std::string symbol_file;
  std::string curvature_file;
  std::string out;
  double c = 0.5;
  int n = 1;
  int N_min = -1;  // -1: per-model default
  int N_max = -1;
  double tol = default_invertibility_delta;
  std::size_t grid = default_boundary_grid;
  std::uint64_t seed = 1;
  // model parameters beyond --c
  int k = 1;
  std::vector<double> s_plus = {-1.0, 0.0}, s_minus = {1.0, 0.0};
  std::string slice = "rotation";
  // verify
  std::vector<std::string> suites;
  bool flip_kappa = false;
  // sweep
  std::string axis;
  std::optional<double> from, to, step;
  std::vector<double> values;

  void validate() const {
    if (!(tol > 0)) throw error(errc::invalid_argument, "--tol must be positive");
    if (n != 1) throw error(errc::invalid_argument, "--n " + std::to_string(n) + ": models are implemented for n = 1");
    if ((N_min >= 0) != (N_max >= 0)) throw error(errc::invalid_argument, "--N-min and --N-max go together");
    if (N_min >= 0 && N_min >= N_max) throw error(errc::invalid_argument, "need N-min < N-max");
    if (s_plus.size() != 2 || s_minus.size() != 2) throw error(errc::invalid_argument, "pole values are re,im pairs");
  }

  json to_json() const {
    json j = {{"model", model}, {"c", c}, {"n", n}, {"tol", tol}, {"grid", grid}, {"seed", seed}};
    if (!symbol_file.empty()) j["symbolFile"] = symbol_file;
    if (!curvature_file.empty()) j["curvatureFile"] = curvature_file;
    if (N_min >= 0) j["NRange"] = {N_min, N_max};
    return j;
  }
};

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(cfg.out);
  if (!f) throw error(errc::invalid_argument, "cannot write '" + cfg.out + "'");
  f << text;
}

models::ModelSpec spec_of(const RunConfig& cfg) {
  models::ModelSpec m;
  m.kind = models::parse_model_kind(cfg.model);
  m.c = cfg.c;
  m.s_plus = {cfg.s_plus[0], cfg.s_plus[1]};
  m.s_minus = {cfg.s_minus[0], cfg.s_minus[1]};
  m.modes = {{cfg.k, 1.0}};
  m.slice = models::parse_slice(cfg.slice);
  m.seed = cfg.seed;
  m.grid = cfg.grid;
  m.validate();
  return m;
}

IndexResult index_of(const WeylElement& a, const RunConfig& cfg) {
  if (cfg.N_min < 0) return weyl_index(a);
  IndexOptions opt;
  opt.margin = std::max(opt.margin, a.boundary_bandwidth() + 2);
  return numerical_index(weyl_family(a), cfg.N_min, cfg.N_max, opt);
}

// ---------------------------------------------------------------------------

int cmd_index(const RunConfig& cfg) {
  json rep = {{"command", "index"}, {"seed", cfg.seed}, {"config", cfg.to_json()}};
  std::optional<ExtendedSymbol> sym;
  if (!cfg.symbol_file.empty()) {
    const json j = io::read_file(cfg.symbol_file);
    if (j.contains("kind")) {
      const auto m = io::model_from(j);
      rep["model"] = io::to_json(m);
      if (m.kind == models::model_kind::sublaplacian || m.kind == models::model_kind::classical_elliptic ||
          m.kind == models::model_kind::op_symmetric)
        sym = models::extended_symbol(m);
      else
        throw error(errc::invalid_argument, "symbol files hold an extended symbol or an extended-symbol model");
    } else {
      sym = io::extended_from(j);
      rep["model"] = {{"kind", "symbolFile"}};
    }
  } else {
    const auto m = spec_of(cfg);
    rep["model"] = io::to_json(m);
    switch (m.kind) {
      case models::model_kind::toeplitz: {
        const auto f = models::toeplitz_boundary(m);
        rep["winding"] = winding_number(f);
        rep["index"] = io::to_json(cfg.N_min < 0 ? toeplitz_index(f) : toeplitz_index(f, cfg.N_min, cfg.N_max));
        break;
      }
      case models::model_kind::szego: {
        const auto e = models::szego_element(m);
        const auto s = models::szego_symbol(build_truncation(1, 0), 1.0, m.grid);
        rep["szegoIdempotentResidual"] = distance(compose(s, s), s);
        rep["index"] = io::to_json(index_of(e, cfg));
        break;
      }
      case models::model_kind::gluing_system: {
        const auto g = models::gluing_demo(m.slice, m.beta);
        rep["gluing"] = {{"symmetrizationSucceeded", g.symmetrization_succeeded},
                         {"obstruction", g.obstruction},
                         {"opSymmetryResidual", g.op_symmetry_residual},
                         {"failingInvariant", g.failing_invariant}};
        break;
      }
      default:
        sym = models::extended_symbol(m);
    }
    if (!sym && !cfg.curvature_file.empty())
      throw error(errc::invalid_argument, "--curvature-file needs a model with an extended symbol");
  }

  if (sym) {
    json certs;
    certs["validation"] = io::to_json(validate(*sym));
    const auto inv = is_invertible(*sym, cfg.tol);
    certs["invertibility"] = io::to_json(inv);
    rep["certificates"] = certs;
    if (!inv.invertible) {
      rep["error"] = "NotInvertible: invertibility certificate failed";
      emit(cfg, rep.dump(2) + "\n");
      std::cerr << "NotInvertible: smallest singular value " << fmt(inv.min_singular()) << " at delta " << fmt(cfg.tol) << "\n";
      return certificate_failure;
    }
    const auto red = hermite_reduction(*sym, cfg.tol);
    rep["certificates"]["hermite"] = io::to_json(red.certificate);
    rep["index"] = io::to_json(index_of(red.tau_plus, cfg));
    if (!cfg.curvature_file.empty()) {
      const auto curv = io::curvature_from(io::read_file(cfg.curvature_file));
      const auto fam = truncate_class(curv.manifold(), models::constant_family(red.tau_plus), 8, {.delta = cfg.tol});
      rep["indexFormula"] = io::to_json(index_formula(fam, curv, cfg.tol));
      rep["indexFormula"]["truncationDim"] = fam.dim();
    }
  }
  rep["timestamp"] = timestamp();
  emit(cfg, rep.dump(2) + "\n");
  return pass;
}

int cmd_verify(const RunConfig& cfg) {
  verify::Options o;
  o.seed = cfg.seed;
  o.grid = cfg.grid;
  if (cfg.flip_kappa) o.convention.bracket_sign = -1.0;
  const auto results = verify::run(o, cfg.suites);
  json suites = json::array();
  bool all = true;
  for (const auto& r : results) {
    suites.push_back({{"name", r.name}, {"passed", r.passed}, {"residual", std::isfinite(r.residual) ? json(r.residual) : json(nullptr)},
                      {"detail", r.detail}});
    all = all && r.passed;
    std::cerr << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " [residual " << fmt(r.residual) << "]\n";
  }
  json rep = {{"command", "verify"}, {"seed", cfg.seed}, {"config", cfg.to_json()}, {"suites", suites}, {"passed", all}};
  if (cfg.flip_kappa) rep["faultInjected"] = "kappa sign flipped";
  rep["timestamp"] = timestamp();
  emit(cfg, rep.dump(2) + "\n");
  return all ? pass : suite_failure;
}

std::vector<double> sweep_values(const RunConfig& cfg, double from, double to, double step) {
  if (!cfg.values.empty()) return cfg.values;
  from = cfg.from.value_or(from);
  to = cfg.to.value_or(to);
  step = cfg.step.value_or(step);
  if (!(step > 0) || to < from) throw error(errc::invalid_argument, "sweep range needs step > 0 and from <= to");
  const long count = std::lround(std::floor((to - from) / step + 1e-9)) + 1;
  if (count > 10000) throw error(errc::invalid_argument, "sweep has too many points");
  std::vector<double> v;
  for (long i = 0; i < count; ++i) v.push_back(from + static_cast<double>(i) * step);
  return v;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(12);
  s << v;
  return s.str();
}

int cmd_sweep(const RunConfig& cfg) {
  std::ostringstream csv;
  if (cfg.axis == "c") {
    csv << "c,status,index,stabilizedAt,hermitePassed,minArcModulus,minSingular\n";
    for (double c : sweep_values(cfg, -0.9, 0.9, 0.1)) {
      if (std::abs(c) < 1e-12) c = 0.0;
      csv << num(c) << ",";
      try {
        const auto red = hermite_reduction(models::sublaplacian_symbol(c, {.grid = cfg.grid}), cfg.tol);
        const auto r = index_of(red.tau_plus, cfg);
        double smin = std::numeric_limits<double>::infinity();
        for (const auto& k : r.ranks) smin = std::min(smin, k.min_singular);
        csv << "ok," << r.index << "," << r.stabilized_at << "," << (red.certificate.passed ? 1 : 0) << ","
            << num(red.certificate.min_arc_modulus) << "," << num(smin) << "\n";
      } catch (const error& e) {
        csv << errc_name(e.code()) << ",,,,,\n";
      }
    }
  } else if (cfg.axis == "k") {
    csv << "k,winding,index,stabilizedAt\n";
    for (double kv : sweep_values(cfg, -5, 5, 1)) {
      const int k = static_cast<int>(std::lround(kv));
      const auto f = BoundaryFunction::character(cfg.grid, k);
      const auto r = cfg.N_min < 0 ? toeplitz_index(f) : toeplitz_index(f, cfg.N_min, cfg.N_max);
      csv << k << "," << winding_number(f) << "," << r.index << "," << r.stabilized_at << "\n";
    }
  } else if (cfg.axis == "N") {
    // Homomorphism residual on the fixed window of levels <= 6 for one seeded
    // pair of cubic symbols.
    std::mt19937_64 rng(cfg.seed);
    const auto a = models::random_poly_symbol(1, 3, rng), b = models::random_poly_symbol(1, 3, rng);
    const auto ab = sharp(a, b, hemisphere::upper);
    csv << "N,residual\n";
    std::vector<double> Ns = cfg.values.empty() ? std::vector<double>{8, 12, 16, 20} : cfg.values;
    for (double Nv : Ns) {
      const int N = static_cast<int>(std::lround(Nv));
      if (N < 6) throw error(errc::invalid_argument, "N values must be >= 6");
      const auto t = build_truncation(1, N);
      const cmat lhs = weyl_quantize(ab, t).block_upto(6);
      const cmat A = weyl_quantize(a, t).matrix(), B = weyl_quantize(b, t).matrix();
      // Fixed summation order, so the window is computed identically for every N
      // large enough to hold it.
      const Eigen::Index w = lhs.rows();
      cmat rhs = cmat::Zero(w, w);
      for (Eigen::Index i = 0; i < w; ++i)
        for (Eigen::Index k = 0; k < w; ++k)
          for (Eigen::Index m = 0; m < A.cols(); ++m) rhs(i, k) += A(i, m) * B(m, k);
      csv << N << "," << num((lhs - rhs).cwiseAbs().maxCoeff()) << "\n";
    }
  } else {
    throw error(errc::invalid_argument, "unknown sweep axis '" + cfg.axis + "' (expected c, k or N)");
  }
  emit(cfg, csv.str());
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extended Heisenberg symbol calculus: index computations and checks"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "Seed for randomized parts");
    sub->add_option("--out", cfg.out, "Output file (default stdout)");
    sub->add_option("--grid", cfg.grid, "Boundary circle samples (power of two)");
    sub->add_option("--tol", cfg.tol, "Invertibility threshold delta");
    sub->add_option("--N-min", cfg.N_min, "Smallest truncation order");
    sub->add_option("--N-max", cfg.N_max, "Largest truncation order");
    sub->add_option("--n", cfg.n, "Fiber dimension");
  };

  auto* index = app.add_subcommand("index", "Index of a model or symbol file");
  common(index);
  index->add_option("--model", cfg.model,
                    "sublaplacian, szego, classicalElliptic, toeplitz, opSymmetric or remark3System");
  index->add_option("--symbol-file", cfg.symbol_file, "ExtendedSymbol or ModelSpec JSON");
  index->add_option("--c", cfg.c, "Sublaplacian parameter");
  index->add_option("--k", cfg.k, "Toeplitz boundary degree");
  index->add_option("--s-plus", cfg.s_plus, "Classical elliptic value at the upper pole (re im)")->expected(2);
  index->add_option("--s-minus", cfg.s_minus, "Classical elliptic value at the lower pole (re im)")->expected(2);
  index->add_option("--slice", cfg.slice, "Gluing demo slice: rotation, symmetric or scalar");
  index->add_option("--curvature-file", cfg.curvature_file, "CurvatureData JSON for the index formula");

  auto* ver = app.add_subcommand("verify", "Run the property suites");
  common(ver);
  ver->add_option("--suites", cfg.suites, "Subset of suites")->delimiter(',');
  ver->add_flag("--flip-kappa", cfg.flip_kappa, "Test hook: flip the sign of kappa")->group("");

  auto* sweep = app.add_subcommand("sweep", "Parameter sweep to CSV");
  common(sweep);
  sweep->add_option("--axis", cfg.axis, "c, k or N")->required();
  sweep->add_option("--from", cfg.from, "First value");
  sweep->add_option("--to", cfg.to, "Last value");
  sweep->add_option("--step", cfg.step, "Step");
  sweep->add_option("--values", cfg.values, "Explicit values")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? pass : config_error;
  }

  try {
    cfg.validate();
    if (index->parsed()) return cmd_index(cfg);
    if (ver->parsed()) return cmd_verify(cfg);
    return cmd_sweep(cfg);
  } catch (const error& e) {
    std::cerr << e.what() << "\n";
    return is_config_error(e.code()) ? config_error : certificate_failure;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return config_error;
  }
}
