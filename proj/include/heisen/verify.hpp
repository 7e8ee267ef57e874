// Property suites run by `heisen verify`. Each suite reports a verdict and its
// worst residual; randomized suites draw from the given seed only.
#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <future>
#include <random>
#include <string>
#include <vector>

#include "heisen/chern.hpp"
#include "heisen/exsym.hpp"
#include "heisen/index.hpp"
#include "heisen/models.hpp"
#include "heisen/weyl.hpp"

namespace heisen::verify {

struct SuiteResult {
  std::string name;
  bool passed = false;
  double residual = 0.0;
  std::string detail;
};

struct Options {
  std::uint64_t seed = 1;
  sharp_convention convention{};  // bracket_sign = -1 injects a kappa-sign fault
  std::size_t grid = default_boundary_grid;
};

using Suite = std::function<SuiteResult(const Options&)>;

namespace detail {

inline std::mt19937_64 rng_for(const Options& o, std::uint64_t salt) { return std::mt19937_64(o.seed * 1000003u + salt); }

inline SuiteResult verdict(std::string name, double residual, double tol, std::string what) {
  return {std::move(name), residual < tol, residual, std::move(what) + " (tolerance " + fmt(tol) + ")"};
}

}  // namespace detail

/// x #+ p - p #+ x = i and associativity on random cubic symbols.
inline SuiteResult sharp_suite(const Options& o) {
  auto rng = detail::rng_for(o, 1);
  const auto x = PolySymbol::x(1, 1), p = PolySymbol::p(1, 1);
  const auto comm = sharp(x, p, hemisphere::upper, o.convention) - sharp(p, x, hemisphere::upper, o.convention);
  double r = max_coeff_diff(comm, PolySymbol::constant(1, cplx(0.0, 1.0)));
  for (int i = 0; i < 10; ++i) {
    const auto a = models::random_poly_symbol(1, 3, rng), b = models::random_poly_symbol(1, 3, rng),
               c = models::random_poly_symbol(1, 3, rng);
    const auto lhs = sharp(sharp(a, b, hemisphere::upper, o.convention), c, hemisphere::upper, o.convention);
    const auto rhs = sharp(a, sharp(b, c, hemisphere::upper, o.convention), hemisphere::upper, o.convention);
    r = std::max(r, max_coeff_diff(lhs, rhs) / std::max(1.0, static_cast<double>(lhs.terms().size())));
  }
  return detail::verdict("sharp", r, 1e-12, "commutator [x, p] = i and associativity");
}

/// Op(a # b) = Op(a) Op(b) on the reliable block at N = 24, 30 pairs.
inline SuiteResult quantization_suite(const Options& o) {
  auto rng = detail::rng_for(o, 2);
  const auto t = build_truncation(1, 24);
  double r = 0.0;
  for (int i = 0; i < 30; ++i) {
    const auto a = models::random_poly_symbol(1, 3, rng), b = models::random_poly_symbol(1, 3, rng);
    const int keep = t.N() - a.degree() - b.degree();
    const cmat lhs = weyl_quantize(sharp(a, b, hemisphere::upper, o.convention), t).block_upto(keep);
    const cmat rhs = (weyl_quantize(a, t) * weyl_quantize(b, t)).block_upto(keep);
    r = std::max(r, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return detail::verdict("quantization", r, 1e-9, "homomorphism residual over 30 pairs at N = 24");
}

/// (a o alpha) # (b o alpha) = (a # b) o alpha for 20 random Sp(2) maps.
inline SuiteResult equivariance_suite(const Options& o) {
  auto rng = detail::rng_for(o, 3);
  double r = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto alpha = models::random_sp2(rng);
    const auto a = models::random_poly_symbol(1, 3, rng), b = models::random_poly_symbol(1, 3, rng);
    const auto lhs = sharp(pullback(a, alpha), pullback(b, alpha), hemisphere::upper, o.convention);
    const auto rhs = pullback(sharp(a, b, hemisphere::upper, o.convention), alpha);
    r = std::max(r, max_coeff_diff(lhs, rhs));
  }
  return detail::verdict("equivariance", r, 1e-8, "pullback commutes with sharp over 20 maps");
}

/// Toeplitz index = -winding on 50 random polynomials (winding from root positions).
inline SuiteResult toeplitz_suite(const Options& o) {
  auto rng = detail::rng_for(o, 4);
  int wrong = 0;
  for (int i = 0; i < 50; ++i) {
    const auto p = models::random_trig_polynomial(rng);
    if (toeplitz_index(p.sample(o.grid)).index != -p.winding()) ++wrong;
  }
  return detail::verdict("toeplitz", wrong, 0.5, std::to_string(wrong) + " of 50 polynomials disagree with -winding");
}

/// dagger-to-op homotopy of the c = 0.5 sublaplacian model, 101 samples.
inline SuiteResult homotopy_suite(const Options&) {
  const auto path = homotopy_dagger_to_op(models::sublaplacian_symbol(0.5), 101);
  bool ok = path.samples.size() == 101;
  for (const auto& s : path.samples) ok = ok && s.certificate.invertible;
  const double r = std::max(path.op_endpoint_residual, path.dagger_endpoint_residual);
  auto res = detail::verdict("homotopy", r, 1e-8, "endpoint residual; min singular " + fmt(path.min_singular()));
  res.passed = res.passed && ok && path.min_singular() > 0 && path.min_classical() > 0;
  return res;
}

/// 10 op-symmetric models have index 0.
inline SuiteResult op_symmetric_suite(const Options& o) {
  auto rng = detail::rng_for(o, 6);
  int worst = 0;
  for (int i = 0; i < 10; ++i) worst = std::max(worst, std::abs(index_of_extended(models::random_op_symmetric(rng, o.grid)).index));
  return detail::verdict("opSymmetric", worst, 0.5, "largest |index| over 10 op-symmetric models");
}

/// Transposition to the other hemisphere negates the index of Fredholm elements.
inline SuiteResult transpose_suite(const Options& o) {
  auto rng = detail::rng_for(o, 7);
  std::uniform_int_distribution<int> wd(-2, 2);
  int wrong = 0;
  for (int i = 0; i < 20; ++i) {
    const auto a = models::random_weyl_element(rng, hemisphere::upper, wd(rng), 6, 0.2, o.grid);
    if (weyl_index(a).index + weyl_index(transpose_to_other(a)).index != 0) ++wrong;
  }
  return detail::verdict("transpose", wrong, 0.5, std::to_string(wrong) + " of 20 elements fail antisymmetry");
}

/// Hermite reduction: lower half exactly 1, certificate passes, index agrees
/// with the Toeplitz oracle on the boundary of tau_+.
inline SuiteResult hermite_suite(const Options& o) {
  auto rng = detail::rng_for(o, 8);
  std::vector<ExtendedSymbol> syms = {models::sublaplacian_symbol(0.5), models::sublaplacian_symbol(-0.7),
                                      models::classical_elliptic(-1.0, 1.0, o.grid)};
  for (int i = 0; i < 3; ++i) syms.push_back(models::random_invertible_model(rng, o.grid));
  double r = 0.0;
  bool ok = true;
  for (const auto& s : syms) {
    const auto red = hermite_reduction(s);
    r = std::max({r, red.certificate.lower_residual, red.certificate.lower_arc_residual});
    ok = ok && red.certificate.passed &&
         weyl_index(red.tau_plus).index == toeplitz_index(red.tau_plus.boundary().reflected()).index;
  }
  return {"hermite", r == 0.0 && ok, r, "lower-half residual of tau (must be exactly 0), certificates and oracle index"};
}

/// Chern normalizations and the flat constant-c model.
inline SuiteResult chern_suite(const Options&) {
  const auto T = GridManifold::torus(24);
  const double s1 = circle_integral(T, odd_chern_form(models::phase_family(T, 1), 0), 0).real();
  auto s3 = [](int n) {
    const auto M = GridManifold::s3(n);
    return index_integral(models::su2_degree_one(M), CurvatureData::flat(M)).real();
  };
  const double s3x = richardson(s3(24), s3(48));
  const auto T32 = GridManifold::torus(32);
  const double flat = index_formula(truncate_class(T32, models::sublaplacian_family(0.5), 8), CurvatureData::flat(T32)).value;
  const double r = std::max({std::abs(s1 - 1.0), std::abs(s3x - 1.0), std::abs(flat)});
  return detail::verdict("chern", r, 1e-3, "S1 " + fmt(s1) + ", S3 " + fmt(s3x) + ", flat T3 " + fmt(flat));
}

/// Gluing obstruction for 2x2 systems.
inline SuiteResult gluing_suite(const Options&) {
  const auto rot = models::gluing_demo(models::gluing_slice::rotation);
  const auto sym = models::gluing_demo(models::gluing_slice::symmetric);
  const auto sca = models::gluing_demo(models::gluing_slice::scalar);
  SuiteResult res{"gluing", false, rot.obstruction,
                  "rotation obstruction " + fmt(rot.obstruction) + ", symmetric " + fmt(sym.obstruction) + ", scalar " +
                      fmt(sca.obstruction)};
  res.passed = !rot.symmetrization_succeeded && rot.obstruction > 0.1 && sym.symmetrization_succeeded &&
               sca.symmetrization_succeeded && sca.obstruction == 0.0;
  return res;
}

inline std::vector<std::pair<std::string, Suite>> all_suites() {
  return {{"sharp", sharp_suite},         {"quantization", quantization_suite}, {"equivariance", equivariance_suite},
          {"toeplitz", toeplitz_suite},   {"homotopy", homotopy_suite},         {"opSymmetric", op_symmetric_suite},
          {"transpose", transpose_suite}, {"hermite", hermite_suite},           {"chern", chern_suite},
          {"gluing", gluing_suite}};
}

/// Runs the named suites (all when `names` is empty) concurrently; results
/// come back in registration order. Exceptions become failed suites.
inline std::vector<SuiteResult> run(const Options& o, const std::vector<std::string>& names = {}) {
  std::vector<std::pair<std::string, Suite>> chosen;
  for (auto& [name, s] : all_suites())
    if (names.empty() || std::find(names.begin(), names.end(), name) != names.end()) chosen.emplace_back(name, s);
  for (const auto& n : names)
    if (std::none_of(chosen.begin(), chosen.end(), [&](const auto& c) { return c.first == n; }))
      throw error(errc::invalid_argument, "unknown suite '" + n + "'");
  std::vector<std::future<SuiteResult>> jobs;
  for (const auto& [name, s] : chosen)
    jobs.push_back(std::async(std::launch::async, [&o, name, s] {
      try {
        return s(o);
      } catch (const std::exception& e) {
        return SuiteResult{name, false, std::numeric_limits<double>::infinity(), e.what()};
      }
    }));
  std::vector<SuiteResult> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace heisen::verify
