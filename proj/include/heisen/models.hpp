// Example symbols: the order-normalized sublaplacian family, the Szego
// projector, classical elliptic symbols, random Toeplitz and op-symmetric
// generators, and the matrix-valued gluing obstruction.
#pragma once

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>
#include <complex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "heisen/chern.hpp"
#include "heisen/exsym.hpp"

namespace heisen::models {

inline constexpr int default_levels = 64;

/// True when c is within 1e-6 of an odd integer.
inline bool near_odd_integer(double c) {
  const double k = std::round((c - 1.0) / 2.0);
  return std::abs(c - (2.0 * k + 1.0)) < 1e-6;
}

/// Level-k eigenvalue of the order-normalized model on each hemisphere:
/// (Op(|w|^2) -+ c) Op(|w|^2)^{-1} with Op(|w|^2) = diag(2k + 1).
inline cplx sublaplacian_level(int k, cplx c, hemisphere h) {
  const double e = 2.0 * k + 1.0;
  return (e - hemisphere_sign(h) * c) / e;
}

/// Diagonal hemisphere element for levels 0 .. levels-1; beyond that the
/// compact tail -+c/(2k+1) is dropped.
inline WeylElement sublaplacian_hemisphere(cplx c, hemisphere h, int levels = default_levels,
                                           std::size_t grid = default_boundary_grid) {
  cmat f = cmat::Zero(levels, levels);
  for (int k = 0; k < levels; ++k) f(k, k) = sublaplacian_level(k, c, h) - 1.0;
  return {h, BoundaryFunction::constant(grid, 1.0), f};
}

struct SublaplacianOptions {
  int levels = default_levels;
  std::size_t grid = default_boundary_grid;
  bool allow_singular = false;  // skip the odd-integer check (used to exhibit non-invertible members)
};

inline ExtendedSymbol sublaplacian_symbol(double c, SublaplacianOptions opt = {}) {
  if (!std::isfinite(c)) throw error(errc::invalid_argument, "c must be finite");
  if (!opt.allow_singular && near_odd_integer(c))
    throw error(errc::non_invertible_parameter, "c = " + fmt(c) + " is an odd integer: a level vanishes");
  return {sublaplacian_hemisphere(c, hemisphere::upper, opt.levels, opt.grid),
          sublaplacian_hemisphere(c, hemisphere::lower, opt.levels, opt.grid), ClassicalArc::constant(opt.grid, 1.0)};
}

/// s = vacuum projector with zero boundary value, scaled by `scale`.
inline WeylElement szego_symbol(const FockTruncation& t, cplx scale = 1.0, std::size_t grid = default_boundary_grid) {
  if (t.n() != 1) throw error(errc::invalid_argument, "szego_symbol is implemented for n = 1");
  return {hemisphere::upper, BoundaryFunction::constant(grid, 0.0), scale * vacuum_projector(t).matrix()};
}

/// c(t) = s_- exp((t+1)/2 log(s_+/s_-)) with the principal logarithm.
inline ClassicalArc interpolating_arc(cplx s_plus, cplx s_minus, std::size_t grid = default_boundary_grid) {
  const cplx l = std::log(s_plus / s_minus);
  return ClassicalArc::from(grid, [&](double, double t) {
    if (t == 1.0) return s_plus;
    if (t == -1.0) return s_minus;
    return s_minus * std::exp(0.5 * (t + 1.0) * l);
  });
}

inline ExtendedSymbol classical_elliptic(cplx s_plus, cplx s_minus, const ClassicalArc& arc) {
  if (s_plus == cplx(0.0) || s_minus == cplx(0.0)) throw error(errc::invalid_argument, "hemisphere values must be nonzero");
  const std::size_t G = arc.grid_size();
  const double up = max_diff(arc.upper_slice(), BoundaryFunction::constant(G, s_plus));
  const double lo = max_diff(arc.lower_slice(), BoundaryFunction::constant(G, s_minus));
  if (up > corner_tolerance || lo > corner_tolerance)
    throw error(errc::corner_mismatch, "arc endpoints differ from hemisphere values by " + fmt(std::max(up, lo)));
  return {WeylElement::constant(hemisphere::upper, G, s_plus), WeylElement::constant(hemisphere::lower, G, s_minus), arc};
}

inline ExtendedSymbol classical_elliptic(cplx s_plus, cplx s_minus, std::size_t grid = default_boundary_grid) {
  return classical_elliptic(s_plus, s_minus, interpolating_arc(s_plus, s_minus, grid));
}

// ---------------------------------------------------------------------------
// Random generators

/// c e^{-i k theta} prod_j (e^{i theta} - z_j): winding d - k where d roots lie
/// inside the disk. Roots have radius in [0.2, 0.45] or [2.2, 5].
struct TrigPolynomial {
  cplx scale;
  int shift;                 // k
  std::vector<cplx> roots;   // z_j

  int winding() const {
    int inside = 0;
    for (auto z : roots) inside += std::abs(z) < 1.0;
    return inside - shift;
  }
  cplx operator()(double theta) const {
    const cplx z = std::polar(1.0, theta);
    cplx v = scale * std::polar(1.0, -shift * theta);
    for (auto r : roots) v *= z - r;
    return v;
  }
  BoundaryFunction sample(std::size_t grid = default_boundary_grid) const {
    return BoundaryFunction::from(grid, *this);
  }
};

/// Random nonvanishing trigonometric polynomial with frequencies in [-5, 5].
inline TrigPolynomial random_trig_polynomial(std::mt19937_64& rng, int max_degree = 5) {
  std::uniform_int_distribution<int> deg(0, max_degree);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TrigPolynomial p;
  const int d = deg(rng);
  // Any shift in [max(0, d - max_degree), min(d, max_degree)] keeps frequencies in range.
  std::uniform_int_distribution<int> sh(std::max(0, d - max_degree), std::min(d, max_degree));
  p.shift = sh(rng);
  p.scale = std::polar(0.5 + u(rng), 2 * std::numbers::pi * u(rng));
  for (int j = 0; j < d; ++j) {
    const double r = u(rng) < 0.5 ? 0.2 + 0.25 * u(rng) : 2.2 + 2.8 * u(rng);
    p.roots.push_back(std::polar(r, 2 * std::numbers::pi * u(rng)));
  }
  return p;
}

/// Random trigonometric polynomial with the given winding and all other roots
/// far from the circle.
inline TrigPolynomial random_trig_polynomial_with_winding(std::mt19937_64& rng, int winding, int extra_roots = 2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TrigPolynomial p;
  p.scale = std::polar(0.5 + u(rng), 2 * std::numbers::pi * u(rng));
  const int inside = std::max(winding, 0) + extra_roots;
  p.shift = inside - winding;
  for (int j = 0; j < inside; ++j) p.roots.push_back(std::polar(0.2 + 0.25 * u(rng), 2 * std::numbers::pi * u(rng)));
  for (int j = 0; j < extra_roots; ++j) p.roots.push_back(std::polar(2.2 + 2.8 * u(rng), 2 * std::numbers::pi * u(rng)));
  return p;
}

/// Hemisphere element lift(f) + F with f a random winding-w polynomial and a
/// random finite perturbation of size `perturbation` on a dim x dim block.
inline WeylElement random_weyl_element(std::mt19937_64& rng, hemisphere h, int winding, int dim = 6,
                                       double perturbation = 0.05, std::size_t grid = default_boundary_grid) {
  std::normal_distribution<double> g;
  cmat f(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) f(i, j) = perturbation * cplx(g(rng), g(rng)) / std::sqrt(2.0 * dim);
  return {h, random_trig_polynomial_with_winding(rng, winding).sample(grid), f};
}

namespace detail {

// Continuous logarithm of a winding-zero circle function.
inline std::vector<cplx> unwrapped_log(const BoundaryFunction& f) {
  std::vector<cplx> out(f.size());
  double phase = std::arg(f[0]);
  out[0] = cplx(std::log(std::abs(f[0])), phase);
  for (std::size_t j = 1; j < f.size(); ++j) {
    phase += std::arg(f[j] / f[j - 1]);
    out[j] = cplx(std::log(std::abs(f[j])), phase);
  }
  return out;
}

}  // namespace detail

/// Arc exp(((1+t) log f_+ + (1-t) log f_-)/2) joining two winding-zero boundaries.
inline ClassicalArc log_interpolating_arc(const BoundaryFunction& f_plus, const BoundaryFunction& f_minus) {
  if (winding_number(f_plus) != 0 || winding_number(f_minus) != 0)
    throw error(errc::invalid_argument, "log interpolation needs winding-zero boundaries");
  const auto lp = detail::unwrapped_log(f_plus), lm = detail::unwrapped_log(f_minus);
  const std::size_t G = f_plus.size();
  cmat v(static_cast<Eigen::Index>(G), arc_t_samples);
  for (std::size_t j = 0; j < G; ++j) {
    for (int i = 0; i < arc_t_samples; ++i) {
      const double t = ClassicalArc::t_at(i);
      v(static_cast<Eigen::Index>(j), i) = std::exp(0.5 * (1.0 + t) * lp[j] + 0.5 * (1.0 - t) * lm[j]);
    }
    v(static_cast<Eigen::Index>(j), 0) = f_minus[j];
    v(static_cast<Eigen::Index>(j), arc_t_samples - 1) = f_plus[j];
  }
  return ClassicalArc(std::move(v));
}

/// Random invertible extended symbol with winding-zero hemisphere boundaries
/// and small finite perturbations; redraws until the certificate passes.
inline ExtendedSymbol random_invertible_model(std::mt19937_64& rng, std::size_t grid = default_boundary_grid) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto up = random_weyl_element(rng, hemisphere::upper, 0, 6, 0.05, grid);
    auto lo = random_weyl_element(rng, hemisphere::lower, 0, 6, 0.05, grid);
    ExtendedSymbol s{up, lo, log_interpolating_arc(up.boundary(), lo.boundary())};
    try {
      if (is_invertible(s).invertible) return s;
    } catch (const error&) {
    }
  }
  throw error(errc::not_invertible, "no invertible random model found");
}

/// Random op-symmetric symbol: symmetrization of a random invertible model.
inline ExtendedSymbol random_op_symmetric(std::mt19937_64& rng, std::size_t grid = default_boundary_grid) {
  return symmetrize_tilde(random_invertible_model(rng, grid));
}

// ---------------------------------------------------------------------------
// Matrix-valued symbols: the transpose obstruction to gluing.

struct GluingReport {
  std::string failing_invariant;  // empty when symmetrization succeeds
  double obstruction = 0.0;       // max_theta |C(theta,0) - C(theta,0)^T|
  double op_symmetry_residual = 0.0;
  bool symmetrization_succeeded = false;
};

enum class gluing_slice { rotation, symmetric, scalar };

/// A 2x2 system symbol C(theta, t) = R(beta (1 + t)) D(theta) with D diagonal;
/// its t = 0 slice is not symmetric for beta not in pi Z. The op-symmetric
/// candidate is C(theta, t) for t <= 0 and C(theta, -t)^T for t >= 0; the two
/// rules meet at t = 0 only when C(theta, 0) is symmetric. The symmetric variant
/// drops the rotation, the scalar variant keeps only the (0, 0) entry.
inline GluingReport gluing_demo(gluing_slice kind = gluing_slice::rotation, double beta = std::numbers::pi / 4,
                                 std::size_t grid = 64) {
  using M2 = Eigen::Matrix2cd;
  auto slice = [&](double theta, double t) -> M2 {
    M2 d = M2::Zero();
    d(0, 0) = 2.0 + std::cos(theta);
    d(1, 1) = 1.5 + 0.5 * std::sin(theta);
    if (kind == gluing_slice::symmetric) return d;
    const double a = beta * (1.0 + t);
    M2 r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    M2 c = r * d;  // non-symmetric for a not in pi Z
    if (kind == gluing_slice::scalar) {
      const cplx c00 = c(0, 0);
      c.setZero();
      c(0, 0) = c00;  // 1x1 reduction embedded in the 2x2 frame
    }
    return c;
  };
  GluingReport rep;
  for (std::size_t j = 0; j < grid; ++j) {
    const double th = BoundaryFunction::angle(j, grid);
    const M2 c0 = slice(th, 0.0);
    rep.obstruction = std::max(rep.obstruction, (c0 - c0.transpose()).operatorNorm());
    // Candidate op(sigma~)(t) = sigma~(-t)^T compared with sigma~(t) on the grid.
    for (int i = 0; i < arc_t_samples; ++i) {
      const double t = ClassicalArc::t_at(i);
      const M2 tilde = t <= 0 ? slice(th, t) : M2(slice(th, -t).transpose());
      const M2 tilde_mirror = -t <= 0 ? slice(th, -t) : M2(slice(th, t).transpose());
      rep.op_symmetry_residual = std::max(rep.op_symmetry_residual, (M2(tilde_mirror.transpose()) - tilde).operatorNorm());
    }
  }
  rep.symmetrization_succeeded = rep.obstruction <= 1e-12;
  if (!rep.symmetrization_succeeded)
    rep.failing_invariant = "op(sigma~) = sigma~ fails at t = 0: the t = 0 slice is not a symmetric matrix";
  return rep;
}


// ---------------------------------------------------------------------------
// Random polynomial symbols and symplectic maps

/// All monomials w^p wbar^q of total degree <= max_degree with Gaussian coefficients.
inline PolySymbol random_poly_symbol(int n, int max_degree, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  PolySymbol s(n);
  const auto t = build_truncation(2 * n, max_degree);
  for (std::size_t i = 0; i < t.dim(); ++i) {
    const auto& k = t.index(i);
    multi_index p(k.begin(), k.begin() + n), q(k.begin() + n, k.end());
    s.add_term(p, q, cplx(g(rng), g(rng)));
  }
  return s;
}

/// rotation * diag(e^s, e^-s) * shear * rotation with |s|, |shear| < 0.7.
inline SymplecticMap random_sp2(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi), sc(-0.7, 0.7);
  auto rot = [](double a) {
    Eigen::Matrix2d r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return r;
  };
  const double s = sc(rng);
  Eigen::Matrix2d d = Eigen::Matrix2d::Zero();
  d(0, 0) = std::exp(s);
  d(1, 1) = std::exp(-s);
  Eigen::Matrix2d shear = Eigen::Matrix2d::Identity();
  shear(0, 1) = sc(rng);
  const double a1 = ang(rng), a2 = ang(rng);
  return SymplecticMap(rot(a1) * d * shear * rot(a2));
}

// ---------------------------------------------------------------------------
// Model specifications

enum class model_kind { sublaplacian, szego, classical_elliptic, toeplitz, op_symmetric, gluing_system };

inline std::string_view model_name(model_kind k) {
  switch (k) {
    case model_kind::sublaplacian: return "sublaplacian";
    case model_kind::szego: return "szego";
    case model_kind::classical_elliptic: return "classicalElliptic";
    case model_kind::toeplitz: return "toeplitz";
    case model_kind::op_symmetric: return "opSymmetric";
    case model_kind::gluing_system: return "remark3System";
  }
  return "?";
}

inline model_kind parse_model_kind(std::string_view s) {
  for (auto k : {model_kind::sublaplacian, model_kind::szego, model_kind::classical_elliptic, model_kind::toeplitz,
                 model_kind::op_symmetric, model_kind::gluing_system})
    if (model_name(k) == s) return k;
  throw error(errc::invalid_argument, "unknown model '" + std::string(s) + "'");
}

inline std::string_view slice_name(gluing_slice k) {
  switch (k) {
    case gluing_slice::rotation: return "rotation";
    case gluing_slice::symmetric: return "symmetric";
    case gluing_slice::scalar: return "scalar";
  }
  return "?";
}

inline gluing_slice parse_slice(std::string_view s) {
  for (auto k : {gluing_slice::rotation, gluing_slice::symmetric, gluing_slice::scalar})
    if (slice_name(k) == s) return k;
  throw error(errc::invalid_argument, "unknown slice '" + std::string(s) + "'");
}

struct ModelSpec {
  model_kind kind = model_kind::sublaplacian;
  double c = 0.5;                       // sublaplacian parameter
  cplx s_plus = -1.0, s_minus = 1.0;    // classical elliptic pole values
  std::vector<std::pair<int, cplx>> modes = {{1, 1.0}};  // toeplitz boundary sum c_m e^{i m theta}
  cplx scale = 2.0;                     // szego: element 1 + (scale - 1) s
  gluing_slice slice = gluing_slice::rotation;
  double beta = std::numbers::pi / 4;
  std::uint64_t seed = 0;               // opSymmetric draws
  std::size_t grid = default_boundary_grid;

  void validate() const {
    if (grid < 16 || !std::has_single_bit(grid)) throw error(errc::invalid_argument, "grid must be a power of two >= 16");
    switch (kind) {
      case model_kind::sublaplacian:
        if (near_odd_integer(c)) throw error(errc::non_invertible_parameter, "c = " + fmt(c) + " is an odd integer");
        break;
      case model_kind::classical_elliptic:
        if (s_plus == cplx(0.0) || s_minus == cplx(0.0))
          throw error(errc::invalid_argument, "pole values must be nonzero");
        break;
      case model_kind::toeplitz:
        if (modes.empty()) throw error(errc::invalid_argument, "toeplitz model needs at least one mode");
        break;
      case model_kind::szego:
        if (scale == cplx(0.0)) throw error(errc::invalid_argument, "szego scale must be nonzero");
        break;
      default:
        break;
    }
  }
};

/// Extended symbol of a spec (sublaplacian, classicalElliptic, opSymmetric).
inline ExtendedSymbol extended_symbol(const ModelSpec& m) {
  m.validate();
  switch (m.kind) {
    case model_kind::sublaplacian: return sublaplacian_symbol(m.c, {.grid = m.grid});
    case model_kind::classical_elliptic: return classical_elliptic(m.s_plus, m.s_minus, m.grid);
    case model_kind::op_symmetric: {
      std::mt19937_64 rng(m.seed);
      return random_op_symmetric(rng, m.grid);
    }
    default:
      throw error(errc::invalid_argument, "model '" + std::string(model_name(m.kind)) + "' has no extended symbol");
  }
}

inline BoundaryFunction toeplitz_boundary(const ModelSpec& m) {
  return BoundaryFunction::from(m.grid, [&](double th) {
    cplx v = 0.0;
    for (auto [k, c] : m.modes) v += c * std::polar(1.0, k * th);
    return v;
  });
}

/// Fredholm element 1 + (scale - 1) s with s the vacuum projector.
inline WeylElement szego_element(const ModelSpec& m) {
  const auto s = szego_symbol(build_truncation(1, 0), m.scale - 1.0, m.grid);
  return {hemisphere::upper, BoundaryFunction::constant(m.grid, 1.0), s.finite()};
}

// ---------------------------------------------------------------------------
// Families over the model manifolds

/// Scalar family e^{2 pi i k x_a / L_a} along a periodic axis.
inline AutomorphismFamily phase_family(const GridManifold& M, int k, int axis = 0) {
  if (!M.periodic(axis)) throw error(errc::invalid_argument, "phase_family needs a periodic axis");
  const double L = M.length(axis);
  return AutomorphismFamily::sample(M, [&](const GridPoint& q) {
    return cmat::Constant(1, 1, std::polar(1.0, 2.0 * std::numbers::pi * k * q[axis] / L));
  });
}

/// The unit quaternion of a Hopf-chart point as an SU(2) matrix.
inline cmat su2_of(const GridPoint& q) {
  const cplx z1 = std::polar(std::cos(q[0]), q[1]), z2 = std::polar(std::sin(q[0]), q[2]);
  cmat m(2, 2);
  m << z1, -std::conj(z2), z2, std::conj(z1);
  return m;
}

/// Identity map S3 -> SU(2) (degree one).
inline AutomorphismFamily su2_degree_one(const GridManifold& M) {
  if (M.kind() != manifold_kind::S3) throw error(errc::invalid_argument, "su2_degree_one needs S3");
  return AutomorphismFamily::sample(M, su2_of);
}

/// Constant Weyl family.
inline WeylFamily constant_family(WeylElement a) {
  return [a = std::make_shared<const WeylElement>(std::move(a))](const GridPoint&) { return a; };
}

/// Upper element of the Hermite reduction of the sublaplacian model, constant over M.
inline WeylFamily sublaplacian_family(double c, SublaplacianOptions opt = {}) {
  return constant_family(hermite_reduction(sublaplacian_symbol(c, opt)).tau_plus);
}

/// Upper element of the Hermite reduction of the classical elliptic model with
/// pole values s_plus(q), s_minus(q).
inline WeylFamily elliptic_family(std::function<cplx(const GridPoint&)> s_plus,
                                  std::function<cplx(const GridPoint&)> s_minus,
                                  std::size_t grid = default_boundary_grid) {
  return [=](const GridPoint& q) {
    return std::make_shared<const WeylElement>(hermite_reduction(classical_elliptic(s_plus(q), s_minus(q), grid)).tau_plus);
  };
}

}  // namespace heisen::models
