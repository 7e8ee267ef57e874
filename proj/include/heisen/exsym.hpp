// The extended symbol algebra: two hemisphere elements of the Weyl algebra
// glued to a classical function on the arc S*H x [-1, 1].
//
// A hemisphere element is stored as a boundary circle function f plus a finite
// matrix F. Its operator is lift(f) + F, where the lift is the number-basis
// Toeplitz matrix of f:
//   upper hemisphere: lift(f)(j, k) = fhat(k - j)
//   lower hemisphere: lift(f)(j, k) = fhat(j - k)  (= lift of f o rho, transposed)
// The orientation matches Op(w) = sqrt2 a: the boundary value e^{i theta} of w
// lifts to a lowering operator. For band-limited f and g the semicommutator
// lift(f) lift(g) - lift(fg) has finite support, so products stay in this form.
//
// The arc is sampled at G angles times 65 points t_i = -1 + i/32; the t = +1
// column is the upper corner and t = -1 the lower corner.
#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "heisen/fock.hpp"
#include "heisen/quadrature.hpp"
#include "heisen/weyl.hpp"
#include "heisen/winding.hpp"

namespace heisen {

inline constexpr int arc_t_samples = 65;
inline constexpr double default_invertibility_delta = 1e-4;
inline constexpr double corner_tolerance = 1e-8;

namespace detail {

inline long fourier_mode(std::size_t slot, std::size_t G) {
  const long g = static_cast<long>(G), i = static_cast<long>(slot);
  return i < g / 2 ? i : i - g;
}

// fhat_m for m in [-G/2, G/2), zero outside.
inline cplx mode(const std::vector<cplx>& fhat, long m) {
  const long g = static_cast<long>(fhat.size());
  if (m < -g / 2 || m >= g / 2) return 0.0;
  return fhat[static_cast<std::size_t>((m + g) % g)];
}

inline double min_singular_value(const cmat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<cmat> svd(m);
  return svd.singularValues().minCoeff();
}

// Smallest d such that all entries outside the leading d x d block are <= tol.
inline Eigen::Index support_size(const cmat& m, double tol) {
  Eigen::Index d = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (std::abs(m(i, j)) > tol) d = std::max(d, std::max(i, j) + 1);
  return d;
}

}  // namespace detail

/// Largest |m| with |fhat_m| above rel times the l1 norm of the coefficients.
inline int bandwidth(const BoundaryFunction& f, double rel = 1e-15) {
  const auto c = f.fourier();
  double l1 = 0.0;
  for (auto v : c) l1 += std::abs(v);
  int b = 0;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (std::abs(c[i]) > rel * l1) b = std::max(b, static_cast<int>(std::abs(detail::fourier_mode(i, c.size()))));
  return b;
}

/// Number-basis Toeplitz lift of a boundary function, dim x dim.
inline cmat boundary_lift(const BoundaryFunction& f, hemisphere h, Eigen::Index dim) {
  auto c = f.fourier();
  const long b = bandwidth(f);
  double l1 = 0.0;
  for (auto v : c) l1 += std::abs(v);
  for (auto& v : c)
    if (std::abs(v) <= 1e-15 * l1) v = 0.0;  // same threshold as bandwidth()
  cmat m = cmat::Zero(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index k = std::max<Eigen::Index>(0, j - b); k < std::min<Eigen::Index>(dim, j + b + 1); ++k) {
      const long d = static_cast<long>(k - j);
      m(j, k) = detail::mode(c, h == hemisphere::upper ? d : -d);
    }
  return m;
}

/// Reads the boundary function off row `row` of a represented operator, which
/// must lie beyond the finite part: fhat_m = M(row, row + m) (upper) or
/// M(row + m, row) (lower), for |m| < grid/2.
inline BoundaryFunction recover_boundary(const cmat& M, Eigen::Index row, hemisphere h, std::size_t grid) {
  const long g = static_cast<long>(grid);
  if (row < g / 2 || row + g / 2 > M.rows())
    throw error(errc::invalid_argument, "recovery row needs grid/2 entries on each side");
  std::vector<cplx> c(grid, 0.0);
  for (long m = -g / 2 + 1; m < g / 2; ++m) {
    const Eigen::Index k = row + m;
    c[static_cast<std::size_t>((m + g) % g)] = h == hemisphere::upper ? M(row, k) : M(k, row);
  }
  return BoundaryFunction::from_fourier(c);
}

/// Radial cutoff chi(s) = 1 - (1 - s^2/4)^3 for s < 2 and 1 beyond.
inline double radial_cutoff(double s) {
  if (s >= 2.0) return 1.0;
  const double u = 1.0 - 0.25 * s * s;
  return 1.0 - u * u * u;
}

/// Diagonal coefficient of the Berezin-Toeplitz quantization of
/// e^{i m theta} chi(|w|): the entry at (j, j + m), m >= 0, in the upper orientation.
inline double berezin_toeplitz_coefficient(int j, int m) {
  static const quad::rule gl = quad::gauss_legendre(48, 0.0, std::sqrt(2.0));
  const double lognorm = 0.5 * (std::lgamma(j + 1.0) + std::lgamma(j + m + 1.0));
  const double full = std::exp(std::lgamma(j + 0.5 * m + 1.0) - lognorm);
  // Subtract the part removed by the cutoff: 2 int_0^sqrt2 (1 - r^2/2)^3 e^{-r^2} r^{2j+m+1} dr.
  double cut = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double r = gl.nodes[i], u = 1.0 - 0.5 * r * r;
    cut += gl.weights[i] * 2.0 * u * u * u * std::exp(-r * r + (2.0 * j + m + 1.0) * std::log(r) - lognorm);
  }
  return full - cut;
}

/// Berezin-Toeplitz quantization of f(w/|w|) chi(|w|) in the upper orientation.
/// Differs from boundary_lift by a compact operator.
inline cmat berezin_toeplitz_lift(const BoundaryFunction& f, Eigen::Index dim) {
  const auto c = f.fourier();
  const long b = bandwidth(f);
  cmat m = cmat::Zero(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j)
    for (long d = 0; d <= b && j + d < dim; ++d) {
      const double coef = berezin_toeplitz_coefficient(static_cast<int>(j), static_cast<int>(d));
      m(j, j + d) += detail::mode(c, d) * coef;
      if (d > 0) m(j + d, j) += detail::mode(c, -d) * coef;
    }
  return m;
}

/// Element of one hemisphere algebra: lift(boundary) + finite.
class WeylElement {
 public:
  WeylElement(hemisphere side, BoundaryFunction boundary, cmat finite)
      : side_(side), boundary_(std::move(boundary)), finite_(std::move(finite)) {
    if (finite_.rows() != finite_.cols() || finite_.rows() < 1)
      throw error(errc::invalid_argument, "finite part must be a non-empty square matrix");
    if (!finite_.allFinite()) throw error(errc::invalid_argument, "finite part has non-finite entries");
  }

  static WeylElement constant(hemisphere side, std::size_t grid, cplx c) {
    return {side, BoundaryFunction::constant(grid, c), cmat::Zero(1, 1)};
  }
  static WeylElement unit(hemisphere side, std::size_t grid) { return constant(side, grid, 1.0); }

  hemisphere side() const noexcept { return side_; }
  const BoundaryFunction& boundary() const noexcept { return boundary_; }
  const cmat& finite() const noexcept { return finite_; }
  Eigen::Index finite_dim() const noexcept { return finite_.rows(); }
  FockTruncation trunc() const { return build_truncation(1, static_cast<int>(finite_dim()) - 1); }
  FockOperator finite_operator() const { return {trunc(), finite_}; }
  int boundary_bandwidth() const { return bandwidth(boundary_); }

  /// Compression of the represented operator to the first dim basis vectors.
  cmat matrix(Eigen::Index dim) const { return boundary_lift(boundary_, side_, dim) + resize_padded(finite_, dim); }
  FockOperator at_order(int N) const {
    return {build_truncation(1, N), matrix(static_cast<Eigen::Index>(N) + 1)};
  }

  /// Order at which the finite part and the lift bandwidth are fully visible.
  int natural_order() const { return static_cast<int>(finite_dim()) + 2 * boundary_bandwidth() + 16; }

 private:
  hemisphere side_;
  BoundaryFunction boundary_;
  cmat finite_;
};

namespace detail {

inline cmat trimmed(const cmat& m) {
  const double tol = 1e-14 * std::max(1.0, m.size() ? m.cwiseAbs().maxCoeff() : 0.0);
  const Eigen::Index d = std::max<Eigen::Index>(1, support_size(m, tol));
  return m.topLeftCorner(d, d);
}

}  // namespace detail

inline WeylElement compose(const WeylElement& a, const WeylElement& b) {
  if (a.side() != b.side()) throw error(errc::invalid_argument, "compose: elements of different hemispheres");
  const Eigen::Index bf = a.boundary_bandwidth(), bg = b.boundary_bandwidth();
  const Eigen::Index dn = std::max({bf, bg, a.finite_dim() + bg, b.finite_dim() + bf, Eigen::Index{1}});
  const Eigen::Index W = dn + bf + bg + 1;
  const BoundaryFunction fg = a.boundary() * b.boundary();
  const cmat prod = a.matrix(W) * b.matrix(W);
  const cmat f = (prod - boundary_lift(fg, a.side(), W)).topLeftCorner(dn, dn);
  return {a.side(), fg, detail::trimmed(f)};
}

/// Inverse of an invertible hemisphere element. The boundary must have winding
/// zero; the finite part of the inverse is located by finite sections of
/// growing size.
inline WeylElement inverse(const WeylElement& a) {
  const auto& f = a.boundary();
  if (f.min_modulus() <= 1e-12) throw error(errc::not_invertible, "hemisphere boundary vanishes");
  int wind = 0;
  try {
    wind = winding_number(f);
  } catch (const error& e) {
    throw error(errc::not_invertible, std::string("hemisphere boundary: ") + e.what());
  }
  if (wind != 0)
    throw error(errc::not_invertible, "hemisphere boundary has winding " + std::to_string(wind) + " (nonzero Fredholm index)");
  const BoundaryFunction g = f.reciprocal();
  const Eigen::Index bf = a.boundary_bandwidth(), bg = bandwidth(g);
  // Aliasing floor of the sampled reciprocal: its coefficients near the Nyquist mode.
  const auto gh = g.fourier();
  double gmax = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < gh.size(); ++i) {
    gmax = std::max(gmax, std::abs(gh[i]));
    if (std::abs(detail::fourier_mode(i, gh.size())) >= static_cast<long>(gh.size()) / 2 - 2) tail = std::max(tail, std::abs(gh[i]));
  }
  if (tail > 1e-9 * gmax)
    throw error(errc::invalid_argument, "reciprocal boundary is under-resolved on the grid; use a finer grid");
  for (Eigen::Index W = std::max<Eigen::Index>(64, 2 * (a.finite_dim() + bf + bg) + 16); W <= 2048; W *= 2) {
    const cmat M = a.matrix(W);
    Eigen::PartialPivLU<cmat> lu(M);
    if (lu.rcond() < 1e-13) throw error(errc::not_invertible, "hemisphere operator is singular");
    const cmat inv = lu.inverse();
    const cmat e = inv - boundary_lift(g, a.side(), W);
    const double tol = std::max(1e-13, 100.0 * tail / std::max(gmax, 1e-300)) * std::max(1.0, inv.cwiseAbs().maxCoeff());
    const Eigen::Index d = detail::support_size(e.topLeftCorner(W / 2, W / 2), tol);
    if (d <= W / 4) return {a.side(), g, detail::trimmed(e.topLeftCorner(std::max<Eigen::Index>(d, 1), std::max<Eigen::Index>(d, 1)))};
  }
  throw error(errc::not_invertible, "finite-section inverse did not localize (near-singular hemisphere)");
}

/// max of the boundary sample difference and the finite-part difference.
inline double distance(const WeylElement& a, const WeylElement& b) {
  if (a.side() != b.side()) throw error(errc::invalid_argument, "distance: elements of different hemispheres");
  const Eigen::Index d = std::max(a.finite_dim(), b.finite_dim());
  const double fin = (resize_padded(a.finite(), d) - resize_padded(b.finite(), d)).cwiseAbs().maxCoeff();
  return std::max(max_diff(a.boundary(), b.boundary()), fin);
}

/// The transpose of the operator, read as an element of the other hemisphere.
/// lift_upper(f)^T = lift_lower(f), so the boundary is unchanged.
inline WeylElement transpose_to_other(const WeylElement& a) {
  const hemisphere other = a.side() == hemisphere::upper ? hemisphere::lower : hemisphere::upper;
  return {other, a.boundary(), a.finite().transpose()};
}

/// U(phi) A U(phi)^*, U(phi) = diag(e^{-i k phi}).
inline WeylElement rotate(const WeylElement& a, double phi) {
  const Eigen::Index d = a.finite_dim();
  cvec u(d);
  for (Eigen::Index k = 0; k < d; ++k) u(k) = std::polar(1.0, -static_cast<double>(k) * phi);
  const cmat f = u.asDiagonal() * a.finite() * u.conjugate().asDiagonal();
  const double shift = a.side() == hemisphere::upper ? phi : -phi;
  return {a.side(), a.boundary().rotated(shift), f};
}

/// Samples c(theta_j, t_i) on G angles x 65 arc points.
class ClassicalArc {
 public:
  explicit ClassicalArc(cmat values) : v_(std::move(values)) {
    const auto g = static_cast<std::size_t>(v_.rows());
    if (g < 16 || !std::has_single_bit(g)) throw error(errc::invalid_argument, "arc angle grid must be a power of two >= 16");
    if (v_.cols() != arc_t_samples) throw error(errc::invalid_argument, "arc must have 65 t-samples");
    if (!v_.allFinite()) throw error(errc::invalid_argument, "arc has non-finite samples");
  }

  template <class F>
  static ClassicalArc from(std::size_t grid, F&& f) {
    cmat v(static_cast<Eigen::Index>(grid), arc_t_samples);
    for (std::size_t j = 0; j < grid; ++j)
      for (int i = 0; i < arc_t_samples; ++i) v(static_cast<Eigen::Index>(j), i) = f(BoundaryFunction::angle(j, grid), t_at(i));
    return ClassicalArc(std::move(v));
  }
  static ClassicalArc constant(std::size_t grid, cplx c) {
    return ClassicalArc(cmat::Constant(static_cast<Eigen::Index>(grid), arc_t_samples, c));
  }

  static double t_at(int i) { return -1.0 + 2.0 * i / (arc_t_samples - 1); }
  static constexpr int upper_column = arc_t_samples - 1;
  static constexpr int middle_column = (arc_t_samples - 1) / 2;

  std::size_t grid_size() const noexcept { return static_cast<std::size_t>(v_.rows()); }
  const cmat& values() const noexcept { return v_; }
  cplx operator()(std::size_t j, int i) const { return v_(static_cast<Eigen::Index>(j), i); }

  BoundaryFunction slice(int i) const {
    std::vector<cplx> s(grid_size());
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = (*this)(j, i);
    return BoundaryFunction(std::move(s));
  }
  BoundaryFunction upper_slice() const { return slice(upper_column); }
  BoundaryFunction lower_slice() const { return slice(0); }

  double min_modulus(int first = 0, int last = arc_t_samples - 1) const {
    return v_.middleCols(first, last - first + 1).cwiseAbs().minCoeff();
  }

  /// Largest difference between neighbouring samples in either direction.
  double max_jump() const {
    double m = 0.0;
    const Eigen::Index G = v_.rows();
    for (Eigen::Index j = 0; j < G; ++j)
      for (int i = 0; i < arc_t_samples; ++i) {
        m = std::max(m, std::abs(v_((j + 1) % G, i) - v_(j, i)));
        if (i + 1 < arc_t_samples) m = std::max(m, std::abs(v_(j, i + 1) - v_(j, i)));
      }
    return m;
  }

  /// (theta, t) -> c(theta, -t); sample-exact because the t grid is symmetric.
  ClassicalArc reflected_t() const { return ClassicalArc(v_.rowwise().reverse()); }

  /// (theta, t) -> c(theta + phi, t).
  ClassicalArc rotated(double phi) const {
    cmat out(v_.rows(), v_.cols());
    for (int i = 0; i < arc_t_samples; ++i) {
      const auto s = slice(i).rotated(phi);
      for (std::size_t j = 0; j < s.size(); ++j) out(static_cast<Eigen::Index>(j), i) = s[j];
    }
    return ClassicalArc(std::move(out));
  }

  friend ClassicalArc operator*(const ClassicalArc& a, const ClassicalArc& b) {
    require_same(a, b);
    return ClassicalArc(a.v_.cwiseProduct(b.v_));
  }
  ClassicalArc reciprocal() const {
    if (v_.cwiseAbs().minCoeff() == 0.0) throw error(errc::not_invertible, "classical arc vanishes");
    return ClassicalArc(v_.cwiseInverse());
  }
  friend double max_diff(const ClassicalArc& a, const ClassicalArc& b) {
    require_same(a, b);
    return (a.v_ - b.v_).cwiseAbs().maxCoeff();
  }

 private:
  static void require_same(const ClassicalArc& a, const ClassicalArc& b) {
    if (a.v_.rows() != b.v_.rows()) throw error(errc::invalid_argument, "arc grids differ");
  }
  cmat v_;
};

struct ExtendedSymbol {
  WeylElement upper;
  WeylElement lower;
  ClassicalArc classical;

  ExtendedSymbol(WeylElement u, WeylElement l, ClassicalArc c)
      : upper(std::move(u)), lower(std::move(l)), classical(std::move(c)) {
    if (upper.side() != hemisphere::upper || lower.side() != hemisphere::lower)
      throw error(errc::invalid_argument, "hemisphere components are swapped");
    if (upper.boundary().size() != classical.grid_size() || lower.boundary().size() != classical.grid_size())
      throw error(errc::invalid_argument, "boundary and arc grids differ");
  }

  static ExtendedSymbol constant(cplx c, std::size_t grid = default_boundary_grid) {
    return {WeylElement::constant(hemisphere::upper, grid, c), WeylElement::constant(hemisphere::lower, grid, c),
            ClassicalArc::constant(grid, c)};
  }
  static ExtendedSymbol unit(std::size_t grid = default_boundary_grid) { return constant(1.0, grid); }

  std::size_t grid_size() const { return classical.grid_size(); }
};

struct ValidationReport {
  double corner_upper = 0.0;  // |upper.boundary - c(., +1)|
  double corner_lower = 0.0;  // |lower.boundary - c(., -1)|
  double arc_jump = 0.0;      // largest neighbouring-sample difference
  double continuity_modulus = 0.0;

  bool corners_ok(double tol = corner_tolerance) const { return corner_upper <= tol && corner_lower <= tol; }
  bool continuous() const { return arc_jump <= continuity_modulus; }
  bool ok(double tol = corner_tolerance) const { return corners_ok(tol) && continuous(); }
};

/// Declared continuity modulus: neighbouring arc samples may differ by at most
/// this fraction of the arc's sup norm.
inline constexpr double arc_continuity_fraction = 0.5;

inline ValidationReport validate(const ExtendedSymbol& s) {
  ValidationReport r;
  r.corner_upper = max_diff(s.upper.boundary(), s.classical.upper_slice());
  r.corner_lower = max_diff(s.lower.boundary(), s.classical.lower_slice());
  r.arc_jump = s.classical.max_jump();
  r.continuity_modulus = arc_continuity_fraction * std::max(1e-300, s.classical.values().cwiseAbs().maxCoeff());
  return r;
}

inline ExtendedSymbol compose(const ExtendedSymbol& a, const ExtendedSymbol& b) {
  return {compose(a.upper, b.upper), compose(a.lower, b.lower), a.classical * b.classical};
}

inline double distance(const ExtendedSymbol& a, const ExtendedSymbol& b) {
  return std::max({distance(a.upper, b.upper), distance(a.lower, b.lower), max_diff(a.classical, b.classical)});
}

struct InvertibilityCertificate {
  bool invertible = false;
  double delta = default_invertibility_delta;
  double min_classical = 0.0;
  int order = 0;                        // N; the second order is N + 4
  double upper_singular[2] = {0.0, 0.0};  // at N and N + 4
  double lower_singular[2] = {0.0, 0.0};

  double min_singular() const {
    return std::min({upper_singular[0], upper_singular[1], lower_singular[0], lower_singular[1]});
  }
};

namespace detail {

// Minimal singular values at N and N + 4; throws when they straddle delta.
inline void hemisphere_singulars(const WeylElement& a, int N, double delta, double out[2]) {
  out[0] = min_singular_value(a.matrix(N + 1));
  out[1] = min_singular_value(a.matrix(N + 5));
  if ((out[0] > delta) != (out[1] > delta))
    throw error(errc::unstable_certificate, "minimal singular value crosses delta between orders " + std::to_string(N) +
                                               " and " + std::to_string(N + 4));
}

}  // namespace detail

/// order < 0 selects the natural order of the two hemisphere elements.
inline InvertibilityCertificate is_invertible(const ExtendedSymbol& s, double delta = default_invertibility_delta,
                                              int order = -1) {
  InvertibilityCertificate c;
  c.delta = delta;
  c.order = order >= 0 ? order : std::max(s.upper.natural_order(), s.lower.natural_order());
  c.min_classical = s.classical.min_modulus();
  detail::hemisphere_singulars(s.upper, c.order, delta, c.upper_singular);
  detail::hemisphere_singulars(s.lower, c.order, delta, c.lower_singular);
  c.invertible = c.min_classical > delta && c.min_singular() > delta;
  return c;
}

inline ExtendedSymbol inverse(const ExtendedSymbol& s) {
  auto wrap = [](const char* part, auto&& fn) {
    try {
      return fn();
    } catch (const error& e) {
      if (e.code() != errc::not_invertible) throw;
      throw error(errc::not_invertible, std::string(part) + " component: " + e.what());
    }
  };
  auto u = wrap("upper", [&] { return inverse(s.upper); });
  auto l = wrap("lower", [&] { return inverse(s.lower); });
  auto c = wrap("classical", [&] { return s.classical.reciprocal(); });
  return {std::move(u), std::move(l), std::move(c)};
}

/// Upper becomes U(pi) A_-^T U(pi), lower becomes U(pi) A_+^T U(pi); arc (theta, t) -> (theta + pi, -t).
inline ExtendedSymbol dagger(const ExtendedSymbol& s) {
  const double pi = std::numbers::pi;
  return {rotate(transpose_to_other(s.lower), pi), rotate(transpose_to_other(s.upper), pi),
          s.classical.reflected_t().rotated(pi)};
}

/// Upper becomes A_-^T, lower becomes A_+^T; arc (theta, t) -> (theta, -t).
inline ExtendedSymbol op_involution(const ExtendedSymbol& s) {
  return {transpose_to_other(s.lower), transpose_to_other(s.upper), s.classical.reflected_t()};
}

/// Point s in [0, 1] of the path from op_involution (s = 0) to dagger (s = 1):
/// the H*-rotation by pi s composed with the op involution.
inline ExtendedSymbol dagger_op_path_point(const ExtendedSymbol& sym, double s) {
  const double phi = std::numbers::pi * s;
  return {rotate(transpose_to_other(sym.lower), phi), rotate(transpose_to_other(sym.upper), -phi),
          sym.classical.reflected_t().rotated(phi)};
}

struct HomotopySample {
  double s;
  ExtendedSymbol symbol;
  InvertibilityCertificate certificate;
};

struct HomotopyPath {
  std::vector<HomotopySample> samples;
  double op_endpoint_residual = 0.0;
  double dagger_endpoint_residual = 0.0;

  double min_classical() const {
    double m = INFINITY;
    for (const auto& p : samples) m = std::min(m, p.certificate.min_classical);
    return m;
  }
  double min_singular() const {
    double m = INFINITY;
    for (const auto& p : samples) m = std::min(m, p.certificate.min_singular());
    return m;
  }
};

inline HomotopyPath homotopy_dagger_to_op(const ExtendedSymbol& sym, int steps,
                                          double delta = default_invertibility_delta) {
  if (steps < 2) throw error(errc::invalid_argument, "homotopy needs at least 2 steps");
  if (!is_invertible(sym, delta).invertible) throw error(errc::not_invertible, "homotopy source is not invertible");
  HomotopyPath path;
  for (int k = 0; k < steps; ++k) {
    const double s = static_cast<double>(k) / (steps - 1);
    auto point = dagger_op_path_point(sym, s);
    auto cert = is_invertible(point, delta);
    if (!cert.invertible)
      throw error(errc::path_degenerate, "path sample s = " + fmt(s) + " is not invertible");
    path.samples.push_back({s, std::move(point), cert});
  }
  path.op_endpoint_residual = distance(path.samples.front().symbol, op_involution(sym));
  path.dagger_endpoint_residual = distance(path.samples.back().symbol, dagger(sym));
  return path;
}

namespace detail {

inline bool lower_half_invertible(const ExtendedSymbol& s, double delta) {
  if (s.classical.min_modulus(0, ClassicalArc::middle_column) <= delta) return false;
  try {
    if (winding_number(s.lower.boundary()) != 0) return false;
  } catch (const error&) {
    return false;
  }
  double sv[2];
  hemisphere_singulars(s.lower, s.lower.natural_order(), delta, sv);
  return std::min(sv[0], sv[1]) > delta;
}

}  // namespace detail

/// The op-symmetric symbol agreeing with s on the lower half.
inline ExtendedSymbol symmetrize_tilde(const ExtendedSymbol& s, double delta = default_invertibility_delta) {
  if (!detail::lower_half_invertible(s, delta))
    throw error(errc::lower_half_not_invertible, "lower hemisphere or t <= 0 arc is not invertible");
  cmat v = s.classical.values();
  for (int i = ClassicalArc::middle_column + 1; i < arc_t_samples; ++i) v.col(i) = v.col(arc_t_samples - 1 - i);
  return {transpose_to_other(s.lower), s.lower, ClassicalArc(std::move(v))};
}

struct HermiteCertificate {
  double lower_residual = 0.0;      // distance of tau's lower component from 1
  double lower_arc_residual = 0.0;  // max |tau.classical - 1| over t <= 0
  double corner_residual = 0.0;     // |tau_+ boundary - tau.classical(., +1)|
  double min_arc_modulus = 0.0;     // min |tau.classical| over t in [0, 1]
  double delta = default_invertibility_delta;
  bool passed = false;
};

struct HermiteReduction {
  WeylElement tau_plus;
  ExtendedSymbol tau;
  HermiteCertificate certificate;
};

inline HermiteReduction hermite_reduction(const ExtendedSymbol& s, double delta = default_invertibility_delta) {
  if (!is_invertible(s, delta).invertible) throw error(errc::not_invertible, "symbol is not invertible");
  const ExtendedSymbol st = symmetrize_tilde(s, delta);
  WeylElement up = compose(s.upper, inverse(st.upper));
  // The lower halves agree sample for sample, so their quotient is exactly 1;
  // the same holds for arc samples at t <= 0.
  WeylElement lo = distance(s.lower, st.lower) == 0.0 ? WeylElement::unit(hemisphere::lower, s.grid_size())
                                                      : compose(s.lower, inverse(st.lower));
  cmat v(s.classical.values().rows(), arc_t_samples);
  for (Eigen::Index j = 0; j < v.rows(); ++j)
    for (int i = 0; i < arc_t_samples; ++i) {
      const cplx a = s.classical.values()(j, i), b = st.classical.values()(j, i);
      v(j, i) = a == b ? cplx(1.0) : a / b;
    }
  ExtendedSymbol tau{std::move(up), std::move(lo), ClassicalArc(std::move(v))};

  HermiteCertificate c;
  c.delta = delta;
  c.lower_residual = distance(tau.lower, WeylElement::unit(hemisphere::lower, s.grid_size()));
  c.lower_arc_residual =
      (tau.classical.values().leftCols(ClassicalArc::middle_column + 1).array() - cplx(1.0)).abs().maxCoeff();
  c.corner_residual = max_diff(tau.upper.boundary(), tau.classical.upper_slice());
  c.min_arc_modulus = tau.classical.min_modulus(ClassicalArc::middle_column, ClassicalArc::upper_column);
  if (c.lower_residual > corner_tolerance || c.lower_arc_residual > corner_tolerance)
    throw error(errc::unstable_certificate, "tau is not 1 on the lower half (residual " +
                                                fmt(std::max(c.lower_residual, c.lower_arc_residual)) + ")");
  if (c.min_arc_modulus <= delta)
    throw error(errc::corner_not_nullhomotopic, "arc from the upper corner to 1 passes through " +
                                                    fmt(c.min_arc_modulus));
  c.passed = true;
  return {tau.upper, std::move(tau), c};
}

}  // namespace heisen
