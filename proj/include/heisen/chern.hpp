// Topological side: sampled model 3-manifolds, odd Chern forms of families of
// invertible matrices, Todd forms from curvature samples and the integral
// Index = \int_M Ch(tau_+) ^ Td(M).
//
// Forms are stored by coordinate components in the chart of the manifold
// (1-forms: dx1, dx2, dx3; 2-forms: dx2^dx3, dx3^dx1, dx1^dx2; 3-forms:
// dx1^dx2^dx3), so integration needs no metric. Periodic axes use centered
// differences and the rectangle rule; the polar axes of S1xS2 and S3 carry
// nodes at both ends with one-sided end stencils and trapezoid weights, a
// pairing for which the integral of every derivative telescopes exactly.
#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <future>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "heisen/error.hpp"
#include "heisen/exsym.hpp"
#include "heisen/fock.hpp"
#include "heisen/winding.hpp"

namespace heisen {

enum class manifold_kind { T3, S1xS2, S3 };

inline std::string_view manifold_name(manifold_kind k) {
  switch (k) {
    case manifold_kind::T3: return "T3";
    case manifold_kind::S1xS2: return "S1xS2";
    case manifold_kind::S3: return "S3";
  }
  return "?";
}

inline manifold_kind parse_manifold(std::string_view s) {
  if (s == "T3") return manifold_kind::T3;
  if (s == "S1xS2") return manifold_kind::S1xS2;
  if (s == "S3") return manifold_kind::S3;
  throw error(errc::invalid_argument, "unknown manifold '" + std::string(s) + "'");
}

inline constexpr int default_grid_resolution = 32;

using GridPoint = std::array<double, 3>;

namespace detail {

template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), 16));
  if (workers == 1 || n < 256) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::future<void>> jobs;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t lo = 0; lo < n; lo += chunk)
    jobs.push_back(std::async(std::launch::async, [&f, lo, hi = std::min(n, lo + chunk)] {
      for (std::size_t i = lo; i < hi; ++i) f(i);
    }));
  for (auto& j : jobs) j.get();
}

}  // namespace detail

/// Structured grid on one of the model 3-manifolds.
///   T3:    x, y, z in [0,1), all periodic.
///   S1xS2: (phi, theta, psi), phi and psi periodic in [0, 2pi), theta in [0, pi].
///   S3:    Hopf chart (eta, xi1, xi2) with (z1, z2) = (cos eta e^{i xi1}, sin eta e^{i xi2}),
///          eta in [0, pi/2], xi1 and xi2 periodic.
class GridManifold {
 public:
  GridManifold(manifold_kind kind, int resolution) : kind_(kind), n_(resolution) {
    if (resolution < 4) throw error(errc::invalid_argument, "grid resolution must be >= 4");
    const double tau = 2.0 * std::numbers::pi;
    switch (kind) {
      case manifold_kind::T3: axes_ = {{{1.0, true}, {1.0, true}, {1.0, true}}}; break;
      case manifold_kind::S1xS2: axes_ = {{{tau, true}, {std::numbers::pi, false}, {tau, true}}}; break;
      case manifold_kind::S3: axes_ = {{{std::numbers::pi / 2, false}, {tau, true}, {tau, true}}}; break;
    }
  }

  static GridManifold torus(int n = default_grid_resolution) { return {manifold_kind::T3, n}; }
  static GridManifold s1_s2(int n = default_grid_resolution) { return {manifold_kind::S1xS2, n}; }
  static GridManifold s3(int n = default_grid_resolution) { return {manifold_kind::S3, n}; }

  manifold_kind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return manifold_name(kind_); }
  int resolution() const noexcept { return n_; }
  bool periodic(int a) const { return axes_[a].periodic; }
  double length(int a) const { return axes_[a].length; }

  /// Intervals per axis are always `resolution`; closed axes carry one extra node.
  int nodes(int a) const { return axes_[a].periodic ? n_ : n_ + 1; }
  double spacing(int a) const { return axes_[a].length / n_; }
  double coordinate(int a, int i) const { return i * spacing(a); }
  std::size_t size() const {
    return static_cast<std::size_t>(nodes(0)) * static_cast<std::size_t>(nodes(1)) * static_cast<std::size_t>(nodes(2));
  }

  std::size_t flat(std::array<int, 3> i) const {
    return (static_cast<std::size_t>(i[0]) * static_cast<std::size_t>(nodes(1)) + static_cast<std::size_t>(i[1])) *
               static_cast<std::size_t>(nodes(2)) +
           static_cast<std::size_t>(i[2]);
  }
  std::array<int, 3> multi(std::size_t f) const {
    const auto n1 = static_cast<std::size_t>(nodes(1)), n2 = static_cast<std::size_t>(nodes(2));
    return {static_cast<int>(f / (n1 * n2)), static_cast<int>((f / n2) % n1), static_cast<int>(f % n2)};
  }
  GridPoint point(std::size_t f) const {
    const auto i = multi(f);
    return {coordinate(0, i[0]), coordinate(1, i[1]), coordinate(2, i[2])};
  }

  /// Quadrature weight of node i along axis a.
  double weight(int a, int i) const {
    const double h = spacing(a);
    if (!periodic(a) && (i == 0 || i == n_)) return h / 2;
    return h;
  }
  double cell_weight(std::size_t f) const {
    const auto i = multi(f);
    return weight(0, i[0]) * weight(1, i[1]) * weight(2, i[2]);
  }

  /// Derivative stencil at node i along axis a: pairs (offset, coefficient).
  std::vector<std::pair<int, double>> stencil(int a, int i) const {
    const double h = spacing(a);
    if (!periodic(a)) {
      if (i == 0) return {{0, -1 / h}, {1, 1 / h}};
      if (i == n_) return {{-1, -1 / h}, {0, 1 / h}};
    }
    return {{-1, -0.5 / h}, {1, 0.5 / h}};
  }

  std::size_t shifted(std::size_t f, int a, int offset) const {
    auto i = multi(f);
    const int n = nodes(a);
    i[a] = periodic(a) ? ((i[a] + offset) % n + n) % n : i[a] + offset;
    return flat(i);
  }

  /// Axes (a, b) spanning the closed coordinate surfaces at fixed value of
  /// the remaining axis; these are the declared 2-cycles.
  std::vector<int> cycle_normals() const {
    switch (kind_) {
      case manifold_kind::T3: return {0, 1, 2};
      case manifold_kind::S1xS2: return {0, 1};  // the S2 at fixed phi and the torus at fixed theta
      case manifold_kind::S3: return {0};        // the Clifford tori at fixed eta
    }
    return {};
  }

  bool operator==(const GridManifold& o) const { return kind_ == o.kind_ && n_ == o.n_; }

 private:
  struct Axis {
    double length;
    bool periodic;
  };
  manifold_kind kind_;
  int n_;
  std::array<Axis, 3> axes_{};
};

/// Sampled differential form of degree 0..3 on a grid manifold.
struct SampledForm {
  int degree = 0;
  std::vector<std::vector<cplx>> comp;  // comp[c][flat index]

  static SampledForm zero(const GridManifold& M, int degree) {
    static constexpr int counts[] = {1, 3, 3, 1};
    if (degree < 0 || degree > 3) throw error(errc::invalid_argument, "form degree must be in 0..3");
    return {degree, std::vector<std::vector<cplx>>(counts[degree], std::vector<cplx>(M.size(), 0.0))};
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& c : comp)
      for (auto v : c) m = std::max(m, std::abs(v));
    return m;
  }
};

inline SampledForm operator+(SampledForm a, const SampledForm& b) {
  if (a.degree != b.degree || a.comp.size() != b.comp.size() || a.comp[0].size() != b.comp[0].size())
    throw error(errc::invalid_argument, "adding forms of different shape");
  for (std::size_t c = 0; c < a.comp.size(); ++c)
    for (std::size_t i = 0; i < a.comp[c].size(); ++i) a.comp[c][i] += b.comp[c][i];
  return a;
}

inline SampledForm operator*(cplx s, SampledForm a) {
  for (auto& c : a.comp)
    for (auto& v : c) v *= s;
  return a;
}

/// Finite-difference derivative of a sampled function along an axis.
inline std::vector<cplx> partial(const GridManifold& M, const std::vector<cplx>& f, int a) {
  std::vector<cplx> out(f.size());
  detail::parallel_for(f.size(), [&](std::size_t p) {
    const int i = M.multi(p)[a];
    cplx s = 0.0;
    for (auto [off, c] : M.stencil(a, i)) s += c * f[M.shifted(p, a, off)];
    out[p] = s;
  });
  return out;
}

inline SampledForm exterior_derivative(const GridManifold& M, const SampledForm& w) {
  SampledForm d = SampledForm::zero(M, std::min(w.degree + 1, 3));
  auto add = [](std::vector<cplx>& acc, const std::vector<cplx>& v, double s) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s * v[i];
  };
  switch (w.degree) {
    case 0:
      for (int a = 0; a < 3; ++a) d.comp[a] = partial(M, w.comp[0], a);
      break;
    case 1:
      // (d w)_{bc} = d_b w_c - d_c w_b for the cyclic pairs (b, c) = (1,2), (2,0), (0,1).
      for (int a = 0; a < 3; ++a) {
        const int b = (a + 1) % 3, c = (a + 2) % 3;
        add(d.comp[a], partial(M, w.comp[c], b), 1.0);
        add(d.comp[a], partial(M, w.comp[b], c), -1.0);
      }
      break;
    case 2:
      for (int a = 0; a < 3; ++a) add(d.comp[0], partial(M, w.comp[a], a), 1.0);
      break;
    default:
      break;  // top degree: d w = 0
  }
  return d;
}

/// Largest sample of d w; 0 for top-degree forms.
inline double closedness_residual(const GridManifold& M, const SampledForm& w) {
  return w.degree >= 3 ? 0.0 : exterior_derivative(M, w).max_abs();
}

/// 1-form ^ 2-form.
inline SampledForm wedge(const GridManifold& M, const SampledForm& a, const SampledForm& b) {
  if (a.degree != 1 || b.degree != 2) throw error(errc::invalid_argument, "wedge expects a 1-form and a 2-form");
  SampledForm out = SampledForm::zero(M, 3);
  for (std::size_t p = 0; p < M.size(); ++p)
    out.comp[0][p] = a.comp[0][p] * b.comp[0][p] + a.comp[1][p] * b.comp[1][p] + a.comp[2][p] * b.comp[2][p];
  return out;
}

inline cplx integrate(const GridManifold& M, const SampledForm& w) {
  if (w.degree != 3) throw error(errc::invalid_argument, "only 3-forms integrate over the manifold");
  cplx s = 0.0;
  for (std::size_t p = 0; p < M.size(); ++p) s += M.cell_weight(p) * w.comp[0][p];
  return s;
}

/// Integral of a 1-form over the closed coordinate circle along periodic axis a
/// through node `through`.
inline cplx circle_integral(const GridManifold& M, const SampledForm& w, int a, std::size_t through = 0) {
  if (w.degree != 1 || !M.periodic(a)) throw error(errc::invalid_argument, "need a 1-form and a periodic axis");
  cplx s = 0.0;
  std::size_t p = through;
  for (int i = 0; i < M.nodes(a); ++i, p = M.shifted(p, a, 1)) s += M.spacing(a) * w.comp[a][p];
  return s;
}

/// Integral of a 2-form over the coordinate surface {x_normal = node slice}.
inline cplx cycle_integral(const GridManifold& M, const SampledForm& w, int normal, int slice) {
  if (w.degree != 2) throw error(errc::invalid_argument, "cycle integrals take 2-forms");
  const int b = (normal + 1) % 3, c = (normal + 2) % 3;
  cplx s = 0.0;
  std::array<int, 3> i{};
  i[normal] = slice;
  for (i[b] = 0; i[b] < M.nodes(b); ++i[b])
    for (i[c] = 0; i[c] < M.nodes(c); ++i[c]) s += M.weight(b, i[b]) * M.weight(c, i[c]) * w.comp[normal][M.flat(i)];
  return s;
}

/// Grid family of invertible m x m matrices.
class AutomorphismFamily {
 public:
  AutomorphismFamily(GridManifold M, std::vector<cmat> g) : M_(std::move(M)), g_(std::move(g)) {
    if (g_.size() != M_.size()) throw error(errc::invalid_argument, "family size does not match the grid");
    m_ = g_.front().rows();
    for (const auto& x : g_)
      if (x.rows() != m_ || x.cols() != m_) throw error(errc::invalid_argument, "family matrices must be square of one size");
  }

  template <class F>
  static AutomorphismFamily sample(const GridManifold& M, F&& f) {
    std::vector<cmat> g(M.size());
    detail::parallel_for(M.size(), [&](std::size_t p) { g[p] = f(M.point(p)); });
    return {M, std::move(g)};
  }

  const GridManifold& manifold() const noexcept { return M_; }
  Eigen::Index dim() const noexcept { return m_; }
  const cmat& operator[](std::size_t p) const { return g_[p]; }
  const std::vector<cmat>& values() const noexcept { return g_; }

  double min_singular() const {
    std::vector<double> s(g_.size());
    detail::parallel_for(g_.size(), [&](std::size_t p) { s[p] = detail::min_singular_value(g_[p]); });
    return *std::min_element(s.begin(), s.end());
  }

  /// Largest ||g(q) - g(p)|| / ||g(p)|| over grid neighbours (continuity surrogate).
  double max_relative_step() const {
    double worst = 0.0;
    for (std::size_t p = 0; p < g_.size(); ++p)
      for (int a = 0; a < 3; ++a) {
        if (!M_.periodic(a) && M_.multi(p)[a] == M_.nodes(a) - 1) continue;
        const auto q = M_.shifted(p, a, 1);
        worst = std::max(worst, (g_[q] - g_[p]).norm() / std::max(g_[p].norm(), 1e-300));
      }
    return worst;
  }

  friend AutomorphismFamily operator*(const AutomorphismFamily& a, const AutomorphismFamily& b) {
    if (!(a.M_ == b.M_) || a.m_ != b.m_) throw error(errc::invalid_argument, "families live on different grids or fibers");
    std::vector<cmat> g(a.g_.size());
    for (std::size_t p = 0; p < g.size(); ++p) g[p] = a.g_[p] * b.g_[p];
    return {a.M_, std::move(g)};
  }

 private:
  GridManifold M_;
  std::vector<cmat> g_;
  Eigen::Index m_ = 0;
};

/// Adjacent samples may differ by at most this fraction of their norm; it keeps
/// the phase change of det g over two cells below pi.
inline constexpr double max_family_step = 1.0;

/// Normalizations of the odd Chern forms, fixed by the calibrations
/// \oint_{S1} Ch_1(e^{2 pi i x}) = 1 and \int_{S3} Ch_3(degree-one SU(2) map) = 1.
inline const cplx chern1_normalization = 1.0 / cplx(0.0, 2.0 * std::numbers::pi);
inline const double chern3_normalization = -1.0 / (24.0 * std::numbers::pi * std::numbers::pi);

inline void require_invertible_on_grid(const AutomorphismFamily& g, double delta) {
  const double s = g.min_singular();
  if (!(s > delta))
    throw error(errc::not_invertible_on_grid, "smallest singular value " + fmt(s) + " <= " + fmt(delta));
  const double step = g.max_relative_step();
  if (step > max_family_step)
    throw error(errc::invalid_argument, "family is under-resolved on the grid (relative step " + fmt(step) + ")");
}

/// Ch_1 (k = 0) or Ch_3 (k = 1) of the family. Ch_1 is taken as the derivative
/// of log det g, built from principal logarithms of determinant ratios so that
/// no global branch is needed; Ch_3 = c * 3 tr(A1 [A2, A3]) with A_a = g^{-1} d_a g.
inline SampledForm odd_chern_form(const AutomorphismFamily& g, int k, double delta = default_invertibility_delta) {
  if (k != 0 && k != 1) throw error(errc::invalid_argument, "order k must be 0 or 1 in dimension 3");
  require_invertible_on_grid(g, delta);
  const GridManifold& M = g.manifold();
  const std::size_t n = M.size();
  if (k == 0) {
    std::vector<cplx> det(n);
    detail::parallel_for(n, [&](std::size_t p) { det[p] = g[p].determinant(); });
    SampledForm w = SampledForm::zero(M, 1);
    detail::parallel_for(n, [&](std::size_t p) {
      const auto i = M.multi(p);
      for (int a = 0; a < 3; ++a) {
        cplx s = 0.0;
        for (auto [off, c] : M.stencil(a, i[a]))
          if (off != 0) s += c * std::log(det[M.shifted(p, a, off)] / det[p]);
        w.comp[a][p] = chern1_normalization * s;
      }
    });
    return w;
  }
  SampledForm w = SampledForm::zero(M, 3);
  detail::parallel_for(n, [&](std::size_t p) {
    const auto i = M.multi(p);
    const Eigen::PartialPivLU<cmat> lu(g[p]);
    std::array<cmat, 3> A;
    for (int a = 0; a < 3; ++a) {
      cmat d = cmat::Zero(g.dim(), g.dim());
      for (auto [off, c] : M.stencil(a, i[a])) d += c * g[M.shifted(p, a, off)];
      A[a] = lu.solve(d);
    }
    w.comp[0][p] = chern3_normalization * 3.0 * (A[0] * (A[1] * A[2] - A[2] * A[1])).trace();
  });
  return w;
}

/// Two-form samples standing for the first Chern form of the contact bundle.
class CurvatureData {
 public:
  CurvatureData(GridManifold M, SampledForm two_form) : M_(std::move(M)), w_(std::move(two_form)) {
    if (w_.degree != 2 || w_.comp.size() != 3 || w_.comp[0].size() != M_.size())
      throw error(errc::invalid_argument, "curvature data must be a 2-form sampled on the grid");
  }

  static CurvatureData flat(const GridManifold& M) { return {M, SampledForm::zero(M, 2)}; }

  /// Constant components (b23, b31, b12); closed on the torus.
  static CurvatureData constant(const GridManifold& M, std::array<double, 3> b) {
    auto w = SampledForm::zero(M, 2);
    for (int c = 0; c < 3; ++c) std::fill(w.comp[c].begin(), w.comp[c].end(), cplx(b[c]));
    return {M, std::move(w)};
  }

  /// On S1xS2: k times the area form of the S2 factor, scaled so that the
  /// discrete sphere integral is exactly k.
  static CurvatureData sphere_class(const GridManifold& M, int k) {
    if (M.kind() != manifold_kind::S1xS2) throw error(errc::invalid_argument, "sphere_class needs S1xS2");
    auto w = SampledForm::zero(M, 2);
    double total = 0.0;
    for (int i = 0; i < M.nodes(1); ++i) total += M.weight(1, i) * std::sin(M.coordinate(1, i));
    total *= M.length(2);
    for (std::size_t p = 0; p < M.size(); ++p) w.comp[0][p] = k * std::sin(M.point(p)[1]) / total;
    return {M, std::move(w)};
  }

  const GridManifold& manifold() const noexcept { return M_; }
  const SampledForm& form() const noexcept { return w_; }

  double closedness() const { return closedness_residual(M_, w_); }

  /// Largest distance to an integer over all declared 2-cycles.
  double integrality_residual() const {
    double worst = 0.0;
    for (int a : M_.cycle_normals())
      for (int s = 0; s < M_.nodes(a); ++s) {
        const cplx v = cycle_integral(M_, w_, a, s);
        worst = std::max(worst, std::abs(v - std::round(v.real())));
      }
    return worst;
  }

  void validate() const {
    if (const double c = closedness(); c > 1e-6) throw error(errc::invalid_argument, "curvature not closed (" + fmt(c) + ")");
    if (const double r = integrality_residual(); r > 1e-3)
      throw error(errc::invalid_argument, "curvature has a non-integral period (residual " + fmt(r) + ")");
  }

 private:
  GridManifold M_;
  SampledForm w_;
};

/// Even form 1 + c1/2 (degree-0 part is the constant 1).
struct ToddForm {
  double degree0 = 1.0;
  SampledForm degree2;
};

inline ToddForm todd_form(const CurvatureData& curv) {
  return {1.0, cplx(0.5) * curv.form()};
}

// ---------------------------------------------------------------------------
// Truncation of Weyl-element families

struct TruncationOptions {
  int N_cap = 64;
  int step = 4;
  double delta = default_invertibility_delta;
};

/// Grid point -> fiber element. Returning the same pointer for equal fibers
/// lets truncate_class compute them once.
using WeylFamily = std::function<std::shared_ptr<const WeylElement>(const GridPoint&)>;

namespace detail {

/// Geometric mean exp(mean log b) of a boundary function of winding zero.
inline cplx geometric_mean(const BoundaryFunction& b) {
  const std::size_t G = b.size();
  double phase = std::arg(b[0]), mean_phase = 0.0, mean_logabs = 0.0;
  for (std::size_t j = 0; j < G; ++j) {
    if (j > 0) phase += std::arg(b[j] / b[j - 1]);
    mean_phase += phase;
    mean_logabs += std::log(std::abs(b[j]));
  }
  return std::exp(cplx(mean_logabs, mean_phase) / static_cast<double>(G));
}

/// Element a T(b)^{-1}, whose boundary is 1, and the geometric mean of b.
struct FactoredFiber {
  WeylElement unit_boundary;
  cplx boundary_mean;
};

inline FactoredFiber factor_boundary(const WeylElement& a) {
  const BoundaryFunction& b = a.boundary();
  const std::size_t G = b.size();
  if (bandwidth(b) == 0) {
    const cplx b0 = b[0];
    return {WeylElement(a.side(), BoundaryFunction::constant(G, 1.0), a.finite() / b0), b0};
  }
  const WeylElement lifted(a.side(), b, cmat::Zero(1, 1));
  const WeylElement r = compose(a, inverse(lifted));
  return {WeylElement(a.side(), BoundaryFunction::constant(G, 1.0), r.finite()), geometric_mean(b)};
}

inline bool same_element(const WeylElement& a, const WeylElement& b) {
  return a.side() == b.side() && a.boundary().samples() == b.boundary().samples() &&
         a.finite().rows() == b.finite().rows() && a.finite() == b.finite();
}

}  // namespace detail

/// Matrices on V^N representing the K^1 class of a family of upper Weyl
/// elements. A fiber with winding-zero boundary b is factored as
/// (a T(b)^{-1}) T(b); the first factor is the identity up to a finite block
/// and is compressed to V^N, the Toeplitz factor is homotopic to its geometric
/// mean times the identity and enters on the vacuum level. Fibers with nonzero
/// winding are compressed directly. N grows by `step` until every fiber has
/// smallest singular value above delta at orders N and N + step.
inline AutomorphismFamily truncate_class(const GridManifold& M, const WeylFamily& family, int N,
                                         const TruncationOptions& opt = {}) {
  if (N < 0 || opt.step < 1) throw error(errc::invalid_argument, "need N >= 0 and step >= 1");
  struct Fiber {
    bool factored = false;
    WeylElement element = WeylElement::unit(hemisphere::upper, 16);
    cplx mean = 1.0;
  };
  // Fibers are computed once per distinct element; constant families cost one fiber.
  std::vector<std::shared_ptr<const WeylElement>> distinct;
  std::vector<std::size_t> slot(M.size());
  for (std::size_t p = 0; p < M.size(); ++p) {
    auto a = family(M.point(p));
    if (!a) throw error(errc::invalid_argument, "family returned no element");
    std::size_t k = 0;
    const std::size_t scan = std::min<std::size_t>(distinct.size(), 8);
    // Recent fibers first: neighbouring grid points often share an element.
    while (k < scan && distinct[distinct.size() - 1 - k] != a && !detail::same_element(*distinct[distinct.size() - 1 - k], *a)) ++k;
    if (k < scan) {
      slot[p] = distinct.size() - 1 - k;
    } else {
      slot[p] = distinct.size();
      distinct.push_back(std::move(a));
    }
  }
  std::vector<Fiber> fibers(distinct.size());
  detail::parallel_for(distinct.size(), [&](std::size_t k) {
    const WeylElement& a = *distinct[k];
    if (winding_number(a.boundary()) == 0) {
      auto fac = detail::factor_boundary(a);
      fibers[k] = {true, std::move(fac.unit_boundary), fac.boundary_mean};
    } else {
      fibers[k] = {false, a, 1.0};
    }
  });
  auto matrix_at = [&](std::size_t k, int order) {
    const Fiber& f = fibers[k];
    cmat m = f.element.matrix(order + 1);
    if (f.factored) m.col(0) *= f.mean;
    return m;
  };
  for (int n = N; n <= opt.N_cap; n += opt.step) {
    std::vector<char> ok(fibers.size());
    detail::parallel_for(fibers.size(), [&](std::size_t k) {
      ok[k] = detail::min_singular_value(matrix_at(k, n)) > opt.delta &&
              detail::min_singular_value(matrix_at(k, n + opt.step)) > opt.delta;
    });
    if (std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; })) {
      std::vector<cmat> mats(fibers.size());
      detail::parallel_for(fibers.size(), [&](std::size_t k) { mats[k] = matrix_at(k, n); });
      std::vector<cmat> g(M.size());
      for (std::size_t p = 0; p < M.size(); ++p) g[p] = mats[slot[p]];
      return {M, std::move(g)};
    }
  }
  throw error(errc::truncation_cap_exceeded, "no order up to " + std::to_string(opt.N_cap) + " passes the certificate");
}

// ---------------------------------------------------------------------------
// Index formula

struct ChernReport {
  double value = 0.0;
  long nearest_integer = 0;
  double residual = 0.0;
  int resolution = 0;
};

inline constexpr double integrality_tolerance = 0.05;

/// Raw value of \int_M [Ch_1 ^ Td_2 + Ch_3], without the integrality check.
inline cplx index_integral(const AutomorphismFamily& g, const CurvatureData& curv,
                           double delta = default_invertibility_delta) {
  if (!(g.manifold() == curv.manifold())) throw error(errc::invalid_argument, "family and curvature live on different grids");
  curv.validate();
  const GridManifold& M = g.manifold();
  const auto td = todd_form(curv);
  return integrate(M, wedge(M, odd_chern_form(g, 0, delta), td.degree2) + odd_chern_form(g, 1, delta));
}

/// Index integral with its nearest integer; NonIntegral when the value is
/// 0.05 or more away from it.
inline ChernReport index_formula(const AutomorphismFamily& g, const CurvatureData& curv,
                                 double delta = default_invertibility_delta) {
  const cplx v = index_integral(g, curv, delta);
  ChernReport r;
  r.value = v.real();
  r.nearest_integer = std::lround(v.real());
  r.residual = std::abs(v - static_cast<double>(r.nearest_integer));
  r.resolution = g.manifold().resolution();
  if (!(r.residual < integrality_tolerance))
    throw error(errc::non_integral, "index integral " + fmt(v.real()) + " (residual " + fmt(r.residual) + ")");
  return r;
}

/// Two-resolution extrapolation for a second-order quantity with h ratio 2.
inline double richardson(double coarse, double fine) { return (4.0 * fine - coarse) / 3.0; }

}  // namespace heisen
