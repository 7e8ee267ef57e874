// Polynomial symbols on the symplectic fiber H* = R^{2n}, their sharp
// products, Weyl quantization on truncated Fock spaces, symplectic pullbacks
// and boundary (equatorial) values.
//
// Frozen coordinate conventions, inherited by every other header:
//   * real coordinates (x_1..x_n, p_1..p_n), symplectic form
//     dtheta(u, v) = sum_j u_{x_j} v_{p_j} - u_{p_j} v_{x_j};
//   * complex coordinates w_j = x_j + i p_j; the compatible complex structure
//     is multiplication by i on w, i.e. (x, p) -> (-p, x);
//   * sharp products are the Moyal expansions of
//       a #_{+-} b (xi) = pi^{-2n} int e^{+-2i dtheta(u,v)} a(xi+u) b(xi+v) du dv,
//     which gives x #_+ p - p #_+ x = kappa with kappa = i;
//   * Weyl quantization sends w_j to sqrt(2) a_j and conj(w_j) to sqrt(2) a_j^+,
//     so |w|^2 quantizes to diag(2|k| + n).
#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <bit>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "heisen/error.hpp"
#include "heisen/fock.hpp"

namespace heisen {

/// Value of x #_+ p - p #_+ x. The lower product has the opposite sign.
inline constexpr cplx kappa{0.0, 1.0};

enum class hemisphere { upper, lower };

inline double hemisphere_sign(hemisphere h) { return h == hemisphere::upper ? 1.0 : -1.0; }

/// Test hook: bracket_sign = -1 flips kappa in the sharp product.
struct sharp_convention {
  double bracket_sign = 1.0;
};

// ---------------------------------------------------------------------------
// PolySymbol

/// Polynomial sum c_{p,q} w^p conj(w)^q on C^n.
class PolySymbol {
 public:
  using key = std::pair<multi_index, multi_index>;
  using table = std::map<key, cplx>;

  explicit PolySymbol(int n) : n_(n) {
    if (n < 1) throw error(errc::invalid_argument, "symbol dimension n must be >= 1");
  }

  static PolySymbol constant(int n, cplx c) {
    PolySymbol s(n);
    s.add_term(multi_index(n, 0), multi_index(n, 0), c);
    return s;
  }
  static PolySymbol w(int n, int j) {
    PolySymbol s(n);
    multi_index p(n, 0);
    p.at(j - 1) = 1;
    s.add_term(p, multi_index(n, 0), 1.0);
    return s;
  }
  static PolySymbol wbar(int n, int j) {
    PolySymbol s(n);
    multi_index q(n, 0);
    q.at(j - 1) = 1;
    s.add_term(multi_index(n, 0), q, 1.0);
    return s;
  }
  /// Real coordinate x_j = (w_j + conj w_j) / 2.
  static PolySymbol x(int n, int j) { return cplx(0.5) * (w(n, j) + wbar(n, j)); }
  /// Real coordinate p_j = (w_j - conj w_j) / (2i).
  static PolySymbol p(int n, int j) { return cplx(0.0, -0.5) * (w(n, j) - wbar(n, j)); }
  /// |w|^2 = sum_j w_j conj(w_j).
  static PolySymbol abs2(int n) {
    PolySymbol s(n);
    for (int j = 1; j <= n; ++j) s = s + w(n, j) * wbar(n, j);
    return s;
  }

  int n() const noexcept { return n_; }
  const table& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }

  void add_term(const multi_index& p, const multi_index& q, cplx c) {
    if (static_cast<int>(p.size()) != n_ || static_cast<int>(q.size()) != n_)
      throw error(errc::invalid_argument, "monomial exponent length differs from n");
    for (int v : p)
      if (v < 0) throw error(errc::invalid_argument, "negative exponent");
    for (int v : q)
      if (v < 0) throw error(errc::invalid_argument, "negative exponent");
    if (c == cplx(0.0)) return;
    auto [it, inserted] = terms_.try_emplace(key{p, q}, c);
    if (!inserted) {
      it->second += c;
      if (it->second == cplx(0.0)) terms_.erase(it);
    }
  }

  int degree() const {
    int d = 0;
    for (const auto& [k, c] : terms_) d = std::max(d, total(k.first) + total(k.second));
    return d;
  }

  /// Homogeneous part of top degree.
  PolySymbol top_part() const {
    const int d = degree();
    PolySymbol s(n_);
    for (const auto& [k, c] : terms_)
      if (total(k.first) + total(k.second) == d) s.add_term(k.first, k.second, c);
    return s;
  }

  cplx evaluate(std::span<const cplx> wv) const {
    if (static_cast<int>(wv.size()) != n_) throw error(errc::invalid_argument, "point dimension mismatch");
    cplx sum = 0.0;
    for (const auto& [k, c] : terms_) {
      cplx t = c;
      for (int j = 0; j < n_; ++j) t *= std::pow(wv[j], k.first[j]) * std::pow(std::conj(wv[j]), k.second[j]);
      sum += t;
    }
    return sum;
  }

  /// Evaluation at real coordinates (x, p); both spans have length n.
  cplx evaluate_real(std::span<const double> xs, std::span<const double> ps) const {
    std::vector<cplx> wv(n_);
    for (int j = 0; j < n_; ++j) wv[j] = cplx(xs[j], ps[j]);
    return evaluate(wv);
  }

  friend PolySymbol operator+(const PolySymbol& a, const PolySymbol& b) {
    require_same_n(a, b);
    PolySymbol s = a;
    for (const auto& [k, c] : b.terms_) s.add_term(k.first, k.second, c);
    return s;
  }
  friend PolySymbol operator-(const PolySymbol& a, const PolySymbol& b) { return a + cplx(-1.0) * b; }
  friend PolySymbol operator*(cplx s, const PolySymbol& a) {
    PolySymbol r(a.n_);
    for (const auto& [k, c] : a.terms_) r.add_term(k.first, k.second, s * c);
    return r;
  }
  /// Pointwise (commutative) product.
  friend PolySymbol operator*(const PolySymbol& a, const PolySymbol& b) {
    require_same_n(a, b);
    PolySymbol r(a.n_);
    for (const auto& [ka, ca] : a.terms_)
      for (const auto& [kb, cb] : b.terms_) r.add_term(add(ka.first, kb.first), add(ka.second, kb.second), ca * cb);
    return r;
  }

  /// Largest coefficient modulus of a - b.
  friend double max_coeff_diff(const PolySymbol& a, const PolySymbol& b) {
    double m = 0.0;
    for (const auto& [k, c] : (a - b).terms_) m = std::max(m, std::abs(c));
    return m;
  }

  static int total(const multi_index& k) {
    int s = 0;
    for (int v : k) s += v;
    return s;
  }

 private:
  static multi_index add(const multi_index& a, const multi_index& b) {
    multi_index r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
  }
  static void require_same_n(const PolySymbol& a, const PolySymbol& b) {
    if (a.n_ != b.n_) throw error(errc::invalid_argument, "symbols on different fiber dimensions");
  }

  int n_;
  table terms_;
};

namespace detail {

inline double falling(int p, int m) {
  double r = 1.0;
  for (int i = 0; i < m; ++i) r *= (p - i);
  return r;
}

inline double factorial(int m) {
  double r = 1.0;
  for (int i = 2; i <= m; ++i) r *= i;
  return r;
}

}  // namespace detail

/// Closed-form sharp product of polynomial symbols.
///
/// In complex coordinates the Moyal bidifferential operator factorizes per axis,
///   a # b = sum_{alpha,beta} s^{|alpha|+|beta|} (-1)^{|beta|} / (alpha! beta!)
///           (d_w^alpha d_wbar^beta a) (d_wbar^alpha d_w^beta b),
/// with s = +1 for #_+ and s = -1 for #_-.
inline PolySymbol sharp(const PolySymbol& a, const PolySymbol& b, hemisphere h,
                        const sharp_convention& conv = {}) {
  if (a.n() != b.n()) throw error(errc::invalid_argument, "sharp: symbols on different fiber dimensions");
  const int n = a.n();
  const double s = hemisphere_sign(h) * conv.bracket_sign;
  PolySymbol out(n);

  struct axis_term {
    int p, q;
    double factor;
  };
  std::vector<std::vector<axis_term>> per_axis(n);

  for (const auto& [ka, ca] : a.terms()) {
    for (const auto& [kb, cb] : b.terms()) {
      for (int j = 0; j < n; ++j) {
        auto& list = per_axis[j];
        list.clear();
        const int p1 = ka.first[j], q1 = ka.second[j], p2 = kb.first[j], q2 = kb.second[j];
        for (int al = 0; al <= std::min(p1, q2); ++al) {
          for (int be = 0; be <= std::min(q1, p2); ++be) {
            double f = std::pow(s, al + be) * ((be % 2) ? -1.0 : 1.0) /
                       (detail::factorial(al) * detail::factorial(be));
            f *= detail::falling(p1, al) * detail::falling(q2, al) * detail::falling(q1, be) *
                 detail::falling(p2, be);
            list.push_back({p1 - al + p2 - be, q1 - be + q2 - al, f});
          }
        }
      }
      // Cartesian product over axes.
      multi_index p(n), q(n);
      auto rec = [&](auto&& self, int j, double f) -> void {
        if (j == n) {
          out.add_term(p, q, ca * cb * f);
          return;
        }
        for (const auto& t : per_axis[j]) {
          p[j] = t.p;
          q[j] = t.q;
          self(self, j + 1, f * t.factor);
        }
      };
      rec(rec, 0, 1.0);
    }
  }
  return out;
}

/// Weyl quantization on V^N. Entries are exact matrix elements of the
/// untruncated operator (compressed to V^N).
inline FockOperator weyl_quantize(const PolySymbol& sym, const FockTruncation& t) {
  if (sym.n() != t.n()) throw error(errc::invalid_argument, "weyl_quantize: fiber dimension mismatch");
  const int n = t.n();

  // Weyl -> normal ordered symbol: f_N = exp(sum_j d_{w_j} d_{wbar_j}) f_W.
  PolySymbol normal(n);
  for (const auto& [k, c] : sym.terms()) {
    multi_index m(n, 0), p(n), q(n);
    auto rec = [&](auto&& self, int j, double f) -> void {
      if (j == n) {
        normal.add_term(p, q, c * f);
        return;
      }
      const int pj = k.first[j], qj = k.second[j];
      for (int mj = 0; mj <= std::min(pj, qj); ++mj) {
        p[j] = pj - mj;
        q[j] = qj - mj;
        self(self, j + 1, f * detail::falling(pj, mj) * detail::falling(qj, mj) / detail::factorial(mj));
      }
    };
    rec(rec, 0, 1.0);
  }

  // Normal ordered monomial w^P wbar^Q -> (b^+)^Q b^P with b = sqrt(2) a.
  const auto d = static_cast<Eigen::Index>(t.dim());
  cmat m = cmat::Zero(d, d);
  for (const auto& [k, c] : normal.terms()) {
    const auto& P = k.first;
    const auto& Q = k.second;
    const double scale = std::pow(2.0, 0.5 * (PolySymbol::total(P) + PolySymbol::total(Q)));
    for (std::size_t col = 0; col < t.dim(); ++col) {
      multi_index kk = t.index(col);
      double amp = scale;
      bool ok = true;
      for (int j = 0; j < n && ok; ++j) {
        if (kk[j] < P[j]) {
          ok = false;
          break;
        }
        amp *= std::sqrt(detail::falling(kk[j], P[j]));
        kk[j] -= P[j];
        amp *= std::sqrt(detail::falling(kk[j] + Q[j], Q[j]));
        kk[j] += Q[j];
      }
      if (!ok) continue;
      const auto row = t.position(kk);
      if (row >= 0) m(row, static_cast<Eigen::Index>(col)) += c * amp;
    }
  }
  return {t, std::move(m)};
}

// ---------------------------------------------------------------------------
// Symplectic maps

/// Matrix of dtheta: dtheta(u, v) = u^T J v.
inline Eigen::MatrixXd symplectic_form(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  J.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  J.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
  return J;
}

/// Standard compatible complex structure, multiplication by i on w.
inline Eigen::MatrixXd complex_structure(int n) { return -symplectic_form(n); }

/// Linear map on H* in (x, p) coordinates. Not validated on construction; use
/// residual() or let pullback() reject it.
class SymplecticMap {
 public:
  explicit SymplecticMap(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() % 2 != 0 || m_.rows() == 0)
      throw error(errc::invalid_argument, "symplectic map must be a 2n x 2n matrix");
  }

  static SymplecticMap identity(int n) { return SymplecticMap(Eigen::MatrixXd::Identity(2 * n, 2 * n)); }

  int n() const noexcept { return static_cast<int>(m_.rows() / 2); }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }

  /// ||M^T J M - J||_max.
  double residual() const {
    const Eigen::MatrixXd J = symplectic_form(n());
    return (m_.transpose() * J * m_ - J).cwiseAbs().maxCoeff();
  }
  bool is_symplectic(double tol = 1e-10) const { return residual() <= tol; }

 private:
  Eigen::MatrixXd m_;
};

/// alpha_t = cos(pi t) + J sin(pi t): identity at t = 0, -identity at t = 1.
inline SymplecticMap rotation_homotopy(double t, int n) {
  const double c = std::cos(std::numbers::pi * t), s = std::sin(std::numbers::pi * t);
  return SymplecticMap(c * Eigen::MatrixXd::Identity(2 * n, 2 * n) + s * complex_structure(n));
}

/// a o alpha, i.e. (pullback a)(xi) = a(M xi).
inline PolySymbol pullback(const PolySymbol& a, const SymplecticMap& alpha, double tol = 1e-10) {
  if (alpha.n() != a.n()) throw error(errc::invalid_argument, "pullback: dimension mismatch");
  if (!alpha.is_symplectic(tol))
    throw error(errc::not_symplectic, "M^T J M - J residual " + fmt(alpha.residual()));
  const int n = a.n();
  const auto& M = alpha.matrix();

  // w_j o alpha and wbar_j o alpha as linear symbols.
  std::vector<PolySymbol> wj, wbj;
  for (int j = 0; j < n; ++j) {
    PolySymbol lin(n), linbar(n);
    for (int k = 0; k < n; ++k) {
      const cplx cx(M(j, k), M(n + j, k));          // coefficient of x_k in w_j o alpha
      const cplx cp(M(j, n + k), M(n + j, n + k));  // coefficient of p_k
      const cplx on_w = 0.5 * (cx - cplx(0, 1) * cp);
      const cplx on_wbar = 0.5 * (cx + cplx(0, 1) * cp);
      multi_index e(n, 0), z(n, 0);
      e[k] = 1;
      lin.add_term(e, z, on_w);
      lin.add_term(z, e, on_wbar);
      linbar.add_term(e, z, std::conj(on_wbar));
      linbar.add_term(z, e, std::conj(on_w));
    }
    wj.push_back(std::move(lin));
    wbj.push_back(std::move(linbar));
  }

  std::map<std::pair<int, int>, PolySymbol> cache;  // (2j or 2j+1, power) -> symbol
  auto power = [&](int slot, int e) -> const PolySymbol& {
    auto it = cache.find({slot, e});
    if (it != cache.end()) return it->second;
    const PolySymbol& base = (slot % 2 == 0) ? wj[slot / 2] : wbj[slot / 2];
    PolySymbol r = PolySymbol::constant(n, 1.0);
    for (int i = 0; i < e; ++i) r = r * base;
    return cache.emplace(std::pair{slot, e}, std::move(r)).first->second;
  };

  PolySymbol out(n);
  for (const auto& [k, c] : a.terms()) {
    PolySymbol term = PolySymbol::constant(n, c);
    for (int j = 0; j < n; ++j) {
      if (k.first[j]) term = term * power(2 * j, k.first[j]);
      if (k.second[j]) term = term * power(2 * j + 1, k.second[j]);
    }
    out = out + term;
  }
  return out;
}

/// Unitary diag(e^{-i|k| phi}). Conjugation U A U^* implements the fiber
/// rotation w -> e^{i phi} w: U Op(a) U^* = Op(a o R_phi).
inline FockOperator metaplectic_rotation(double phi, const FockTruncation& t) {
  const auto d = static_cast<Eigen::Index>(t.dim());
  cmat m = cmat::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) m(i, i) = std::polar(1.0, -phi * t.degree(static_cast<std::size_t>(i)));
  return {t, std::move(m)};
}

// ---------------------------------------------------------------------------
// Boundary functions on the equatorial circle S*H (n = 1)

/// Samples f(theta_j), theta_j = 2 pi j / G, on the unit circle of H*.
class BoundaryFunction {
 public:
  explicit BoundaryFunction(std::vector<cplx> samples) : s_(std::move(samples)) {
    const auto g = s_.size();
    if (g < 16 || !std::has_single_bit(g))
      throw error(errc::invalid_argument, "boundary grid size must be a power of two >= 16");
  }

  template <class F>
  static BoundaryFunction from(std::size_t grid, F&& f) {
    std::vector<cplx> v(grid);
    for (std::size_t j = 0; j < grid; ++j) v[j] = f(angle(j, grid));
    return BoundaryFunction(std::move(v));
  }
  static BoundaryFunction constant(std::size_t grid, cplx c) {
    return BoundaryFunction(std::vector<cplx>(grid, c));
  }
  /// e^{i k theta}.
  static BoundaryFunction character(std::size_t grid, int k) {
    return from(grid, [k](double th) { return std::polar(1.0, k * th); });
  }

  static double angle(std::size_t j, std::size_t grid) {
    return 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(grid);
  }

  std::size_t size() const noexcept { return s_.size(); }
  const std::vector<cplx>& samples() const noexcept { return s_; }
  cplx operator[](std::size_t j) const { return s_[j]; }

  double min_modulus() const {
    double m = std::abs(s_[0]);
    for (auto v : s_) m = std::min(m, std::abs(v));
    return m;
  }

  /// Fourier coefficients fhat_m, m = -G/2 .. G/2 - 1, stored at index m mod G.
  std::vector<cplx> fourier() const {
    Eigen::FFT<double> fft;
    std::vector<cplx> in = s_, out;
    fft.fwd(out, in);
    for (auto& v : out) v /= static_cast<double>(s_.size());
    return out;
  }

  static BoundaryFunction from_fourier(const std::vector<cplx>& coeffs) {
    Eigen::FFT<double> fft;
    std::vector<cplx> in(coeffs), out;
    for (auto& v : in) v *= static_cast<double>(coeffs.size());
    fft.inv(out, in);
    return BoundaryFunction(std::move(out));
  }

  /// theta -> f(theta + phi), by exact shift when phi is a grid multiple and by
  /// trigonometric interpolation otherwise.
  BoundaryFunction rotated(double phi) const {
    const double G = static_cast<double>(s_.size());
    const double steps = phi * G / (2.0 * std::numbers::pi);
    if (std::abs(steps - std::round(steps)) < 1e-12) {
      const long shift = std::lround(steps);
      std::vector<cplx> v(s_.size());
      for (std::size_t j = 0; j < s_.size(); ++j) {
        const long src = ((static_cast<long>(j) + shift) % static_cast<long>(s_.size()) + static_cast<long>(s_.size())) %
                         static_cast<long>(s_.size());
        v[j] = s_[static_cast<std::size_t>(src)];
      }
      return BoundaryFunction(std::move(v));
    }
    auto c = fourier();
    const long g = static_cast<long>(s_.size());
    for (long i = 0; i < g; ++i) {
      const long m = i < g / 2 ? i : i - g;
      c[static_cast<std::size_t>(i)] *= std::polar(1.0, static_cast<double>(m) * phi);
    }
    return from_fourier(c);
  }

  /// theta -> f(-theta); this is precomposition with (x, p) -> (x, -p).
  BoundaryFunction reflected() const {
    std::vector<cplx> v(s_.size());
    for (std::size_t j = 0; j < s_.size(); ++j) v[j] = s_[(s_.size() - j) % s_.size()];
    return BoundaryFunction(std::move(v));
  }

  friend BoundaryFunction operator*(const BoundaryFunction& a, const BoundaryFunction& b) {
    require_same(a, b);
    std::vector<cplx> v(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) v[j] = a.s_[j] * b.s_[j];
    return BoundaryFunction(std::move(v));
  }
  friend BoundaryFunction operator*(cplx s, const BoundaryFunction& a) {
    std::vector<cplx> v(a.s_);
    for (auto& x : v) x *= s;
    return BoundaryFunction(std::move(v));
  }
  BoundaryFunction reciprocal() const {
    std::vector<cplx> v(s_.size());
    for (std::size_t j = 0; j < s_.size(); ++j) {
      if (s_[j] == cplx(0.0)) throw error(errc::not_invertible, "boundary function vanishes");
      v[j] = 1.0 / s_[j];
    }
    return BoundaryFunction(std::move(v));
  }

  friend double max_diff(const BoundaryFunction& a, const BoundaryFunction& b) {
    require_same(a, b);
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a.s_[j] - b.s_[j]));
    return m;
  }

 private:
  static void require_same(const BoundaryFunction& a, const BoundaryFunction& b) {
    if (a.size() != b.size()) throw error(errc::invalid_argument, "boundary grids differ");
  }

  std::vector<cplx> s_;
};

inline constexpr std::size_t default_boundary_grid = 256;

/// Top-degree homogeneous part of a restricted to the unit circle |w| = 1.
inline BoundaryFunction boundary_symbol(const PolySymbol& a, std::size_t grid = default_boundary_grid) {
  if (a.n() != 1) throw error(errc::invalid_argument, "boundary_symbol is implemented for n = 1");
  const PolySymbol top = a.top_part();
  auto f = BoundaryFunction::from(grid, [&](double th) {
    const cplx w = std::polar(1.0, th);
    return top.evaluate(std::span<const cplx>(&w, 1));
  });
  if (top.empty() || f.min_modulus() < 1e-12)
    throw error(errc::degenerate_boundary, "top-degree part vanishes on the boundary grid");
  return f;
}

}  // namespace heisen
