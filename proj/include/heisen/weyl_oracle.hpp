// Independent evaluations of the sharp-product integral, used only as test
// oracles (n = 1).
//
// Symbols are Gaussian-damped polynomials A(xi) = P(xi) exp(-|xi|^2 / damping).
// Two routes are provided:
//   * sharp_quadrature: the defining integral
//       pi^{-2} int e^{+-2i dtheta(u,v)} A(xi+u) B(xi+v) du dv
//     by tensor Gauss-Hermite quadrature (64 nodes per real dimension);
//   * sharp_moyal_jet: the Moyal series in real coordinates, applied to Taylor
//     jets of A and B at xi, with bracket constant kappa.
// Neither path calls heisen::sharp.
#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "heisen/quadrature.hpp"
#include "heisen/weyl.hpp"

namespace heisen::oracle {

inline constexpr double gaussian_damping = 1.5;
inline constexpr int hermite_nodes = 64;
inline constexpr int jet_order = 90;

/// Truncated bivariate power series in (u_x, u_p): c[a][b] multiplies u_x^a u_p^b.
class Jet2 {
 public:
  explicit Jet2(int order) : K_(order), c_((order + 1) * (order + 1), cplx(0.0)) {}

  int order() const noexcept { return K_; }
  cplx& at(int a, int b) { return c_[a * (K_ + 1) + b]; }
  cplx at(int a, int b) const { return c_[a * (K_ + 1) + b]; }

  friend Jet2 operator*(const Jet2& f, const Jet2& g) {
    Jet2 r(f.K_);
    for (int a1 = 0; a1 <= f.K_; ++a1)
      for (int b1 = 0; a1 + b1 <= f.K_; ++b1) {
        const cplx x = f.at(a1, b1);
        if (x == cplx(0.0)) continue;
        for (int a2 = 0; a1 + a2 + b1 <= f.K_; ++a2)
          for (int b2 = 0; a1 + a2 + b1 + b2 <= f.K_; ++b2) r.at(a1 + a2, b1 + b2) += x * g.at(a2, b2);
      }
    return r;
  }
  friend Jet2 operator+(Jet2 f, const Jet2& g) {
    for (std::size_t i = 0; i < f.c_.size(); ++i) f.c_[i] += g.c_[i];
    return f;
  }

 private:
  int K_;
  std::vector<cplx> c_;
};

/// Taylor jet at (x0, p0) of the polynomial P, in real displacement variables.
inline Jet2 polynomial_jet(const PolySymbol& P, double x0, double p0, int order) {
  if (P.n() != 1) throw error(errc::invalid_argument, "oracle jets are implemented for n = 1");
  const cplx w0(x0, p0);
  Jet2 w(order), wb(order);
  w.at(0, 0) = w0;
  w.at(1, 0) = 1.0;
  w.at(0, 1) = cplx(0, 1);
  wb.at(0, 0) = std::conj(w0);
  wb.at(1, 0) = 1.0;
  wb.at(0, 1) = cplx(0, -1);
  Jet2 out(order);
  for (const auto& [k, c] : P.terms()) {
    Jet2 t(order);
    t.at(0, 0) = c;
    for (int i = 0; i < k.first[0]; ++i) t = w * t;
    for (int i = 0; i < k.second[0]; ++i) t = wb * t;
    out = out + t;
  }
  return out;
}

/// Taylor jet at (x0, p0) of exp(-(x^2 + p^2) / damping).
inline Jet2 gaussian_jet(double x0, double p0, int order, double damping = gaussian_damping) {
  auto univariate = [&](double y0) {
    std::vector<double> e1(order + 1), e2(order + 1, 0.0), r(order + 1, 0.0);
    double f = 1.0;
    for (int k = 0; k <= order; ++k) {
      if (k > 0) f *= k;
      e1[k] = std::pow(-2.0 * y0 / damping, k) / f;
    }
    f = 1.0;
    for (int k = 0; 2 * k <= order; ++k) {
      if (k > 0) f *= k;
      e2[2 * k] = std::pow(-1.0 / damping, k) / f;
    }
    for (int i = 0; i <= order; ++i)
      for (int j = 0; i + j <= order; ++j) r[i + j] += e1[i] * e2[j];
    for (auto& v : r) v *= std::exp(-y0 * y0 / damping);
    return r;
  };
  const auto gx = univariate(x0), gp = univariate(p0);
  Jet2 out(order);
  for (int a = 0; a <= order; ++a)
    for (int b = 0; a + b <= order; ++b) out.at(a, b) = gx[a] * gp[b];
  return out;
}

/// (A # B)(xi) from the Moyal series on jets:
///   sum_m (k/2)^m sum_j (-1)^j (m-j)! j! A_{m-j,j} B_{j,m-j},  k = +-kappa.
inline cplx moyal_on_jets(const Jet2& A, const Jet2& B, hemisphere h) {
  const cplx half_k = 0.5 * hemisphere_sign(h) * kappa;
  const int K = std::min(A.order(), B.order());
  std::vector<double> fact(K + 1, 1.0);
  for (int i = 1; i <= K; ++i) fact[i] = fact[i - 1] * i;
  cplx total = 0.0, pw = 1.0;
  for (int m = 0; m <= K; ++m) {
    cplx t = 0.0;
    for (int j = 0; j <= m; ++j)
      t += ((j % 2) ? -1.0 : 1.0) * fact[m - j] * fact[j] * A.at(m - j, j) * B.at(j, m - j);
    total += pw * t;
    pw *= half_k;
  }
  return total;
}

inline cplx sharp_moyal_jet(const PolySymbol& P, const PolySymbol& Q, hemisphere h, double x0, double p0,
                            double damping = gaussian_damping, int order = jet_order) {
  const Jet2 g = gaussian_jet(x0, p0, order, damping);
  return moyal_on_jets(polynomial_jet(P, x0, p0, order) * g, polynomial_jet(Q, x0, p0, order) * g, h);
}

/// Gauss-Hermite evaluation of the defining integral for the damped symbols.
inline cplx sharp_quadrature(const PolySymbol& P, const PolySymbol& Q, hemisphere h, double x0, double p0,
                             double damping = gaussian_damping, int nodes = hermite_nodes) {
  if (P.n() != 1 || Q.n() != 1) throw error(errc::invalid_argument, "sharp_quadrature is implemented for n = 1");
  const double s = damping, rs = std::sqrt(s);
  const auto gh = quad::gauss_hermite(nodes);
  const int M = nodes;
  // Substituting xi + u = sqrt(s) y turns the damping into the Hermite weight.
  std::vector<double> yx, yp, wt;
  std::vector<cplx> pv, qv;
  for (int a = 0; a < M; ++a)
    for (int b = 0; b < M; ++b) {
      yx.push_back(gh.nodes[a]);
      yp.push_back(gh.nodes[b]);
      wt.push_back(gh.weights[a] * gh.weights[b]);
      const cplx w(rs * gh.nodes[a], rs * gh.nodes[b]);
      pv.push_back(P.evaluate(std::span<const cplx>(&w, 1)));
      qv.push_back(Q.evaluate(std::span<const cplx>(&w, 1)));
    }
  const double sg = hemisphere_sign(h);
  // phase = 2 sg dtheta(sqrt(s) y - xi, sqrt(s) z - xi)
  auto dth = [](double ux, double up, double vx, double vp) { return ux * vp - up * vx; };
  cplx total = 0.0;
  for (std::size_t i = 0; i < yx.size(); ++i) {
    const double uy = rs * yx[i] - x0, up = rs * yp[i] - p0;
    cplx inner = 0.0;
    for (std::size_t j = 0; j < yx.size(); ++j) {
      const double vx = rs * yx[j] - x0, vp = rs * yp[j] - p0;
      inner += wt[j] * qv[j] * std::polar(1.0, 2.0 * sg * dth(uy, up, vx, vp));
    }
    total += wt[i] * pv[i] * inner;
  }
  return total * s * s / (std::numbers::pi * std::numbers::pi);
}

}  // namespace heisen::oracle
