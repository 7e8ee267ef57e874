#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "heisen/weyl.hpp"
#include "heisen/weyl_oracle.hpp"

using namespace heisen;

namespace {

PolySymbol random_poly(int n, int max_degree, std::mt19937& rng) {
  std::normal_distribution<double> g;
  PolySymbol s(n);
  // All monomials w^p wbar^q of total degree <= max_degree (n <= 2 here).
  const auto t = build_truncation(2 * n, max_degree);
  for (std::size_t i = 0; i < t.dim(); ++i) {
    const auto& k = t.index(i);
    multi_index p(k.begin(), k.begin() + n), q(k.begin() + n, k.end());
    s.add_term(p, q, cplx(g(rng), g(rng)));
  }
  return s;
}

SymplecticMap random_sp2(std::mt19937& rng) {
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
  return SymplecticMap(rot(ang(rng)) * d * shear * rot(ang(rng)));
}

// Weyl (symmetric) ordering of x^a p^b by brute-force enumeration of all
// arrangements of a copies of X and b copies of P.
cmat symmetric_ordering(int a, int b, const cmat& X, const cmat& P) {
  std::vector<int> word(a + b, 0);
  std::fill(word.begin() + a, word.end(), 1);
  cmat sum = cmat::Zero(X.rows(), X.cols());
  int count = 0;
  do {
    cmat prod = cmat::Identity(X.rows(), X.cols());
    for (int letter : word) prod = prod * (letter == 0 ? X : P);
    sum += prod;
    ++count;
  } while (std::next_permutation(word.begin(), word.end()));
  return sum / static_cast<double>(count);
}

}  // namespace

TEST(Sharp, UnitAndKappa) {
  std::mt19937 rng(1);
  const auto one = PolySymbol::constant(1, 1.0);
  const auto b = random_poly(1, 3, rng);
  EXPECT_LT(max_coeff_diff(sharp(one, b, hemisphere::upper), b), 1e-15);
  EXPECT_LT(max_coeff_diff(sharp(b, one, hemisphere::lower), b), 1e-15);

  const auto x = PolySymbol::x(1, 1), p = PolySymbol::p(1, 1);
  const auto up = sharp(x, p, hemisphere::upper) - sharp(p, x, hemisphere::upper);
  const auto lo = sharp(x, p, hemisphere::lower) - sharp(p, x, hemisphere::lower);
  EXPECT_LT(max_coeff_diff(up, PolySymbol::constant(1, kappa)), 1e-15);
  EXPECT_LT(max_coeff_diff(lo, PolySymbol::constant(1, -kappa)), 1e-15);
  EXPECT_LT(max_coeff_diff(lo, cplx(-1.0) * up), 0.0 + 1e-300);
}

TEST(Sharp, KappaPinnedByQuadrature) {
  // The commutator of damped coordinate symbols, evaluated from the defining
  // integral, fixes the sign of kappa: compare against the Moyal series built
  // with +kappa and with -kappa.
  const auto x = PolySymbol::x(1, 1), p = PolySymbol::p(1, 1);
  const double x0 = 0.4, p0 = -0.3;
  const cplx quad = oracle::sharp_quadrature(x, p, hemisphere::upper, x0, p0) -
                    oracle::sharp_quadrature(p, x, hemisphere::upper, x0, p0);
  const cplx plus = oracle::sharp_moyal_jet(x, p, hemisphere::upper, x0, p0) -
                    oracle::sharp_moyal_jet(p, x, hemisphere::upper, x0, p0);
  const cplx minus = oracle::sharp_moyal_jet(x, p, hemisphere::lower, x0, p0) -
                     oracle::sharp_moyal_jet(p, x, hemisphere::lower, x0, p0);
  EXPECT_LT(std::abs(quad - plus), 1e-8);
  EXPECT_GT(std::abs(quad - minus), 1e-2);
}

TEST(Sharp, LeadingPartIsPointwise) {
  const auto w = PolySymbol::w(1, 1), wb = PolySymbol::wbar(1, 1);
  const auto prod = sharp(w, wb, hemisphere::upper);
  EXPECT_LT(max_coeff_diff(prod.top_part(), PolySymbol::abs2(1)), 1e-15);
  EXPECT_LT(max_coeff_diff(prod, PolySymbol::abs2(1) + PolySymbol::constant(1, 1.0)), 1e-15);

  std::mt19937 rng(3);
  for (int i = 0; i < 10; ++i) {
    const auto a = random_poly(1, 3, rng), b = random_poly(1, 2, rng);
    const auto ab = sharp(a, b, hemisphere::upper);
    EXPECT_LE(ab.degree(), a.degree() + b.degree());
    EXPECT_LT(max_coeff_diff(ab.top_part(), a.top_part() * b.top_part()), 1e-12);
  }
}

TEST(Sharp, Associativity) {
  std::mt19937 rng(11);
  for (int n = 1; n <= 2; ++n)
    for (int i = 0; i < 4; ++i) {
      const auto a = random_poly(n, 3, rng), b = random_poly(n, 3, rng), c = random_poly(n, 3, rng);
      for (auto h : {hemisphere::upper, hemisphere::lower}) {
        const auto lhs = sharp(sharp(a, b, h), c, h);
        const auto rhs = sharp(a, sharp(b, c, h), h);
        EXPECT_LT(max_coeff_diff(lhs, rhs), 1e-12 * std::max(1.0, lhs.terms().size() * 1.0));
      }
    }
}

TEST(Sharp, AgreesWithQuadratureOnDampedPolynomials) {
  std::mt19937 rng(5);
  const std::vector<std::pair<double, double>> points = {{0.0, 0.0}, {0.5, -0.25}, {-0.8, 0.6}};
  for (int i = 0; i < 3; ++i) {
    const auto P = random_poly(1, 2, rng), Q = random_poly(1, 2, rng);
    for (auto h : {hemisphere::upper, hemisphere::lower}) {
      const auto [x0, p0] = points[i];
      const cplx q = oracle::sharp_quadrature(P, Q, h, x0, p0);
      const cplx m = oracle::sharp_moyal_jet(P, Q, h, x0, p0);
      EXPECT_LT(std::abs(q - m), 1e-8) << "point " << i;
    }
  }
}

TEST(Sharp, EngineMatchesJetSeriesOnPolynomials) {
  // Undamped polynomials: jets are exact, so the real-coordinate Moyal series
  // and the closed-form engine must coincide pointwise.
  std::mt19937 rng(6);
  for (int i = 0; i < 5; ++i) {
    const auto P = random_poly(1, 3, rng), Q = random_poly(1, 3, rng);
    const double x0 = 0.3 * i - 0.5, p0 = 0.2 - 0.1 * i;
    for (auto h : {hemisphere::upper, hemisphere::lower}) {
      const auto jP = oracle::polynomial_jet(P, x0, p0, 8), jQ = oracle::polynomial_jet(Q, x0, p0, 8);
      const cplx series = oracle::moyal_on_jets(jP, jQ, h);
      const cplx engine = sharp(P, Q, h).evaluate_real(std::array{x0}, std::array{p0});
      EXPECT_LT(std::abs(series - engine), 1e-11);
    }
  }
}

TEST(WeylQuantize, ConstantAndLinear) {
  const auto t = build_truncation(1, 6);
  EXPECT_LT((weyl_quantize(PolySymbol::constant(1, 1.0), t).matrix() - cmat::Identity(7, 7)).norm(), 1e-15);
  const cmat a = annihilation(t, 1).matrix();
  EXPECT_LT((weyl_quantize(PolySymbol::w(1, 1), t).matrix() - std::sqrt(2.0) * a).norm(), 1e-14);
  EXPECT_LT((weyl_quantize(PolySymbol::wbar(1, 1), t).matrix() - std::sqrt(2.0) * a.adjoint()).norm(), 1e-14);
  const cmat h = weyl_quantize(PolySymbol::abs2(1), t).matrix();
  for (int k = 0; k <= 6; ++k) EXPECT_NEAR(h(k, k).real(), 2.0 * k + 1.0, 1e-13);
  EXPECT_LT((h - cmat(h.diagonal().asDiagonal())).norm(), 1e-14);
}

TEST(WeylQuantize, MatchesSymmetricOrderingOracle) {
  // x = (a + a^+)/sqrt 2 and p = (a - a^+)/(i sqrt 2) satisfy [x, p] = i; Weyl
  // quantization of x^a p^b is the average over all orderings.
  const int N = 10, extra = 4;
  const auto big = build_truncation(1, N + extra);
  const cmat A = annihilation(big, 1).matrix();
  const cmat X = (A + A.adjoint()) / std::sqrt(2.0);
  const cmat P = (A - A.adjoint()) / cplx(0, std::sqrt(2.0));
  const auto t = build_truncation(1, N);
  for (int a = 0; a <= 2; ++a)
    for (int b = 0; a + b <= 4; ++b) {
      PolySymbol sym = PolySymbol::constant(1, 1.0);
      for (int i = 0; i < a; ++i) sym = sym * PolySymbol::x(1, 1);
      for (int i = 0; i < b; ++i) sym = sym * PolySymbol::p(1, 1);
      const cmat oracle = symmetric_ordering(a, b, X, P).topLeftCorner(N + 1, N + 1);
      EXPECT_LT((weyl_quantize(sym, t).matrix() - oracle).cwiseAbs().maxCoeff(), 1e-12) << a << "," << b;
    }
}

TEST(WeylQuantize, RealSymbolsGiveSelfAdjointBlocks) {
  std::mt19937 rng(2);
  const auto t = build_truncation(1, 12);
  for (int i = 0; i < 5; ++i) {
    auto a = random_poly(1, 3, rng);
    // Real symbol: a + conj(a), conj swaps p and q.
    PolySymbol conj(1);
    for (const auto& [k, c] : a.terms()) conj.add_term(k.second, k.first, std::conj(c));
    const auto re = a + conj;
    const cmat m = weyl_quantize(re, t).block_upto(12 - re.degree());
    EXPECT_LT((m - m.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(WeylQuantize, HomomorphismOnReliableBlock) {
  std::mt19937 rng(8);
  const int N = 24;
  for (int n = 1; n <= 2; ++n) {
    const auto t = build_truncation(n, n == 1 ? N : 12);
    for (int i = 0; i < 5; ++i) {
      const auto a = random_poly(n, 3, rng), b = random_poly(n, 3, rng);
      const int keep = t.N() - a.degree() - b.degree();
      const cmat lhs = weyl_quantize(sharp(a, b, hemisphere::upper), t).block_upto(keep);
      const cmat rhs = (weyl_quantize(a, t) * weyl_quantize(b, t)).block_upto(keep);
      EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(WeylQuantize, FlippedKappaBreaksHomomorphism) {
  const auto t = build_truncation(1, 10);
  const auto x = PolySymbol::x(1, 1), p = PolySymbol::p(1, 1);
  const cmat lhs = weyl_quantize(sharp(x, p, hemisphere::upper, {-1.0}), t).block_upto(8);
  const cmat rhs = (weyl_quantize(x, t) * weyl_quantize(p, t)).block_upto(8);
  EXPECT_GT((lhs - rhs).cwiseAbs().maxCoeff(), 0.5);
}

TEST(WeylQuantize, TransposeIsTheReflectionOfMonomials) {
  // Frozen reflection: transpose_dagger(Op(w^p wbar^q)) = Op(w^q wbar^p).
  const auto t = build_truncation(1, 9);
  for (int p = 0; p <= 3; ++p)
    for (int q = 0; q <= 3; ++q) {
      PolySymbol a(1), r(1);
      a.add_term({p}, {q}, 1.0);
      r.add_term({q}, {p}, 1.0);
      EXPECT_LT((transpose_dagger(weyl_quantize(a, t)).matrix() - weyl_quantize(r, t).matrix()).norm(), 1e-12);
    }
}

TEST(WeylQuantize, RejectsMismatchedDimension) {
  EXPECT_THROW(weyl_quantize(PolySymbol::w(2, 1), build_truncation(1, 3)), error);
  EXPECT_THROW(sharp(PolySymbol::w(2, 1), PolySymbol::w(1, 1), hemisphere::upper), error);
}

TEST(Pullback, Examples) {
  std::mt19937 rng(4);
  const auto a = random_poly(1, 3, rng);
  EXPECT_LT(max_coeff_diff(pullback(a, SymplecticMap::identity(1)), a), 1e-15);
  const SymplecticMap minus(-Eigen::MatrixXd::Identity(2, 2));
  EXPECT_LT(max_coeff_diff(pullback(PolySymbol::w(1, 1), minus), cplx(-1.0) * PolySymbol::w(1, 1)), 1e-15);

  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
  bad(0, 0) = 2.0;
  try {
    pullback(a, SymplecticMap(bad));
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::not_symplectic);
  }
}

TEST(Pullback, PointwiseDefinition) {
  std::mt19937 rng(9);
  const auto a = random_poly(1, 3, rng);
  const auto alpha = random_sp2(rng);
  const auto pa = pullback(a, alpha);
  for (double x : {-0.7, 0.2, 1.1})
    for (double p : {-0.4, 0.9}) {
      const Eigen::Vector2d img = alpha.matrix() * Eigen::Vector2d(x, p);
      EXPECT_LT(std::abs(pa.evaluate_real(std::array{x}, std::array{p}) -
                         a.evaluate_real(std::array{img(0)}, std::array{img(1)})),
                1e-12);
    }
}

TEST(Pullback, SymplecticEquivariance) {
  std::mt19937 rng(12);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 0.5;
  std::vector<SymplecticMap> maps = {SymplecticMap(d)};
  for (int i = 0; i < 20; ++i) maps.push_back(random_sp2(rng));
  for (const auto& alpha : maps) {
    const auto a = random_poly(1, 3, rng), b = random_poly(1, 3, rng);
    const auto lhs = sharp(pullback(a, alpha), pullback(b, alpha), hemisphere::upper);
    const auto rhs = pullback(sharp(a, b, hemisphere::upper), alpha);
    EXPECT_LT(max_coeff_diff(lhs, rhs), 1e-10);
  }
}

TEST(RotationHomotopy, EndpointsAndMidpoint) {
  for (int n = 1; n <= 2; ++n) {
    const auto I = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    EXPECT_LT((rotation_homotopy(0.0, n).matrix() - I).norm(), 1e-15);
    EXPECT_LT((rotation_homotopy(1.0, n).matrix() + I).norm(), 1e-15);
    EXPECT_LT((rotation_homotopy(0.5, n).matrix() - complex_structure(n)).norm(), 1e-15);
    for (double t = 0; t <= 1.0; t += 0.05) EXPECT_TRUE(rotation_homotopy(t, n).is_symplectic());
    const Eigen::MatrixXd J = complex_structure(n);
    EXPECT_LT((J * J + I).norm(), 1e-15);
  }
}

TEST(Metaplectic, IdentityAtZeroAndFullTurn) {
  const auto t = build_truncation(2, 5);
  const auto d = static_cast<Eigen::Index>(t.dim());
  EXPECT_LT((metaplectic_rotation(0.0, t).matrix() - cmat::Identity(d, d)).norm(), 1e-15);
  EXPECT_LT((metaplectic_rotation(2 * std::numbers::pi, t).matrix() - cmat::Identity(d, d)).norm(), 1e-12);
}

TEST(Metaplectic, ConjugationMatchesRotatedSymbol) {
  std::mt19937 rng(10);
  const auto t = build_truncation(1, 14);
  const auto w2 = PolySymbol::w(1, 1) * PolySymbol::w(1, 1);
  std::vector<PolySymbol> syms = {w2, random_poly(1, 3, rng), random_poly(1, 3, rng)};
  for (double phi : {std::numbers::pi / 3, 1.234}) {
    const auto U = metaplectic_rotation(phi, t);
    const auto R = rotation_homotopy(phi / std::numbers::pi, 1);
    for (const auto& s : syms) {
      const cmat lhs = (U * weyl_quantize(s, t) * U.adjoint()).matrix();
      const cmat rhs = weyl_quantize(pullback(s, R), t).matrix();
      EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(BoundarySymbol, Examples) {
  const auto w = PolySymbol::w(1, 1);
  const auto bw = boundary_symbol(w, 64);
  EXPECT_LT(max_diff(bw, BoundaryFunction::character(64, 1)), 1e-15);
  EXPECT_LT(max_diff(boundary_symbol(PolySymbol::abs2(1), 64), BoundaryFunction::constant(64, 1.0)), 1e-15);
  const auto prod = sharp(w, PolySymbol::wbar(1, 1), hemisphere::upper);
  EXPECT_LT(max_diff(boundary_symbol(prod, 64), BoundaryFunction::constant(64, 1.0)), 1e-15);
}

TEST(BoundarySymbol, MultiplicativeAndDegenerate) {
  std::mt19937 rng(13);
  for (int i = 0; i < 10; ++i) {
    const auto a = random_poly(1, 3, rng), b = random_poly(1, 2, rng);
    const auto lhs = boundary_symbol(sharp(a, b, hemisphere::upper));
    const auto rhs = boundary_symbol(a) * boundary_symbol(b);
    EXPECT_LT(max_diff(lhs, rhs), 1e-10);
  }
  // x = (w + wbar)/2 vanishes at theta = pi/2, a grid point.
  try {
    boundary_symbol(PolySymbol::x(1, 1), 64);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::degenerate_boundary);
  }
  EXPECT_THROW(BoundaryFunction(std::vector<cplx>(24, 1.0)), error);
  EXPECT_THROW(BoundaryFunction(std::vector<cplx>(8, 1.0)), error);
}

TEST(BoundaryFunction, RotationAndReflection) {
  const auto f = BoundaryFunction::from(32, [](double th) { return cplx(2.0) + std::polar(1.0, 3 * th); });
  const double phi = 0.37;
  const auto g = f.rotated(phi);
  const auto expect = BoundaryFunction::from(32, [&](double th) { return cplx(2.0) + std::polar(1.0, 3 * (th + phi)); });
  EXPECT_LT(max_diff(g, expect), 1e-13);
  const auto r = f.reflected();
  const auto expect_r = BoundaryFunction::from(32, [](double th) { return cplx(2.0) + std::polar(1.0, -3 * th); });
  EXPECT_LT(max_diff(r, expect_r), 1e-13);
}
