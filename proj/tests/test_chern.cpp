#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <random>

#include "heisen/chern.hpp"
#include "heisen/models.hpp"

using namespace heisen;

namespace {

constexpr double pi = std::numbers::pi;

errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return errc::invalid_argument;
}

// A smooth 2-form whose components vanish where the chart degenerates.
SampledForm smooth_two_form(const GridManifold& M) {
  auto w = SampledForm::zero(M, 2);
  for (std::size_t p = 0; p < M.size(); ++p) {
    const auto q = M.point(p);
    const double a = std::cos(q[0]) + std::sin(2 * q[1]) * std::cos(q[2]);
    const double b = std::sin(q[2] + q[0]) + 0.3;
    if (M.kind() == manifold_kind::T3) {
      const double x = 2 * pi * q[0], y = 2 * pi * q[1], z = 2 * pi * q[2];
      w.comp[0][p] = std::sin(x + y) * std::cos(z);
      w.comp[1][p] = cplx(std::cos(y - 2 * z), std::sin(x));
      w.comp[2][p] = std::exp(std::sin(z + x));
    } else if (M.kind() == manifold_kind::S1xS2) {
      w.comp[0][p] = a;
      w.comp[1][p] = std::sin(q[1]) * b;  // d theta-derivative acts on this one
      w.comp[2][p] = a * b;
    } else {
      w.comp[0][p] = std::sin(2 * q[0]) * b;  // d eta-derivative acts on this one
      w.comp[1][p] = a;
      w.comp[2][p] = cplx(b, a);
    }
  }
  return w;
}

cmat smooth_t3_matrix(const GridPoint& q) {
  const double x = 2 * pi * q[0], y = 2 * pi * q[1], z = 2 * pi * q[2];
  cmat m(2, 2);
  m << 2.0 + 0.5 * std::cos(x) * std::sin(z), 0.4 * std::polar(1.0, y), 0.3 * std::sin(x + z),
      std::polar(1.5, x) + 0.2 * std::cos(y);
  return m;
}

double s3_degree(int n, const std::function<cmat(const GridPoint&)>& f) {
  const auto M = GridManifold::s3(n);
  return index_integral(AutomorphismFamily::sample(M, f), CurvatureData::flat(M)).real();
}

}  // namespace

TEST(GridManifold, ShapesAndWeights) {
  const auto t = GridManifold::torus(8);
  EXPECT_EQ(t.size(), 512u);
  EXPECT_EQ(t.name(), "T3");
  const auto s = GridManifold::s3(8);
  EXPECT_EQ(s.nodes(0), 9);
  EXPECT_EQ(s.nodes(1), 8);
  double vol = 0.0;
  for (std::size_t p = 0; p < s.size(); ++p) vol += s.cell_weight(p);
  EXPECT_NEAR(vol, pi / 2 * 4 * pi * pi, 1e-12);
  for (std::size_t p : {0ul, 17ul, 300ul}) EXPECT_EQ(s.flat(s.multi(p)), p);
  EXPECT_EQ(parse_manifold("S1xS2"), manifold_kind::S1xS2);
  EXPECT_EQ(code_of([] { parse_manifold("K3"); }), errc::invalid_argument);
  EXPECT_EQ(code_of([] { GridManifold::torus(2); }), errc::invalid_argument);
}

TEST(GridManifold, ExactFormsIntegrateToZero) {
  for (auto kind : {manifold_kind::T3, manifold_kind::S1xS2, manifold_kind::S3}) {
    const GridManifold M(kind, 20);
    const auto dw = exterior_derivative(M, smooth_two_form(M));
    EXPECT_LT(std::abs(integrate(M, dw)), 1e-6) << M.name();
  }
}

TEST(GridManifold, SecondDerivativeVanishes) {
  const auto M = GridManifold::s1_s2(16);
  auto f = SampledForm::zero(M, 0);
  for (std::size_t p = 0; p < M.size(); ++p) {
    const auto q = M.point(p);
    f.comp[0][p] = std::cos(q[1]) * std::sin(q[0] - q[2]);
  }
  const auto df = exterior_derivative(M, f);
  EXPECT_GT(df.max_abs(), 0.1);
  EXPECT_LT(closedness_residual(M, df), 1e-12);
  EXPECT_LT(exterior_derivative(M, exterior_derivative(M, smooth_two_form(M))).max_abs(), 1e-300);
}

TEST(OddChern, CircleCalibration) {
  const auto M = GridManifold::torus(24);
  const auto w = odd_chern_form(models::phase_family(M, 1), 0);
  for (std::size_t p : {0ul, 100ul, 5000ul}) EXPECT_NEAR(std::abs(circle_integral(M, w, 0, p) - 1.0), 0.0, 1e-12);
  EXPECT_LT(std::abs(circle_integral(M, w, 1)), 1e-12);
  const auto w3 = odd_chern_form(models::phase_family(M, -3, 2), 0);
  EXPECT_NEAR(circle_integral(M, w3, 2).real(), -3.0, 1e-12);
}

TEST(OddChern, ConstantFamilyGivesZeroForms) {
  const auto M = GridManifold::s3(12);
  cmat c(2, 2);
  c << 1.0, 2.0, cplx(0, 1), 3.0;
  const auto g = AutomorphismFamily::sample(M, [&](const GridPoint&) { return c; });
  EXPECT_LT(odd_chern_form(g, 0).max_abs(), 1e-15);
  EXPECT_LT(odd_chern_form(g, 1).max_abs(), 1e-15);
}

TEST(OddChern, SphereCalibrationWithRichardson) {
  const double i24 = s3_degree(24, models::su2_of), i48 = s3_degree(48, models::su2_of);
  EXPECT_LT(std::abs(i24 - 1.0), 0.05);
  EXPECT_LT(std::abs(i48 - 1.0), std::abs(i24 - 1.0));
  EXPECT_LT(std::abs(richardson(i24, i48) - 1.0), 1e-3);
  // The inverse map has degree -1.
  const double j24 = s3_degree(24, [](const GridPoint& q) { return cmat(models::su2_of(q).adjoint()); });
  const double j48 = s3_degree(48, [](const GridPoint& q) { return cmat(models::su2_of(q).adjoint()); });
  EXPECT_LT(std::abs(richardson(j24, j48) + 1.0), 1e-3);
}

TEST(OddChern, RejectsSingularAndUnderResolvedFamilies) {
  const auto M = GridManifold::torus(32);
  const auto g = AutomorphismFamily::sample(M, [](const GridPoint& q) { return cmat::Constant(1, 1, std::cos(2 * pi * q[0])); });
  EXPECT_EQ(code_of([&] { odd_chern_form(g, 0); }), errc::not_invertible_on_grid);
  const auto fast = models::phase_family(GridManifold::torus(16), 20);
  EXPECT_EQ(code_of([&] { odd_chern_form(fast, 0); }), errc::invalid_argument);
  EXPECT_EQ(code_of([&] { odd_chern_form(models::phase_family(M, 1), 2); }), errc::invalid_argument);
}

TEST(OddChern, FirstFormIsClosedAndImprovesUnderRefinement) {
  double previous = 1.0;
  for (int n : {16, 32}) {
    const auto M = GridManifold::torus(n);
    const auto w = odd_chern_form(AutomorphismFamily::sample(M, smooth_t3_matrix), 0);
    const double r = closedness_residual(M, w);
    EXPECT_LT(r, 1e-5);
    EXPECT_LE(r, std::max(previous / 2, 1e-10));
    previous = r;
  }
  const auto S = GridManifold::s1_s2(32);
  const auto g = AutomorphismFamily::sample(S, [](const GridPoint& q) {
    cmat m(2, 2);
    m << 2.0 + std::sin(q[1]) * std::cos(q[0]), std::polar(0.5, q[2]) * std::sin(q[1]), 0.3, std::polar(1.0, q[0]);
    return m;
  });
  EXPECT_LT(closedness_residual(S, odd_chern_form(g, 0)), 1e-5);
  EXPECT_EQ(closedness_residual(S, odd_chern_form(g, 1)), 0.0);
}

TEST(Curvature, ValidatesClosednessAndIntegrality) {
  const auto T = GridManifold::torus(16);
  const auto c = CurvatureData::constant(T, {2.0, 0.0, -1.0});
  EXPECT_LT(c.integrality_residual(), 1e-12);
  EXPECT_EQ(code_of([&] { CurvatureData::constant(T, {0.5, 0.0, 0.0}).validate(); }), errc::invalid_argument);
  auto w = SampledForm::zero(T, 2);
  for (std::size_t p = 0; p < T.size(); ++p) w.comp[0][p] = 1.0 + 0.5 * std::sin(2 * pi * T.point(p)[0]);
  EXPECT_EQ(code_of([&] { CurvatureData(T, w).validate(); }), errc::invalid_argument);
  const auto sphere = CurvatureData::sphere_class(GridManifold::s1_s2(24), 3);
  sphere.validate();
  EXPECT_NEAR(cycle_integral(sphere.manifold(), sphere.form(), 0, 5).real(), 3.0, 1e-12);
}

TEST(Todd, Examples) {
  const auto T = GridManifold::torus(12);
  const auto flat = todd_form(CurvatureData::flat(T));
  EXPECT_EQ(flat.degree0, 1.0);
  EXPECT_EQ(flat.degree2.max_abs(), 0.0);
  const auto td = todd_form(CurvatureData::constant(T, {2.0, 0.0, 0.0}));
  EXPECT_NEAR(cycle_integral(T, td.degree2, 0, 3).real(), 1.0, 1e-12);
  const auto sph = todd_form(CurvatureData::sphere_class(GridManifold::s1_s2(16), 2));
  EXPECT_NEAR(cycle_integral(GridManifold::s1_s2(16), sph.degree2, 0, 0).real(), 1.0, 1e-12);
}

TEST(TruncateClass, IdentityFamily) {
  const auto M = GridManifold::torus(6);
  const auto g = truncate_class(M, models::constant_family(WeylElement::unit(hemisphere::upper, 64)), 5);
  EXPECT_EQ(g.dim(), 6);
  for (const auto& m : g.values()) EXPECT_EQ((m - cmat::Identity(6, 6)).norm(), 0.0);
}

TEST(TruncateClass, SublaplacianIsDiagonalAndInvertibleAtEight) {
  const auto M = GridManifold::torus(6);
  const auto g = truncate_class(M, models::sublaplacian_family(0.5), 8);
  EXPECT_EQ(g.dim(), 9);
  const cmat& m = g[0];
  EXPECT_LT((m - cmat(m.diagonal().asDiagonal())).norm(), 1e-12);
  // Oracle: diagonal entries ((2k+1) - c)/((2k+1) + c).
  for (int k = 0; k < 9; ++k) EXPECT_NEAR(std::abs(m(k, k) - (2 * k + 0.5) / (2 * k + 1.5)), 0.0, 1e-10) << k;
  EXPECT_GT(g.min_singular(), 0.3);
}

TEST(TruncateClass, NonzeroWindingExceedsCap) {
  const auto M = GridManifold::torus(4);
  const WeylElement lowering(hemisphere::upper, BoundaryFunction::character(64, 1), cmat::Zero(1, 1));
  EXPECT_EQ(code_of([&] { truncate_class(M, models::constant_family(lowering), 4, {.N_cap = 24}); }),
            errc::truncation_cap_exceeded);
  // Only one fiber misbehaves.
  auto mixed = [&](const GridPoint& q) {
    return std::make_shared<const WeylElement>(q[0] == 0.0 && q[1] == 0.0 ? lowering : WeylElement::unit(hemisphere::upper, 64));
  };
  EXPECT_EQ(code_of([&] { truncate_class(M, mixed, 4, {.N_cap = 24}); }), errc::truncation_cap_exceeded);
}

TEST(TruncateClass, ScalarBoundaryEntersOnTheVacuum) {
  const auto M = GridManifold::torus(4);
  const cplx v(0.6, 0.8);
  const auto g = truncate_class(M, models::constant_family(WeylElement::constant(hemisphere::upper, 64, v)), 3);
  cmat expected = cmat::Identity(4, 4);
  expected(0, 0) = v;
  EXPECT_LT((g[7] - expected).norm(), 1e-14);
}

TEST(IndexFormula, ExamplesAndNonIntegral) {
  const auto T = GridManifold::torus(32);
  std::mt19937_64 rng(41);
  const auto sym = models::random_op_symmetric(rng, 256);
  const auto op = truncate_class(T, models::constant_family(hermite_reduction(sym).tau_plus), 8);
  EXPECT_NEAR(index_formula(op, CurvatureData::constant(T, {2.0, 0.0, 0.0})).value, 0.0, 1e-12);

  const auto sub = truncate_class(T, models::sublaplacian_family(0.5), 8);
  const auto r = index_formula(sub, CurvatureData::flat(T));
  EXPECT_NEAR(r.value, 0.0, 1e-3);
  EXPECT_EQ(r.nearest_integer, 0);
  EXPECT_EQ(r.resolution, 32);

  const auto phase = models::phase_family(T, 1);
  const auto one = index_formula(phase, CurvatureData::constant(T, {2.0, 0.0, 0.0}));
  EXPECT_EQ(one.nearest_integer, 1);
  EXPECT_LT(one.residual, 1e-12);
  EXPECT_EQ(code_of([&] { index_formula(phase, CurvatureData::constant(T, {1.0, 0.0, 0.0})); }), errc::non_integral);
  EXPECT_EQ(code_of([&] { index_formula(phase, CurvatureData::flat(GridManifold::torus(16))); }), errc::invalid_argument);

  const auto S = GridManifold::s3(32);
  EXPECT_EQ(index_formula(models::su2_degree_one(S), CurvatureData::flat(S)).nearest_integer, 1);
}

TEST(IndexFormula, EllipticSpecializationMatchesScalarPath) {
  const auto T = GridManifold::torus(12);
  auto s_plus = [](const GridPoint& q) { return std::polar(1.5 + 0.3 * std::cos(2 * pi * q[1]), 2 * pi * q[0]); };
  auto s_minus = [](const GridPoint& q) { return cplx(1.0 + 0.2 * std::sin(2 * pi * q[2]), 0.1); };
  const auto curv = CurvatureData::constant(T, {2.0, 0.0, 0.0});
  const auto full = index_formula(truncate_class(T, models::elliptic_family(s_plus, s_minus, 64), 4), curv);
  const auto scalar = index_formula(
      AutomorphismFamily::sample(T, [&](const GridPoint& q) { return cmat::Constant(1, 1, s_plus(q) / s_minus(q)); }), curv);
  EXPECT_NEAR(full.value, scalar.value, 1e-6);
  EXPECT_EQ(scalar.nearest_integer, 1);
}

TEST(IndexFormula, HomotopyInvariance) {
  const double eps = 1e-2;
  auto h = [](const GridPoint& q) {
    const cmat u = models::su2_of(q);
    cmat m(2, 2);
    m << u(0, 0) * u(1, 0), std::conj(u(0, 0)), u(1, 0) * u(1, 0), 1.0 + u(0, 0) * std::conj(u(1, 0));
    return m;
  };
  const auto S = GridManifold::s3(32);
  const auto flat = CurvatureData::flat(S);
  const double base = index_formula(models::su2_degree_one(S), flat).value;
  const auto moved = AutomorphismFamily::sample(S, [&](const GridPoint& q) {
    return cmat(models::su2_of(q) * cmat(cmat(eps * h(q)).exp()));
  });
  EXPECT_LT(std::abs(index_formula(moved, flat).value - base), 1e-3);

  const auto T = GridManifold::torus(32);
  const auto curv = CurvatureData::constant(T, {2.0, 0.0, 0.0});
  const auto t0 = AutomorphismFamily::sample(T, smooth_t3_matrix);
  const auto t1 = AutomorphismFamily::sample(T, [&](const GridPoint& q) {
    cmat k(2, 2);
    k << std::sin(2 * pi * q[2]), 1.0, std::cos(2 * pi * q[0]), cplx(0, 1) * std::sin(2 * pi * q[1]);
    return cmat(smooth_t3_matrix(q) * cmat(cmat(eps * k).exp()));
  });
  EXPECT_LT(std::abs(index_formula(t1, curv).value - index_formula(t0, curv).value), 1e-3);
}

TEST(IndexFormula, Additivity) {
  cmat u(2, 2);
  u << 0.6, cplx(0, 0.8), cplx(0, 0.8), 0.6;
  auto g1 = models::su2_of;
  auto g2 = [&](const GridPoint& q) { return cmat(u * models::su2_of(q) * u.adjoint() * u); };
  auto prod = [&](const GridPoint& q) { return cmat(g1(q) * g2(q)); };
  auto extrapolated = [](const std::function<cmat(const GridPoint&)>& f) { return richardson(s3_degree(24, f), s3_degree(48, f)); };
  EXPECT_NEAR(extrapolated(prod), extrapolated(g1) + extrapolated(g2), 1e-3);

  const auto T = GridManifold::torus(24);
  const auto curv = CurvatureData::constant(T, {2.0, 0.0, 0.0});
  const auto a = models::phase_family(T, 1), b = AutomorphismFamily::sample(T, [](const GridPoint& q) {
    return cmat::Constant(1, 1, std::polar(1.0 + 0.3 * std::sin(2 * pi * q[1]), -4 * pi * q[0]));
  });
  EXPECT_NEAR(index_formula(a * b, curv).value, index_formula(a, curv).value + index_formula(b, curv).value, 1e-3);
  EXPECT_EQ(index_formula(a * b, curv).nearest_integer, -1);
}
