// JSON encodings of symbols, models, curvature data and reports.
//
// Complex numbers are [re, im] pairs and matrices are row-major arrays of
// rows. Parse failures raise ParseError; inputs that parse but violate an
// invariant raise the error of the violated invariant.
#pragma once

#include <json.hpp>

#include <fstream>
#include <string>
#include <vector>

#include "heisen/chern.hpp"
#include "heisen/exsym.hpp"
#include "heisen/index.hpp"
#include "heisen/models.hpp"
#include "heisen/weyl.hpp"

namespace heisen::io {

using json = nlohmann::json;

namespace detail {

template <class F>
auto parsing(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw error(errc::parse_error, std::string(what) + ": " + e.what());
  }
}

}  // namespace detail

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (!j.is_array() || j.size() != 2) throw error(errc::parse_error, "complex number must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(const cmat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline cmat matrix_from(const json& j) {
  return detail::parsing("matrix", [&] {
    if (!j.is_array() || j.empty()) throw error(errc::parse_error, "matrix must be a nonempty array of rows");
    const auto r = static_cast<Eigen::Index>(j.size()), c = static_cast<Eigen::Index>(j[0].size());
    cmat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
      if (static_cast<Eigen::Index>(j[i].size()) != c) throw error(errc::parse_error, "ragged matrix rows");
      for (Eigen::Index k = 0; k < c; ++k) m(i, k) = complex_from(j[i][k]);
    }
    return m;
  });
}

// PolySymbol: {"n": int, "terms": [{"p": [..], "q": [..], "re": f, "im": f}]}

inline json to_json(const PolySymbol& s) {
  json terms = json::array();
  for (const auto& [k, c] : s.terms())
    terms.push_back({{"p", k.first}, {"q", k.second}, {"re", c.real()}, {"im", c.imag()}});
  return {{"n", s.n()}, {"terms", terms}};
}

inline PolySymbol poly_from(const json& j) {
  return detail::parsing("PolySymbol", [&] {
    PolySymbol s(j.at("n").get<int>());
    for (const auto& t : j.at("terms"))
      s.add_term(t.at("p").get<multi_index>(), t.at("q").get<multi_index>(),
                 {t.value("re", 0.0), t.value("im", 0.0)});
    return s;
  });
}

// WeylElement: {"side": "upper"|"lower", "boundary": [[re, im], ...], "finite": matrix}

inline json to_json(const BoundaryFunction& f) {
  json a = json::array();
  for (auto v : f.samples()) a.push_back(to_json(v));
  return a;
}

inline BoundaryFunction boundary_from(const json& j) {
  return detail::parsing("boundary", [&] {
    std::vector<cplx> v;
    for (const auto& x : j) v.push_back(complex_from(x));
    return BoundaryFunction(std::move(v));
  });
}

inline json to_json(const WeylElement& a) {
  return {{"side", a.side() == hemisphere::upper ? "upper" : "lower"},
          {"boundary", to_json(a.boundary())},
          {"finite", to_json(a.finite())}};
}

inline WeylElement weyl_from(const json& j) {
  return detail::parsing("WeylElement", [&] {
    const auto side = j.at("side").get<std::string>();
    if (side != "upper" && side != "lower") throw error(errc::parse_error, "side must be upper or lower");
    const cmat fin = j.contains("finite") ? matrix_from(j.at("finite")) : cmat::Zero(1, 1);
    return WeylElement(side == "upper" ? hemisphere::upper : hemisphere::lower, boundary_from(j.at("boundary")), fin);
  });
}

// ExtendedSymbol: {"upper": WeylElement, "lower": WeylElement,
//                  "classical": G x 65 matrix, column i at t = -1 + i/32}

inline json to_json(const ExtendedSymbol& s) {
  return {{"upper", to_json(s.upper)}, {"lower", to_json(s.lower)}, {"classical", to_json(s.classical.values())}};
}

/// Parses and checks corner matching; a mismatch raises CornerMismatch.
inline ExtendedSymbol extended_from(const json& j) {
  ExtendedSymbol s = detail::parsing("ExtendedSymbol", [&] {
    cmat arc = matrix_from(j.at("classical"));
    if (arc.cols() != arc_t_samples)
      throw error(errc::parse_error, "classical arc needs " + std::to_string(arc_t_samples) + " t-samples per row");
    return ExtendedSymbol{weyl_from(j.at("upper")), weyl_from(j.at("lower")), ClassicalArc(std::move(arc))};
  });
  const auto v = validate(s);
  if (!v.corners_ok())
    throw error(errc::corner_mismatch, "corner invariant violated: upper " + fmt(v.corner_upper) + ", lower " +
                                           fmt(v.corner_lower) + " (tolerance " + fmt(corner_tolerance) + ")");
  return s;
}

// Reports

inline json to_json(const IndexResult& r) {
  json ranks = json::array(), mins = json::array();
  for (const auto& k : r.ranks) {
    ranks.push_back({k.N, k.kernel, k.cokernel});
    mins.push_back(std::isfinite(k.min_singular) ? json(k.min_singular) : json(nullptr));
  }
  return {{"index", r.index}, {"stabilizedAt", r.stabilized_at}, {"ranks", ranks}, {"minSingular", mins}};
}

inline json to_json(const InvertibilityCertificate& c) {
  return {{"invertible", c.invertible},
          {"delta", c.delta},
          {"minClassical", c.min_classical},
          {"order", c.order},
          {"upperSingular", {c.upper_singular[0], c.upper_singular[1]}},
          {"lowerSingular", {c.lower_singular[0], c.lower_singular[1]}}};
}

inline json to_json(const HermiteCertificate& c) {
  return {{"passed", c.passed},
          {"lowerResidual", c.lower_residual},
          {"lowerArcResidual", c.lower_arc_residual},
          {"cornerResidual", c.corner_residual},
          {"minArcModulus", c.min_arc_modulus},
          {"delta", c.delta}};
}

inline json to_json(const ValidationReport& v) {
  return {{"cornerUpper", v.corner_upper},
          {"cornerLower", v.corner_lower},
          {"arcJump", v.arc_jump},
          {"continuityModulus", v.continuity_modulus},
          {"ok", v.ok()}};
}

inline json to_json(const ChernReport& r) {
  return {{"value", r.value}, {"nearestInteger", r.nearest_integer}, {"residual", r.residual}, {"resolution", r.resolution}};
}

// CurvatureData: {"manifold": "T3"|"S1xS2"|"S3", "resolution": n, and either
// "constant": [b23, b31, b12], "sphereClass": k (S1xS2 only), or
// "components": three flat arrays of real samples in grid order}

inline CurvatureData curvature_from(const json& j) {
  return detail::parsing("CurvatureData", [&] {
    const GridManifold M(parse_manifold(j.at("manifold").get<std::string>()),
                         j.value("resolution", default_grid_resolution));
    if (j.contains("constant")) return CurvatureData::constant(M, j.at("constant").get<std::array<double, 3>>());
    if (j.contains("sphereClass")) return CurvatureData::sphere_class(M, j.at("sphereClass").get<int>());
    if (j.contains("components")) {
      auto w = SampledForm::zero(M, 2);
      const auto& c = j.at("components");
      if (c.size() != 3) throw error(errc::parse_error, "curvature needs three components");
      for (int a = 0; a < 3; ++a) {
        if (c[a].size() != M.size()) throw error(errc::parse_error, "curvature component has the wrong sample count");
        for (std::size_t p = 0; p < M.size(); ++p) w.comp[a][p] = c[a][p].get<double>();
      }
      return CurvatureData(M, std::move(w));
    }
    return CurvatureData::flat(M);
  });
}

// ModelSpec: {"kind": "sublaplacian", "c": 0.5, "sPlus": [re, im], "sMinus": [re, im],
//             "modes": [[m, [re, im]], ...], "scale": [re, im], "slice": "rotation",
//             "beta": f, "seed": int, "grid": int}; absent fields keep their defaults.

inline json to_json(const models::ModelSpec& m) {
  json j = {{"kind", models::model_name(m.kind)}, {"grid", m.grid}};
  switch (m.kind) {
    case models::model_kind::sublaplacian: j["c"] = m.c; break;
    case models::model_kind::classical_elliptic:
      j["sPlus"] = to_json(m.s_plus);
      j["sMinus"] = to_json(m.s_minus);
      break;
    case models::model_kind::toeplitz: {
      json modes = json::array();
      for (auto [k, c] : m.modes) modes.push_back({k, to_json(c)});
      j["modes"] = modes;
      break;
    }
    case models::model_kind::szego: j["scale"] = to_json(m.scale); break;
    case models::model_kind::op_symmetric: j["seed"] = m.seed; break;
    case models::model_kind::gluing_system:
      j["slice"] = models::slice_name(m.slice);
      j["beta"] = m.beta;
      break;
  }
  return j;
}

inline models::ModelSpec model_from(const json& j) {
  return detail::parsing("ModelSpec", [&] {
    models::ModelSpec m;
    m.kind = models::parse_model_kind(j.at("kind").get<std::string>());
    m.c = j.value("c", m.c);
    if (j.contains("sPlus")) m.s_plus = complex_from(j["sPlus"]);
    if (j.contains("sMinus")) m.s_minus = complex_from(j["sMinus"]);
    if (j.contains("scale")) m.scale = complex_from(j["scale"]);
    if (j.contains("modes")) {
      m.modes.clear();
      for (const auto& e : j["modes"]) m.modes.emplace_back(e.at(0).get<int>(), complex_from(e.at(1)));
    }
    if (j.contains("slice")) m.slice = models::parse_slice(j["slice"].get<std::string>());
    m.beta = j.value("beta", m.beta);
    m.seed = j.value("seed", m.seed);
    m.grid = j.value("grid", m.grid);
    m.validate();
    return m;
  });
}

inline json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::invalid_argument, "cannot open '" + path + "'");
  return detail::parsing(path.c_str(), [&] { return json::parse(in); });
}

}  // namespace heisen::io
