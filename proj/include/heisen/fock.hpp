// Truncated Bargmann-Fock spaces V^N = sum_{j<=N} Sym^j and the canonical
// operators acting on them.
//
// Basis vectors are the normalized monomials z^k / sqrt(k!) for multi-indices
// k with |k| <= N. The ordering is frozen: first by total degree |k|, then
// lexicographically ascending in (k_1, ..., k_n). Because of this ordering the
// first dim(V^M) basis vectors span V^M for every M <= N, so restricting to a
// lower truncation is a top-left block.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <vector>

#include "heisen/error.hpp"

namespace heisen {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;
using multi_index = std::vector<int>;

/// Largest V^N dimension the library will build.
inline constexpr std::size_t max_fock_dim = 1u << 20;

class FockTruncation {
 public:
  FockTruncation(int n, int N) : n_(n), N_(N) {
    if (n < 1) throw error(errc::invalid_argument, "fiber dimension n must be >= 1");
    if (N < 0) throw error(errc::invalid_argument, "truncation order N must be >= 0");
    const std::size_t d = binomial(N + n, n);
    if (d == 0 || d > max_fock_dim)
      throw error(errc::dimension_overflow, "dim V^N exceeds " + std::to_string(max_fock_dim));
    auto data = std::make_shared<Data>();
    data->basis.reserve(d);
    for (int deg = 0; deg <= N; ++deg) {
      data->degree_start.push_back(data->basis.size());
      multi_index k(n, 0);
      enumerate(k, 0, deg, data->basis);
    }
    data->degree_start.push_back(data->basis.size());
    for (std::size_t i = 0; i < data->basis.size(); ++i) data->position[data->basis[i]] = i;
    data_ = std::move(data);
  }

  int n() const noexcept { return n_; }
  int N() const noexcept { return N_; }
  std::size_t dim() const noexcept { return data_->basis.size(); }

  const multi_index& index(std::size_t i) const { return data_->basis.at(i); }

  int degree(std::size_t i) const {
    const auto& k = index(i);
    int s = 0;
    for (int v : k) s += v;
    return s;
  }

  /// Position of multi-index k, or -1 when |k| > N or k has a negative entry.
  std::ptrdiff_t position(const multi_index& k) const {
    auto it = data_->position.find(k);
    return it == data_->position.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
  }

  /// Number of basis vectors of degree <= deg (dim V^deg), clamped to dim().
  std::size_t dim_upto(int deg) const {
    if (deg < 0) return 0;
    if (deg >= N_) return dim();
    return data_->degree_start[static_cast<std::size_t>(deg) + 1];
  }

  friend bool operator==(const FockTruncation& a, const FockTruncation& b) {
    return a.n_ == b.n_ && a.N_ == b.N_;
  }

  static std::size_t binomial(int a, int b) {
    if (b < 0 || a < b) return 0;
    b = std::min(b, a - b);
    long double r = 1;
    for (int i = 1; i <= b; ++i) {
      r = r * (a - b + i) / i;
      if (r > static_cast<long double>(max_fock_dim) * 4) return max_fock_dim + 1;
    }
    return static_cast<std::size_t>(std::llround(static_cast<double>(r)));
  }

 private:
  struct Data {
    std::vector<multi_index> basis;
    std::vector<std::size_t> degree_start;
    std::map<multi_index, std::size_t> position;
  };

  // Ascending lexicographic enumeration of all k with |k| = remaining on axes >= axis.
  static void enumerate(multi_index& k, int axis, int remaining, std::vector<multi_index>& out) {
    const int n = static_cast<int>(k.size());
    if (axis == n - 1) {
      k[axis] = remaining;
      out.push_back(k);
      k[axis] = 0;
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      k[axis] = v;
      enumerate(k, axis + 1, remaining - v, out);
    }
    k[axis] = 0;
  }

  int n_;
  int N_;
  std::shared_ptr<const Data> data_;
};

/// A dense matrix on a truncated Fock space.
class FockOperator {
 public:
  FockOperator(FockTruncation trunc, cmat entries) : trunc_(std::move(trunc)), m_(std::move(entries)) {
    const auto d = static_cast<Eigen::Index>(trunc_.dim());
    if (m_.rows() != d || m_.cols() != d)
      throw error(errc::invalid_argument, "operator shape does not match dim V^N");
    if (!m_.allFinite()) throw error(errc::invalid_argument, "operator has non-finite entries");
  }

  static FockOperator zero(const FockTruncation& t) {
    const auto d = static_cast<Eigen::Index>(t.dim());
    return {t, cmat::Zero(d, d)};
  }
  static FockOperator identity(const FockTruncation& t) {
    const auto d = static_cast<Eigen::Index>(t.dim());
    return {t, cmat::Identity(d, d)};
  }

  const FockTruncation& trunc() const noexcept { return trunc_; }
  const cmat& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }

  /// Top-left block on the basis vectors of degree <= deg.
  cmat block_upto(int deg) const {
    const auto d = static_cast<Eigen::Index>(trunc_.dim_upto(deg));
    return m_.topLeftCorner(d, d);
  }

  friend FockOperator operator*(const FockOperator& a, const FockOperator& b) {
    require_same(a, b);
    return {a.trunc_, a.m_ * b.m_};
  }
  friend FockOperator operator+(const FockOperator& a, const FockOperator& b) {
    require_same(a, b);
    return {a.trunc_, a.m_ + b.m_};
  }
  friend FockOperator operator-(const FockOperator& a, const FockOperator& b) {
    require_same(a, b);
    return {a.trunc_, a.m_ - b.m_};
  }
  friend FockOperator operator*(cplx s, const FockOperator& a) { return {a.trunc_, s * a.m_}; }

  FockOperator adjoint() const { return {trunc_, m_.adjoint()}; }

 private:
  static void require_same(const FockOperator& a, const FockOperator& b) {
    if (!(a.trunc_ == b.trunc_)) throw error(errc::invalid_argument, "operators on different truncations");
  }

  FockTruncation trunc_;
  cmat m_;
};

inline FockTruncation build_truncation(int n, int N) { return FockTruncation(n, N); }

/// Raising operator on axis j (1-based): e_k -> sqrt(k_j + 1) e_{k + delta_j},
/// and zero when the result leaves the truncation.
inline FockOperator creation(const FockTruncation& t, int j) {
  if (j < 1 || j > t.n()) throw error(errc::invalid_argument, "axis index out of range");
  const auto d = static_cast<Eigen::Index>(t.dim());
  cmat m = cmat::Zero(d, d);
  for (std::size_t col = 0; col < t.dim(); ++col) {
    multi_index k = t.index(col);
    const double c = std::sqrt(static_cast<double>(k[j - 1] + 1));
    k[j - 1] += 1;
    const auto row = t.position(k);
    if (row >= 0) m(row, static_cast<Eigen::Index>(col)) = c;
  }
  return {t, std::move(m)};
}

inline FockOperator annihilation(const FockTruncation& t, int j) { return creation(t, j).adjoint(); }

/// Total number operator, diag(|k|).
inline FockOperator number_operator(const FockTruncation& t) {
  const auto d = static_cast<Eigen::Index>(t.dim());
  cmat m = cmat::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) m(i, i) = t.degree(static_cast<std::size_t>(i));
  return {t, std::move(m)};
}

/// Rank-one projector onto the vacuum e_0 (the constant function 1).
inline FockOperator vacuum_projector(const FockTruncation& t) {
  const auto d = static_cast<Eigen::Index>(t.dim());
  cmat m = cmat::Zero(d, d);
  m(0, 0) = 1.0;
  return {t, std::move(m)};
}

/// The transpose P^dagger = C P^* C, with C the coefficientwise conjugation in
/// the number basis. This is the plain matrix transpose.
inline FockOperator transpose_dagger(const FockOperator& op) {
  return {op.trunc(), op.matrix().transpose()};
}

/// Copy of `m` placed in the top-left corner of a zero matrix of size d x d
/// (or cropped when d is smaller).
inline cmat resize_padded(const cmat& m, Eigen::Index d) {
  cmat out = cmat::Zero(d, d);
  const Eigen::Index k = std::min(d, m.rows());
  out.topLeftCorner(k, k) = m.topLeftCorner(k, k);
  return out;
}

}  // namespace heisen
