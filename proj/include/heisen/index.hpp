// Numerical Fredholm index of operator families given at growing truncation
// order, with the Hardy-space Toeplitz truncation as an independent oracle.
//
// At order N the kernel is counted on the tall window "columns of degree <= N"
// of the operator at order N + margin, and the cokernel on the wide window
// "rows of degree <= N". With margin at least the bandwidth of the operator,
// both windows are exact compressions of the untruncated operator.
#pragma once

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <string>
#include <vector>

#include "heisen/exsym.hpp"
#include "heisen/fock.hpp"
#include "heisen/winding.hpp"

namespace heisen {

struct RankRecord {
  int N;
  int kernel;
  int cokernel;
  double min_singular;  // smallest singular value above the rank threshold
  double kernel_min = std::numeric_limits<double>::infinity();    // same, kernel window only
  double cokernel_min = std::numeric_limits<double>::infinity();  // same, cokernel window only
};

struct IndexResult {
  int index = 0;
  int stabilized_at = 0;
  std::vector<RankRecord> ranks;
};

struct IndexOptions {
  int margin = 12;  // extra order used for the kernel and cokernel windows
  int stride = 4;
  bool parallel = true;
};

using OperatorFamily = std::function<FockOperator(int)>;

namespace detail {

struct WindowCount {
  int zeros = 0;
  double min_nonzero = std::numeric_limits<double>::infinity();
};

// Number of singular values of a tall matrix below the rank threshold.
inline WindowCount count_null(const cmat& tall, int N) {
  Eigen::BDCSVD<cmat> svd(tall);
  const auto& s = svd.singularValues();
  WindowCount w;
  if (s.size() == 0) return w;
  const double smax = s.maxCoeff();
  const double dim = static_cast<double>(std::max(tall.rows(), tall.cols()));
  const double delta = dim * std::numeric_limits<double>::epsilon() * smax * 100.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double v = s(i);
    if (v >= delta / 10 && v <= 10 * delta)
      throw error(errc::rank_ambiguous, "singular value " + fmt(v) + " inside [delta/10, 10 delta] at N = " +
                                            std::to_string(N) + " (delta = " + fmt(delta) + ")");
    if (v < delta)
      ++w.zeros;
    else
      w.min_nonzero = std::min(w.min_nonzero, v);
  }
  return w;
}

inline RankRecord rank_record(const OperatorFamily& family, int N, int margin) {
  const FockOperator big = family(N + margin);
  const auto d = static_cast<Eigen::Index>(big.trunc().dim_upto(N));
  const cmat& m = big.matrix();
  const auto ker = count_null(m.leftCols(d), N);
  const auto coker = count_null(m.topRows(d).adjoint(), N);
  return {N, ker.zeros, coker.zeros, std::min(ker.min_nonzero, coker.min_nonzero), ker.min_nonzero, coker.min_nonzero};
}

// True when s1 > s2 > s3 shrink geometrically towards (nearly) zero: the Aitken
// limit is below a tenth of s3. This is the signature of a kernel or cokernel
// vector whose truncation residual has not yet dropped under the threshold.
inline bool decaying_to_zero(double s1, double s2, double s3) {
  if (!std::isfinite(s1) || !std::isfinite(s2) || !std::isfinite(s3)) return false;
  const double d1 = s1 - s2, d2 = s2 - s3;
  if (!(d1 > 0 && d2 > 0 && d2 < d1)) return false;
  const double q = d2 / d1;
  return s3 - d2 * q / (1 - q) < 0.1 * s3;
}

}  // namespace detail

/// Index from dim ker - dim coker over orders N_min, N_min + stride, ..., <= N_max;
/// the last three orders must agree.
inline IndexResult numerical_index(const OperatorFamily& family, int N_min, int N_max, IndexOptions opt = {}) {
  if (N_min < 0 || N_max < N_min) throw error(errc::invalid_argument, "need 0 <= N_min <= N_max");
  if (opt.stride < 1 || opt.margin < 0) throw error(errc::invalid_argument, "stride must be >= 1 and margin >= 0");
  std::vector<int> orders;
  for (int N = N_min; N <= N_max; N += opt.stride) orders.push_back(N);
  if (orders.size() < 3)
    throw error(errc::invalid_argument, "need at least three orders between N_min and N_max (stride " +
                                            std::to_string(opt.stride) + ")");
  IndexResult r;
  if (opt.parallel) {
    std::vector<std::future<RankRecord>> jobs;
    for (int N : orders)
      jobs.push_back(std::async(std::launch::async, [&family, N, &opt] { return detail::rank_record(family, N, opt.margin); }));
    for (auto& j : jobs) r.ranks.push_back(j.get());
  } else {
    for (int N : orders) r.ranks.push_back(detail::rank_record(family, N, opt.margin));
  }
  const std::size_t k = r.ranks.size();
  auto idx = [&](std::size_t i) { return r.ranks[i].kernel - r.ranks[i].cokernel; };
  if (idx(k - 1) != idx(k - 2) || idx(k - 2) != idx(k - 3))
    throw error(errc::not_stabilized, "indices at the last three orders: " + std::to_string(idx(k - 3)) + ", " +
                                          std::to_string(idx(k - 2)) + ", " + std::to_string(idx(k - 1)));
  for (auto window : {&RankRecord::kernel_min, &RankRecord::cokernel_min})
    if (detail::decaying_to_zero(r.ranks[k - 3].*window, r.ranks[k - 2].*window, r.ranks[k - 1].*window))
      throw error(errc::not_stabilized, "smallest nonzero singular value " + fmt(r.ranks[k - 1].*window) + " at N = " +
                                            std::to_string(r.ranks[k - 1].N) +
                                            " is still decaying geometrically; raise the truncation orders");
  r.index = idx(k - 1);
  // Earliest order from which the index stays constant.
  std::size_t first = k - 1;
  while (first > 0 && idx(first - 1) == r.index) --first;
  r.stabilized_at = r.ranks[first].N;
  return r;
}

/// Hardy-space truncation on levels 0..N (dimension N + 1): entries fhat(j - k).
inline FockOperator toeplitz_matrix(const BoundaryFunction& f, int N) {
  if (N < 0) throw error(errc::invalid_argument, "N must be >= 0");
  return {build_truncation(1, N), boundary_lift(f, hemisphere::lower, static_cast<Eigen::Index>(N) + 1)};
}

inline constexpr int default_index_N_min = 48;
inline constexpr int default_index_N_max = 64;

inline IndexResult toeplitz_index(const BoundaryFunction& f, int N_min = default_index_N_min,
                                  int N_max = default_index_N_max, IndexOptions opt = {}) {
  winding_number(f);  // ZeroOnCircle / NonIntegralWinding
  opt.margin = std::max(opt.margin, bandwidth(f) + 2);
  return numerical_index([f](int N) { return toeplitz_matrix(f, N); }, N_min, N_max, opt);
}

/// Family N -> compression of a hemisphere element to levels 0..N.
inline OperatorFamily weyl_family(const WeylElement& a) {
  return [a](int N) { return a.at_order(N); };
}

/// Index of a hemisphere element over orders starting past its finite part.
inline IndexResult weyl_index(const WeylElement& a, IndexOptions opt = {}) {
  opt.margin = std::max(opt.margin, a.boundary_bandwidth() + 2);
  const int n0 = std::max<int>(default_index_N_min, static_cast<int>(a.finite_dim()) + 8);
  return numerical_index(weyl_family(a), n0, n0 + 4 * opt.stride, opt);
}

/// Index of the operator with extended symbol s, via the upper element of the
/// Hermite reduction.
inline IndexResult index_of_extended(const ExtendedSymbol& s, double delta = default_invertibility_delta,
                                     IndexOptions opt = {}) {
  const auto red = hermite_reduction(s, delta);
  return weyl_index(red.tau_plus, opt);
}

}  // namespace heisen
