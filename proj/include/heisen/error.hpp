// Error kinds raised by the heisen library.
#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace heisen {

enum class errc {
  invalid_argument,
  dimension_overflow,
  degenerate_boundary,
  not_symplectic,
  not_invertible,
  unstable_certificate,
  path_degenerate,
  lower_half_not_invertible,
  corner_not_nullhomotopic,
  not_stabilized,
  rank_ambiguous,
  zero_on_circle,
  non_integral_winding,
  truncation_cap_exceeded,
  not_invertible_on_grid,
  non_integral,
  non_invertible_parameter,
  corner_mismatch,
  parse_error,
};

inline std::string_view errc_name(errc e) {
  switch (e) {
    case errc::invalid_argument: return "InvalidArgument";
    case errc::dimension_overflow: return "DimensionOverflow";
    case errc::degenerate_boundary: return "DegenerateBoundary";
    case errc::not_symplectic: return "NotSymplectic";
    case errc::not_invertible: return "NotInvertible";
    case errc::unstable_certificate: return "UnstableCertificate";
    case errc::path_degenerate: return "PathDegenerate";
    case errc::lower_half_not_invertible: return "LowerHalfNotInvertible";
    case errc::corner_not_nullhomotopic: return "CornerNotNullhomotopic";
    case errc::not_stabilized: return "NotStabilized";
    case errc::rank_ambiguous: return "RankAmbiguous";
    case errc::zero_on_circle: return "ZeroOnCircle";
    case errc::non_integral_winding: return "NonIntegralWinding";
    case errc::truncation_cap_exceeded: return "TruncationCapExceeded";
    case errc::not_invertible_on_grid: return "NotInvertibleOnGrid";
    case errc::non_integral: return "NonIntegral";
    case errc::non_invertible_parameter: return "NonInvertibleParameter";
    case errc::corner_mismatch: return "CornerMismatch";
    case errc::parse_error: return "ParseError";
  }
  return "Unknown";
}

/// Configuration-type errors map to CLI exit code 3, everything else is a
/// mathematical certificate failure (exit code 2).
inline bool is_config_error(errc e) {
  return e == errc::invalid_argument || e == errc::dimension_overflow ||
         e == errc::corner_mismatch || e == errc::parse_error ||
         e == errc::non_invertible_parameter;
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

/// Short numeric rendering for diagnostics.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace heisen
