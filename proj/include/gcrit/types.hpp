#pragma once

#include <string>

#include "gcrit/errors.hpp"

namespace gcrit {

/// Type filter for critical points: all (c), extrema (e), saddles (s), minima, maxima.
enum class PointClass { Critical, Extremum, Saddle, Minimum, Maximum };

/// Ordered pair of point classes for second-order quantities.
enum class PairType { CC, EE, SS, ES, SE };

inline std::string to_string(PointClass c) {
  switch (c) {
    case PointClass::Critical: return "c";
    case PointClass::Extremum: return "e";
    case PointClass::Saddle: return "s";
    case PointClass::Minimum: return "min";
    case PointClass::Maximum: return "max";
  }
  return "?";
}

inline std::string to_string(PairType p) {
  switch (p) {
    case PairType::CC: return "cc";
    case PairType::EE: return "ee";
    case PairType::SS: return "ss";
    case PairType::ES: return "es";
    case PairType::SE: return "se";
  }
  return "?";
}

inline PointClass parse_point_class(const std::string& s) {
  if (s == "c" || s == "critical" || s == "all") return PointClass::Critical;
  if (s == "e" || s == "extrema" || s == "extremum") return PointClass::Extremum;
  if (s == "s" || s == "saddle" || s == "saddles") return PointClass::Saddle;
  if (s == "min" || s == "minimum" || s == "minima") return PointClass::Minimum;
  if (s == "max" || s == "maximum" || s == "maxima") return PointClass::Maximum;
  throw InvalidArgument("unknown point kind '" + s + "'");
}

inline PairType parse_pair_type(const std::string& s) {
  if (s == "cc" || s == "c,c") return PairType::CC;
  if (s == "ee" || s == "e,e") return PairType::EE;
  if (s == "ss" || s == "s,s") return PairType::SS;
  if (s == "es" || s == "e,s") return PairType::ES;
  if (s == "se" || s == "s,e") return PairType::SE;
  throw InvalidArgument("unknown pair type '" + s + "'");
}

inline PointClass first(PairType p) {
  switch (p) {
    case PairType::CC: return PointClass::Critical;
    case PairType::EE:
    case PairType::ES: return PointClass::Extremum;
    default: return PointClass::Saddle;
  }
}

inline PointClass second(PairType p) {
  switch (p) {
    case PairType::CC: return PointClass::Critical;
    case PairType::EE:
    case PairType::SE: return PointClass::Extremum;
    default: return PointClass::Saddle;
  }
}

/// Whether a Hessian determinant sign belongs to the class (extrema: det > 0, saddles: det < 0).
/// Minimum and maximum need the trace as well; see matches_hessian.
inline bool matches_det_sign(PointClass c, double det) {
  switch (c) {
    case PointClass::Critical: return true;
    case PointClass::Extremum: return det > 0.0;
    case PointClass::Saddle: return det < 0.0;
    default: throw InvalidArgument("minimum/maximum need the full Hessian");
  }
}

inline bool matches_hessian(PointClass c, double h11, double h12, double h22) {
  const double det = h11 * h22 - h12 * h12;
  switch (c) {
    case PointClass::Minimum: return det > 0.0 && h11 > 0.0;
    case PointClass::Maximum: return det > 0.0 && h11 < 0.0;
    default: return matches_det_sign(c, det);
  }
}

}  // namespace gcrit
