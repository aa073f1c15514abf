#pragma once

// Closed-form first- and second-order quantities driven by (eta0, mu0, nu0).

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <vector>

#include "json.hpp"

#include "gcrit/errors.hpp"
#include "gcrit/spectral_models.hpp"
#include "gcrit/types.hpp"

namespace gcrit {

namespace detail {

inline constexpr double kSqrt3 = std::numbers::sqrt3;
inline constexpr double kPi = std::numbers::pi;

inline void require_first_two(const SigmaDerivatives& d) {
  if (!(d.eta0 < 0.0)) throw SignViolation("sigma'(0) must be negative");
  if (!(d.mu0 > 0.0)) throw SignViolation("sigma''(0) must be positive");
}

inline void require_signs(const SigmaDerivatives& d) {
  require_first_two(d);
  if (!(d.nu0 < 0.0)) throw SignViolation("sigma'''(0) must be negative");
}

}  // namespace detail

/// Minimal possible repulsion factor, attained exactly by (shifted) random waves.
inline constexpr double kMinimalRepulsion = 1.0 / (8.0 * detail::kSqrt3);

/// Mean number of critical points per unit area.
inline double lambda_c(const SigmaDerivatives& d) {
  detail::require_first_two(d);
  return 4.0 / (detail::kSqrt3 * detail::kPi) * d.mu0 / (-d.eta0);
}

/// R_c = (sqrt3/8)(5 nu0 eta0 / mu0^2 - 3); +infinity when nu0 diverges.
inline double repulsion_factor(const SigmaDerivatives& d) {
  detail::require_first_two(d);
  if (std::isinf(d.nu0) && d.nu0 < 0.0) return std::numeric_limits<double>::infinity();
  detail::require_signs(d);
  return detail::kSqrt3 / 8.0 * (5.0 * d.nu0 * d.eta0 / (d.mu0 * d.mu0) - 3.0);
}

enum class RepulsionClass { Repulsive, PoissonLike, Attractive };

inline RepulsionClass classify_repulsion(double rc, double tol = 1e-12) {
  if (std::fabs(rc - 1.0) <= tol) return RepulsionClass::PoissonLike;
  return rc < 1.0 ? RepulsionClass::Repulsive : RepulsionClass::Attractive;
}

/// a = lim K2(z, w) as |z - w| -> 0, equal to R_c lambda_c^2.
inline double k2_limit(const SigmaDerivatives& d) {
  detail::require_first_two(d);
  if (std::isinf(d.nu0) && d.nu0 < 0.0) return std::numeric_limits<double>::infinity();
  detail::require_signs(d);
  return (10.0 * d.nu0 * d.eta0 - 6.0 * d.mu0 * d.mu0) /
         (detail::kSqrt3 * detail::kPi * detail::kPi * d.eta0 * d.eta0);
}

/// Fraction of critical points of each class in expectation.
inline double class_fraction(PointClass c) {
  switch (c) {
    case PointClass::Critical: return 1.0;
    case PointClass::Extremum:
    case PointClass::Saddle: return 0.5;
    default: return 0.25;
  }
}

/// Expected number of points of the class in a disc of radius rho.
inline double expected_count(const SigmaDerivatives& d, double rho, PointClass c) {
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  return class_fraction(c) * lambda_c(d) * detail::kPi * rho * rho;
}

/// R_c lambda_c^2 |B_rho|^2, the small-ball equivalent for (c,c) and (e,s).
inline double second_factorial_asymptotic(const SigmaDerivatives& d, double rho, PairType pair) {
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  if (pair == PairType::EE || pair == PairType::SS) {
    throw UnsupportedPair("same-type pairs only have an order-of-magnitude law; see scaling_order");
  }
  const double area = detail::kPi * rho * rho;
  return k2_limit(d) * area * area;
}

/// Small-rho order rho^exponent, times |ln rho| when log_factor is set.
struct ScalingOrder {
  int exponent = 4;
  bool log_factor = false;
};

inline ScalingOrder scaling_order(PairType pair) {
  switch (pair) {
    case PairType::EE: return {7, false};
    case PairType::SS: return {7, true};
    default: return {4, false};
  }
}

/// Density of the gradient at a single point evaluated at 0: 1 / (4 pi |eta0|).
inline double gradient_density_at_zero(const SigmaDerivatives& d) {
  detail::require_first_two(d);
  return 1.0 / (4.0 * detail::kPi * std::fabs(d.eta0));
}

/// E|det H| at a point; extrema and saddles each carry half of it.
inline double expected_abs_hessian_det(const SigmaDerivatives& d, PointClass c = PointClass::Critical) {
  detail::require_first_two(d);
  const double full = 16.0 * d.mu0 / detail::kSqrt3;
  switch (c) {
    case PointClass::Critical: return full;
    case PointClass::Extremum:
    case PointClass::Saddle: return 0.5 * full;
    default: return 0.25 * full;
  }
}

/// E[|W1 W3 - W1^2 - W2^2| | W3 = t] with W1 = d11, W2 = d12, W3 = d11 + d22 (the Laplacian).
inline double hessian_det_conditional_mean(const SigmaDerivatives& d, double t) {
  detail::require_first_two(d);
  const double c = t * t / (16.0 * d.mu0);
  return 4.0 * d.mu0 * (c - 2.0 + 4.0 * std::exp(-0.5 * c));
}

/// Small-distance equivalent of the density of (grad psi(z), grad psi(w)) at 0 for |z - w| = u.
inline double gradient_pair_density_asymptotic(const SigmaDerivatives& d, double u) {
  detail::require_first_two(d);
  if (!(u > 0.0)) throw InvalidArgument("distance must be positive");
  return 1.0 / (32.0 * detail::kPi * detail::kPi * detail::kSqrt3 * std::fabs(d.mu0 * d.eta0) * u * u);
}

/// E[A1^2] at r = 0 where A1 = d22 psi(0) d111 psi(0) given the order <= 2 jet constraints.
inline double expansion_a1_second_moment(const SigmaDerivatives& d) {
  detail::require_signs(d);
  return 256.0 * d.mu0 * (3.0 * d.mu0 * d.mu0 - 5.0 * d.nu0 * d.eta0) / d.eta0;
}

/// R_c(model) - 1/(8 sqrt3); exactly 0 for shifted random waves.
inline double grw_minimality_gap(const CovarianceModel& model) {
  if (is_shifted_random_wave(model)) return 0.0;
  return repulsion_factor(sigma_derivatives(model)) - kMinimalRepulsion;
}

struct TheoryRow {
  double rho = 0.0;
  std::map<std::string, double> expected_counts;  // keyed c, e, s, min, max
  double second_factorial_asymptotic = 0.0;
};

struct TheoryReport {
  std::string model;
  SigmaDerivatives derivatives;
  double lambda_c = 0.0;
  double repulsion_factor = 0.0;
  double k2_limit_a = 0.0;
  std::vector<TheoryRow> rows;
};

inline TheoryReport make_theory_report(const CovarianceModel& model, const std::vector<double>& rhos) {
  TheoryReport rep;
  rep.model = model.label();
  rep.derivatives = sigma_derivatives(model, DivergencePolicy::Saturate);
  rep.lambda_c = lambda_c(rep.derivatives);
  rep.repulsion_factor = repulsion_factor(rep.derivatives);
  rep.k2_limit_a = k2_limit(rep.derivatives);
  for (double rho : rhos) {
    TheoryRow row;
    row.rho = rho;
    for (PointClass c : {PointClass::Critical, PointClass::Extremum, PointClass::Saddle, PointClass::Minimum,
                         PointClass::Maximum}) {
      row.expected_counts[to_string(c)] = expected_count(rep.derivatives, rho, c);
    }
    row.second_factorial_asymptotic = second_factorial_asymptotic(rep.derivatives, rho, PairType::CC);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

inline nlohmann::json to_json(const TheoryReport& r) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  nlohmann::json j;
  j["model"] = r.model;
  j["eta0"] = num(r.derivatives.eta0);
  j["mu0"] = num(r.derivatives.mu0);
  j["nu0"] = num(r.derivatives.nu0);
  j["upsilon"] = num(r.derivatives.upsilon);
  j["lambda_c"] = num(r.lambda_c);
  j["R_c"] = num(r.repulsion_factor);
  j["k2_limit_a"] = num(r.k2_limit_a);
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json jr;
    jr["rho"] = row.rho;
    for (const auto& [k, v] : row.expected_counts) jr["expected_counts"][k] = v;
    jr["second_factorial_asymptotic"] = num(row.second_factorial_asymptotic);
    j["rows"].push_back(jr);
  }
  return j;
}

}  // namespace gcrit
