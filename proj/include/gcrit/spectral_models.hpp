#pragma once

// Isotropic covariance families, their radial profile sigma with
// Gamma(z - w) = sigma(|z - w|^2), spectral moments, and exact covariance
// matrices of field derivatives at arbitrary point sets.

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include "json.hpp"

#include "gcrit/errors.hpp"
#include "gcrit/geometry.hpp"
#include "gcrit/special.hpp"

namespace gcrit {

using MatrixL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

class CovarianceModel;

/// sigma(r) = exp(-k r), i.e. Gamma(z) = exp(-k |z|^2).
struct BargmannFock {
  double k = 1.0;
};

/// Gamma(z) = J0(k |z|); spectral measure uniform on the circle of radius k.
struct RandomWave {
  double k = 1.0;
};

/// tau * U + s * (random wave with wavenumber k): atom tau^2 at 0 plus s^2 on the circle.
struct ShiftedRandomWave {
  double tau = 0.0;
  double s = 1.0;
  double k = 1.0;
};

/// Normalized spectral density |lambda|^-7 on 1 <= |lambda| <= t.
/// t = +infinity is accepted as the untruncated density; only the moments it
/// has (orders below 5) are then available.
struct PowerLawTruncated {
  double t = 2.0;
};

/// Spectral mixture s * F_left + (1 - s) * F_right.
struct Interpolation {
  double s = 0.5;
  std::shared_ptr<const CovarianceModel> left;
  std::shared_ptr<const CovarianceModel> right;
};

class CovarianceModel {
 public:
  using Variant = std::variant<BargmannFock, RandomWave, ShiftedRandomWave, PowerLawTruncated, Interpolation>;

  CovarianceModel(BargmannFock m) : v_(m) { validate(); }
  CovarianceModel(RandomWave m) : v_(m) { validate(); }
  CovarianceModel(ShiftedRandomWave m) : v_(m) { validate(); }
  CovarianceModel(PowerLawTruncated m) : v_(m) { validate(); }
  CovarianceModel(Interpolation m) : v_(std::move(m)) { validate(); }

  static CovarianceModel bargmann_fock(double k) { return BargmannFock{k}; }
  static CovarianceModel random_wave(double k) { return RandomWave{k}; }
  static CovarianceModel shifted_random_wave(double tau, double s, double k) {
    return ShiftedRandomWave{tau, s, k};
  }
  static CovarianceModel power_law(double t) { return PowerLawTruncated{t}; }
  static CovarianceModel interpolation(double s, CovarianceModel left, CovarianceModel right) {
    return Interpolation{s, std::make_shared<const CovarianceModel>(std::move(left)),
                         std::make_shared<const CovarianceModel>(std::move(right))};
  }

  const Variant& variant() const { return v_; }

  std::string family() const {
    return std::visit(
        [](const auto& m) -> std::string {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, BargmannFock>) return "bargmannfock";
          else if constexpr (std::is_same_v<T, RandomWave>) return "randomwave";
          else if constexpr (std::is_same_v<T, ShiftedRandomWave>) return "shiftedrandomwave";
          else if constexpr (std::is_same_v<T, PowerLawTruncated>) return "powerlaw";
          else return "interpolation";
        },
        v_);
  }

  /// Human-readable label such as "randomwave(k=1)".
  std::string label() const;

 private:
  void validate() const;
  Variant v_;
};

namespace detail {

inline bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace detail

inline void CovarianceModel::validate() const {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BargmannFock> || std::is_same_v<T, RandomWave>) {
          if (!detail::positive_finite(m.k)) throw InvalidArgument("k must be a positive finite number");
        } else if constexpr (std::is_same_v<T, ShiftedRandomWave>) {
          if (!(std::isfinite(m.tau) && m.tau >= 0.0)) throw InvalidArgument("tau must be >= 0");
          if (!detail::positive_finite(m.s)) throw InvalidArgument("s must be > 0");
          if (!detail::positive_finite(m.k)) throw InvalidArgument("k must be > 0");
        } else if constexpr (std::is_same_v<T, PowerLawTruncated>) {
          if (!(m.t > 1.0)) throw InvalidArgument("power-law truncation t must exceed 1");
        } else {
          if (!(m.s >= 0.0 && m.s <= 1.0)) throw InvalidArgument("interpolation weight must lie in [0, 1]");
          if (!m.left || !m.right) throw InvalidArgument("interpolation needs two component models");
        }
      },
      v_);
}

inline std::string CovarianceModel::label() const {
  auto num = [](double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  };
  return std::visit(
      [&](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BargmannFock>) return "bargmannfock(k=" + num(m.k) + ")";
        else if constexpr (std::is_same_v<T, RandomWave>) return "randomwave(k=" + num(m.k) + ")";
        else if constexpr (std::is_same_v<T, ShiftedRandomWave>)
          return "shiftedrandomwave(tau=" + num(m.tau) + ",s=" + num(m.s) + ",k=" + num(m.k) + ")";
        else if constexpr (std::is_same_v<T, PowerLawTruncated>)
          return "powerlaw(t=" + (std::isinf(m.t) ? std::string("inf") : num(m.t)) + ")";
        else
          return "interpolation(s=" + num(m.s) + "," + m.left->label() + "," + m.right->label() + ")";
      },
      variant());
}

// ---------------------------------------------------------------------------
// Radial spectral quantities
// ---------------------------------------------------------------------------

namespace detail {

/// Normalizing constant of the radial density s^-6 on [1, t].
inline long double power_law_mass(long double t) {
  return std::isinf(t) ? 0.2L : (1.0L - std::pow(t, -5.0L)) / 5.0L;
}

/// Geometric panels covering [1, t] used by every fixed-rule power-law integral.
inline std::vector<std::pair<long double, long double>> power_law_panels(long double t) {
  std::vector<std::pair<long double, long double>> panels;
  constexpr long double ratio = 1.2L;
  long double a = 1.0L;
  while (a < t) {
    long double b = std::min(t, a * ratio);
    if (t - b < 1e-3L * (b - a)) b = t;
    panels.emplace_back(a, b);
    a = b;
  }
  return panels;
}

}  // namespace detail

/// Total spectral mass Gamma(0).
inline double spectral_mass(const CovarianceModel& model) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ShiftedRandomWave>) return m.tau * m.tau + m.s * m.s;
        else if constexpr (std::is_same_v<T, Interpolation>)
          return m.s * spectral_mass(*m.left) + (1.0 - m.s) * spectral_mass(*m.right);
        else return 1.0;
      },
      model.variant());
}

/// Spectral mass carried by the atom at the origin (the constant shift).
inline double atom_mass(const CovarianceModel& model) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ShiftedRandomWave>) return m.tau * m.tau;
        else if constexpr (std::is_same_v<T, Interpolation>)
          return m.s * atom_mass(*m.left) + (1.0 - m.s) * atom_mass(*m.right);
        else return 0.0;
      },
      model.variant());
}

/// Radial moment integral of |lambda|^n against F (n even, 0 <= n <= 16).
inline long double radial_moment(const CovarianceModel& model, int n) {
  if (n < 0 || n % 2 != 0 || n > 16) throw InvalidArgument("radial moment order must be even in [0, 16]");
  return std::visit(
      [n](const auto& m) -> long double {
        using T = std::decay_t<decltype(m)>;
        const int h = n / 2;
        if constexpr (std::is_same_v<T, BargmannFock>) {
          // lambda ~ N(0, 2k I): |lambda|^2 / (2k) is chi-square with 2 degrees of freedom.
          return std::pow(4.0L * m.k, static_cast<long double>(h)) * special::factorial(h);
        } else if constexpr (std::is_same_v<T, RandomWave>) {
          return std::pow(static_cast<long double>(m.k), static_cast<long double>(n));
        } else if constexpr (std::is_same_v<T, ShiftedRandomWave>) {
          const long double s2 = static_cast<long double>(m.s) * m.s;
          if (n == 0) return static_cast<long double>(m.tau) * m.tau + s2;
          return s2 * std::pow(static_cast<long double>(m.k), static_cast<long double>(n));
        } else if constexpr (std::is_same_v<T, PowerLawTruncated>) {
          const long double t = m.t;
          if (std::isinf(t) && n >= 5) {
            throw MomentDivergence("radial moment of order " + std::to_string(n) +
                                   " diverges for the untruncated |lambda|^-7 density");
          }
          using boost::math::quadrature::gauss_kronrod;
          auto f = [n](long double s) { return std::pow(s, static_cast<long double>(n - 6)); };
          long double err = 0.0L;
          const long double integral =
              gauss_kronrod<long double, 31>::integrate(f, 1.0L, t, 15, 1e-10L, &err);
          return integral / detail::power_law_mass(t);
        } else {
          return m.s * radial_moment(*m.left, n) + (1.0 - m.s) * radial_moment(*m.right, n);
        }
      },
      model.variant());
}

/// Derivatives sigma^(0..8)(x) of the radial profile at x = |z|^2 >= 0.
using SigmaJet = std::array<long double, 9>;

inline SigmaJet sigma_jet(const CovarianceModel& model, long double x) {
  if (x < 0.0L) throw InvalidArgument("sigma is defined on [0, inf)");
  return std::visit(
      [x](const auto& m) -> SigmaJet {
        using T = std::decay_t<decltype(m)>;
        SigmaJet out{};
        if constexpr (std::is_same_v<T, BargmannFock>) {
          const long double k = m.k;
          const long double e = std::exp(-k * x);
          long double p = 1.0L;
          for (int n = 0; n <= 8; ++n, p *= -k) out[n] = p * e;
        } else if constexpr (std::is_same_v<T, RandomWave> || std::is_same_v<T, ShiftedRandomWave>) {
          // d^n/dx^n J0(k sqrt x) = (-k^2/2)^n J_n(w) / w^n with w = k sqrt x.
          const long double k = m.k;
          const long double w = k * std::sqrt(x);
          long double p = 1.0L;
          for (int n = 0; n <= 8; ++n, p *= -0.5L * k * k) out[n] = p * special::bessel_j_ratio(n, w);
          if constexpr (std::is_same_v<T, ShiftedRandomWave>) {
            const long double s2 = static_cast<long double>(m.s) * m.s;
            for (auto& v : out) v *= s2;
            out[0] += static_cast<long double>(m.tau) * m.tau;
          }
        } else if constexpr (std::is_same_v<T, PowerLawTruncated>) {
          if (std::isinf(m.t)) {
            throw MomentDivergence("the untruncated |lambda|^-7 field is not C^3; its profile derivatives are unavailable");
          }
          // sigma^(n)(x) = int (-s^2/2)^n J_n(s sqrt x)/(s sqrt x)^n s^-6 ds / mass, fixed
          // composite Gauss-Legendre so every x shares one discrete spectral measure.
          using Rule = boost::math::quadrature::gauss<long double, 20>;
          const long double rx = std::sqrt(x);
          for (const auto& [a, b] : detail::power_law_panels(m.t)) {
            const long double half = 0.5L * (b - a), mid = 0.5L * (a + b);
            const auto& abscissa = Rule::abscissa();
            const auto& weights = Rule::weights();
            for (std::size_t i = 0; i < abscissa.size(); ++i) {
              for (int sign : {-1, 1}) {
                if (i == 0 && sign < 0 && abscissa[0] == 0.0L) continue;
                const long double s = mid + sign * half * abscissa[i];
                const long double wq = half * weights[i] * std::pow(s, -6.0L);
                long double p = 1.0L;
                for (int n = 0; n <= 8; ++n, p *= -0.5L * s * s) out[n] += wq * p * special::bessel_j_ratio(n, s * rx);
              }
            }
          }
          const long double mass = detail::power_law_mass(m.t);
          for (auto& v : out) v /= mass;
        } else {
          const SigmaJet l = sigma_jet(*m.left, x);
          const SigmaJet r = sigma_jet(*m.right, x);
          for (int n = 0; n <= 8; ++n) out[n] = m.s * l[n] + (1.0L - m.s) * r[n];
        }
        return out;
      },
      model.variant());
}

inline long double sigma_derivative(const CovarianceModel& model, int n, long double x) {
  if (n < 0 || n > 8) throw OrderTooHigh("sigma derivatives are available up to order 8");
  return sigma_jet(model, x)[n];
}

/// sigma'(0), sigma''(0), sigma'''(0), sigma''''(0).
struct SigmaDerivatives {
  double eta0 = 0.0;
  double mu0 = 0.0;
  double nu0 = 0.0;
  double upsilon = 0.0;

  bool admissible() const { return eta0 < 0.0 && mu0 > 0.0 && nu0 < 0.0; }
};

enum class DivergencePolicy { Throw, Saturate };

/// sigma^(n)(0) = (-1)^n R_{2n} / (4^n n!) in terms of radial moments R_j.
inline SigmaDerivatives sigma_derivatives_from_radial_moments(long double r2, long double r4, long double r6,
                                                              long double r8) {
  return {static_cast<double>(-r2 / 4.0L), static_cast<double>(r4 / 32.0L), static_cast<double>(-r6 / 384.0L),
          static_cast<double>(r8 / 6144.0L)};
}

inline SigmaDerivatives sigma_derivatives(const CovarianceModel& model,
                                          DivergencePolicy policy = DivergencePolicy::Throw) {
  const auto* pl = std::get_if<PowerLawTruncated>(&model.variant());
  bool untruncated = pl && std::isinf(pl->t);
  if (!untruncated) {
    if (const auto* ip = std::get_if<Interpolation>(&model.variant())) {
      // Mixtures with an untruncated component fall back to radial moments.
      try {
        (void)sigma_jet(*ip->left, 0.0L);
        (void)sigma_jet(*ip->right, 0.0L);
      } catch (const MomentDivergence&) {
        untruncated = true;
      }
    }
  }
  if (!untruncated) {
    const SigmaJet jet = sigma_jet(model, 0.0L);
    return {static_cast<double>(jet[1]), static_cast<double>(jet[2]), static_cast<double>(jet[3]),
            static_cast<double>(jet[4])};
  }
  auto moment = [&](int n) -> long double {
    try {
      return radial_moment(model, n);
    } catch (const MomentDivergence&) {
      if (policy == DivergencePolicy::Throw) throw;
      return std::numeric_limits<long double>::infinity();
    }
  };
  return sigma_derivatives_from_radial_moments(moment(2), moment(4), moment(6), moment(8));
}

/// Spectral moment m_{a,b} = int lambda_1^a lambda_2^b F(d lambda); zero for odd a or b.
inline double spectral_moment(const CovarianceModel& model, int a, int b) {
  if (a < 0 || b < 0) throw InvalidArgument("moment orders must be nonnegative");
  if (a + b > 16) throw OrderTooHigh("spectral moments are available up to total order 16");
  if (a % 2 != 0 || b % 2 != 0) return 0.0;
  // (1/2pi) int cos^a sin^b = (a-1)!! (b-1)!! / (a+b)!!
  long double ang = special::double_factorial_odd(a) * special::double_factorial_odd(b);
  for (int i = 2; i <= a + b; i += 2) ang /= static_cast<long double>(i);
  return static_cast<double>(ang * radial_moment(model, a + b));
}

// ---------------------------------------------------------------------------
// Derivative covariances
// ---------------------------------------------------------------------------

/// d1^a d2^b Gamma at t, using Gamma(t) = sigma(|t|^2) and the expansion of
/// d^a/dt^a exp(s t^2) = sum_j a!/(j!(a-2j)!) (2t)^(a-2j) s^(a-j).
inline long double gamma_partial(const SigmaJet& jet, int a, int b, Point2 t) {
  if (a + b > 8) throw OrderTooHigh("Gamma partial derivatives are available up to total order 8");
  long double acc = 0.0L;
  const long double t1 = 2.0L * t.x, t2 = 2.0L * t.y;
  for (int j = 0; 2 * j <= a; ++j) {
    const long double ca = special::factorial(a) / (special::factorial(j) * special::factorial(a - 2 * j)) *
                           std::pow(t1, static_cast<long double>(a - 2 * j));
    if (ca == 0.0L) continue;
    for (int l = 0; 2 * l <= b; ++l) {
      const long double cb = special::factorial(b) / (special::factorial(l) * special::factorial(b - 2 * l)) *
                             std::pow(t2, static_cast<long double>(b - 2 * l));
      acc += ca * cb * jet[static_cast<std::size_t>(a - j + b - l)];
    }
  }
  return acc;
}

/// Exact covariance matrix of the listed field derivatives:
/// Cov(d^alpha psi(p), d^beta psi(q)) = (-1)^|beta| d^(alpha+beta) Gamma(p - q).
inline MatrixL derivative_covariance(const CovarianceModel& model, const std::vector<DerivSpec>& specs) {
  const auto n = static_cast<Eigen::Index>(specs.size());
  MatrixL cov(n, n);
  std::vector<std::pair<long double, SigmaJet>> cache;
  auto jet_at = [&](long double x) -> const SigmaJet& {
    for (const auto& [key, jet] : cache)
      if (key == x) return jet;
    cache.emplace_back(x, sigma_jet(model, x));
    return cache.back().second;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const auto& si = specs[static_cast<std::size_t>(i)];
      const auto& sj = specs[static_cast<std::size_t>(j)];
      const Point2 d = si.point - sj.point;
      const long double x = static_cast<long double>(d.x) * d.x + static_cast<long double>(d.y) * d.y;
      const long double v = gamma_partial(jet_at(x), si.alpha.d1() + sj.alpha.d1(), si.alpha.d2() + sj.alpha.d2(), d);
      cov(i, j) = cov(j, i) = (sj.alpha.order() % 2 == 0) ? v : -v;
    }
  }
  return cov;
}

/// Wavenumber of the circle when the spectral measure is (atom at 0) + (uniform circle).
inline std::optional<double> is_shifted_random_wave(const CovarianceModel& model) {
  return std::visit(
      [](const auto& m) -> std::optional<double> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RandomWave> || std::is_same_v<T, ShiftedRandomWave>) {
          return m.k;
        } else if constexpr (std::is_same_v<T, Interpolation>) {
          const auto l = is_shifted_random_wave(*m.left);
          const auto r = is_shifted_random_wave(*m.right);
          if (m.s == 1.0) return l;
          if (m.s == 0.0) return r;
          if (l && r && *l == *r) return l;
          return std::nullopt;
        } else {
          return std::nullopt;
        }
      },
      model.variant());
}

/// Mean wavelength 2 pi sqrt((Gamma(0) - atom) / E|lambda|^2); equals 2 pi / k for wave models.
inline double correlation_length(const CovarianceModel& model) {
  const long double r2 = radial_moment(model, 2);
  return 2.0 * std::numbers::pi * std::sqrt((spectral_mass(model) - atom_mass(model)) / static_cast<double>(r2));
}

/// Draws a frequency from the normalized non-atomic part of the spectral measure.
template <class Rng>
Point2 draw_frequency(const CovarianceModel& model, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto on_circle = [&](double radius) {
    const double theta = 2.0 * std::numbers::pi * unif(rng);
    return Point2{radius * std::cos(theta), radius * std::sin(theta)};
  };
  return std::visit(
      [&](const auto& m) -> Point2 {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BargmannFock>) {
          std::normal_distribution<double> g(0.0, std::sqrt(2.0 * m.k));
          const double a = g(rng);
          const double b = g(rng);
          return {a, b};
        } else if constexpr (std::is_same_v<T, RandomWave> || std::is_same_v<T, ShiftedRandomWave>) {
          return on_circle(m.k);
        } else if constexpr (std::is_same_v<T, PowerLawTruncated>) {
          // radial CDF (1 - s^-5) / (1 - t^-5) on [1, t]
          const double tail = std::isinf(m.t) ? 0.0 : std::pow(m.t, -5.0);
          const double u = unif(rng);
          return on_circle(std::pow(1.0 - u * (1.0 - tail), -0.2));
        } else {
          const double wl = m.s * (spectral_mass(*m.left) - atom_mass(*m.left));
          const double wr = (1.0 - m.s) * (spectral_mass(*m.right) - atom_mass(*m.right));
          return unif(rng) * (wl + wr) < wl ? draw_frequency(*m.left, rng) : draw_frequency(*m.right, rng);
        }
      },
      model.variant());
}

// ---------------------------------------------------------------------------
// Configuration records
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double read_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw InvalidArgument(std::string("missing model parameter '") + key + "'");
  const auto& v = j.at(key);
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    throw InvalidArgument(std::string("parameter '") + key + "' is not a number");
  }
  if (!v.is_number()) throw InvalidArgument(std::string("parameter '") + key + "' is not a number");
  return v.get<double>();
}

}  // namespace detail

inline nlohmann::json to_config(const CovarianceModel& model) {
  using nlohmann::json;
  return std::visit(
      [&](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        json j;
        j["family"] = model.family();
        if constexpr (std::is_same_v<T, BargmannFock> || std::is_same_v<T, RandomWave>) {
          j["params"] = {{"k", m.k}};
        } else if constexpr (std::is_same_v<T, ShiftedRandomWave>) {
          j["params"] = {{"tau", m.tau}, {"s", m.s}, {"k", m.k}};
        } else if constexpr (std::is_same_v<T, PowerLawTruncated>) {
          j["params"] = {{"t", detail::number_or_inf(m.t)}};
        } else {
          j["params"] = {{"s", m.s}};
          j["left"] = to_config(*m.left);
          j["right"] = to_config(*m.right);
        }
        return j;
      },
      model.variant());
}

inline CovarianceModel model_from_config(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family")) throw InvalidArgument("model config needs a 'family' field");
  const auto family = j.at("family").get<std::string>();
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  using detail::read_number;
  if (family == "bargmannfock") return BargmannFock{read_number(params, "k")};
  if (family == "randomwave") return RandomWave{read_number(params, "k")};
  if (family == "shiftedrandomwave")
    return ShiftedRandomWave{read_number(params, "tau"), read_number(params, "s"), read_number(params, "k")};
  if (family == "powerlaw") return PowerLawTruncated{read_number(params, "t")};
  if (family == "interpolation") {
    if (!j.contains("left") || !j.contains("right")) throw InvalidArgument("interpolation needs 'left' and 'right'");
    return CovarianceModel::interpolation(read_number(params, "s"), model_from_config(j.at("left")),
                                          model_from_config(j.at("right")));
  }
  throw InvalidArgument("unknown model family '" + family + "'");
}

}  // namespace gcrit
