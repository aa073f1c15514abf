#pragma once

// Monte-Carlo estimators of intensities and second factorial moments from
// simulated fields, a Poisson control process, and power-law fitting.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "gcrit/critical_finder.hpp"
#include "gcrit/field_sampler.hpp"
#include "gcrit/parallel.hpp"
#include "gcrit/stats.hpp"
#include "gcrit/types.hpp"

namespace gcrit {

using PointSets = std::vector<std::vector<CriticalPoint>>;

struct EmpiricalConfig {
  Window window;
  int frequencies = kDefaultFrequencies;
  SamplerVariant variant = SamplerVariant::GaussianAmplitude;
  SearchConfig search;
  int threads = 0;

  /// Square window of 40 / k for wave models (40 ell / 2 pi in general) and
  /// the model's default search grid.
  static EmpiricalConfig for_model(const CovarianceModel& model) {
    EmpiricalConfig cfg;
    const double side = 40.0 * correlation_length(model) / (2.0 * std::numbers::pi);
    cfg.window = Window::square(side);
    cfg.search = SearchConfig::for_model(model);
    return cfg;
  }
};

/// Critical points of nreal independent realizations; realization i uses derive_seed(seed, i).
inline PointSets simulate_point_sets(const CovarianceModel& model, const EmpiricalConfig& cfg, int nreal,
                                     std::uint64_t seed, std::vector<SearchDiagnostics>* diagnostics = nullptr) {
  if (nreal < 1) throw InvalidArgument("need at least one realization");
  cfg.search.validate();
  PointSets sets(static_cast<std::size_t>(nreal));
  std::vector<SearchDiagnostics> diag(static_cast<std::size_t>(nreal));
  parallel_for(
      sets.size(),
      [&](std::size_t i) {
        const auto f = sample_field(model, cfg.frequencies, derive_seed(seed, i), cfg.variant);
        auto res = find_critical_points(f, cfg.window, cfg.search);
        sets[i] = std::move(res.points);
        diag[i] = res.diagnostics;
      },
      cfg.threads);
  if (diagnostics) *diagnostics = std::move(diag);
  return sets;
}

/// Mean number of class-c points per unit area; SE across realizations.
inline MomentEstimate estimate_intensity(const PointSets& sets, const Window& window, PointClass c) {
  std::vector<double> dens;
  dens.reserve(sets.size());
  for (const auto& pts : sets) {
    double n = 0.0;
    for (const auto& p : pts)
      if (matches(p.kind, c)) n += 1.0;
    dens.push_back(n / window.area());
  }
  auto est = mean_estimate(dens);
  est.tag = to_string(c);
  return est;
}

inline MomentEstimate estimate_intensity(const CovarianceModel& model, const EmpiricalConfig& cfg, int nreal,
                                         std::uint64_t seed, PointClass c) {
  if (nreal < 2) throw InvalidArgument("need at least two realizations");
  return estimate_intensity(simulate_point_sets(model, cfg, nreal, seed), cfg.window, c);
}

/// Centers at distance >= rho from the boundary on a grid of spacing 2 rho.
/// The offset (in units of rho) shifts the grid to give a disjoint center set.
inline std::vector<Point2> ball_centers(const Window& window, double rho, double offset = 0.0) {
  std::vector<Point2> out;
  const double step = 2.0 * rho;
  const double start = rho * (1.0 + offset);
  for (double x = window.xmin + start; x <= window.xmax - rho; x += step)
    for (double y = window.ymin + start; y <= window.ymax - rho; y += step) out.push_back({x, y});
  return out;
}

namespace detail {

/// N_a (N_b - 1{a = b}) for one ball.
inline double pair_count(const std::vector<CriticalPoint>& pts, Point2 center, double rho, PairType pair) {
  const double na = count_in_ball(pts, center, rho, first(pair));
  if (pair == PairType::CC || pair == PairType::EE || pair == PairType::SS) return na * (na - 1.0);
  return na * count_in_ball(pts, center, rho, second(pair));
}

inline void require_rho(const Window& window, double rho) {
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  if (!(rho < 0.25 * std::min(window.width(), window.height())))
    throw InvalidArgument("rho must be smaller than a quarter of the window's short side");
}

}  // namespace detail

/// Grid offsets 2k/n, k < n: n interleaved center grids.
inline std::vector<double> interleaved_offsets(int n) {
  if (n < 1) throw InvalidArgument("need at least one center grid");
  std::vector<double> out;
  for (int k = 0; k < n; ++k) out.push_back(2.0 * k / n);
  return out;
}

/// Per-rho mean over balls and realizations of N_a (N_b - 1{a = b}); SE from
/// the spread of per-realization averages. Centers are pooled over the grids
/// shifted by each offset.
inline std::vector<MomentEstimate> estimate_second_factorial(const PointSets& sets, const Window& window,
                                                             const std::vector<double>& rhos, PairType pair,
                                                             const std::vector<double>& offsets = {0.0}) {
  if (sets.size() < 2) throw InvalidArgument("need at least two realizations");
  if (offsets.empty()) throw InvalidArgument("need at least one center grid");
  std::vector<MomentEstimate> out;
  for (double rho : rhos) {
    detail::require_rho(window, rho);
    std::vector<Point2> centers;
    for (double off : offsets) {
      const auto c = ball_centers(window, rho, off);
      centers.insert(centers.end(), c.begin(), c.end());
    }
    std::vector<double> per_real;
    for (const auto& pts : sets) {
      double acc = 0.0;
      for (const auto& c : centers) acc += detail::pair_count(pts, c, rho, pair);
      per_real.push_back(acc / static_cast<double>(centers.size()));
    }
    auto est = mean_estimate(per_real);
    est.rho = rho;
    est.tag = to_string(pair);
    out.push_back(est);
  }
  return out;
}

inline std::vector<MomentEstimate> estimate_second_factorial(const CovarianceModel& model, const EmpiricalConfig& cfg,
                                                             const std::vector<double>& rhos, int nreal,
                                                             std::uint64_t seed, PairType pair) {
  for (double rho : rhos) detail::require_rho(cfg.window, rho);
  return estimate_second_factorial(simulate_point_sets(model, cfg, nreal, seed), cfg.window, rhos, pair);
}

/// E[N(N-1)] / E[N]^2 over balls of radius rho, delta-method SE across realizations.
inline MomentEstimate repulsion_ratio_estimate(const PointSets& sets, const Window& window, double rho,
                                               PointClass c = PointClass::Critical) {
  detail::require_rho(window, rho);
  if (sets.size() < 2) throw InvalidArgument("need at least two realizations");
  const auto centers = ball_centers(window, rho);
  std::vector<double> f, m;
  for (const auto& pts : sets) {
    double sf = 0.0, sm = 0.0;
    for (const auto& ctr : centers) {
      const double n = count_in_ball(pts, ctr, rho, c);
      sf += n * (n - 1.0);
      sm += n;
    }
    f.push_back(sf / static_cast<double>(centers.size()));
    m.push_back(sm / static_cast<double>(centers.size()));
  }
  const double n = static_cast<double>(sets.size());
  const double fbar = std::accumulate(f.begin(), f.end(), 0.0) / n;
  const double mbar = std::accumulate(m.begin(), m.end(), 0.0) / n;
  if (!(mbar > 0.0)) throw NonPositiveEstimate("no points observed in any ball");
  double vff = 0.0, vmm = 0.0, vfm = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    vff += (f[i] - fbar) * (f[i] - fbar);
    vmm += (m[i] - mbar) * (m[i] - mbar);
    vfm += (f[i] - fbar) * (m[i] - mbar);
  }
  // variances of the means
  vff /= (n - 1.0) * n;
  vmm /= (n - 1.0) * n;
  vfm /= (n - 1.0) * n;
  const double ratio = fbar / (mbar * mbar);
  // gradient of f / m^2 is (1/m^2, -2 f / m^3)
  const double gf = 1.0 / (mbar * mbar), gm = -2.0 * fbar / (mbar * mbar * mbar);
  const double var = gf * gf * vff + gm * gm * vmm + 2.0 * gf * gm * vfm;
  return {ratio, std::sqrt(std::max(var, 0.0)), static_cast<long long>(sets.size()), rho, "ratio_" + to_string(c)};
}

inline MomentEstimate repulsion_ratio_estimate(const CovarianceModel& model, const EmpiricalConfig& cfg, double rho,
                                               int nreal, std::uint64_t seed) {
  detail::require_rho(cfg.window, rho);
  return repulsion_ratio_estimate(simulate_point_sets(model, cfg, nreal, seed), cfg.window, rho);
}

/// Homogeneous Poisson points with independent kinds (saddle 1/2, minimum 1/4, maximum 1/4).
inline PointSets simulate_poisson_point_sets(double intensity, const Window& window, int nreal, std::uint64_t seed) {
  if (!(intensity > 0.0)) throw InvalidArgument("intensity must be positive");
  PointSets sets(static_cast<std::size_t>(nreal));
  for (std::size_t i = 0; i < sets.size(); ++i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    std::poisson_distribution<long> count(intensity * window.area());
    std::uniform_real_distribution<double> ux(window.xmin, window.xmax), uy(window.ymin, window.ymax), u(0.0, 1.0);
    const long n = count(rng);
    for (long j = 0; j < n; ++j) {
      CriticalPoint p;
      p.location = {ux(rng), uy(rng)};
      const double v = u(rng);
      p.kind = v < 0.5 ? Kind::Saddle : (v < 0.75 ? Kind::Minimum : Kind::Maximum);
      sets[i].push_back(p);
    }
  }
  return sets;
}

inline MomentEstimate poisson_control_ratio(double intensity, const Window& window, double rho, int nreal,
                                            std::uint64_t seed) {
  return repulsion_ratio_estimate(simulate_poisson_point_sets(intensity, window, nreal, seed), window, rho);
}

struct ScalingFit {
  double exponent = 0.0;
  double exponent_se = 0.0;
  bool log_coefficient_detected = false;
  double r_squared = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
};

/// Weighted least squares of log(value) on log(rho). With with_log the
/// response is log(value / |ln rho|), i.e. value ~ C rho^p |ln rho|. Log
/// detection uses a separate fit with a free coefficient q on log|ln rho|,
/// flagged when q exceeds twice its standard error.
inline ScalingFit fit_scaling(const std::vector<MomentEstimate>& est, bool with_log) {
  std::vector<double> rhos;
  for (const auto& e : est) {
    if (!(e.value > 0.0)) throw NonPositiveEstimate("scaling fits need positive estimates");
    if (!(e.rho > 0.0 && e.rho != 1.0)) throw InvalidArgument("scaling fits need rho in (0, 1) or (1, inf)");
    if (std::find(rhos.begin(), rhos.end(), e.rho) == rhos.end()) rhos.push_back(e.rho);
  }
  if (rhos.size() < 4) throw InvalidArgument("scaling fits need at least 4 distinct rho values");
  const auto n = static_cast<Eigen::Index>(est.size());
  bool have_se = true;
  for (const auto& e : est) have_se = have_se && e.std_error > 0.0;
  Eigen::MatrixXd X2(n, 2), X3(n, 3);
  Eigen::VectorXd y(n), ylog(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = est[static_cast<std::size_t>(i)];
    const double lr = std::log(e.rho);
    const double ll = std::log(std::fabs(lr));
    X2.row(i) << 1.0, lr;
    X3.row(i) << 1.0, lr, ll;
    y(i) = std::log(e.value);
    ylog(i) = y(i) - ll;
    w(i) = have_se ? 1.0 / std::pow(e.std_error / e.value, 2) : 1.0;
  }
  const auto fit = weighted_least_squares(X2, with_log ? ylog : y, w);
  ScalingFit out;
  out.exponent = fit.coef(1);
  out.exponent_se = std::sqrt(std::max(fit.coef_cov(1, 1), 0.0));
  out.r_squared = fit.r_squared;
  out.rho_min = *std::min_element(rhos.begin(), rhos.end());
  out.rho_max = *std::max_element(rhos.begin(), rhos.end());
  if (rhos.size() >= 4) {
    const auto full = weighted_least_squares(X3, y, w);
    const double q = full.coef(2);
    const double q_se = std::sqrt(std::max(full.coef_cov(2, 2), 0.0));
    out.log_coefficient_detected = q > 2.0 * q_se && q > 1e-9;
  }
  return out;
}

}  // namespace gcrit
