#pragma once

// Kac-Rice engine: exact joint Gaussian laws of field derivatives, Schur
// conditioning on vanishing gradients, and Monte-Carlo over the conditional
// law for one- and two-point correlation functions and their ball integrals.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "gcrit/errors.hpp"
#include "gcrit/parallel.hpp"
#include "gcrit/spectral_models.hpp"
#include "gcrit/stats.hpp"
#include "gcrit/theory.hpp"
#include "gcrit/types.hpp"

namespace gcrit {

/// Eigenvalues of a conditional covariance below -kClipTolerance * (max diagonal) are an error;
/// those in between are clipped to zero.
inline constexpr long double kClipTolerance = 1e-10L;

/// Gaussian vector N(mean, covariance) with a sampling factor computed once.
class ConditionalGaussian {
 public:
  ConditionalGaussian(std::vector<DerivSpec> labels, VectorL mean, MatrixL covariance,
                      long double conditioning_density = 1.0L)
      : labels_(std::move(labels)),
        mean_(std::move(mean)),
        cov_(std::move(covariance)),
        conditioning_density_(conditioning_density) {
    const Eigen::Index n = cov_.rows();
    if (cov_.cols() != n || mean_.size() != n) throw InvalidArgument("mean and covariance sizes differ");
    cov_ = 0.5L * (cov_ + cov_.transpose()).eval();
    long double scale = 0.0L;
    for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, std::fabs(cov_(i, i)));
    Eigen::SelfAdjointEigenSolver<MatrixL> es(cov_);
    const VectorL& ev = es.eigenvalues();
    smallest_eigenvalue_ = n > 0 ? ev.minCoeff() : 0.0L;
    if (smallest_eigenvalue_ < -kClipTolerance * scale) {
      throw DegenerateCovariance("conditional covariance is not positive semidefinite",
                                 static_cast<double>(smallest_eigenvalue_));
    }
    factor_.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const long double s = std::sqrt(std::max(ev(j), 0.0L));
      for (Eigen::Index i = 0; i < n; ++i) factor_(i, j) = static_cast<double>(es.eigenvectors()(i, j) * s);
    }
    mean_d_ = mean_.cast<double>();
  }

  const std::vector<DerivSpec>& labels() const { return labels_; }
  const VectorL& mean() const { return mean_; }
  const MatrixL& covariance() const { return cov_; }
  std::size_t dim() const { return static_cast<std::size_t>(cov_.rows()); }
  long double smallest_eigenvalue() const { return smallest_eigenvalue_; }

  /// Density of the conditioning vector at its conditioning value (1 if none).
  long double conditioning_density() const { return conditioning_density_; }

  template <class Rng>
  void sample(Rng& rng, std::normal_distribution<double>& gauss, double* out) const {
    const Eigen::Index n = factor_.rows();
    double z[32];
    for (Eigen::Index i = 0; i < n; ++i) z[i] = gauss(rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = mean_d_(i);
      for (Eigen::Index j = 0; j < n; ++j) acc += factor_(i, j) * z[j];
      out[i] = acc;
    }
  }

 private:
  std::vector<DerivSpec> labels_;
  VectorL mean_;
  MatrixL cov_;
  long double conditioning_density_;
  long double smallest_eigenvalue_ = 0.0L;
  Eigen::MatrixXd factor_;
  Eigen::VectorXd mean_d_;
};

/// Conditions the leading `ntargets` coordinates of N(0, joint) on the
/// remaining coordinates being equal to `values` (Schur complement).
inline ConditionalGaussian condition_joint(const MatrixL& joint, Eigen::Index ntargets, const VectorL& values,
                                           std::vector<DerivSpec> labels = {}) {
  const Eigen::Index n = joint.rows();
  const Eigen::Index nc = n - ntargets;
  if (values.size() != nc) throw InvalidArgument("conditioning value has the wrong dimension");
  const MatrixL sxx = joint.topLeftCorner(ntargets, ntargets);
  if (nc == 0) return ConditionalGaussian(std::move(labels), VectorL::Zero(ntargets), sxx);
  const MatrixL sxy = joint.topRightCorner(ntargets, nc);
  const MatrixL syy = joint.bottomRightCorner(nc, nc);

  Eigen::SelfAdjointEigenSolver<MatrixL> es(syy, Eigen::EigenvaluesOnly);
  const long double lo = es.eigenvalues().minCoeff();
  const long double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 1e-15L * hi)) {
    throw DegenerateCovariance("conditioning block is numerically singular", static_cast<double>(lo));
  }
  Eigen::LLT<MatrixL> llt(syy);
  if (llt.info() != Eigen::Success) {
    throw DegenerateCovariance("conditioning block is not positive definite", static_cast<double>(lo));
  }
  const MatrixL k = llt.solve(sxy.transpose());  // syy^-1 syx
  const MatrixL cov = sxx - sxy * k;
  const VectorL mean = k.transpose() * values;

  long double logdet = 0.0L;
  for (Eigen::Index i = 0; i < nc; ++i) logdet += 2.0L * std::log(llt.matrixL()(i, i));
  const VectorL white = llt.matrixL().solve(values);
  const long double density =
      std::exp(-0.5L * white.squaredNorm() - 0.5L * logdet -
               0.5L * static_cast<long double>(nc) * std::log(2.0L * std::numbers::pi_v<long double>));
  return ConditionalGaussian(std::move(labels), mean, cov, density);
}

/// Law of the target derivatives given that the conditioning derivatives vanish.
inline ConditionalGaussian condition_on_zero(const CovarianceModel& model, const std::vector<DerivSpec>& conditions,
                                             const std::vector<DerivSpec>& targets) {
  std::vector<DerivSpec> all = targets;
  all.insert(all.end(), conditions.begin(), conditions.end());
  const MatrixL joint = derivative_covariance(model, all);
  return condition_joint(joint, static_cast<Eigen::Index>(targets.size()),
                         VectorL::Zero(static_cast<Eigen::Index>(conditions.size())), targets);
}

inline std::vector<DerivSpec> gradient_specs(const std::vector<Point2>& points) {
  std::vector<DerivSpec> out;
  for (const Point2& p : points) {
    out.push_back({p, MultiIndex(1, 0)});
    out.push_back({p, MultiIndex(0, 1)});
  }
  return out;
}

inline std::vector<DerivSpec> hessian_specs(const std::vector<Point2>& points) {
  std::vector<DerivSpec> out;
  for (const Point2& p : points) {
    out.push_back({p, MultiIndex(2, 0)});
    out.push_back({p, MultiIndex(1, 1)});
    out.push_back({p, MultiIndex(0, 2)});
  }
  return out;
}

/// Conditions the targets on grad psi = 0 at one or two points.
inline ConditionalGaussian condition_on_zero_gradients(const CovarianceModel& model, const std::vector<Point2>& points,
                                                       const std::vector<DerivSpec>& targets) {
  if (points.empty() || points.size() > 2) throw InvalidArgument("condition on one or two points");
  return condition_on_zero(model, gradient_specs(points), targets);
}

namespace detail {

inline constexpr long long kBlockSize = 8192;

/// Block-parallel Monte-Carlo with K summands per draw. Block b uses
/// derive_seed(seed, b); blocks merge in index order so the result does not
/// depend on the worker count.
template <std::size_t K, class Draw>
std::array<RunningStats, K> block_monte_carlo(long long nsamples, std::uint64_t seed, Draw draw, int threads = 0) {
  if (nsamples < 2) throw InvalidArgument("need at least two Monte-Carlo samples");
  const auto nblocks = static_cast<std::size_t>((nsamples + kBlockSize - 1) / kBlockSize);
  std::vector<std::array<RunningStats, K>> partial(nblocks);
  parallel_for(
      nblocks,
      [&](std::size_t b) {
        std::mt19937_64 rng(derive_seed(seed, b));
        std::normal_distribution<double> gauss(0.0, 1.0);
        const long long begin = static_cast<long long>(b) * kBlockSize;
        const long long count = std::min(kBlockSize, nsamples - begin);
        std::array<double, K> v{};
        for (long long i = 0; i < count; ++i) {
          draw(rng, gauss, v);
          for (std::size_t k = 0; k < K; ++k) partial[b][k].add(v[k]);
        }
      },
      threads);
  std::array<RunningStats, K> total{};
  for (const auto& p : partial)
    for (std::size_t k = 0; k < K; ++k) total[k].merge(p[k]);
  return total;
}

inline MomentEstimate scaled(const RunningStats& s, long double factor, std::string tag, double rho = 0.0) {
  return {static_cast<double>(factor * s.mean()), static_cast<double>(factor * s.std_error()), s.count(), rho,
          std::move(tag)};
}

inline double det2(double h11, double h12, double h22) { return h11 * h22 - h12 * h12; }

}  // namespace detail

// ---------------------------------------------------------------------------
// One point
// ---------------------------------------------------------------------------

/// Hessian law at a point given a vanishing gradient (it is independent of the gradient).
inline ConditionalGaussian one_point_hessian_law(const CovarianceModel& model) {
  const Point2 o{0.0, 0.0};
  return condition_on_zero_gradients(model, {o}, hessian_specs({o}));
}

/// E[|det H| 1{H in class}] by Monte-Carlo.
inline MomentEstimate hessian_determinant_moment_mc(const CovarianceModel& model, long long nsamples,
                                                    std::uint64_t seed, PointClass c, int threads = 0) {
  const auto law = one_point_hessian_law(model);
  auto stats = detail::block_monte_carlo<1>(
      nsamples, seed,
      [&](auto& rng, auto& gauss, std::array<double, 1>& v) {
        double h[3];
        law.sample(rng, gauss, h);
        v[0] = matches_hessian(c, h[0], h[1], h[2]) ? std::fabs(detail::det2(h[0], h[1], h[2])) : 0.0;
      },
      threads);
  return detail::scaled(stats[0], 1.0L, "E|detH|_" + to_string(c));
}

/// Intensity phi_grad(0) E[|det H| 1{class}]; phi_grad(0) = 1/(4 pi |eta0|) in closed form.
inline MomentEstimate one_point_intensity_mc(const CovarianceModel& model, long long nsamples, std::uint64_t seed,
                                             PointClass c, int threads = 0) {
  const double density = gradient_density_at_zero(sigma_derivatives(model));
  auto est = hessian_determinant_moment_mc(model, nsamples, seed, c, threads);
  est.value *= density;
  est.std_error *= density;
  est.tag = "intensity_" + to_string(c);
  return est;
}

/// Monte-Carlo of E[|W1 W3 - W1^2 - W2^2| | W3 = t] with W = (d11, d12, d11 + d22).
inline MomentEstimate hessian_det_conditional_mean_mc(const CovarianceModel& model, double t, long long nsamples,
                                                      std::uint64_t seed, int threads = 0) {
  const Point2 o{0.0, 0.0};
  const MatrixL h = derivative_covariance(model, hessian_specs({o}));
  MatrixL T(3, 3);
  T << 1, 0, 0, 0, 1, 0, 1, 0, 1;
  const MatrixL w = T * h * T.transpose();
  VectorL value(1);
  value << t;
  const auto law = condition_joint(w, 2, value);
  auto stats = detail::block_monte_carlo<1>(
      nsamples, seed,
      [&](auto& rng, auto& gauss, std::array<double, 1>& v) {
        double x[2];
        law.sample(rng, gauss, x);
        v[0] = std::fabs(x[0] * t - x[0] * x[0] - x[1] * x[1]);
      },
      threads);
  return detail::scaled(stats[0], 1.0L, "E|W1W3-W1^2-W2^2|");
}

// ---------------------------------------------------------------------------
// Two points
// ---------------------------------------------------------------------------

/// Distances below this fraction of the correlation length are rejected as numerically degenerate.
inline constexpr double kRankFloor = 1e-4;

inline double distance_floor(const CovarianceModel& model) { return kRankFloor * correlation_length(model); }

inline std::array<Point2, 2> pair_points(double u) { return {Point2{-0.5 * u, 0.0}, Point2{0.5 * u, 0.0}}; }

/// Law of both Hessians at mutual distance u given both gradients vanish.
inline ConditionalGaussian two_point_hessian_law(const CovarianceModel& model, double u) {
  if (!(u > 0.0)) throw InvalidArgument("distance must be positive");
  if (u < distance_floor(model)) {
    throw DegenerateCovariance("distance below the numerical-rank floor of the gradient-pair covariance", 0.0);
  }
  const auto p = pair_points(u);
  return condition_on_zero_gradients(model, {p[0], p[1]}, hessian_specs({p[0], p[1]}));
}

/// Density of (grad psi(z), grad psi(w)) at 0 for |z - w| = u.
inline double gradient_pair_density(const CovarianceModel& model, double u) {
  return static_cast<double>(two_point_hessian_law(model, u).conditioning_density());
}

struct TwoPointResult {
  double u = 0.0;
  double gradient_density = 0.0;
  std::map<PairType, MomentEstimate> k2;  // cc, ee, ss, es, se from the same draws
};

/// K2 for every pair type at mutual distance u.
inline TwoPointResult two_point_correlation_all(const CovarianceModel& model, double u, long long nsamples,
                                                std::uint64_t seed, int threads = 0) {
  const auto law = two_point_hessian_law(model, u);
  auto stats = detail::block_monte_carlo<5>(
      nsamples, seed,
      [&](auto& rng, auto& gauss, std::array<double, 5>& v) {
        double h[6];
        law.sample(rng, gauss, h);
        const double d1 = detail::det2(h[0], h[1], h[2]);
        const double d2 = detail::det2(h[3], h[4], h[5]);
        const double w = std::fabs(d1 * d2);
        v[0] = w;
        v[1] = (d1 > 0.0 && d2 > 0.0) ? w : 0.0;
        v[2] = (d1 < 0.0 && d2 < 0.0) ? w : 0.0;
        v[3] = (d1 > 0.0 && d2 < 0.0) ? w : 0.0;
        v[4] = (d1 < 0.0 && d2 > 0.0) ? w : 0.0;
      },
      threads);
  TwoPointResult out;
  out.u = u;
  const long double dens = law.conditioning_density();
  out.gradient_density = static_cast<double>(dens);
  const PairType order[5] = {PairType::CC, PairType::EE, PairType::SS, PairType::ES, PairType::SE};
  for (std::size_t k = 0; k < 5; ++k) {
    auto est = detail::scaled(stats[k], dens, "K2_" + to_string(order[k]));
    est.rho = u;
    out.k2[order[k]] = est;
  }
  return out;
}

/// K2 at mutual distance u for one pair type.
inline MomentEstimate two_point_correlation(const CovarianceModel& model, double u, PairType pair, long long nsamples,
                                            std::uint64_t seed, int threads = 0) {
  return two_point_correlation_all(model, u, nsamples, seed, threads).k2.at(pair);
}

/// Density of |X - Y| for X, Y independent uniform on a disc of radius rho.
inline double disc_pair_distance_density(double rho, double u) {
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  if (u <= 0.0 || u >= 2.0 * rho) return 0.0;
  const double x = u / (2.0 * rho);
  return 4.0 * u / (std::numbers::pi * rho * rho) * (std::acos(x) - x * std::sqrt(1.0 - x * x));
}

struct QuadratureConfig {
  int gl_nodes = 32;         // Gauss-Legendre in u on [0.2 rho, 2 rho]
  int log_nodes = 16;        // Gauss-Legendre in ln u on [u_floor, 0.2 rho]
  long long nsamples_per_node = 100000;
  int threads = 0;
};

struct QuadratureNode {
  double u = 0.0;
  double weight = 0.0;  // includes p_rho(u) and the Jacobian
  std::map<PairType, MomentEstimate> k2;
};

struct BallMoments {
  double rho = 0.0;
  std::map<PairType, MomentEstimate> moments;
  std::vector<QuadratureNode> nodes;
};

namespace detail {

template <int N>
void gauss_legendre(double a, double b, std::vector<double>& x, std::vector<double>& w) {
  using Rule = boost::math::quadrature::gauss<double, N>;
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  const auto& ab = Rule::abscissa();
  const auto& wt = Rule::weights();
  for (std::size_t i = 0; i < ab.size(); ++i) {
    if (ab[i] == 0.0) {
      x.push_back(mid);
      w.push_back(half * wt[i]);
      continue;
    }
    x.push_back(mid - half * ab[i]);
    w.push_back(half * wt[i]);
    x.push_back(mid + half * ab[i]);
    w.push_back(half * wt[i]);
  }
}

inline void gauss_legendre_n(int n, double a, double b, std::vector<double>& x, std::vector<double>& w) {
  switch (n) {
    case 8: gauss_legendre<8>(a, b, x, w); break;
    case 16: gauss_legendre<16>(a, b, x, w); break;
    case 24: gauss_legendre<24>(a, b, x, w); break;
    case 32: gauss_legendre<32>(a, b, x, w); break;
    case 48: gauss_legendre<48>(a, b, x, w); break;
    case 64: gauss_legendre<64>(a, b, x, w); break;
    default: throw InvalidArgument("supported Gauss-Legendre sizes: 8, 16, 24, 32, 48, 64");
  }
}

/// Small-u power of K2 used for the analytic tail: bounded for cc/es, ~u^3 for ee/ss.
inline double tail_exponent(PairType p) { return (p == PairType::EE || p == PairType::SS) ? 3.0 : 0.0; }

}  // namespace detail

/// E[N_a (N_b - 1{a = b})] over a disc of radius rho for every pair type,
/// via |B|^2 int K2(u) p_rho(u) du. Below the rank floor u_f the integrand is
/// closed analytically with K2(u) ~ K2(u_f) (u/u_f)^g and p_rho(u) ~ 2u/rho^2.
inline BallMoments ball_moments_by_quadrature(const CovarianceModel& model, double rho, const QuadratureConfig& cfg,
                                              std::uint64_t seed) {
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  if (cfg.nsamples_per_node < 2) throw InvalidArgument("need at least two samples per node");
  const double uf = distance_floor(model);
  const double split = 0.2 * rho;
  std::vector<double> us, ws;
  if (split > uf) {
    detail::gauss_legendre_n(cfg.gl_nodes, split, 2.0 * rho, us, ws);
    std::vector<double> lx, lw;
    detail::gauss_legendre_n(cfg.log_nodes, std::log(uf), std::log(split), lx, lw);
    for (std::size_t i = 0; i < lx.size(); ++i) {
      us.push_back(std::exp(lx[i]));
      ws.push_back(lw[i] * std::exp(lx[i]));
    }
  } else {
    detail::gauss_legendre_n(cfg.gl_nodes, uf, 2.0 * rho, us, ws);
  }
  us.push_back(uf);  // tail anchor
  ws.push_back(0.0);

  BallMoments out;
  out.rho = rho;
  out.nodes.resize(us.size());
  for (std::size_t i = 0; i < us.size(); ++i) {
    out.nodes[i].u = us[i];
    out.nodes[i].weight = ws[i] * disc_pair_distance_density(rho, us[i]);
  }
  // Nodes run sequentially; each node's sample blocks use the worker pool.
  for (std::size_t i = 0; i < us.size(); ++i) {
    out.nodes[i].k2 = two_point_correlation_all(model, us[i], cfg.nsamples_per_node, derive_seed(seed, i), cfg.threads).k2;
  }
  const double area = std::numbers::pi * rho * rho;
  for (PairType p : {PairType::CC, PairType::EE, PairType::SS, PairType::ES, PairType::SE}) {
    double value = 0.0, var = 0.0;
    for (const auto& node : out.nodes) {
      const auto& k = node.k2.at(p);
      value += node.weight * k.value;
      var += node.weight * node.weight * k.std_error * k.std_error;
    }
    const double g = detail::tail_exponent(p);
    const double tail_w = 2.0 * uf * uf / ((g + 2.0) * rho * rho);
    const auto& anchor = out.nodes.back().k2.at(p);
    value += tail_w * anchor.value;
    var += tail_w * tail_w * anchor.std_error * anchor.std_error;
    out.moments[p] = {area * area * value, area * area * std::sqrt(var),
                      static_cast<long long>(out.nodes.size()) * cfg.nsamples_per_node, rho, to_string(p)};
  }
  return out;
}

inline MomentEstimate second_factorial_by_quadrature(const CovarianceModel& model, double rho, PairType pair,
                                                     const QuadratureConfig& cfg, std::uint64_t seed) {
  return ball_moments_by_quadrature(model, rho, cfg, seed).moments.at(pair);
}

// ---------------------------------------------------------------------------
// Small-distance expansion
// ---------------------------------------------------------------------------

enum class ExpansionVariant { Extrema, Saddle };

/// Law of X = (d22, d111, d122, d112, d1111) at 0 given (d1, d2, d11, d12) = 0.
/// For shifted random waves d122 = -d111 almost surely and is dropped (X').
struct ExpansionLaw {
  ConditionalGaussian law;
  bool shifted_random_wave = false;
};

inline ExpansionLaw expansion_law(const CovarianceModel& model) {
  const Point2 o{0.0, 0.0};
  const std::vector<DerivSpec> y0 = {{o, MultiIndex(1, 0)}, {o, MultiIndex(0, 1)}, {o, MultiIndex(2, 0)},
                                     {o, MultiIndex(1, 1)}};
  const bool sgrw = is_shifted_random_wave(model).has_value();
  std::vector<DerivSpec> x = {{o, MultiIndex(0, 2)}, {o, MultiIndex(3, 0)}};
  if (!sgrw) x.push_back({o, MultiIndex(1, 2)});
  x.push_back({o, MultiIndex(2, 1)});
  x.push_back({o, MultiIndex(4, 0)});
  return {condition_on_zero(model, y0, x), sgrw};
}

/// Terms A1 = d22 d111 and B0 = d122 d111 - d112^2 + d22 d1111 / 3 from one conditional draw.
struct ExpansionTerms {
  double a1 = 0.0;
  double b0 = 0.0;
};

inline ExpansionTerms expansion_terms(const double* x, bool sgrw) {
  const double d22 = x[0], d111 = x[1];
  const double d122 = sgrw ? -d111 : x[2];
  const double d112 = sgrw ? x[2] : x[3];
  const double d1111 = sgrw ? x[3] : x[4];
  return {d22 * d111, d122 * d111 - d112 * d112 + d22 * d1111 / 3.0};
}

/// E[|A1^2 - r^2 B0^2| J] with J = 1{|A1| < r B0} (extrema) or 1{|A1| <= -r B0} (saddles).
inline MomentEstimate expansion_moment_mc(const CovarianceModel& model, double r, ExpansionVariant variant,
                                          long long nsamples, std::uint64_t seed, int threads = 0) {
  if (!(r >= 0.0)) throw InvalidArgument("r must be nonnegative");
  const auto el = expansion_law(model);
  auto stats = detail::block_monte_carlo<1>(
      nsamples, seed,
      [&](auto& rng, auto& gauss, std::array<double, 1>& v) {
        double x[5];
        el.law.sample(rng, gauss, x);
        const auto t = expansion_terms(x, el.shifted_random_wave);
        const bool j = variant == ExpansionVariant::Extrema ? std::fabs(t.a1) < r * t.b0
                                                            : std::fabs(t.a1) <= -r * t.b0;
        v[0] = j ? std::fabs(t.a1 * t.a1 - r * r * t.b0 * t.b0) : 0.0;
      },
      threads);
  auto est = detail::scaled(stats[0], 1.0L, variant == ExpansionVariant::Extrema ? "a_r" : "a_r_saddle");
  est.rho = r;
  return est;
}

/// E[A1^2] at r = 0 from the conditional covariance: Var(d22) Var(d111) + 2 Cov^2.
inline double expansion_a1_second_moment_exact(const CovarianceModel& model) {
  const auto el = expansion_law(model);
  const MatrixL& c = el.law.covariance();
  return static_cast<double>(c(0, 0) * c(1, 1) + 2.0L * c(0, 1) * c(0, 1));
}

// ---------------------------------------------------------------------------
// Small-ball oracles
// ---------------------------------------------------------------------------

/// Z ~ N(0, covariance) in dimension `dim` (identity when covariance is empty).
struct SmallBallSpec {
  int dim = 2;
  double coupling = 0.0;      // s
  Eigen::MatrixXd quadratic;  // a_ij, dim x dim; empty means zero
  Eigen::MatrixXd covariance;
};

/// P(|Z1 Z2 + s sum a_ij Z_i Z_j| < r).
inline MomentEstimate small_ball_probability_mc(const SmallBallSpec& spec, double r, long long nsamples,
                                                std::uint64_t seed, int threads = 0) {
  if (spec.dim < 2 || spec.dim > 32) throw InvalidArgument("dimension must be in [2, 32]");
  const auto d = static_cast<Eigen::Index>(spec.dim);
  Eigen::MatrixXd a = spec.quadratic.size() ? spec.quadratic : Eigen::MatrixXd::Zero(d, d);
  if (a.rows() != d || a.cols() != d) throw InvalidArgument("quadratic form has the wrong size");
  Eigen::MatrixXd chol = Eigen::MatrixXd::Identity(d, d);
  if (spec.covariance.size()) {
    Eigen::LLT<Eigen::MatrixXd> llt(spec.covariance);
    if (llt.info() != Eigen::Success || spec.covariance.rows() != d)
      throw InvalidArgument("covariance must be positive definite of the given dimension");
    chol = llt.matrixL();
  }
  auto stats = detail::block_monte_carlo<1>(
      nsamples, seed,
      [&](auto& rng, auto& gauss, std::array<double, 1>& v) {
        Eigen::VectorXd z(d);
        for (Eigen::Index i = 0; i < d; ++i) z(i) = gauss(rng);
        z = chol * z;
        const double q = z(0) * z(1) + (spec.coupling != 0.0 ? spec.coupling * z.dot(a * z) : 0.0);
        v[0] = std::fabs(q) < r ? 1.0 : 0.0;
      },
      threads);
  auto est = detail::scaled(stats[0], 1.0L, "small_ball");
  est.rho = r;
  return est;
}

/// E[|Z2|^alpha 1{|Z1| <= r Z2}] for independent standard Z1, Z2.
inline MomentEstimate truncated_product_moment_mc(double alpha, double r, long long nsamples, std::uint64_t seed,
                                                  int threads = 0) {
  auto stats = detail::block_monte_carlo<1>(
      nsamples, seed,
      [&](auto& rng, auto& gauss, std::array<double, 1>& v) {
        const double z1 = gauss(rng), z2 = gauss(rng);
        v[0] = std::fabs(z1) <= r * z2 ? std::pow(std::fabs(z2), alpha) : 0.0;
      },
      threads);
  auto est = detail::scaled(stats[0], 1.0L, "truncated_product");
  est.rho = r;
  return est;
}

}  // namespace gcrit
