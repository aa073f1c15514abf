#pragma once

// Spectral superposition sampler: psi(x) = shift + sum_j a_j cos(lambda_j . x + phi_j).

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gcrit/errors.hpp"
#include "gcrit/geometry.hpp"
#include "gcrit/parallel.hpp"
#include "gcrit/spectral_models.hpp"

namespace gcrit {

enum class SamplerVariant {
  /// Fixed amplitude sqrt(2 m / M) with uniform phases; Gaussian only as M grows.
  RandomPhase,
  /// Independent N(0, m/M) cosine and sine coefficients per frequency; exactly Gaussian.
  GaussianAmplitude,
};

inline constexpr int kDefaultFrequencies = 1024;

/// Value, gradient and Hessian at one point.
struct FieldJet {
  double value = 0.0;
  double d1 = 0.0, d2 = 0.0;
  double d11 = 0.0, d12 = 0.0, d22 = 0.0;
};

class FieldRealization {
 public:
  FieldRealization() = default;

  /// Explicit superposition, used for sampled fields and deterministic test fields.
  FieldRealization(std::vector<Point2> frequencies, std::vector<double> amplitudes, std::vector<double> phases,
                   double shift = 0.0)
      : frequencies_(std::move(frequencies)),
        amplitudes_(std::move(amplitudes)),
        phases_(std::move(phases)),
        shift_(shift) {
    if (frequencies_.size() != amplitudes_.size() || frequencies_.size() != phases_.size()) {
      throw InvalidArgument("frequency, amplitude and phase lists differ in length");
    }
  }

  const std::vector<Point2>& frequencies() const { return frequencies_; }
  const std::vector<double>& amplitudes() const { return amplitudes_; }
  const std::vector<double>& phases() const { return phases_; }
  double shift() const { return shift_; }
  std::size_t size() const { return frequencies_.size(); }

  std::shared_ptr<const CovarianceModel> model() const { return model_; }
  std::uint64_t seed() const { return seed_; }
  SamplerVariant variant() const { return variant_; }

  /// d^alpha psi(x), |alpha| <= 4, from the analytic derivative of every cosine term.
  double derivative(Point2 x, MultiIndex alpha) const {
    const int n = alpha.order();
    double acc = 0.0;
    for (std::size_t j = 0; j < frequencies_.size(); ++j) {
      const Point2 l = frequencies_[j];
      const double theta = l.x * x.x + l.y * x.y + phases_[j];
      // d^n/dtheta^n cos(theta) = cos(theta + n pi / 2)
      double trig = 0.0;
      switch (n % 4) {
        case 0: trig = std::cos(theta); break;
        case 1: trig = -std::sin(theta); break;
        case 2: trig = -std::cos(theta); break;
        default: trig = std::sin(theta); break;
      }
      acc += amplitudes_[j] * monomial(l, alpha) * trig;
    }
    return n == 0 ? acc + shift_ : acc;
  }

  double value(Point2 x) const { return derivative(x, MultiIndex(0, 0)); }

  FieldJet jet(Point2 x) const {
    FieldJet out;
    for (std::size_t j = 0; j < frequencies_.size(); ++j) {
      const Point2 l = frequencies_[j];
      const double theta = l.x * x.x + l.y * x.y + phases_[j];
      const double c = amplitudes_[j] * std::cos(theta);
      const double s = amplitudes_[j] * std::sin(theta);
      out.value += c;
      out.d1 -= l.x * s;
      out.d2 -= l.y * s;
      out.d11 -= l.x * l.x * c;
      out.d12 -= l.x * l.y * c;
      out.d22 -= l.y * l.y * c;
    }
    out.value += shift_;
    return out;
  }

 private:
  friend FieldRealization sample_field_impl(const CovarianceModel&, int, std::uint64_t, SamplerVariant);

  static double monomial(Point2 l, MultiIndex a) {
    double p = 1.0;
    for (int i = 0; i < a.d1(); ++i) p *= l.x;
    for (int i = 0; i < a.d2(); ++i) p *= l.y;
    return p;
  }

  std::vector<Point2> frequencies_;
  std::vector<double> amplitudes_;
  std::vector<double> phases_;
  double shift_ = 0.0;
  std::shared_ptr<const CovarianceModel> model_;
  std::uint64_t seed_ = 0;
  SamplerVariant variant_ = SamplerVariant::RandomPhase;
};

inline FieldRealization sample_field_impl(const CovarianceModel& model, int M, std::uint64_t seed,
                                          SamplerVariant variant) {
  if (M < 1) throw InvalidArgument("the number of frequencies must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double mass = spectral_mass(model) - atom_mass(model);
  const double atom = atom_mass(model);

  FieldRealization f;
  f.frequencies_.resize(static_cast<std::size_t>(M));
  f.amplitudes_.resize(static_cast<std::size_t>(M));
  f.phases_.resize(static_cast<std::size_t>(M));
  for (std::size_t j = 0; j < f.frequencies_.size(); ++j) {
    f.frequencies_[j] = draw_frequency(model, rng);
    if (variant == SamplerVariant::RandomPhase) {
      f.amplitudes_[j] = std::sqrt(2.0 * mass / M);
      f.phases_[j] = 2.0 * std::numbers::pi * unif(rng);
    } else {
      // a cos(t) + b sin(t) = hypot(a, b) cos(t - atan2(b, a))
      const double a = gauss(rng);
      const double b = gauss(rng);
      f.amplitudes_[j] = std::sqrt(mass / M) * std::hypot(a, b);
      f.phases_[j] = -std::atan2(b, a);
    }
  }
  f.shift_ = atom > 0.0 ? std::sqrt(atom) * gauss(rng) : 0.0;
  f.model_ = std::make_shared<const CovarianceModel>(model);
  f.seed_ = seed;
  f.variant_ = variant;
  return f;
}

/// Realization fully determined by (model, M, seed, variant).
inline FieldRealization sample_field(const CovarianceModel& model, int M, std::uint64_t seed,
                                     SamplerVariant variant = SamplerVariant::RandomPhase) {
  return sample_field_impl(model, M, seed, variant);
}

inline double eval_derivative(const FieldRealization& f, Point2 x, MultiIndex alpha) {
  return f.derivative(x, alpha);
}

inline FieldJet eval_jet(const FieldRealization& f, Point2 x) { return f.jet(x); }

/// Every multi-index of total order 1..max_order, in increasing order.
inline std::vector<MultiIndex> multi_indices_up_to(int max_order, int min_order = 1) {
  std::vector<MultiIndex> out;
  for (int n = min_order; n <= max_order; ++n)
    for (int b = 0; b <= n; ++b) out.emplace_back(n - b, b);
  return out;
}

/// Sample covariance of d^alpha psi(0) across independent realizations.
struct DerivativeMoments {
  std::vector<MultiIndex> labels;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd std_error;
  int nsamples = 0;

  std::size_t index(MultiIndex a) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == a) return i;
    throw InvalidArgument("multi-index not tracked: " + a.to_string());
  }
  double variance(MultiIndex a) const {
    const auto i = static_cast<Eigen::Index>(index(a));
    return covariance(i, i);
  }
  double variance_se(MultiIndex a) const {
    const auto i = static_cast<Eigen::Index>(index(a));
    return std_error(i, i);
  }
  double cov(MultiIndex a, MultiIndex b) const {
    return covariance(static_cast<Eigen::Index>(index(a)), static_cast<Eigen::Index>(index(b)));
  }
  double cov_se(MultiIndex a, MultiIndex b) const {
    return std_error(static_cast<Eigen::Index>(index(a)), static_cast<Eigen::Index>(index(b)));
  }
};

/// Derivatives of order 1..3 at the origin over nsamples realizations. The
/// fields are centered, so second moments are the covariances; the standard
/// error of each entry is the sample SD of the product divided by sqrt(n).
inline DerivativeMoments empirical_derivative_variances(const CovarianceModel& model, int M, int nsamples,
                                                        std::uint64_t seed,
                                                        SamplerVariant variant = SamplerVariant::GaussianAmplitude,
                                                        int threads = 0) {
  if (nsamples < 2) throw InvalidArgument("need at least two samples");
  DerivativeMoments out;
  out.labels = multi_indices_up_to(3);
  const auto d = static_cast<Eigen::Index>(out.labels.size());
  Eigen::MatrixXd draws(nsamples, d);
  parallel_for(
      static_cast<std::size_t>(nsamples),
      [&](std::size_t i) {
        const auto f = sample_field(model, M, derive_seed(seed, i), variant);
        for (Eigen::Index c = 0; c < d; ++c)
          draws(static_cast<Eigen::Index>(i), c) = f.derivative({0.0, 0.0}, out.labels[static_cast<std::size_t>(c)]);
      },
      threads);
  out.covariance.resize(d, d);
  out.std_error.resize(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      const Eigen::VectorXd prod = draws.col(a).cwiseProduct(draws.col(b));
      const double mean = prod.mean();
      const double var = (prod.array() - mean).square().sum() / (nsamples - 1);
      out.covariance(a, b) = mean;
      out.std_error(a, b) = std::sqrt(var / nsamples);
    }
  }
  out.nsamples = nsamples;
  return out;
}

}  // namespace gcrit
