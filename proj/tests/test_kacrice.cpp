#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "gcrit/kacrice.hpp"

using namespace gcrit;

namespace {
constexpr double kPi = std::numbers::pi;
const double kSqrt3 = std::sqrt(3.0);

const CovarianceModel& rw() {
  static const CovarianceModel m = CovarianceModel::random_wave(1.0);
  return m;
}
}  // namespace

TEST(Conditioning, OnePointHessianIsUnconditional) {
  const auto law = one_point_hessian_law(rw());
  const double mu0 = 1.0 / 32;
  Eigen::Matrix3d expect;
  expect << 12 * mu0, 0, 4 * mu0, 0, 4 * mu0, 0, 4 * mu0, 0, 12 * mu0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(static_cast<double>(law.covariance()(i, j)), expect(i, j), 1e-15);
  EXPECT_NEAR(static_cast<double>(law.conditioning_density()), 1 / (4 * kPi * 0.25), 1e-14);
  // (W1, W2, W3) = (d11, d12, d11 + d22) has covariance D
  MatrixL T(3, 3);
  T << 1, 0, 0, 0, 1, 0, 1, 0, 1;
  const MatrixL D = T * law.covariance() * T.transpose();
  EXPECT_NEAR(static_cast<double>(D(0, 2)), 16 * mu0, 1e-15);
  EXPECT_NEAR(static_cast<double>(D(2, 2)), 32 * mu0, 1e-15);
  EXPECT_NEAR(static_cast<double>(D(0, 0)), 12 * mu0, 1e-15);
}

TEST(Conditioning, TwoPointSmallDistanceLimit) {
  // targets at the midpoint given vanishing gradients at +-(r, 0)
  const auto m = CovarianceModel::bargmann_fock(1.0);
  const double r = 1e-3;
  const Point2 o{0, 0};
  const auto law =
      condition_on_zero_gradients(m, {{r, 0}, {-r, 0}}, {{o, MultiIndex(0, 2)}, {o, MultiIndex(3, 0)}});
  auto mom = [&](int a, int b) { return spectral_moment(m, a, b); };
  const double v22 = mom(0, 4) - mom(2, 2) * mom(2, 2) / mom(4, 0);
  const double v111 = mom(6, 0) - mom(4, 0) * mom(4, 0) / mom(2, 0);
  EXPECT_NEAR(static_cast<double>(law.covariance()(0, 0)) / v22, 1.0, 1e-4);
  EXPECT_NEAR(static_cast<double>(law.covariance()(1, 1)) / v111, 1.0, 1e-4);
  EXPECT_NEAR(static_cast<double>(law.covariance()(0, 1)), 0.0, 1e-12);
}

TEST(Conditioning, SchurAgreesWithRejectionSampling) {
  // (d11 psi(p), d11 psi(q)) given (d1 psi(p), d1 psi(q)) = 0, u = 1, by rejection with |d1| < eps
  const Point2 p{-0.5, 0}, q{0.5, 0};
  const std::vector<DerivSpec> targets{{p, MultiIndex(2, 0)}, {q, MultiIndex(2, 0)}};
  const std::vector<DerivSpec> conds{{p, MultiIndex(1, 0)}, {q, MultiIndex(1, 0)}};
  const auto law = condition_on_zero(rw(), conds, targets);
  std::vector<DerivSpec> all = targets;
  all.insert(all.end(), conds.begin(), conds.end());
  const Eigen::Matrix4d joint = derivative_covariance(rw(), all).cast<double>();
  const Eigen::Matrix4d L = joint.llt().matrixL();
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0, 1);
  const double eps = 0.02;
  RunningStats s00, s01, s11;
  for (long i = 0; i < 4'000'000; ++i) {
    Eigen::Vector4d z(g(rng), g(rng), g(rng), g(rng));
    const Eigen::Vector4d x = L * z;
    if (std::fabs(x(2)) < eps && std::fabs(x(3)) < eps) {
      s00.add(x(0) * x(0));
      s01.add(x(0) * x(1));
      s11.add(x(1) * x(1));
    }
  }
  ASSERT_GT(s00.count(), 2000);
  EXPECT_NEAR(s00.mean(), static_cast<double>(law.covariance()(0, 0)), 4 * s00.std_error());
  EXPECT_NEAR(s01.mean(), static_cast<double>(law.covariance()(0, 1)), 4 * s01.std_error());
  EXPECT_NEAR(s11.mean(), static_cast<double>(law.covariance()(1, 1)), 4 * s11.std_error());
}

TEST(Conditioning, RejectsIndefiniteCovariance) {
  MatrixL bad(2, 2);
  bad << 1, 0, 0, -0.5;
  EXPECT_THROW(ConditionalGaussian({}, VectorL::Zero(2), bad), DegenerateCovariance);
  try {
    ConditionalGaussian({}, VectorL::Zero(2), bad);
  } catch (const DegenerateCovariance& e) {
    EXPECT_NEAR(e.smallest_eigenvalue(), -0.5, 1e-15);
  }
  MatrixL tiny(2, 2);
  tiny << 1, 0, 0, -1e-12;
  EXPECT_NO_THROW(ConditionalGaussian({}, VectorL::Zero(2), tiny));
}

TEST(OnePoint, DeterminantMomentsRandomWave) {
  const double mu0 = 1.0 / 32;
  const long long n = 1'000'000;
  const auto c = hessian_determinant_moment_mc(rw(), n, 1, PointClass::Critical);
  const auto e = hessian_determinant_moment_mc(rw(), n, 1, PointClass::Extremum);
  const auto s = hessian_determinant_moment_mc(rw(), n, 1, PointClass::Saddle);
  const auto mn = hessian_determinant_moment_mc(rw(), n, 1, PointClass::Minimum);
  const auto mx = hessian_determinant_moment_mc(rw(), n, 1, PointClass::Maximum);
  EXPECT_NEAR(c.value / (16 * mu0 / kSqrt3), 1.0, 0.01);
  EXPECT_NEAR(e.value / (8 * mu0 / kSqrt3), 1.0, 0.02);
  EXPECT_NEAR(s.value / (8 * mu0 / kSqrt3), 1.0, 0.02);
  // same draws: the partitions are exact
  EXPECT_NEAR(c.value, e.value + s.value, 1e-12);
  EXPECT_NEAR(e.value, mn.value + mx.value, 1e-12);
  const auto lam = one_point_intensity_mc(rw(), n, 1, PointClass::Critical);
  EXPECT_NEAR(lam.value, lambda_c(sigma_derivatives(rw())), 3 * lam.std_error);
}

TEST(OnePoint, ConditionalDeterminantIdentity) {
  const auto d = sigma_derivatives(rw());
  for (double t : {-1.0, -0.3, 0.0, 0.5, 2.0}) {
    const auto e = hessian_det_conditional_mean_mc(rw(), t, 400'000, 3);
    EXPECT_NEAR(e.value, hessian_det_conditional_mean(d, t), 3 * e.std_error + 1e-15) << t;
  }
}

TEST(OnePoint, IndependentOfThreadCount) {
  const auto a = hessian_determinant_moment_mc(rw(), 50'000, 9, PointClass::Saddle, 1);
  const auto b = hessian_determinant_moment_mc(rw(), 50'000, 9, PointClass::Saddle, 4);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(TwoPoint, SmallDistanceLimits) {
  const auto d = sigma_derivatives(rw());
  const double u = 0.01;
  EXPECT_NEAR(gradient_pair_density(rw(), u) / gradient_pair_density_asymptotic(d, u), 1.0, 0.01);
  const auto k = two_point_correlation(rw(), u, PairType::CC, 400'000, 5);
  EXPECT_NEAR(k.value / k2_limit(d), 1.0, 0.05);
}

TEST(TwoPoint, PairDecompositionAndSymmetry) {
  const auto res = two_point_correlation_all(CovarianceModel::bargmann_fock(1.0), 0.3, 200'000, 6);
  const double sum = res.k2.at(PairType::EE).value + res.k2.at(PairType::SS).value + res.k2.at(PairType::ES).value +
                     res.k2.at(PairType::SE).value;
  EXPECT_NEAR(res.k2.at(PairType::CC).value, sum, 1e-12 * sum);
  const auto& es = res.k2.at(PairType::ES);
  const auto& se = res.k2.at(PairType::SE);
  EXPECT_LT(std::fabs(es.value - se.value), 3 * std::hypot(es.std_error, se.std_error));
}

TEST(TwoPoint, RankFloor) {
  const double floor = distance_floor(rw());
  EXPECT_NEAR(floor, 2 * kPi * 1e-4, 1e-15);
  EXPECT_THROW(two_point_correlation(rw(), 0.5 * floor, PairType::CC, 100, 1), DegenerateCovariance);
  EXPECT_NO_THROW(two_point_correlation(rw(), floor, PairType::CC, 100, 1));
  EXPECT_THROW(two_point_correlation(rw(), 0.0, PairType::CC, 100, 1), InvalidArgument);
}

TEST(DiscPairDistance, MatchesMonteCarloAndNormalizes) {
  const double rho = 0.7;
  // normalization by Simpson
  const int n = 4000;
  double acc = 0;
  for (int i = 0; i <= n; ++i) {
    const double u = 2 * rho * i / n;
    acc += (i == 0 || i == n ? 1 : (i % 2 ? 4 : 2)) * disc_pair_distance_density(rho, u);
  }
  EXPECT_NEAR(acc * 2 * rho / n / 3, 1.0, 1e-6);
  // histogram of 1e7 rejection-sampled pairs
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-rho, rho);
  auto point = [&] {
    for (;;) {
      const double x = uni(rng), y = uni(rng);
      if (x * x + y * y < rho * rho) return Point2{x, y};
    }
  };
  const int bins = 14;
  std::vector<long> hist(bins, 0);
  const long N = 10'000'000;
  for (long i = 0; i < N; ++i) {
    const double u = distance(point(), point());
    hist[std::min(bins - 1, static_cast<int>(u / (2 * rho) * bins))]++;
  }
  for (int b = 0; b < bins; ++b) {
    const double lo = 2 * rho * b / bins, hi = 2 * rho * (b + 1) / bins;
    double pb = 0;
    const int m = 200;
    for (int i = 0; i <= m; ++i)
      pb += (i == 0 || i == m ? 1 : (i % 2 ? 4 : 2)) * disc_pair_distance_density(rho, lo + (hi - lo) * i / m);
    pb *= (hi - lo) / m / 3;
    const double obs = double(hist[b]) / N;
    EXPECT_NEAR(obs, pb, 4 * std::sqrt(pb * (1 - pb) / N) + 1e-7) << b;
  }
}

TEST(Quadrature, BallMomentApproachesAsymptotic) {
  const auto d = sigma_derivatives(rw());
  QuadratureConfig cfg;
  cfg.nsamples_per_node = 50'000;
  std::vector<double> ratios;
  for (double rho : {0.4, 0.2, 0.1}) {
    const auto e = second_factorial_by_quadrature(rw(), rho, PairType::CC, cfg, 17);
    ratios.push_back(e.value / second_factorial_asymptotic(d, rho, PairType::CC));
  }
  EXPECT_NEAR(ratios[2], 1.0, 0.05);
  EXPECT_LT(std::fabs(ratios[0] - 1.0), 0.3);
  EXPECT_LE(std::fabs(ratios[2] - 1.0), std::fabs(ratios[1] - 1.0) + 0.01);
  EXPECT_LE(std::fabs(ratios[1] - 1.0), std::fabs(ratios[0] - 1.0) + 0.01);
}

TEST(Expansion, ConditionalCovarianceMatchesMoments) {
  for (const auto& m : {CovarianceModel::bargmann_fock(1.0), CovarianceModel::power_law(3.0), rw()}) {
    const auto el = expansion_law(m);
    auto mom = [&](int a, int b) { return spectral_moment(m, a, b); };
    const double v22 = mom(0, 4) - mom(2, 2) * mom(2, 2) / mom(4, 0);
    const double v111 = mom(6, 0) - mom(4, 0) * mom(4, 0) / mom(2, 0);
    EXPECT_NEAR(static_cast<double>(el.law.covariance()(0, 0)) / v22, 1.0, 1e-10) << m.label();
    EXPECT_NEAR(static_cast<double>(el.law.covariance()(1, 1)) / v111, 1.0, 1e-10) << m.label();
    const double exact = expansion_a1_second_moment_exact(m);
    EXPECT_NEAR(exact / expansion_a1_second_moment(sigma_derivatives(m)), 1.0, 1e-10) << m.label();
    EXPECT_EQ(el.shifted_random_wave, is_shifted_random_wave(m).has_value());
  }
  EXPECT_NEAR(expansion_a1_second_moment_exact(rw()), 1.0 / 96, 1e-14);
}

TEST(Expansion, RandomWaveUsesReducedVector) {
  const auto el = expansion_law(rw());
  EXPECT_TRUE(el.shifted_random_wave);
  EXPECT_EQ(el.law.dim(), 4u);
  // the full vector is singular: d122 + d111 has zero conditional variance
  const Point2 o{0, 0};
  const auto full = condition_on_zero(
      rw(), {{o, MultiIndex(1, 0)}, {o, MultiIndex(0, 1)}, {o, MultiIndex(2, 0)}, {o, MultiIndex(1, 1)}},
      {{o, MultiIndex(3, 0)}, {o, MultiIndex(1, 2)}});
  const auto& c = full.covariance();
  EXPECT_NEAR(static_cast<double>(c(0, 0) + c(1, 1) + 2 * c(0, 1)), 0.0, 1e-15);
}

TEST(Expansion, ScalingOfTheSurrogates) {
  std::vector<double> lr, le, ls;
  for (double r : {1e-3, 3e-3, 1e-2, 3e-2, 1e-1}) {
    const auto e = expansion_moment_mc(rw(), r, ExpansionVariant::Extrema, 1'000'000, 21);
    const auto s = expansion_moment_mc(rw(), r, ExpansionVariant::Saddle, 1'000'000, 22);
    ASSERT_GT(e.value, 0.0);
    ASSERT_GT(s.value, 0.0);
    lr.push_back(std::log(r));
    le.push_back(std::log(e.value));
    ls.push_back(std::log(s.value / (r * r * r * std::fabs(std::log(r)))));
  }
  const auto fit = linear_fit(lr, le);
  EXPECT_NEAR(fit.slope, 3.0, 0.2);
  const auto [lo, hi] = std::minmax_element(ls.begin(), ls.end());
  EXPECT_LT(*hi - *lo, std::log(3.0));
  EXPECT_EQ(expansion_moment_mc(rw(), 0.0, ExpansionVariant::Extrema, 1000, 1).value, 0.0);
}

TEST(SmallBall, ProductOfGaussians) {
  // P(|Z1 Z2| < r) = E[erf(r / (|Z2| sqrt2))] by quadrature
  auto exact = [](double r) {
    const int n = 200000;
    const double a = 1e-12, b = 12;
    double acc = 0;
    for (int i = 0; i <= n; ++i) {
      const double z = a + (b - a) * i / n;
      const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
      acc += w * std::erf(r / (z * std::sqrt(2.0))) * 2 * std::exp(-z * z / 2) / std::sqrt(2 * kPi);
    }
    return acc * (b - a) / n / 3;
  };
  for (double r : {1e-2, 1e-1}) {
    const auto e = small_ball_probability_mc({}, r, 2'000'000, 4);
    EXPECT_NEAR(e.value, exact(r), 3 * e.std_error) << r;
  }
  EXPECT_EQ(small_ball_probability_mc({}, 50.0, 10'000, 4).value, 1.0);
  SmallBallSpec coupled;
  coupled.dim = 3;
  coupled.coupling = 0.2;
  coupled.quadratic = Eigen::MatrixXd::Identity(3, 3);
  const auto c = small_ball_probability_mc(coupled, 0.01, 200'000, 5);
  EXPECT_GT(c.value, 0.0);
  EXPECT_LT(c.value, 0.1);
}

TEST(SmallBall, TruncatedProductMoment) {
  // E[|Z2| 1{|Z1| <= r Z2}] ~ r / sqrt(2 pi)
  for (double r : {1e-3, 1e-2}) {
    const auto e = truncated_product_moment_mc(1.0, r, 4'000'000, 8);
    EXPECT_NEAR(e.value / r, 1 / std::sqrt(2 * kPi), 3 * e.std_error / r + 0.01) << r;
  }
}
