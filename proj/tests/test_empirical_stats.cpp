#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "gcrit/empirical_stats.hpp"
#include "gcrit/theory.hpp"

using namespace gcrit;

namespace {
constexpr double kPi = std::numbers::pi;

struct RandomWaveSample {
  EmpiricalConfig cfg;
  PointSets sets;
};

const RandomWaveSample& rw_sample() {
  static const RandomWaveSample s = [] {
    RandomWaveSample out;
    const auto m = CovarianceModel::random_wave(1.0);
    out.cfg = EmpiricalConfig::for_model(m);
    out.sets = simulate_point_sets(m, out.cfg, 40, 2024);
    return out;
  }();
  return s;
}

std::vector<MomentEstimate> synthetic(double (*f)(double), double lo, double hi, int n) {
  std::vector<MomentEstimate> out;
  for (int i = 0; i < n; ++i) {
    const double rho = lo * std::pow(hi / lo, i / double(n - 1));
    out.push_back({f(rho), 0.0, 100, rho, "synthetic"});
  }
  return out;
}
}  // namespace

TEST(FitScaling, ExactPowerLaw) {
  const auto fit = fit_scaling(synthetic([](double r) { return 3.0 * std::pow(r, 4); }, 0.01, 0.5, 8), false);
  EXPECT_NEAR(fit.exponent, 4.0, 1e-10);
  EXPECT_NEAR(fit.exponent_se, 0.0, 1e-8);
  EXPECT_FALSE(fit.log_coefficient_detected);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(fit.rho_min, 0.01, 1e-15);
}

TEST(FitScaling, LogCorrectedPowerLaw) {
  auto f = [](double r) { return std::pow(r, 7) * std::fabs(std::log(r)); };
  const auto data = synthetic(f, 1e-3, 1e-1, 9);
  const auto plain = fit_scaling(data, false);
  EXPECT_GT(std::fabs(plain.exponent - 7.0), 0.1);
  const auto corrected = fit_scaling(data, true);
  EXPECT_NEAR(corrected.exponent, 7.0, 0.1);
  EXPECT_TRUE(corrected.log_coefficient_detected);
  EXPECT_TRUE(plain.log_coefficient_detected);
}

TEST(FitScaling, Preconditions) {
  auto data = synthetic([](double r) { return r * r; }, 0.1, 0.5, 5);
  data[2].value = 0.0;
  EXPECT_THROW(fit_scaling(data, false), NonPositiveEstimate);
  EXPECT_THROW(fit_scaling(synthetic([](double r) { return r; }, 0.1, 0.5, 3), false), InvalidArgument);
}

TEST(BallCenters, StayInside) {
  const Window w = Window::square(10.0);
  for (double off : {0.0, 1.0}) {
    const auto c = ball_centers(w, 0.5, off);
    ASSERT_FALSE(c.empty());
    for (const auto& p : c) {
      EXPECT_GE(p.x - 0.5, -1e-12);
      EXPECT_LE(p.x + 0.5, 10.0 + 1e-12);
    }
  }
  EXPECT_EQ(ball_centers(w, 0.5).size(), 100u);
}

TEST(PoissonControl, RatioAndScaling) {
  const Window w = Window::square(30.0);
  const auto sets = simulate_poisson_point_sets(0.5, w, 400, 8);
  const auto r = repulsion_ratio_estimate(sets, w, 1.0);
  EXPECT_NEAR(r.value, 1.0, 3 * r.std_error);
  std::vector<double> rhos{0.4, 0.6, 0.8, 1.2, 1.6};
  const auto est = estimate_second_factorial(sets, w, rhos, PairType::CC);
  for (const auto& e : est) EXPECT_NEAR(e.value, std::pow(0.5 * kPi * e.rho * e.rho, 2), 3 * e.std_error);
  const auto fit = fit_scaling(est, false);
  EXPECT_NEAR(fit.exponent, 4.0, 3 * fit.exponent_se + 0.05);
}

TEST(PoissonControl, TypeProportions) {
  const Window w = Window::square(20.0);
  const auto sets = simulate_poisson_point_sets(1.0, w, 50, 3);
  const auto c = estimate_intensity(sets, w, PointClass::Critical);
  const auto mn = estimate_intensity(sets, w, PointClass::Minimum);
  EXPECT_NEAR(c.value, 1.0, 3 * c.std_error);
  EXPECT_NEAR(mn.value / c.value, 0.25, 0.02);
}

TEST(RandomWaveEstimates, IntensityAndTypes) {
  const auto& s = rw_sample();
  const double lc = lambda_c(sigma_derivatives(CovarianceModel::random_wave(1.0)));
  const auto c = estimate_intensity(s.sets, s.cfg.window, PointClass::Critical);
  EXPECT_NEAR(c.value, lc, 3 * c.std_error);
  const auto mn = estimate_intensity(s.sets, s.cfg.window, PointClass::Minimum);
  EXPECT_NEAR(mn.value, lc / 4, 3 * mn.std_error);
  const auto e = estimate_intensity(s.sets, s.cfg.window, PointClass::Extremum);
  // e / c with a jackknife over realizations
  std::vector<double> ne, nc;
  for (const auto& pts : s.sets) {
    nc.push_back(pts.size());
    ne.push_back(std::count_if(pts.begin(), pts.end(), [](const CriticalPoint& p) { return p.kind != Kind::Saddle; }));
  }
  const auto ratio = jackknife(ne, nc, [](double a, double b) { return a / b; });
  EXPECT_NEAR(ratio.value, 0.5, 3 * ratio.std_error);
  EXPECT_NEAR(e.value / c.value, ratio.value, 1e-12);
}

TEST(RandomWaveEstimates, MixedMomentIdentityIsExact) {
  const auto& s = rw_sample();
  const std::vector<double> rhos{1.0, 2.0};
  const auto cc = estimate_second_factorial(s.sets, s.cfg.window, rhos, PairType::CC);
  const auto ee = estimate_second_factorial(s.sets, s.cfg.window, rhos, PairType::EE);
  const auto ss = estimate_second_factorial(s.sets, s.cfg.window, rhos, PairType::SS);
  const auto es = estimate_second_factorial(s.sets, s.cfg.window, rhos, PairType::ES);
  const auto se = estimate_second_factorial(s.sets, s.cfg.window, rhos, PairType::SE);
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    EXPECT_NEAR(cc[i].value, ee[i].value + ss[i].value + 2 * es[i].value, 1e-12 * (1 + cc[i].value));
    EXPECT_DOUBLE_EQ(es[i].value, se[i].value);
  }
}

TEST(RandomWaveEstimates, SameTypeRepulsion) {
  const auto& s = rw_sample();
  const auto cc = estimate_second_factorial(s.sets, s.cfg.window, {0.5}, PairType::CC);
  const auto ee = estimate_second_factorial(s.sets, s.cfg.window, {0.5}, PairType::EE);
  EXPECT_LT(ee[0].value, cc[0].value / 4);
}

TEST(RandomWaveEstimates, TranslationInvariance) {
  const auto& s = rw_sample();
  const auto a = estimate_second_factorial(s.sets, s.cfg.window, {2.0}, PairType::CC, {0.0});
  const auto b = estimate_second_factorial(s.sets, s.cfg.window, {2.0}, PairType::CC, {1.0});
  EXPECT_LT(std::fabs(a[0].value - b[0].value), 3 * std::hypot(a[0].std_error, b[0].std_error));
}

TEST(RandomWaveEstimates, RatioIsFinite) {
  const auto& s = rw_sample();
  const auto r = repulsion_ratio_estimate(s.sets, s.cfg.window, 2.0);
  EXPECT_GT(r.value, 0.0);
  EXPECT_GT(r.std_error, 0.0);
  EXPECT_THROW(repulsion_ratio_estimate(s.sets, s.cfg.window, 10.0), InvalidArgument);
}

TEST(Simulation, IndependentOfThreadCount) {
  const auto m = CovarianceModel::random_wave(1.0);
  auto cfg = EmpiricalConfig::for_model(m);
  cfg.window = Window::square(10.0);
  cfg.threads = 1;
  const auto a = simulate_point_sets(m, cfg, 4, 5);
  cfg.threads = 3;
  const auto b = simulate_point_sets(m, cfg, 4, 5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].size(), b[i].size());
    for (std::size_t j = 0; j < a[i].size(); ++j) EXPECT_EQ(a[i][j].location, b[i][j].location);
  }
}

TEST(BargmannFock, Intensity) {
  const auto m = CovarianceModel::bargmann_fock(1.0);
  auto cfg = EmpiricalConfig::for_model(m);
  const auto c = estimate_intensity(m, cfg, 12, 31, PointClass::Critical);
  EXPECT_NEAR(c.value, 4 / (std::sqrt(3.0) * kPi), 3 * c.std_error);
}
