#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "gcrit/critical_finder.hpp"

using namespace gcrit;

namespace {
constexpr double kPi = std::numbers::pi;

// cos(x1) cos(x2) = (cos(x1 + x2) + cos(x1 - x2)) / 2
FieldRealization separable_cosine() { return FieldRealization({{1, 1}, {1, -1}}, {0.5, 0.5}, {0, 0}); }
}  // namespace

TEST(Classify, Examples) {
  EXPECT_EQ(classify(-1, 0, -2, 1e-12), Kind::Maximum);
  EXPECT_EQ(classify(3, 0, -0.5, 1e-12), Kind::Saddle);
  EXPECT_EQ(classify(2, 1, 2, 1e-12), Kind::Minimum);
  EXPECT_THROW(classify(1, 1, 1, 1e-12), DegenerateHessian);
  EXPECT_THROW(classify(1e-7, 0, 1e-7, 1e-12), DegenerateHessian);
}

TEST(FindCriticalPoints, SeparableCosine) {
  const auto f = separable_cosine();
  SearchConfig cfg;
  cfg.grid_step = 0.3;
  cfg.dedup_radius = 0.003;
  const Window w{-0.1, 2 * kPi - 0.1, -0.1, 2 * kPi - 0.1};
  const auto res = find_critical_points(f, w, cfg);
  ASSERT_EQ(res.points.size(), 8u);
  int nmax = 0, nmin = 0, nsad = 0;
  for (const auto& p : res.points) {
    const double a = p.location.x / kPi, b = p.location.y / kPi;
    if (p.kind == Kind::Saddle) {
      ++nsad;
      EXPECT_NEAR(a - std::floor(a), 0.5, 1e-9);
      EXPECT_NEAR(b - std::floor(b), 0.5, 1e-9);
    } else {
      EXPECT_NEAR(a, std::round(a), 1e-9);
      EXPECT_NEAR(b, std::round(b), 1e-9);
      const bool even = (std::lround(a) + std::lround(b)) % 2 == 0;
      EXPECT_EQ(p.kind, even ? Kind::Maximum : Kind::Minimum);
      (p.kind == Kind::Maximum ? nmax : nmin)++;
    }
    EXPECT_NEAR(p.hessian_det, p.eigenvalues[0] * p.eigenvalues[1], 1e-12);
  }
  EXPECT_EQ(nmax, 2);
  EXPECT_EQ(nmin, 2);
  EXPECT_EQ(nsad, 4);
  // Euler characteristic of the torus
  EXPECT_EQ(nmax + nmin - nsad, 0);
}

TEST(FindCriticalPoints, RandomWaveInvariants) {
  const auto model = CovarianceModel::random_wave(1.0);
  const auto f = sample_field(model, 1024, 123, SamplerVariant::GaussianAmplitude);
  const auto cfg = SearchConfig::for_model(model);
  const Window w = Window::square(40.0);
  const auto res = find_critical_points(f, w, cfg);
  ASSERT_GT(res.points.size(), 50u);
  for (std::size_t i = 0; i < res.points.size(); ++i) {
    const auto& p = res.points[i];
    EXPECT_TRUE(w.contains(p.location));
    const auto j = f.jet(p.location);
    EXPECT_LE(std::hypot(j.d1, j.d2), cfg.newton_tol);
    const double e0 = p.eigenvalues[0], e1 = p.eigenvalues[1];
    if (p.kind == Kind::Maximum) EXPECT_TRUE(e0 < 0 && e1 < 0);
    if (p.kind == Kind::Minimum) EXPECT_TRUE(e0 > 0 && e1 > 0);
    if (p.kind == Kind::Saddle) EXPECT_TRUE(e0 < 0 && e1 > 0);
    for (std::size_t k = i + 1; k < res.points.size(); ++k)
      EXPECT_GE(distance(p.location, res.points[k].location), cfg.dedup_radius);
  }
  // halving the grid step finds the same set
  auto fine = cfg;
  fine.grid_step /= 2;
  fine.dedup_radius = fine.grid_step / 100;
  const auto res2 = find_critical_points(f, w, fine);
  const double rel = std::fabs(double(res2.points.size()) - double(res.points.size())) / res.points.size();
  EXPECT_LT(rel, 1e-3);
  EXPECT_EQ(res.diagnostics.seeds, res.diagnostics.filtered + res.diagnostics.converged + res.diagnostics.not_converged);
}

TEST(FindCriticalPoints, Validation) {
  const auto f = separable_cosine();
  SearchConfig cfg;
  EXPECT_THROW(find_critical_points(f, Window{1, 0, 0, 1}, cfg), InvalidArgument);
  cfg.dedup_radius = cfg.grid_step * 2;
  EXPECT_THROW(find_critical_points(f, Window::square(1), cfg), InvalidArgument);
}

TEST(CountInBall, Conventions) {
  EXPECT_EQ(count_in_ball({}, {0, 0}, 1.0), 0);
  CriticalPoint a, b, c;
  a.location = {1.0, 0.0};
  a.kind = Kind::Minimum;
  b.location = {0.5, 0.0};
  b.kind = Kind::Maximum;
  c.location = {0.0, -0.5};
  c.kind = Kind::Saddle;
  const std::vector<CriticalPoint> pts{a, b, c};
  EXPECT_EQ(count_in_ball(pts, {0, 0}, 1.0), 2);  // a sits on the boundary
  EXPECT_EQ(count_in_ball(pts, {0, 0}, 1.0 + 1e-12), 3);
  for (double rho : {0.4, 0.7, 1.5}) {
    EXPECT_EQ(count_in_ball(pts, {0, 0}, rho, PointClass::Extremum),
              count_in_ball(pts, {0, 0}, rho, PointClass::Minimum) + count_in_ball(pts, {0, 0}, rho, PointClass::Maximum));
    EXPECT_EQ(count_in_ball(pts, {0, 0}, rho),
              count_in_ball(pts, {0, 0}, rho, PointClass::Extremum) + count_in_ball(pts, {0, 0}, rho, PointClass::Saddle));
  }
  EXPECT_THROW(count_in_ball(pts, {0, 0}, 0.0), InvalidArgument);
}
