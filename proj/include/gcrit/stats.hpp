#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gcrit/errors.hpp"

namespace gcrit {

/// Monte-Carlo or quadrature estimate.
struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long long nsamples = 0;
  double rho = 0.0;
  std::string tag;
};

/// Sample mean and standard error of the mean.
inline MomentEstimate mean_estimate(const std::vector<double>& x) {
  if (x.size() < 2) throw InvalidArgument("need at least two samples");
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n), static_cast<long long>(x.size()), 0.0, {}};
}

/// Running mean/variance accumulator (Welford); mergeable.
class RunningStats {
 public:
  void add(double v) {
    ++n_;
    const double d = v - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (v - mean_);
  }
  void merge(const RunningStats& o) {
    if (o.n_ == 0) return;
    const long long n = n_ + o.n_;
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / static_cast<double>(n);
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / static_cast<double>(n);
    n_ = n;
  }
  long long count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const { return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

 private:
  long long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Delete-one jackknife of a statistic of paired per-group summaries.
template <class Stat>
MomentEstimate jackknife(const std::vector<double>& x, const std::vector<double>& y, Stat stat) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw InvalidArgument("jackknife needs at least two paired groups");
  const double sx = std::accumulate(x.begin(), x.end(), 0.0);
  const double sy = std::accumulate(y.begin(), y.end(), 0.0);
  const double full = stat(sx / n, sy / n);
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) loo[i] = stat((sx - x[i]) / (n - 1.0), (sy - y[i]) / (n - 1.0));
  const double m = std::accumulate(loo.begin(), loo.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : loo) ss += (v - m) * (v - m);
  return {full, std::sqrt((n - 1.0) / n * ss), static_cast<long long>(n), 0.0, {}};
}

struct LinearFit {
  Eigen::VectorXd coef;
  Eigen::MatrixXd coef_cov;
  double r_squared = 0.0;
};

/// Weighted least squares y ~ X b with weights w (inverse variances). The
/// coefficient covariance is (X' W X)^-1 scaled by the reduced chi-square when
/// there are spare degrees of freedom and the fit is not exact.
inline LinearFit weighted_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  if (X.rows() != y.size() || w.size() != y.size() || X.rows() < X.cols()) {
    throw InvalidArgument("least squares dimensions are inconsistent");
  }
  const Eigen::MatrixXd XtW = X.transpose() * w.asDiagonal();
  const Eigen::MatrixXd A = XtW * X;
  LinearFit fit;
  fit.coef = A.ldlt().solve(XtW * y);
  const Eigen::VectorXd resid = y - X * fit.coef;
  const double chi2 = resid.dot(w.asDiagonal() * resid);
  const long dof = static_cast<long>(X.rows() - X.cols());
  const double scale = dof > 0 ? chi2 / static_cast<double>(dof) : 1.0;
  fit.coef_cov = A.inverse() * scale;
  const double wsum = w.sum();
  const double ybar = w.dot(y) / wsum;
  const double sst = (w.array() * (y.array() - ybar).square()).sum();
  fit.r_squared = sst > 0.0 ? std::clamp(1.0 - chi2 / sst, 0.0, 1.0) : 1.0;
  return fit;
}

/// Ordinary least squares y = intercept + slope x.
struct SimpleFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_se = 0.0;
  double r_squared = 0.0;
};

inline SimpleFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<Eigen::Index>(x.size());
  if (n < 3 || static_cast<std::size_t>(n) != y.size()) throw InvalidArgument("linear fit needs >= 3 points");
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = x[static_cast<std::size_t>(i)];
    Y(i) = y[static_cast<std::size_t>(i)];
  }
  const auto fit = weighted_least_squares(X, Y, Eigen::VectorXd::Ones(n));
  return {fit.coef(0), fit.coef(1), std::sqrt(fit.coef_cov(1, 1)), fit.r_squared};
}

}  // namespace gcrit
