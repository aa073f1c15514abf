#pragma once

// Critical points of a sampled field: dense seeding, damped Newton on the
// gradient with the exact Hessian, deduplication, Hessian classification.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <unordered_map>
#include <vector>

#include "gcrit/errors.hpp"
#include "gcrit/field_sampler.hpp"
#include "gcrit/geometry.hpp"
#include "gcrit/types.hpp"

namespace gcrit {

enum class Kind { Maximum, Minimum, Saddle };

inline std::string to_string(Kind k) {
  switch (k) {
    case Kind::Maximum: return "max";
    case Kind::Minimum: return "min";
    case Kind::Saddle: return "saddle";
  }
  return "?";
}

inline bool matches(Kind k, PointClass c) {
  switch (c) {
    case PointClass::Critical: return true;
    case PointClass::Extremum: return k != Kind::Saddle;
    case PointClass::Saddle: return k == Kind::Saddle;
    case PointClass::Minimum: return k == Kind::Minimum;
    case PointClass::Maximum: return k == Kind::Maximum;
  }
  return false;
}

struct CriticalPoint {
  Point2 location;
  Kind kind = Kind::Saddle;
  double hessian_det = 0.0;
  double eigenvalues[2] = {0.0, 0.0};  // ascending
  double gradient_residual = 0.0;
};

struct SearchConfig {
  double grid_step = 0.25;
  double newton_tol = 1e-10;
  int max_iters = 50;
  double dedup_radius = 0.0025;
  double degenerate_det_threshold = 1e-12;
  /// Newton starts only from seeds whose first Newton step is shorter than
  /// seed_radius * grid_step; 0 disables the filter.
  double seed_radius = 1.5;

  /// Grid step of one eighth of 2 pi sqrt(R2 / R4), the typical spacing of
  /// gradient zeros; equals correlation_length / 8 for random waves.
  static SearchConfig for_model(const CovarianceModel& model) {
    SearchConfig cfg;
    const double r2 = static_cast<double>(radial_moment(model, 2));
    const double r4 = static_cast<double>(radial_moment(model, 4));
    cfg.grid_step = 2.0 * std::numbers::pi * std::sqrt(r2 / r4) / 8.0;
    cfg.dedup_radius = cfg.grid_step / 100.0;
    return cfg;
  }

  void validate() const {
    if (!(grid_step > 0.0 && newton_tol > 0.0 && dedup_radius > 0.0 && degenerate_det_threshold > 0.0) ||
        max_iters < 1) {
      throw InvalidArgument("search parameters must be positive");
    }
    if (!(dedup_radius < grid_step)) throw InvalidArgument("dedup_radius must be smaller than grid_step");
    if (!(seed_radius >= 0.0)) throw InvalidArgument("seed_radius must be nonnegative");
  }
};

struct SearchDiagnostics {
  std::size_t seeds = 0;
  std::size_t filtered = 0;
  std::size_t converged = 0;
  std::size_t not_converged = 0;
  std::size_t degenerate = 0;
  std::size_t duplicates = 0;
  std::size_t outside_window = 0;
};

struct SearchResult {
  std::vector<CriticalPoint> points;
  SearchDiagnostics diagnostics;
};

/// Kind from the eigenvalue signs of [[h11, h12], [h12, h22]].
inline Kind classify(double h11, double h12, double h22, double threshold) {
  const double det = h11 * h22 - h12 * h12;
  if (!(std::fabs(det) > threshold)) throw DegenerateHessian("Hessian determinant below the degeneracy threshold");
  if (det < 0.0) return Kind::Saddle;
  return (h11 + h22) > 0.0 ? Kind::Minimum : Kind::Maximum;
}

namespace detail {

inline void symmetric_eigenvalues(double a, double b, double c, double out[2]) {
  const double mean = 0.5 * (a + c);
  const double rad = std::hypot(0.5 * (a - c), b);
  out[0] = mean - rad;
  out[1] = mean + rad;
}

/// Spatial hash with cells of the dedup radius; neighbors are searched in the 3x3 block.
class PointHash {
 public:
  explicit PointHash(double radius) : radius_(radius) {}

  bool insert_if_new(Point2 p) {
    const auto cx = cell(p.x), cy = cell(p.y);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = cells_.find(key(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (const Point2& q : it->second)
          if (distance(p, q) < radius_) return false;
      }
    }
    cells_[key(cx, cy)].push_back(p);
    return true;
  }

 private:
  std::int64_t cell(double v) const { return static_cast<std::int64_t>(std::floor(v / radius_)); }
  static std::uint64_t key(std::int64_t a, std::int64_t b) {
    return (static_cast<std::uint64_t>(a) * 0x9e3779b97f4a7c15ULL) ^ static_cast<std::uint64_t>(b);
  }
  double radius_;
  std::unordered_map<std::uint64_t, std::vector<Point2>> cells_;
};

/// Jets on the tensor grid xs x ys from per-axis phase tables:
/// A cos(l.x + phi) = Re(A e^{i phi} e^{i l1 x} e^{i l2 y}).
inline std::vector<FieldJet> grid_jets(const FieldRealization& f, const std::vector<double>& xs,
                                       const std::vector<double>& ys) {
  const std::size_t m = f.size(), nx = xs.size(), ny = ys.size();
  std::vector<double> lx(m), ly(m), lxx(m), lxy(m), lyy(m);
  std::vector<double> ey_re(ny * m), ey_im(ny * m), row_re(m), row_im(m);
  for (std::size_t j = 0; j < m; ++j) {
    const Point2 l = f.frequencies()[j];
    lx[j] = l.x;
    ly[j] = l.y;
    lxx[j] = l.x * l.x;
    lxy[j] = l.x * l.y;
    lyy[j] = l.y * l.y;
    for (std::size_t k = 0; k < ny; ++k) {
      ey_re[k * m + j] = std::cos(l.y * ys[k]);
      ey_im[k * m + j] = std::sin(l.y * ys[k]);
    }
  }
  std::vector<FieldJet> out(nx * ny);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double t = lx[j] * xs[i] + f.phases()[j];
      row_re[j] = f.amplitudes()[j] * std::cos(t);
      row_im[j] = f.amplitudes()[j] * std::sin(t);
    }
    for (std::size_t k = 0; k < ny; ++k) {
      const double* er = &ey_re[k * m];
      const double* ei = &ey_im[k * m];
      double v = 0, g1 = 0, g2 = 0, h11 = 0, h12 = 0, h22 = 0;
      for (std::size_t j = 0; j < m; ++j) {
        const double c = row_re[j] * er[j] - row_im[j] * ei[j];
        const double s = row_re[j] * ei[j] + row_im[j] * er[j];
        v += c;
        g1 -= lx[j] * s;
        g2 -= ly[j] * s;
        h11 -= lxx[j] * c;
        h12 -= lxy[j] * c;
        h22 -= lyy[j] * c;
      }
      out[i * ny + k] = {v + f.shift(), g1, g2, h11, h12, h22};
    }
  }
  return out;
}

inline double newton_step_length(const FieldJet& j) {
  const double det = j.d11 * j.d22 - j.d12 * j.d12;
  if (det == 0.0) return std::numeric_limits<double>::infinity();
  return std::hypot(j.d22 * j.d1 - j.d12 * j.d2, -j.d12 * j.d1 + j.d11 * j.d2) / std::fabs(det);
}

}  // namespace detail

/// Newton from one seed. Returns true with the converged point in `out`.
inline bool newton_refine(const FieldRealization& f, Point2 start, const SearchConfig& cfg, Point2& out) {
  Point2 x = start;
  FieldJet j = f.jet(x);
  double res = std::hypot(j.d1, j.d2);
  for (int it = 0; it < cfg.max_iters; ++it) {
    if (res <= cfg.newton_tol) {
      out = x;
      return true;
    }
    const double det = j.d11 * j.d22 - j.d12 * j.d12;
    if (det == 0.0 || !std::isfinite(det)) return false;
    Point2 step{-(j.d22 * j.d1 - j.d12 * j.d2) / det, -(-j.d12 * j.d1 + j.d11 * j.d2) / det};
    const double len = norm(step);
    if (len > cfg.grid_step) step = (cfg.grid_step / len) * step;
    bool improved = false;
    for (int half = 0; half < 30; ++half) {
      const Point2 y = x + step;
      const FieldJet jy = f.jet(y);
      const double ry = std::hypot(jy.d1, jy.d2);
      if (ry < res) {
        x = y;
        j = jy;
        res = ry;
        improved = true;
        break;
      }
      step = 0.5 * step;
    }
    if (!improved) break;
  }
  if (res <= cfg.newton_tol) {
    out = x;
    return true;
  }
  return false;
}

/// All critical points in the window reachable from a seed grid over the inflated window.
inline SearchResult find_critical_points(const FieldRealization& f, const Window& window, const SearchConfig& cfg) {
  if (window.empty()) throw InvalidArgument("search window is empty");
  cfg.validate();
  const Window seeds = window.inflated(2.0 * cfg.grid_step);
  const auto nx = static_cast<std::size_t>(std::ceil(seeds.width() / cfg.grid_step)) + 1;
  const auto ny = static_cast<std::size_t>(std::ceil(seeds.height() / cfg.grid_step)) + 1;

  std::vector<double> xs(nx), ys(ny);
  for (std::size_t i = 0; i < nx; ++i) xs[i] = seeds.xmin + cfg.grid_step * static_cast<double>(i);
  for (std::size_t i = 0; i < ny; ++i) ys[i] = seeds.ymin + cfg.grid_step * static_cast<double>(i);
  std::vector<FieldJet> jets;
  if (cfg.seed_radius > 0.0) jets = detail::grid_jets(f, xs, ys);

  SearchResult result;
  detail::PointHash hash(cfg.dedup_radius);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      ++result.diagnostics.seeds;
      if (cfg.seed_radius > 0.0 &&
          !(detail::newton_step_length(jets[ix * ny + iy]) < cfg.seed_radius * cfg.grid_step)) {
        ++result.diagnostics.filtered;
        continue;
      }
      const Point2 s{xs[ix], ys[iy]};
      Point2 p;
      if (!newton_refine(f, s, cfg, p)) {
        ++result.diagnostics.not_converged;
        continue;
      }
      ++result.diagnostics.converged;
      if (!window.contains(p)) {
        ++result.diagnostics.outside_window;
        continue;
      }
      if (!hash.insert_if_new(p)) {
        ++result.diagnostics.duplicates;
        continue;
      }
      const FieldJet j = f.jet(p);
      CriticalPoint cp;
      cp.location = p;
      cp.hessian_det = j.d11 * j.d22 - j.d12 * j.d12;
      detail::symmetric_eigenvalues(j.d11, j.d12, j.d22, cp.eigenvalues);
      cp.gradient_residual = std::hypot(j.d1, j.d2);
      try {
        cp.kind = classify(j.d11, j.d12, j.d22, cfg.degenerate_det_threshold);
      } catch (const DegenerateHessian&) {
        ++result.diagnostics.degenerate;
        continue;
      }
      result.points.push_back(cp);
    }
  }
  return result;
}

/// Number of points of the class strictly inside the disc.
inline int count_in_ball(const std::vector<CriticalPoint>& points, Point2 center, double rho,
                         PointClass filter = PointClass::Critical) {
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  int n = 0;
  for (const auto& p : points)
    if (distance(p.location, center) < rho && matches(p.kind, filter)) ++n;
  return n;
}

}  // namespace gcrit
