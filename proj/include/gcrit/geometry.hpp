#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <string>

#include "gcrit/errors.hpp"

namespace gcrit {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Point2, Point2) = default;
};

inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Axis-aligned rectangle [xmin, xmax) x [ymin, ymax).
struct Window {
  double xmin = 0.0;
  double xmax = 1.0;
  double ymin = 0.0;
  double ymax = 1.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  bool empty() const { return !(xmax > xmin && ymax > ymin); }
  bool contains(Point2 p) const { return p.x >= xmin && p.x < xmax && p.y >= ymin && p.y < ymax; }
  Window inflated(double margin) const {
    return {xmin - margin, xmax + margin, ymin - margin, ymax + margin};
  }
  static Window square(double side) { return {0.0, side, 0.0, side}; }
};

/// Partial-derivative multi-index: orders in x1 and x2, total order at most 4.
class MultiIndex {
 public:
  static constexpr int kMaxOrder = 4;

  constexpr MultiIndex() = default;
  constexpr MultiIndex(int d1, int d2) : d1_(d1), d2_(d2) {
    if (d1 < 0 || d2 < 0) throw InvalidArgument("multi-index orders must be nonnegative");
    if (d1 + d2 > kMaxOrder) throw OrderTooHigh("derivative order above 4 requested");
  }

  /// Builds the multi-index from a list of axis labels, e.g. "112" = d^3/dx1^2 dx2.
  static MultiIndex from_axes(const std::string& axes) {
    int a = 0, b = 0;
    for (char c : axes) {
      if (c == '1') ++a;
      else if (c == '2') ++b;
      else throw InvalidArgument("axis label must be 1 or 2: " + axes);
    }
    return {a, b};
  }

  constexpr int d1() const { return d1_; }
  constexpr int d2() const { return d2_; }
  constexpr int order() const { return d1_ + d2_; }

  std::string to_string() const {
    if (order() == 0) return "0";
    return std::string(static_cast<std::size_t>(d1_), '1') + std::string(static_cast<std::size_t>(d2_), '2');
  }

  friend constexpr auto operator<=>(const MultiIndex&, const MultiIndex&) = default;

 private:
  int d1_ = 0;
  int d2_ = 0;
};

/// A field derivative evaluated at a point: the random variable d^alpha psi(point).
struct DerivSpec {
  Point2 point;
  MultiIndex alpha;
};

}  // namespace gcrit
