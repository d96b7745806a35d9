#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <span>
#include <string>

#include "ifs/error.hpp"

namespace ifs {

enum class Chart { cartesian, polar2d };

inline const char* to_string(Chart chart) {
  return chart == Chart::cartesian ? "cartesian" : "polar2d";
}

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Wraps an angle into [0, 2*pi).
inline double normalize_angle(double theta) {
  double a = std::fmod(theta, two_pi);
  if (a < 0.0) a += two_pi;
  if (a >= two_pi) a = 0.0;
  return a;
}

/// A state of the phase space, stored in chart coordinates.
///
/// Polar points keep (r, theta) with theta accumulated without wrapping; use
/// `normalized()` at I/O boundaries. Storage is inline because the simulators
/// copy points in their innermost loops.
class Point {
 public:
  static constexpr std::size_t max_dim = 8;

  Point() = default;

  Point(Chart chart, std::span<const double> coords) : dim_(coords.size()), chart_(chart) {
    if (coords.empty() || coords.size() > max_dim) {
      throw Error(ErrorKind::precondition,
                  "point dimension must be in [1, " + std::to_string(max_dim) + "]");
    }
    if (chart == Chart::polar2d && coords.size() != 2) {
      throw Error(ErrorKind::precondition, "polar2d points have exactly two coordinates");
    }
    std::copy(coords.begin(), coords.end(), c_.begin());
    validate();
  }

  Point(Chart chart, std::initializer_list<double> coords)
      : Point(chart, std::span<const double>(coords.begin(), coords.size())) {}

  static Point cartesian(std::initializer_list<double> coords) { return Point(Chart::cartesian, coords); }
  static Point polar(double r, double theta) { return Point(Chart::polar2d, {r, theta}); }

  /// Builds a point without validation; for integrators that check divergence
  /// themselves.
  static Point unchecked(Chart chart, std::span<const double> coords) {
    Point p;
    p.dim_ = coords.size();
    p.chart_ = chart;
    std::copy(coords.begin(), coords.end(), p.c_.begin());
    return p;
  }

  std::size_t dim() const noexcept { return dim_; }
  Chart chart() const noexcept { return chart_; }
  double operator[](std::size_t i) const noexcept { return c_[i]; }
  double& operator[](std::size_t i) noexcept { return c_[i]; }
  std::span<const double> coords() const noexcept { return {c_.data(), dim_}; }
  std::span<double> coords() noexcept { return {c_.data(), dim_}; }

  bool finite() const noexcept {
    return std::all_of(c_.begin(), c_.begin() + dim_, [](double v) { return std::isfinite(v); });
  }

  /// Throws unless the coordinates are finite and, for polar points, r > 0.
  void validate() const {
    if (!finite()) throw Error(ErrorKind::precondition, "point has non-finite coordinates");
    if (chart_ == Chart::polar2d && !(c_[0] > 0.0)) {
      throw Error(ErrorKind::precondition, "polar2d point requires r > 0");
    }
  }

  /// Same point with the polar angle wrapped into [0, 2*pi).
  Point normalized() const {
    Point p = *this;
    if (chart_ == Chart::polar2d) p.c_[1] = normalize_angle(c_[1]);
    return p;
  }

  /// Euclidean embedding; identity for cartesian points.
  std::array<double, max_dim> embed() const noexcept {
    std::array<double, max_dim> out{};
    if (chart_ == Chart::polar2d) {
      out[0] = c_[0] * std::cos(c_[1]);
      out[1] = c_[0] * std::sin(c_[1]);
    } else {
      std::copy(c_.begin(), c_.begin() + dim_, out.begin());
    }
    return out;
  }

  friend bool operator==(const Point& a, const Point& b) noexcept {
    return a.chart_ == b.chart_ && a.dim_ == b.dim_ &&
           std::equal(a.c_.begin(), a.c_.begin() + a.dim_, b.c_.begin());
  }

 private:
  std::array<double, max_dim> c_{};
  std::size_t dim_ = 0;
  Chart chart_ = Chart::cartesian;
};

/// Squared distance in the ambient Euclidean metric (chord metric for polar points).
inline double distance_squared(const Point& a, const Point& b) noexcept {
  if (a.chart() == Chart::polar2d) {
    const double r1 = a[0];
    const double r2 = b[0];
    const double dth = a[1] - b[1];
    // r1^2 + r2^2 - 2 r1 r2 cos(dth), written to stay accurate for nearby points.
    const double s = std::sin(0.5 * dth);
    const double dr = r1 - r2;
    return std::max(0.0, dr * dr + 4.0 * r1 * r2 * s * s);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

/// distance(a, b) < eps with a cheap radial rejection before any trig.
inline bool within(const Point& a, const Point& b, double eps) noexcept {
  const double eps2 = eps * eps;
  if (a.chart() == Chart::polar2d) {
    const double dr = a[0] - b[0];
    if (dr * dr >= eps2) return false;
  }
  return distance_squared(a, b) < eps2;
}

inline double distance(const Point& a, const Point& b) noexcept {
  return std::sqrt(distance_squared(a, b));
}

/// Lexicographic order on normalized chart coordinates; used for canonical choices.
inline bool lexicographic_less(const Point& a, const Point& b) noexcept {
  const Point na = a.normalized();
  const Point nb = b.normalized();
  return std::lexicographical_compare(na.coords().begin(), na.coords().end(), nb.coords().begin(),
                                      nb.coords().end());
}

}  // namespace ifs
