#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ifs/error.hpp"
#include "ifs/expr.hpp"
#include "ifs/point.hpp"

namespace ifs {

enum class FlowKind { exact_rotation, exact_contraction, numeric };

inline const char* to_string(FlowKind kind) {
  switch (kind) {
    case FlowKind::exact_rotation: return "exact_rotation";
    case FlowKind::exact_contraction: return "exact_contraction";
    case FlowKind::numeric: return "numeric";
  }
  return "unknown";
}

/// Axis-aligned box in chart coordinates. For polar2d the angle axis is periodic
/// and never bounds anything.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const noexcept { return lower.size(); }
};

inline bool periodic_axis(Chart chart, std::size_t axis) { return chart == Chart::polar2d && axis == 1; }

/// The continuous semiflow underlying an impulsive system.
///
/// Exact kinds use closed forms in polar2d coordinates:
///   rotation     r' = 0,     th' = 1   ->  (r, th + t)
///   contraction  r' = 1 - r, th' = 1   ->  (1 + (r - 1) e^{-t}, th + t)
/// The numeric kind integrates a parsed field with classical RK4 at a fixed
/// step, finishing with one partial step.
class BaseFlow {
 public:
  static constexpr double divergence_factor = 10.0;

  static BaseFlow rotation() { return BaseFlow(FlowKind::exact_rotation, std::nullopt, 0.0); }
  static BaseFlow contraction() { return BaseFlow(FlowKind::exact_contraction, std::nullopt, 0.0); }
  static BaseFlow numeric(Field field, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) throw Error(ErrorKind::precondition, "integrator step must be positive");
    return BaseFlow(FlowKind::numeric, std::move(field), step);
  }

  FlowKind kind() const noexcept { return kind_; }
  double step() const noexcept { return step_; }
  const std::optional<Field>& field() const noexcept { return field_; }

  /// Enables the blow-up guard: a state leaving the box by more than
  /// `divergence_factor` box widths raises a diverged error.
  void set_guard(Chart chart, Box box) {
    chart_ = chart;
    guard_ = std::move(box);
  }

  /// phi_t(x). t must be finite and non-negative; t == 0 returns x unchanged.
  Point advance(const Point& x, double t) const {
    if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorKind::precondition, "flow time must be finite and >= 0");
    if (t == 0.0) return x;
    switch (kind_) {
      case FlowKind::exact_rotation:
        require_polar(x);
        return Point::unchecked(Chart::polar2d, std::array<double, 2>{x[0], x[1] + t});
      case FlowKind::exact_contraction:
        require_polar(x);
        return Point::unchecked(Chart::polar2d, std::array<double, 2>{1.0 + (x[0] - 1.0) * std::exp(-t), x[1] + t});
      case FlowKind::numeric: break;
    }
    const double full = std::floor(t / step_);
    const auto n = static_cast<std::size_t>(full);
    double rest = t - full * step_;
    if (rest < 0.0) rest = 0.0;
    Point y = x;
    for (std::size_t k = 0; k < n; ++k) y = rk4_step(y, step_);
    if (rest > 0.0) y = rk4_step(y, rest);
    return y;
  }

  /// A single integration step of length dt (closed form for exact kinds).
  Point step_once(const Point& x, double dt) const {
    if (kind_ != FlowKind::numeric) return advance(x, dt);
    return rk4_step(x, dt);
  }

 private:
  BaseFlow(FlowKind kind, std::optional<Field> field, double step)
      : kind_(kind), field_(std::move(field)), step_(step) {}

  static void require_polar(const Point& x) {
    if (x.chart() != Chart::polar2d) throw Error(ErrorKind::precondition, "exact flows are defined in the polar2d chart");
  }

  Point rk4_step(const Point& x, double dt) const {
    const Field& f = *field_;
    const std::size_t n = x.dim();
    auto shifted = [&](const std::array<double, Point::max_dim>& k, double scale) {
      Point y = x;
      for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + scale * k[i];
      return y;
    };
    const auto k1 = f.eval(x);
    const auto k2 = f.eval(shifted(k1, 0.5 * dt));
    const auto k3 = f.eval(shifted(k2, 0.5 * dt));
    const auto k4 = f.eval(shifted(k3, dt));
    Point y = x;
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    check_guard(y);
    return y;
  }

  void check_guard(const Point& y) const {
    if (!y.finite()) throw Error(ErrorKind::diverged, "integration produced a non-finite state");
    if (y.chart() == Chart::polar2d && !(y[0] > 0.0)) throw Error(ErrorKind::diverged, "radius left (0, inf)");
    if (!guard_) return;
    for (std::size_t i = 0; i < y.dim() && i < guard_->dim(); ++i) {
      if (periodic_axis(chart_, i)) continue;
      const double w = guard_->upper[i] - guard_->lower[i];
      if (y[i] < guard_->lower[i] - divergence_factor * w || y[i] > guard_->upper[i] + divergence_factor * w) {
        throw Error(ErrorKind::diverged, "state component " + std::to_string(i) + " left the domain box");
      }
    }
  }

  FlowKind kind_;
  std::optional<Field> field_;
  double step_;
  Chart chart_ = Chart::cartesian;
  std::optional<Box> guard_;
};

inline Point base_flow(const BaseFlow& flow, const Point& x, double t) { return flow.advance(x, t); }

}  // namespace ifs
