#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ifs/error.hpp"
#include "ifs/expr.hpp"
#include "ifs/flow.hpp"
#include "ifs/point.hpp"

namespace ifs {

enum class Crossing { ascending, descending, any };

inline const char* to_string(Crossing c) {
  switch (c) {
    case Crossing::ascending: return "ascending";
    case Crossing::descending: return "descending";
    case Crossing::any: return "any";
  }
  return "unknown";
}

/// D = { x : s(x) = 0 and c(x) >= 0 }, entered in the given direction of s.
struct ImpulseSurface {
  Expr section;
  Expr constraint;
  Crossing crossing = Crossing::ascending;
};

/// I : D -> X, optionally with a declared inverse on I(D).
struct ImpulseMap {
  Field forward;
  std::optional<Field> inverse;
};

struct Knobs {
  double h = 1e-3;
  double hit_bisection_tol = 1e-10;
  double tau_min = 1e-9;
  double zeno_min_gap = 1e-6;
  std::size_t zeno_max_impulses = 100000;
  double horizon_default = 50.0;
};

/// One impulsive dynamical system (X, phi, D, I) plus its numeric knobs.
///
/// An optional glue map overrides I when building the quotient space; it
/// defaults to I itself, and differs only in negative-control scenarios where
/// the gluing deliberately disagrees with the jump.
class Scenario {
 public:
  Scenario(std::string name, Chart chart, Box box, BaseFlow flow, ImpulseSurface surface, ImpulseMap impulse,
           Knobs knobs = {}, std::optional<ImpulseMap> glue = std::nullopt)
      : name_(std::move(name)),
        chart_(chart),
        box_(std::move(box)),
        flow_(std::move(flow)),
        surface_(std::move(surface)),
        impulse_(std::move(impulse)),
        knobs_(knobs) {
    validate();
    flow_.set_guard(chart_, box_);
    if (glue) {
      glued_ = std::make_shared<const Scenario>(name_ + "/glue", chart_, box_, flow_, surface_, *glue, knobs_);
    }
  }

  const std::string& name() const noexcept { return name_; }
  Chart chart() const noexcept { return chart_; }
  std::size_t dim() const noexcept { return box_.dim(); }
  const Box& box() const noexcept { return box_; }
  const BaseFlow& flow() const noexcept { return flow_; }
  const ImpulseSurface& surface() const noexcept { return surface_; }
  const ImpulseMap& impulse_map() const noexcept { return impulse_; }
  const Knobs& knobs() const noexcept { return knobs_; }
  bool has_glue_override() const noexcept { return static_cast<bool>(glued_); }

  /// The scenario whose impulse map is the gluing map (itself unless overridden).
  const Scenario& gluing() const noexcept { return glued_ ? *glued_ : *this; }

  double section(const Point& x) const { return surface_.section.eval(x.coords()); }
  double constraint(const Point& x) const { return surface_.constraint.eval(x.coords()); }

  bool in_D(const Point& x, double tol) const {
    return std::fabs(section(x)) <= tol && constraint(x) >= -tol;
  }
  bool in_D(const Point& x) const { return in_D(x, knobs_.hit_bisection_tol); }

  /// I(x), evaluated from the map expression.
  Point impulse(const Point& hit) const {
    Point y = impulse_.forward.map(hit);
    if (!y.finite()) throw Error(ErrorKind::domain, "impulse image is not finite");
    return y;
  }

  std::optional<Point> inverse_impulse(const Point& y) const {
    if (!impulse_.inverse) return std::nullopt;
    return impulse_.inverse->map(y);
  }

  bool in_box(const Point& x, double tol = 1e-12) const {
    if (x.chart() != chart_ || x.dim() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i) {
      if (periodic_axis(chart_, i)) continue;
      if (x[i] < box_.lower[i] - tol || x[i] > box_.upper[i] + tol) return false;
    }
    return true;
  }

  void require_in_box(const Point& x) const {
    if (x.chart() != chart_ || x.dim() != dim()) {
      throw Error(ErrorKind::precondition, "point chart/dimension does not match scenario '" + name_ + "'");
    }
    x.validate();
    if (!in_box(x, 1e-9)) throw Error(ErrorKind::precondition, "point lies outside the domain box");
  }

  Scenario with_impulse(ImpulseMap impulse, std::string name) const {
    return Scenario(std::move(name), chart_, box_, flow_, surface_, std::move(impulse), knobs_);
  }

 private:
  void validate() const {
    auto fail = [&](const std::string& why) { throw Error(ErrorKind::scenario_invalid, name_ + ": " + why); };
    if (box_.lower.size() != box_.upper.size() || box_.lower.empty()) fail("domain box bounds have mismatched sizes");
    if (chart_ == Chart::polar2d && dim() != 2) fail("polar2d scenarios are two-dimensional");
    for (std::size_t i = 0; i < dim(); ++i) {
      if (!(box_.lower[i] < box_.upper[i])) fail("domain box axis " + std::to_string(i) + " is empty");
    }
    if (chart_ == Chart::polar2d && !(box_.lower[0] > 0.0)) fail("polar2d domain requires r > 0");
    if (flow_.kind() != FlowKind::numeric && chart_ != Chart::polar2d) fail("exact flows need the polar2d chart");
    if (flow_.kind() == FlowKind::numeric &&
        (flow_.field()->chart() != chart_ || flow_.field()->dim() != dim())) {
      fail("flow field chart/dimension mismatch");
    }
    if (impulse_.forward.chart() != chart_ || impulse_.forward.dim() != dim()) fail("impulse map chart/dimension mismatch");
    if (impulse_.inverse && (impulse_.inverse->chart() != chart_ || impulse_.inverse->dim() != dim())) {
      fail("impulse inverse chart/dimension mismatch");
    }
    const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(knobs_.h)) fail("knob h must be > 0");
    if (!positive(knobs_.hit_bisection_tol)) fail("knob hit_bisection_tol must be > 0");
    if (!positive(knobs_.tau_min)) fail("knob tau_min must be > 0");
    if (!positive(knobs_.zeno_min_gap)) fail("knob zeno_min_gap must be > 0");
    if (knobs_.zeno_max_impulses == 0) fail("knob zeno_max_impulses must be > 0");
    if (!positive(knobs_.horizon_default)) fail("knob horizon_default must be > 0");
    if (!(knobs_.tau_min < knobs_.zeno_min_gap)) fail("tau_min must be smaller than zeno_min_gap");
  }

  std::string name_;
  Chart chart_;
  Box box_;
  BaseFlow flow_;
  ImpulseSurface surface_;
  ImpulseMap impulse_;
  Knobs knobs_;
  std::shared_ptr<const Scenario> glued_;
};

}  // namespace ifs
