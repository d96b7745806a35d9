#pragma once

// Built-in scenarios: the two annulus examples, a Zeno negative control and a
// corrupted-gluing negative control. The shipped scenarios/*.toml files
// describe the same systems.

#include <string>

#include "ifs/expr.hpp"
#include "ifs/flow.hpp"
#include "ifs/scenario.hpp"

namespace ifs::builtin {

inline Box annulus() { return Box{{1.0, 0.0}, {2.0, two_pi}}; }

inline ImpulseMap polar_map(const std::string& forward, const std::string& inverse = {}) {
  ImpulseMap m{parse_field(forward, 2, Chart::polar2d), std::nullopt};
  if (!inverse.empty()) m.inverse = parse_field(inverse, 2, Chart::polar2d);
  return m;
}

inline ImpulseSurface polar_surface(const std::string& section, const std::string& constraint,
                                    Crossing crossing = Crossing::ascending) {
  return {parse_scalar(section, 2, Chart::polar2d), parse_scalar(constraint, 2, Chart::polar2d), crossing};
}

/// Rotation r' = 0, th' = 1 on 1 <= r <= 2; D is the segment th = 0 and
/// I(r, 0) = ((1 + r)/2, pi), i.e. the Cartesian point (-(1 + r)/2, 0).
inline Scenario example21(bool numeric = false, double h = 1e-3) {
  BaseFlow flow = numeric ? BaseFlow::numeric(parse_field("0; 1", 2, Chart::polar2d), h) : BaseFlow::rotation();
  Knobs k;
  k.h = h;
  k.horizon_default = 50.0;
  return Scenario("example21", Chart::polar2d, annulus(), flow, polar_surface("sin(th)", "cos(th)"),
                  polar_map("(1 + r)/2; pi", "2*r - 1; 0"), k);
}

/// Contraction r' = 1 - r, th' = 1; D = {(1, 0)} and I(1, 0) = (2, 0). The
/// constraint admits only |r - 1| <= 1e-12.
inline Scenario example22(bool numeric = false, double h = 1e-3) {
  BaseFlow flow = numeric ? BaseFlow::numeric(parse_field("1 - r; 1", 2, Chart::polar2d), h) : BaseFlow::contraction();
  Knobs k;
  k.h = h;
  k.horizon_default = 20.0;
  return Scenario("example22", Chart::polar2d, annulus(), flow, polar_surface("sin(th)", "-abs(r - 1) + 1e-12"),
                  polar_map("2; 0", "1; 0"), k);
}

/// Rotation with I(r, 0) = (1 + (r - 1)/2, -(r - 1)): successive impulse gaps
/// halve, so impulsive times accumulate.
inline Scenario zeno() {
  Knobs k;
  k.horizon_default = 10.0;
  return Scenario("zeno", Chart::polar2d, annulus(), BaseFlow::rotation(), polar_surface("sin(th)", "cos(th)"),
                  polar_map("1 + (r - 1)/2; -(r - 1)", "2*r - 1; 0"), k);
}

/// example21 whose jump lands 0.1 further out than the gluing says.
inline Scenario corrupted_example21() {
  Knobs k;
  k.horizon_default = 50.0;
  return Scenario("corrupted_impulse", Chart::polar2d, annulus(), BaseFlow::rotation(),
                  polar_surface("sin(th)", "cos(th)"), polar_map("(1 + r)/2 + 0.1; pi", "2*(r - 0.1) - 1; 0"), k,
                  polar_map("(1 + r)/2; pi", "2*r - 1; 0"));
}

}  // namespace ifs::builtin
