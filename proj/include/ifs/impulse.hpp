#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "ifs/error.hpp"
#include "ifs/flow.hpp"
#include "ifs/point.hpp"
#include "ifs/scenario.hpp"

namespace ifs {

struct Hit {
  double tau = 0.0;
  Point point;
};

namespace detail {

inline bool crossed(Crossing dir, double before, double after) {
  switch (dir) {
    case Crossing::ascending: return before < 0.0 && after >= 0.0;
    case Crossing::descending: return before > 0.0 && after <= 0.0;
    case Crossing::any: return (before < 0.0 && after >= 0.0) || (before > 0.0 && after <= 0.0);
  }
  return false;
}

}  // namespace detail

/// First impulsive time: the smallest t in (tau_min, horizon] at which the base
/// trajectory of x crosses the section in the configured direction with the
/// constraint satisfied. Returns nullopt when there is none.
///
/// A crossing found at t <= tau_min is accepted as "x starts on D" only when x
/// is on D; otherwise tau_1 would not be strictly positive and the scenario is
/// rejected.
inline std::optional<Hit> first_hit(const Scenario& sc, const Point& x, double horizon) {
  const Knobs& k = sc.knobs();
  const BaseFlow& flow = sc.flow();
  const Crossing dir = sc.surface().crossing;
  if (!(horizon > 0.0)) return std::nullopt;
  const bool starts_on_D = sc.in_D(x);

  double t = 0.0;
  Point y = x;
  double sy = sc.section(y);
  for (;;) {
    const double t1 = std::min(t + k.h, horizon);
    const Point y1 = flow.step_once(y, t1 - t);
    const double s1 = sc.section(y1);
    if (detail::crossed(dir, sy, s1)) {
      double lo = t;
      double hi = t1;
      double s_lo = sy;
      while (hi - lo > k.hit_bisection_tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double s_mid = sc.section(flow.step_once(y, mid - t));
        if (detail::crossed(dir, s_lo, s_mid)) {
          hi = mid;
        } else {
          lo = mid;
          s_lo = s_mid;
        }
      }
      const Point hit = flow.step_once(y, hi - t);
      if (sc.constraint(hit) >= 0.0) {
        if (hi > k.tau_min) return Hit{hi, hit};
        if (!starts_on_D) {
          throw Error(ErrorKind::scenario_invalid,
                      "first impulsive time is not strictly positive (hit at t <= tau_min from a point off D)");
        }
      }
    }
    if (t1 >= horizon) return std::nullopt;
    t = t1;
    y = y1;
    sy = s1;
  }
}

struct Segment {
  double t_start = 0.0;
  Point start;
  double duration = 0.0;
};

struct ImpulseEvent {
  double tau = 0.0;
  Point hit;
  Point image;
};

enum class Truncation { horizon_reached, zeno_abort };

inline const char* to_string(Truncation t) { return t == Truncation::horizon_reached ? "horizon_reached" : "zeno_abort"; }

/// Base-flow segments joined by impulse events. Segment k > 0 starts at the
/// image of event k-1, so evaluation at an event time returns the image.
struct ImpulsiveTrajectory {
  Point start;
  std::vector<Segment> segments;
  std::vector<ImpulseEvent> events;
  Truncation truncation = Truncation::horizon_reached;
  double horizon = 0.0;

  /// The requested horizon, or the abort time after a Zeno abort.
  double end_time() const {
    if (truncation == Truncation::horizon_reached) return horizon;
    const Segment& s = segments.back();
    return s.t_start + s.duration;
  }

  /// The impulsive semiflow at time t along this trajectory. Events within
  /// `snap` after t count as having happened.
  Point at(const BaseFlow& flow, double t, double snap = 0.0) const {
    if (t < 0.0) throw Error(ErrorKind::precondition, "negative time");
    if (t > end_time()) {
      if (truncation == Truncation::zeno_abort) {
        throw Error(ErrorKind::zeno_abort, "trajectory is undefined beyond the Zeno abort time");
      }
      throw Error(ErrorKind::precondition, "time lies beyond the trajectory horizon");
    }
    auto it = std::upper_bound(segments.begin(), segments.end(), t + snap,
                               [](double v, const Segment& s) { return v < s.t_start; });
    const Segment& seg = *(it - 1);
    return flow.advance(seg.start, std::max(0.0, t - seg.t_start));
  }
};

/// Produces an impulsive trajectory one segment at a time, so callers that only
/// need a prefix (recurrence tests) can stop early.
class TrajectoryBuilder {
 public:
  TrajectoryBuilder(const Scenario& sc, const Point& x, double horizon) : sc_(sc), y_(x), horizon_(horizon) {
    sc.require_in_box(x);
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw Error(ErrorKind::precondition, "horizon must be finite and >= 0");
  }

  bool done() const noexcept { return done_; }
  Truncation truncation() const noexcept { return truncation_; }
  std::size_t event_count() const noexcept { return events_; }

  /// Next segment, plus the event that ends it (if any).
  std::pair<Segment, std::optional<ImpulseEvent>> next() {
    const Knobs& k = sc_.knobs();
    const auto hit = first_hit(sc_, y_, horizon_ - t_);
    if (!hit) {
      done_ = true;
      return {Segment{t_, y_, horizon_ - t_}, std::nullopt};
    }
    Segment seg{t_, y_, hit->tau};
    ImpulseEvent ev{t_ + hit->tau, hit->point, sc_.impulse(hit->point)};
    if (events_ > 0 && hit->tau < k.zeno_min_gap) {
      done_ = true;
      truncation_ = Truncation::zeno_abort;
    }
    ++events_;
    if (events_ >= k.zeno_max_impulses) {
      done_ = true;
      truncation_ = Truncation::zeno_abort;
    }
    t_ = ev.tau;
    y_ = ev.image;
    return {seg, ev};
  }

  /// Closing zero-length segment at the image after a Zeno abort.
  Segment tail() const { return Segment{t_, y_, 0.0}; }

 private:
  const Scenario& sc_;
  Point y_;
  double t_ = 0.0;
  double horizon_;
  std::size_t events_ = 0;
  bool done_ = false;
  Truncation truncation_ = Truncation::horizon_reached;
};

/// Alternates base-flow segments and impulse events up to `horizon`, or until
/// the Zeno guard trips (too many impulses, or two impulses closer than
/// zeno_min_gap).
inline ImpulsiveTrajectory build_trajectory(const Scenario& sc, const Point& x, double horizon) {
  TrajectoryBuilder b(sc, x, horizon);
  ImpulsiveTrajectory traj;
  traj.start = x;
  traj.horizon = horizon;
  while (!b.done()) {
    auto [seg, ev] = b.next();
    traj.segments.push_back(seg);
    if (ev) traj.events.push_back(*ev);
  }
  if (b.truncation() == Truncation::zeno_abort) traj.segments.push_back(b.tail());
  traj.truncation = b.truncation();
  return traj;
}

/// The impulsive semiflow phi(t, x). Hit times are only known to the
/// bisection tolerance, so an event that lands within that tolerance of t is
/// applied (right-continuity at impulse times).
inline Point phi(const Scenario& sc, const Point& x, double t) {
  const double snap = sc.knobs().hit_bisection_tol;
  return build_trajectory(sc, x, t + snap).at(sc.flow(), t, snap);
}

/// Calls `visit(t, point)` for t = k*step (k integer) inside [from, to] along a
/// base-flow segment, in increasing time order.
template <class Visit>
bool sample_segment(const BaseFlow& flow, const Segment& seg, double step, double from, double to, Visit&& visit) {
  const double a = std::max(from, seg.t_start);
  const double b = std::min(to, seg.t_start + seg.duration);
  if (b < a) return false;
  const double k0 = std::ceil(a / step);
  const double k1 = std::floor(b / step);
  if (k1 < k0) return false;
  if (flow.kind() != FlowKind::numeric) {
    for (double k = k0; k <= k1; k += 1.0) {
      const double t = k * step;
      if (visit(t, flow.advance(seg.start, t - seg.t_start))) return true;
    }
    return false;
  }
  double t = k0 * step;
  Point y = flow.advance(seg.start, t - seg.t_start);
  for (double k = k0;; k += 1.0) {
    if (visit(t, y)) return true;
    if (k + 1.0 > k1) return false;
    const double tn = (k + 1.0) * step;
    y = flow.advance(y, tn - t);
    t = tn;
  }
}

/// Points of D found by root-solving the section along grid lines of the
/// domain box (n points per axis), keeping roots with c >= -tol. Deduplicated
/// and returned in a deterministic order.
inline std::vector<Point> sample_D(const Scenario& sc, std::size_t n) {
  if (n < 2) throw Error(ErrorKind::precondition, "need at least two samples per axis");
  const std::size_t dim = sc.dim();
  const Box& box = sc.box();
  const double tol = sc.knobs().hit_bisection_tol;
  auto node = [&](std::size_t axis, std::size_t i) {
    return box.lower[axis] + (box.upper[axis] - box.lower[axis]) * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  std::vector<Point> out;
  auto keep = [&](const Point& p) {
    if (sc.constraint(p) < -tol) return;
    for (const Point& q : out) {
      if (distance_squared(p, q) <= tol * tol) return;
    }
    out.push_back(p);
  };

  std::size_t lines = 1;
  for (std::size_t d = 1; d < dim; ++d) lines *= n;
  std::vector<double> c(dim);
  for (std::size_t axis = 0; axis < dim; ++axis) {
    for (std::size_t line = 0; line < lines; ++line) {
      std::size_t rem = line;
      for (std::size_t d = 0; d < dim; ++d) {
        if (d == axis) continue;
        c[d] = node(d, rem % n);
        rem /= n;
      }
      auto at = [&](double v) {
        c[axis] = v;
        return Point(sc.chart(), std::span<const double>(c));
      };
      double prev_v = node(axis, 0);
      double prev_s = sc.section(at(prev_v));
      if (std::fabs(prev_s) <= tol) keep(at(prev_v));
      for (std::size_t i = 1; i < n; ++i) {
        const double v = node(axis, i);
        const double s = sc.section(at(v));
        if (std::fabs(s) <= tol) {
          keep(at(v));
        } else if ((prev_s < 0.0 && s > 0.0) || (prev_s > 0.0 && s < 0.0)) {
          double lo = prev_v;
          double hi = v;
          double s_lo = prev_s;
          for (int it = 0; it < 200 && hi - lo > tol; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double sm = sc.section(at(mid));
            if ((sm < 0.0) == (s_lo < 0.0)) {
              lo = mid;
              s_lo = sm;
            } else {
              hi = mid;
            }
          }
          keep(at(0.5 * (lo + hi)));
        }
        prev_v = v;
        prev_s = s;
      }
    }
  }
  std::sort(out.begin(), out.end(), lexicographic_less);
  return out;
}

/// Distance from x to the nearest point of `set` (infinity for an empty set).
inline double distance_to_set(const Point& x, const std::vector<Point>& set) {
  double best = std::numeric_limits<double>::infinity();
  for (const Point& p : set) best = std::min(best, distance_squared(x, p));
  return std::sqrt(best);
}

struct SeparationReport {
  double min_gap = 0.0;
  bool pass = false;
  std::size_t samples = 0;
};

/// Minimum distance from I(D) to D over a sample of D; the Zeno-freedom
/// hypothesis I(D) and D disjoint requires it to exceed zeno_min_gap.
inline SeparationReport check_separation(const Scenario& sc, std::size_t n_samples) {
  if (n_samples < 1) throw Error(ErrorKind::precondition, "n_samples must be >= 1");
  const auto D = sample_D(sc, std::max<std::size_t>(n_samples, 2));
  if (D.empty()) throw Error(ErrorKind::degenerate, "the sampled impulsive set is empty");
  SeparationReport rep;
  rep.samples = D.size();
  rep.min_gap = std::numeric_limits<double>::infinity();
  for (const Point& d : D) rep.min_gap = std::min(rep.min_gap, distance_to_set(sc.impulse(d), D));
  rep.pass = rep.min_gap > sc.knobs().zeno_min_gap;
  return rep;
}

}  // namespace ifs
