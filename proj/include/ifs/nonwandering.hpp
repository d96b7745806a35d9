#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "ifs/error.hpp"
#include "ifs/impulse.hpp"
#include "ifs/parallel.hpp"
#include "ifs/point.hpp"
#include "ifs/scenario.hpp"

namespace ifs {

/// Orbit-return test parameters: x counts as recurrent when phi(x, t) comes
/// back within eps_ball for some t in [t_min, horizon].
struct RecurrenceParams {
  double eps_ball = 0.01;
  double t_min = 0.5;
  double horizon = 50.0;
  double sample_step = 1e-3;

  void validate() const {
    if (!(eps_ball > 0.0) || !(t_min >= 0.0) || !(t_min < horizon) || !(sample_step > 0.0)) {
      throw Error(ErrorKind::precondition, "recurrence parameters need eps_ball > 0, 0 <= t_min < horizon, sample_step > 0");
    }
  }
};

struct RecurrenceResult {
  bool recurrent = false;
  double first_return_time = std::numeric_limits<double>::quiet_NaN();
  bool zeno_warning = false;
};

/// Per-axis node counts over the scenario's domain box. Periodic axes (the
/// polar angle) get n nodes spaced over [lower, upper) ; other axes get n
/// nodes including both endpoints.
struct GridSpec {
  std::vector<std::size_t> resolution;

  std::size_t size() const {
    return std::accumulate(resolution.begin(), resolution.end(), std::size_t{1}, std::multiplies<>());
  }

  double spacing(const Scenario& sc, std::size_t axis) const {
    const double w = sc.box().upper[axis] - sc.box().lower[axis];
    const auto n = static_cast<double>(resolution[axis]);
    return periodic_axis(sc.chart(), axis) ? w / n : w / (n - 1.0);
  }

  double coordinate(const Scenario& sc, std::size_t axis, std::size_t i) const {
    return sc.box().lower[axis] + spacing(sc, axis) * static_cast<double>(i);
  }

  /// Row-major node list (first axis outermost).
  std::vector<Point> nodes(const Scenario& sc) const {
    if (resolution.size() != sc.dim()) throw Error(ErrorKind::precondition, "grid dimension does not match the scenario");
    for (std::size_t a = 0; a < resolution.size(); ++a) {
      if (resolution[a] < (periodic_axis(sc.chart(), a) ? 1u : 2u)) {
        throw Error(ErrorKind::precondition, "grid resolution too small on axis " + std::to_string(a));
      }
    }
    std::vector<Point> out;
    out.reserve(size());
    std::vector<std::size_t> idx(resolution.size(), 0);
    std::vector<double> c(resolution.size());
    for (std::size_t flat = 0; flat < size(); ++flat) {
      std::size_t rem = flat;
      for (std::size_t a = resolution.size(); a-- > 0;) {
        idx[a] = rem % resolution[a];
        rem /= resolution[a];
      }
      for (std::size_t a = 0; a < resolution.size(); ++a) c[a] = coordinate(sc, a, idx[a]);
      out.emplace_back(sc.chart(), std::span<const double>(c));
    }
    return out;
  }

  /// Flat index of the neighbour one step up along `axis`, wrapping on
  /// periodic axes; nullopt at a non-periodic edge.
  std::optional<std::size_t> neighbour(const Scenario& sc, std::size_t flat, std::size_t axis) const {
    std::size_t stride = 1;
    for (std::size_t a = axis + 1; a < resolution.size(); ++a) stride *= resolution[a];
    const std::size_t i = (flat / stride) % resolution[axis];
    if (i + 1 < resolution[axis]) return flat + stride;
    if (periodic_axis(sc.chart(), axis)) return flat - i * stride;
    return std::nullopt;
  }
};

/// Orbit-return proxy for the non-wandering property. Samples phi(x, t) at
/// multiples of sample_step and additionally at every impulse (both the hit,
/// i.e. the left limit, and the image).
inline RecurrenceResult is_recurrent(const Scenario& sc, const Point& x, const RecurrenceParams& p) {
  p.validate();
  RecurrenceResult res;
  auto check = [&](double t, const Point& y) {
    if (t >= p.t_min && within(y, x, p.eps_ball)) {
      res.recurrent = true;
      res.first_return_time = t;
      return true;
    }
    return false;
  };
  TrajectoryBuilder builder(sc, x, p.horizon);
  while (!builder.done()) {
    auto [seg, ev] = builder.next();
    if (sample_segment(sc.flow(), seg, p.sample_step, p.t_min, p.horizon, check)) return res;
    if (ev && (check(ev->tau, ev->hit) || check(ev->tau, ev->image))) return res;
  }
  res.zeno_warning = builder.truncation() == Truncation::zeno_abort;
  return res;
}

struct OmegaEstimate {
  GridSpec grid;
  RecurrenceParams params;
  std::vector<Point> nodes;
  std::vector<RecurrenceResult> results;

  std::vector<std::size_t> flagged_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (results[i].recurrent) out.push_back(i);
    }
    return out;
  }

  std::vector<Point> flagged() const {
    std::vector<Point> out;
    for (std::size_t i : flagged_indices()) out.push_back(nodes[i]);
    return out;
  }

  std::size_t zeno_warnings() const {
    return static_cast<std::size_t>(std::count_if(results.begin(), results.end(), [](const auto& r) { return r.zeno_warning; }));
  }
};

/// Classifies every grid node; output order is the grid's row-major order
/// regardless of the worker count.
inline OmegaEstimate estimate_omega(const Scenario& sc, const GridSpec& grid, const RecurrenceParams& p,
                                    std::size_t threads = 0) {
  p.validate();
  OmegaEstimate est{grid, p, grid.nodes(sc), {}};
  if (est.nodes.empty()) throw Error(ErrorKind::precondition, "grid is empty");
  est.results.resize(est.nodes.size());
  parallel_for(est.nodes.size(), threads, [&](std::size_t i) { est.results[i] = is_recurrent(sc, est.nodes[i], p); });
  return est;
}

/// tau_D: 0 on D, the first impulsive time elsewhere, +infinity when the orbit
/// never reaches D within the estimate's horizon.
inline double tau_d(const Scenario& sc, const OmegaEstimate& omega, const Point& x, bool check_support = true) {
  if (check_support && distance_to_set(x, omega.flagged()) > omega.params.eps_ball) {
    throw Error(ErrorKind::precondition, "tau_D is only evaluated within eps_ball of the non-wandering estimate");
  }
  if (std::fabs(sc.section(x)) <= sc.knobs().hit_bisection_tol && sc.constraint(x) >= 0.0) return 0.0;
  const auto hit = first_hit(sc, x, omega.params.horizon);
  return hit ? hit->tau : std::numeric_limits<double>::infinity();
}

struct TauDSample {
  Point point;
  double tau = 0.0;
};

/// Sampled tau_D over the non-wandering estimate and its continuity modulus at
/// `scale`: the largest |tau_D(x) - tau_D(y)| over sampled pairs with
/// dist(x, y) <= scale. Pairs where exactly one value is infinite are counted
/// separately (in the one-point compactification they are always far apart).
struct TauDProfile {
  std::vector<TauDSample> samples;
  double scale = 0.0;
  double modulus = 0.0;
  std::size_t infinite_pairs = 0;
  std::optional<std::pair<std::size_t, std::size_t>> worst_pair;
  bool discontinuous = false;
};

/// Flagged nodes plus points interpolated (in chart coordinates) between
/// flagged grid neighbours, so that neighbouring samples are at most `spacing`
/// apart along the estimate.
inline std::vector<Point> densify(const Scenario& sc, const OmegaEstimate& omega, double spacing) {
  std::vector<Point> out;
  std::vector<char> flagged(omega.nodes.size(), 0);
  for (std::size_t i : omega.flagged_indices()) flagged[i] = 1;
  for (std::size_t i : omega.flagged_indices()) {
    out.push_back(omega.nodes[i]);
    for (std::size_t axis = 0; axis < sc.dim(); ++axis) {
      const auto j = omega.grid.neighbour(sc, i, axis);
      if (!j || !flagged[*j]) continue;
      Point a = omega.nodes[i];
      Point b = omega.nodes[*j];
      if (b[axis] < a[axis]) b[axis] = a[axis] + omega.grid.spacing(sc, axis);  // periodic wrap
      const auto m = static_cast<std::size_t>(std::ceil(distance(a, b) / spacing));
      for (std::size_t k = 1; k < m; ++k) {
        const double w = static_cast<double>(k) / static_cast<double>(m);
        Point q = a;
        for (std::size_t d = 0; d < sc.dim(); ++d) q[d] = (1.0 - w) * a[d] + w * b[d];
        out.push_back(q);
      }
    }
  }
  return out;
}

inline TauDProfile continuity_report(const Scenario& sc, const OmegaEstimate& omega, double scale,
                                     std::size_t threads = 0) {
  if (!(scale > 0.0)) throw Error(ErrorKind::precondition, "scale must be > 0");
  TauDProfile prof;
  prof.scale = scale;
  const auto pts = densify(sc, omega, scale / 4.0);
  if (pts.size() < 2) throw Error(ErrorKind::degenerate, "continuity report needs at least two samples");
  prof.samples.resize(pts.size());
  parallel_for(pts.size(), threads, [&](std::size_t i) {
    prof.samples[i] = TauDSample{pts[i], tau_d(sc, omega, pts[i], false)};
  });

  // Sweep over samples sorted by the first embedded coordinate.
  std::vector<std::array<double, Point::max_dim>> emb(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) emb[i] = pts[i].embed();
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return emb[a][0] < emb[b][0] || (emb[a][0] == emb[b][0] && a < b);
  });
  const double scale2 = scale * scale;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (emb[j][0] - emb[i][0] > scale) break;
      if (distance_squared(pts[i], pts[j]) > scale2) continue;
      const double ti = prof.samples[i].tau;
      const double tj = prof.samples[j].tau;
      const bool inf_i = std::isinf(ti);
      const bool inf_j = std::isinf(tj);
      if (inf_i && inf_j) continue;
      if (inf_i != inf_j) {
        ++prof.infinite_pairs;
        continue;
      }
      const double gap = std::fabs(ti - tj);
      if (!prof.worst_pair || gap > prof.modulus) {
        prof.worst_pair = std::make_pair(std::min(i, j), std::max(i, j));
        prof.modulus = gap;
      }
    }
  }
  prof.discontinuous = prof.modulus > 10.0 * scale || prof.infinite_pairs > 0;
  return prof;
}

struct HypothesisAudit {
  bool tauD_continuous = false;
  bool image_in_omega_minus_D = false;
  bool omega_cap_D_empty = false;
  std::size_t flagged_on_D = 0;
  double worst_image_to_omega = 0.0;  // over flagged points on D
  double min_image_to_D = std::numeric_limits<double>::infinity();
  TauDProfile profile;
};

/// Hypothesis checks on an estimate: continuity of tau_D, and
/// whether I maps the part of the estimate lying on D back into the estimate
/// away from D.
inline HypothesisAudit audit_hypotheses(const Scenario& sc, const OmegaEstimate& omega, double scale = 0.01,
                                        std::size_t d_samples = 400, std::size_t threads = 0) {
  HypothesisAudit audit;
  audit.profile = continuity_report(sc, omega, scale, threads);
  audit.tauD_continuous = !audit.profile.discontinuous;
  const auto flagged = omega.flagged();
  const auto D = sample_D(sc, d_samples);
  const double eps = omega.params.eps_ball;
  bool ok = true;
  for (const Point& x : flagged) {
    if (!sc.in_D(x)) continue;
    ++audit.flagged_on_D;
    const Point y = sc.impulse(x);
    const double to_omega = distance_to_set(y, flagged);
    const double to_D = distance_to_set(y, D);
    audit.worst_image_to_omega = std::max(audit.worst_image_to_omega, to_omega);
    audit.min_image_to_D = std::min(audit.min_image_to_D, to_D);
    if (!(to_omega <= eps && to_D > eps)) ok = false;
  }
  audit.image_in_omega_minus_D = ok;
  audit.omega_cap_D_empty = audit.flagged_on_D == 0;
  return audit;
}

struct ForwardInvarianceReport {
  std::size_t points = 0;
  double max_to_omega = 0.0;
  double min_to_D = std::numeric_limits<double>::infinity();
  Point closest_to_D_start;
  double closest_to_D_time = 0.0;
  bool pass = false;
};

/// Flows flagged points lying farther than eps_ball from D for each t and
/// checks they stay within 2*eps_ball of the estimate and farther than
/// eps_ball/2 from D.
inline ForwardInvarianceReport forward_invariance(const Scenario& sc, const OmegaEstimate& omega,
                                                  const std::vector<double>& times, std::size_t d_samples = 2000) {
  ForwardInvarianceReport rep;
  const auto flagged = omega.flagged();
  const auto D = sample_D(sc, d_samples);
  const double eps = omega.params.eps_ball;
  for (const Point& x : flagged) {
    if (distance_to_set(x, D) <= eps) continue;
    ++rep.points;
    for (double t : times) {
      const Point y = phi(sc, x, t);
      rep.max_to_omega = std::max(rep.max_to_omega, distance_to_set(y, flagged));
      const double to_D = distance_to_set(y, D);
      if (to_D < rep.min_to_D) {
        rep.min_to_D = to_D;
        rep.closest_to_D_start = x;
        rep.closest_to_D_time = t;
      }
    }
  }
  rep.pass = rep.max_to_omega <= 2.0 * eps && rep.min_to_D > 0.5 * eps;
  return rep;
}

}  // namespace ifs
