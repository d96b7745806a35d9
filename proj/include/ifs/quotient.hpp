#pragma once

// Quotient by the gluing relation x ~ y iff x = y, y = I(x), x = I(y) or
// I(x) = I(y), with I the scenario's gluing map (its impulse map unless a
// separate glue map is declared).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <mutex>
#include <optional>
#include <vector>

#include "ifs/error.hpp"
#include "ifs/impulse.hpp"
#include "ifs/nonwandering.hpp"
#include "ifs/point.hpp"
#include "ifs/scenario.hpp"

namespace ifs {

struct EquivClass {
  std::vector<Point> members;  // normalized, sorted lexicographically
  Point canonical;
  bool canonical_off_D = false;
};

struct QuotientPoint {
  EquivClass cls;
  const Point& canonical() const noexcept { return cls.canonical; }
};

struct QuotientOptions {
  double tol = 1e-9;              // class membership and D membership
  std::size_t d_samples = 400;    // D sample for preimage search without a declared inverse
  std::size_t max_class_size = 64;
};

/// Class computations for one scenario. Holds a lazily built D sample used for
/// preimage search when the gluing map declares no inverse.
class QuotientSpace {
 public:
  explicit QuotientSpace(const Scenario& sc, QuotientOptions opt = {}) : sc_(sc), opt_(opt) {}

  const Scenario& scenario() const noexcept { return sc_; }
  const Scenario& glue() const noexcept { return sc_.gluing(); }
  const QuotientOptions& options() const noexcept { return opt_; }

  bool on_D(const Point& x) const { return glue().in_D(x, opt_.tol); }

  /// Points y of D with I(y) = z (within tol).
  std::vector<Point> preimages(const Point& z) const {
    std::vector<Point> out;
    const Scenario& g = glue();
    auto accept = [&](const Point& y) {
      if (!g.in_box(y, opt_.tol) || !y.finite() || (y.chart() == Chart::polar2d && !(y[0] > 0.0))) return;
      if (!on_D(y)) return;
      if (distance(g.impulse(y), z) > opt_.tol) return;
      out.push_back(y);
    };
    if (const auto y = g.inverse_impulse(z)) {
      accept(*y);
      return out;
    }
    const auto& D = d_sample();
    for (const Point& d : D) {
      if (distance(g.impulse(d), z) <= opt_.tol) out.push_back(d);
    }
    // Golden-section refinement on segments between consecutive samples.
    for (std::size_t k = 0; k + 1 < D.size(); ++k) {
      const Point& a = D[k];
      const Point& b = D[k + 1];
      const Point ia = g.impulse(a);
      const Point ib = g.impulse(b);
      if (distance(ia, z) > 2.0 * distance(ia, ib) + opt_.tol) continue;
      auto at = [&](double u) {
        Point p = a;
        for (std::size_t i = 0; i < a.dim(); ++i) p[i] = (1.0 - u) * a[i] + u * b[i];
        return p;
      };
      auto f = [&](double u) { return distance(g.impulse(at(u)), z); };
      const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
      double lo = 0.0, hi = 1.0;
      double u1 = hi - gr * (hi - lo), u2 = lo + gr * (hi - lo);
      double f1 = f(u1), f2 = f(u2);
      for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
        if (f1 < f2) {
          hi = u2; u2 = u1; f2 = f1;
          u1 = hi - gr * (hi - lo); f1 = f(u1);
        } else {
          lo = u1; u1 = u2; f1 = f2;
          u2 = lo + gr * (hi - lo); f2 = f(u2);
        }
      }
      accept(at(0.5 * (lo + hi)));
    }
    return out;
  }

  /// Closure of {x} under the relation: images of members on D and
  /// preimages of every member.
  EquivClass class_of(const Point& x) const {
    sc_.require_in_box(x);
    const Scenario& g = glue();
    std::vector<Point> members;
    std::deque<Point> queue{x};
    auto known = [&](const Point& p) {
      return std::any_of(members.begin(), members.end(), [&](const Point& q) { return distance(p, q) <= opt_.tol; });
    };
    while (!queue.empty()) {
      const Point z = queue.front();
      queue.pop_front();
      if (known(z)) continue;
      members.push_back(z);
      if (members.size() > opt_.max_class_size) {
        throw Error(ErrorKind::degenerate, "equivalence class exceeds " + std::to_string(opt_.max_class_size) + " members");
      }
      if (on_D(z)) queue.push_back(g.impulse(z));
      for (const Point& y : preimages(z)) queue.push_back(y);
    }
    for (Point& m : members) m = m.normalized();
    std::sort(members.begin(), members.end(), lexicographic_less);
    EquivClass c;
    c.members = std::move(members);
    for (const Point& m : c.members) {
      if (!on_D(m)) {
        c.canonical = m;
        c.canonical_off_D = true;
        break;
      }
    }
    if (!c.canonical_off_D) c.canonical = c.members.front();
    return c;
  }

  QuotientPoint project(const Point& x) const { return QuotientPoint{class_of(x)}; }

  bool equivalent(const QuotientPoint& a, const QuotientPoint& b) const {
    return distance(a.canonical(), b.canonical()) <= opt_.tol;
  }

  /// psi(t, a) = pi(phi(t, x)) for the off-D representative x of a, where phi
  /// is the semiflow glued by the gluing map.
  QuotientPoint psi(const QuotientPoint& a, double t) const {
    if (!a.cls.canonical_off_D) {
      throw Error(ErrorKind::ill_posed, "psi is undefined on a class with no representative off D");
    }
    return project(phi(glue(), a.canonical(), t));
  }

 private:
  const std::vector<Point>& d_sample() const {
    std::call_once(d_once_, [&] { d_ = sample_D(glue(), opt_.d_samples); });
    if (d_.empty()) throw Error(ErrorKind::preimage_unavailable, "no declared inverse and the D sample is empty");
    return d_;
  }

  const Scenario& sc_;
  QuotientOptions opt_;
  mutable std::once_flag d_once_;
  mutable std::vector<Point> d_;
};

inline EquivClass class_of(const Scenario& sc, const Point& x) { return QuotientSpace(sc).class_of(x); }
inline QuotientPoint project(const Scenario& sc, const Point& x) { return QuotientSpace(sc).project(x); }

/// Shortest-path surrogate for the quotient pseudometric. Atoms are the
/// members of non-trivial classes; edges cost 0 inside a class and the ambient
/// distance otherwise. Paths are limited to 2*hops+1 edges.
///
/// Singleton classes never shorten a path (triangle inequality), so only
/// gluing atoms are stored.
class GluingGraph {
 public:
  static constexpr std::size_t default_hops = 4;

  GluingGraph(const QuotientSpace& q, std::size_t d_samples = 200, std::size_t hops = default_hops)
      : q_(q), max_edges_(2 * hops + 1) {
    const auto D = sample_D(q.glue(), d_samples);
    for (const Point& d : D) insert(q.class_of(d));
  }

  std::size_t size() const noexcept { return atoms_.size(); }
  std::size_t max_edges() const noexcept { return max_edges_; }
  const std::vector<Point>& atoms() const noexcept { return atoms_; }

  /// Adds the members of c as atoms (skipping ones already present).
  void insert(const EquivClass& c) {
    if (c.members.size() < 2) return;
    std::optional<std::size_t> id;
    for (const Point& m : c.members) {
      for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (distance(atoms_[i], m) <= q_.options().tol) id = class_[i];
      }
    }
    const std::size_t cid = id ? *id : next_class_++;
    for (const Point& m : c.members) {
      const bool present = std::any_of(atoms_.begin(), atoms_.end(),
                                       [&](const Point& a) { return distance(a, m) <= q_.options().tol; });
      if (present) continue;
      for (std::size_t i = 0; i < atoms_.size(); ++i) w_[i].push_back(distance(atoms_[i], m));
      std::vector<double> row(atoms_.size() + 1, 0.0);
      for (std::size_t i = 0; i < atoms_.size(); ++i) row[i] = w_[i].back();
      w_.push_back(std::move(row));
      atoms_.push_back(m);
      class_.push_back(cid);
    }
  }

  double distance_between(const QuotientPoint& a, const QuotientPoint& b) const {
    if (q_.equivalent(a, b)) return 0.0;
    const std::size_t n = atoms_.size();
    const std::size_t pa = a.cls.members.size();
    const std::size_t pb = b.cls.members.size();
    const std::size_t total = n + pa + pb;
    const std::size_t ca = next_class_;
    const std::size_t cb = next_class_ + 1;
    auto node = [&](std::size_t v) -> const Point& {
      if (v < n) return atoms_[v];
      if (v < n + pa) return a.cls.members[v - n];
      return b.cls.members[v - n - pa];
    };
    auto cls = [&](std::size_t v) { return v < n ? class_[v] : (v < n + pa ? ca : cb); };
    // Query-to-everything costs; atom-to-atom costs are cached in w_.
    std::vector<std::vector<double>> qw(pa + pb, std::vector<double>(total));
    for (std::size_t i = 0; i < pa + pb; ++i) {
      for (std::size_t v = 0; v < total; ++v) qw[i][v] = distance(node(n + i), node(v));
    }
    auto cost = [&](std::size_t u, std::size_t v) {
      if (cls(u) == cls(v)) return 0.0;
      if (u >= n) return qw[u - n][v];
      if (v >= n) return qw[v - n][u];
      return w_[u][v];
    };
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> d(total, inf);
    for (std::size_t i = 0; i < pa; ++i) d[n + i] = 0.0;
    for (std::size_t edges = 0; edges < max_edges_; ++edges) {
      std::vector<double> nd = d;
      for (std::size_t u = 0; u < total; ++u) {
        if (d[u] == inf) continue;
        for (std::size_t v = 0; v < total; ++v) nd[v] = std::min(nd[v], d[u] + cost(u, v));
      }
      d = std::move(nd);
    }
    double best = inf;
    for (std::size_t i = 0; i < pb; ++i) best = std::min(best, d[n + pa + i]);
    return best;
  }

 private:
  const QuotientSpace& q_;
  std::size_t max_edges_;
  std::vector<Point> atoms_;
  std::vector<std::size_t> class_;
  std::vector<std::vector<double>> w_;
  std::size_t next_class_ = 0;
};

inline double quotient_distance(const GluingGraph& g, const QuotientPoint& a, const QuotientPoint& b) {
  return g.distance_between(a, b);
}

struct ConjugacyReport {
  double residual = 0.0;
  std::size_t samples = 0;
  std::vector<double> times;
  std::optional<Point> worst_point;
  double worst_time = 0.0;
};

/// Evenly spaced flagged nodes off D (at most n, in grid order).
inline std::vector<Point> omega_samples_off_D(const QuotientSpace& q, const OmegaEstimate& omega, std::size_t n) {
  std::vector<Point> pool;
  for (const Point& x : omega.flagged()) {
    if (!q.on_D(x)) pool.push_back(x);
  }
  if (pool.size() <= n) return pool;
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(pool[k * pool.size() / n]);
  return out;
}

/// max over samples and times of d(psi_t(pi(x)), pi(phi_t(x))), with phi the
/// scenario's own semiflow.
inline ConjugacyReport conjugacy_residual(const QuotientSpace& q, const GluingGraph& g,
                                          const std::vector<Point>& samples, const std::vector<double>& times,
                                          std::size_t threads = 0) {
  ConjugacyReport rep;
  rep.samples = samples.size();
  rep.times = times;
  std::vector<double> res(samples.size() * times.size(), 0.0);
  parallel_for(res.size(), threads, [&](std::size_t k) {
    const Point& x = samples[k / times.size()];
    const double t = times[k % times.size()];
    const auto a = q.project(x);
    const auto lhs = q.psi(a, t);
    const auto rhs = q.project(phi(q.scenario(), x, t));
    res[k] = quotient_distance(g, lhs, rhs);
  });
  for (std::size_t k = 0; k < res.size(); ++k) {
    if (!rep.worst_point || res[k] > rep.residual) {
      rep.residual = res[k];
      rep.worst_point = samples[k / times.size()];
      rep.worst_time = times[k % times.size()];
    }
  }
  return rep;
}

}  // namespace ifs
