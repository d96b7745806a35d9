#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ifs/error.hpp"
#include "ifs/impulse.hpp"
#include "ifs/nonwandering.hpp"
#include "ifs/parallel.hpp"
#include "ifs/point.hpp"
#include "ifs/quotient.hpp"
#include "ifs/scenario.hpp"

namespace ifs {

struct Atom {
  Point point;
  double weight = 0.0;
};

/// Finitely many weighted atoms with total mass 1. Atom order is preserved by
/// every operation.
class DiscreteMeasure {
 public:
  static constexpr double mass_tol = 1e-12;

  DiscreteMeasure() = default;

  /// Normalizes the weights; they must be positive and finite.
  explicit DiscreteMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw Error(ErrorKind::precondition, "a probability measure needs at least one atom");
    double total = 0.0;
    for (const Atom& a : atoms_) {
      if (!(a.weight > 0.0) || !std::isfinite(a.weight)) throw Error(ErrorKind::precondition, "atom weights must be positive");
      total += a.weight;
    }
    for (Atom& a : atoms_) a.weight /= total;
  }

  static DiscreteMeasure dirac(const Point& x) { return DiscreteMeasure({Atom{x, 1.0}}); }

  /// Equal weights on the given points.
  static DiscreteMeasure uniform(const std::vector<Point>& pts) {
    std::vector<Atom> atoms;
    atoms.reserve(pts.size());
    for (const Point& p : pts) atoms.push_back(Atom{p, 1.0});
    return DiscreteMeasure(std::move(atoms));
  }

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  double total_mass() const {
    return std::accumulate(atoms_.begin(), atoms_.end(), 0.0, [](double s, const Atom& a) { return s + a.weight; });
  }

 private:
  friend DiscreteMeasure with_atoms(std::vector<Atom> atoms);
  std::vector<Atom> atoms_;
};

/// Builds a measure from atoms whose weights already sum to 1 (kept as is).
inline DiscreteMeasure with_atoms(std::vector<Atom> atoms) {
  DiscreteMeasure m;
  m.atoms_ = std::move(atoms);
  return m;
}

/// f_* mu: every atom is mapped, weights preserved. Atoms where f throws are
/// collected and reported together.
template <class F>
DiscreteMeasure pushforward(F&& f, const DiscreteMeasure& mu, std::size_t threads = 1) {
  std::vector<Atom> out(mu.size());
  std::vector<std::string> failures(mu.size());
  std::vector<char> failed(mu.size(), 0);
  parallel_for(mu.size(), threads, [&](std::size_t i) {
    try {
      out[i] = Atom{f(mu.atoms()[i].point), mu.atoms()[i].weight};
    } catch (const std::exception& e) {
      failed[i] = 1;
      failures[i] = e.what();
    }
  });
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < failed.size(); ++i) {
    if (failed[i]) bad.push_back(i);
  }
  if (!bad.empty()) {
    const std::string first = failures[bad.front()];
    throw PartialMapError(std::move(bad), first);
  }
  return with_atoms(std::move(out));
}

/// Finite measurable partition of the phase space.
class Partition {
 public:
  virtual ~Partition() = default;
  virtual std::size_t cells() const = 0;
  virtual std::size_t cell(const Point& x) const = 0;
  virtual std::string name() const = 0;
};

/// m x m uniform grid over a box in the Euclidean embedding, plus one extra
/// cell (index m*m) for everything outside the box.
class BoxPartition final : public Partition {
 public:
  BoxPartition(std::size_t m, double lower = -2.0, double upper = 2.0) : m_(m), lo_(lower), hi_(upper) {
    if (m == 0 || !(upper > lower)) throw Error(ErrorKind::precondition, "box partition needs m >= 1 and upper > lower");
  }

  std::size_t cells() const override { return m_ * m_ + 1; }

  std::size_t cell(const Point& x) const override {
    const auto e = x.embed();
    const double w = (hi_ - lo_) / static_cast<double>(m_);
    std::size_t idx[2];
    for (int a = 0; a < 2; ++a) {
      const double v = x.dim() > static_cast<std::size_t>(a) ? e[a] : 0.0;
      if (v < lo_ || v > hi_) return m_ * m_;
      idx[a] = std::min(m_ - 1, static_cast<std::size_t>((v - lo_) / w));
    }
    return idx[0] * m_ + idx[1];
  }

  std::string name() const override { return "box" + std::to_string(m_) + "x" + std::to_string(m_); }

 private:
  std::size_t m_;
  double lo_, hi_;
};

/// Two cells: Euclidean norm <= threshold (cell 0) and the complement.
class RadialPartition final : public Partition {
 public:
  explicit RadialPartition(double threshold) : threshold_(threshold) {}
  std::size_t cells() const override { return 2; }
  std::size_t cell(const Point& x) const override {
    if (x.chart() == Chart::polar2d) return x[0] <= threshold_ ? 0 : 1;
    const auto e = x.embed();
    double n2 = 0.0;
    for (std::size_t i = 0; i < x.dim(); ++i) n2 += e[i] * e[i];
    return std::sqrt(n2) <= threshold_ ? 0 : 1;
  }
  std::string name() const override { return "radial<=" + detail::format_number(threshold_); }

 private:
  double threshold_;
};

inline std::vector<double> cell_masses(const DiscreteMeasure& mu, const Partition& p) {
  std::vector<double> m(p.cells(), 0.0);
  for (const Atom& a : mu.atoms()) m[p.cell(a.point)] += a.weight;
  return m;
}

struct TvReport {
  double tv = 0.0;
  std::size_t worst_cell = 0;
};

/// Half the l1 distance between the cell masses of two measures.
inline TvReport tv_on_partition(const DiscreteMeasure& a, const DiscreteMeasure& b, const Partition& p) {
  const auto ma = cell_masses(a, p);
  const auto mb = cell_masses(b, p);
  TvReport r;
  double worst = -1.0;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double d = std::fabs(ma[i] - mb[i]);
    r.tv += d;
    if (d > worst) {
      worst = d;
      r.worst_cell = i;
    }
  }
  r.tv = std::clamp(0.5 * r.tv, 0.0, 1.0);
  return r;
}

struct DefectReport {
  double t = 0.0;
  double tv_defect = 0.0;
  std::string partition;
  std::size_t worst_cell = 0;
};

/// TV distance on the partition between (phi_t)_* mu and mu.
inline DefectReport invariance_defect(const Scenario& sc, const DiscreteMeasure& mu, double t, const Partition& p,
                                      std::size_t threads = 1) {
  if (!(t >= 0.0)) throw Error(ErrorKind::precondition, "t must be >= 0");
  const auto pushed = t == 0.0 ? mu : pushforward([&](const Point& x) { return phi(sc, x, t); }, mu, threads);
  const auto tv = tv_on_partition(pushed, mu, p);
  return DefectReport{t, tv.tv, p.name(), tv.worst_cell};
}

/// Cesaro average (1/N) sum_k delta_{phi(x0, k delta)}, k = 0..N-1, read off
/// a single trajectory.
inline DiscreteMeasure kb_average(const Scenario& sc, const Point& x0, double delta, std::size_t n) {
  if (n < 1) throw Error(ErrorKind::precondition, "N must be >= 1");
  if (!(delta > 0.0)) throw Error(ErrorKind::precondition, "delta must be > 0");
  const double horizon = delta * static_cast<double>(n - 1);
  const auto traj = build_trajectory(sc, x0, horizon);
  if (traj.truncation == Truncation::zeno_abort) {
    throw Error(ErrorKind::zeno_abort, "trajectory aborted (Zeno guard) before N*delta");
  }
  const double w = 1.0 / static_cast<double>(n);
  std::vector<Atom> atoms;
  atoms.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    atoms.push_back(Atom{traj.at(sc.flow(), std::min(horizon, delta * static_cast<double>(k))), w});
  }
  return with_atoms(std::move(atoms));
}

/// n equally weighted atoms on {r = radius} at angles theta0 + (theta1 - theta0)
/// * (k + offset) / n, k = 0..n-1; offset 0.5 gives midpoints, 1 gives the
/// right endpoints.
inline DiscreteMeasure uniform_arc_measure(double radius, double theta0, double theta1, std::size_t n,
                                           double offset = 0.5) {
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    pts.push_back(Point::polar(radius, theta0 + (theta1 - theta0) * (static_cast<double>(k) + offset) / static_cast<double>(n)));
  }
  return DiscreteMeasure::uniform(pts);
}

struct SupportReport {
  double max_dist = 0.0;
  bool pass = false;
  std::size_t atoms_checked = 0;
};

/// Largest distance from an atom of weight >= min_weight to the flagged set.
inline SupportReport support_in_omega(const DiscreteMeasure& mu, const OmegaEstimate& omega, double eps,
                                      double min_weight = 1e-6) {
  SupportReport r;
  const auto flagged = omega.flagged();
  for (const Atom& a : mu.atoms()) {
    if (a.weight < min_weight) continue;
    ++r.atoms_checked;
    r.max_dist = std::max(r.max_dist, distance_to_set(a.point, flagged));
  }
  r.pass = r.max_dist <= eps;
  return r;
}

/// Total weight of atoms with |s| <= margin and c >= -margin.
inline double mass_near_D(const Scenario& sc, const DiscreteMeasure& mu, double margin) {
  if (!(margin > 0.0)) throw Error(ErrorKind::precondition, "margin must be > 0");
  double m = 0.0;
  for (const Atom& a : mu.atoms()) {
    if (sc.in_D(a.point, margin)) m += a.weight;
  }
  return m;
}

/// Total weight of atoms whose Euclidean norm is within `width` of `radius`.
inline double mass_in_band(const DiscreteMeasure& mu, double radius, double width) {
  double m = 0.0;
  for (const Atom& a : mu.atoms()) {
    const auto e = a.point.embed();
    double n2 = 0.0;
    for (std::size_t i = 0; i < a.point.dim(); ++i) n2 += e[i] * e[i];
    if (std::fabs(std::sqrt(n2) - radius) <= width) m += a.weight;
  }
  return m;
}

/// Drops atoms on D and renormalizes.
inline DiscreteMeasure without_D_atoms(const Scenario& sc, const DiscreteMeasure& mu) {
  std::vector<Atom> kept;
  for (const Atom& a : mu.atoms()) {
    if (!sc.in_D(a.point)) kept.push_back(a);
  }
  return DiscreteMeasure(std::move(kept));
}

struct QuotientAtom {
  QuotientPoint point;
  double weight = 0.0;
};

struct QuotientMeasure {
  std::vector<QuotientAtom> atoms;
};

/// h_* mu with h = pi restricted off D.
inline QuotientMeasure push_to_quotient(const QuotientSpace& q, const DiscreteMeasure& mu, std::size_t threads = 1) {
  QuotientMeasure out;
  out.atoms.resize(mu.size());
  parallel_for(mu.size(), threads, [&](std::size_t i) {
    const Atom& a = mu.atoms()[i];
    if (q.scenario().in_D(a.point)) {
      throw Error(ErrorKind::ill_posed, "atom lies on D, where the projection is not injective");
    }
    out.atoms[i] = QuotientAtom{q.project(a.point), a.weight};
  });
  return out;
}

/// (h^-1)_* nu: each class goes to its off-D representative.
inline DiscreteMeasure lift_from_quotient(const QuotientMeasure& nu) {
  std::vector<Atom> atoms;
  atoms.reserve(nu.atoms.size());
  for (const QuotientAtom& a : nu.atoms) {
    if (!a.point.cls.canonical_off_D) {
      throw Error(ErrorKind::ill_posed, "quotient atom has no representative off D");
    }
    atoms.push_back(Atom{a.point.canonical(), a.weight});
  }
  return with_atoms(std::move(atoms));
}

/// Invariance defect of a quotient measure under psi_t, binned by canonical
/// representatives.
inline DefectReport quotient_invariance_defect(const QuotientSpace& q, const QuotientMeasure& nu, double t,
                                               const Partition& p, std::size_t threads = 1) {
  std::vector<Atom> before(nu.atoms.size());
  std::vector<Atom> after(nu.atoms.size());
  parallel_for(nu.atoms.size(), threads, [&](std::size_t i) {
    const QuotientAtom& a = nu.atoms[i];
    before[i] = Atom{a.point.canonical(), a.weight};
    after[i] = Atom{t == 0.0 ? a.point.canonical() : q.psi(a.point, t).canonical(), a.weight};
  });
  const auto tv = tv_on_partition(with_atoms(std::move(after)), with_atoms(std::move(before)), p);
  return DefectReport{t, tv.tv, p.name(), tv.worst_cell};
}

}  // namespace ifs
