// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ifs/builtin.hpp"
#include "ifs/ifs.hpp"

using namespace ifs;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Check {
  bool ok = true;
  std::ostringstream msg;
  void require(bool cond, const std::string& what) {
    if (!cond) ok = false;
    msg << (msg.tellp() > 0 ? "; " : "") << what << (cond ? "" : " [violated]");
  }
  Outcome done() { return {ok, msg.str()}; }
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

int failures = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0.0 && secs > budget_s) {
    out.pass = false;
    out.detail += "; runtime " + num(secs) + " s exceeds " + num(budget_s) + " s";
  }
  if (!out.pass) ++failures;
  std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << out.detail << " ("
            << num(secs) << " s)" << std::endl;
}

int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RecurrenceParams full_params(double horizon) {
  RecurrenceParams p;
  p.eps_ball = 0.01;
  p.t_min = 10.0;
  p.horizon = horizon;
  p.sample_step = 1e-3;
  return p;
}

// Grid cell size at r = 1: the diagonal across one radial and one angular
// step. Every "cell" tolerance below uses this one length.
double cell_at_unit_radius(const Scenario& sc, const GridSpec& g) { return std::hypot(g.spacing(sc, 0), g.spacing(sc, 1)); }

double to_unit_arc(const Point& x, double th0, double th1) {
  const Point n = x.normalized();
  double th = n[1];
  if (th0 >= pi && th < 1e-12) th = 2.0 * pi;  // the arc endpoint 2pi is stored as 0
  const double c = std::clamp(th, th0, th1);
  double best = distance(n, Point::polar(1.0, c));
  best = std::min(best, distance(n, Point::polar(1.0, th0)));
  best = std::min(best, distance(n, Point::polar(1.0, th1)));
  return best;
}

}  // namespace

int main() {
  const std::size_t threads = default_threads();
  std::cout << "acceptance run with " << threads << " worker thread(s)" << std::endl;

  const Scenario ex21 = builtin::example21();
  const Scenario ex22 = builtin::example22();
  const GridSpec grid{{200, 200}};
  std::optional<OmegaEstimate> omega21, omega22;

  criterion(1, "trajectory fidelity", 1.0, [&] {
    Check c;
    const auto traj = build_trajectory(ex21, Point::polar(1.0, pi), 5.5 * pi);
    c.require(traj.events.size() >= 5, std::to_string(traj.events.size()) + " events");
    double dt = 0.0, dhit = 0.0, dimg = 0.0;
    for (std::size_t n = 0; n < 5 && n < traj.events.size(); ++n) {
      const auto& ev = traj.events[n];
      dt = std::max(dt, std::fabs(ev.tau - (n + 1.0) * pi));
      dhit = std::max(dhit, distance(ev.hit, Point::cartesian({1.0, 0.0})));
      const auto e = ev.image.embed();
      dimg = std::max(dimg, std::hypot(e[0] + 1.0, e[1]));
    }
    c.require(dt <= 1e-6, "max |tau_n - n pi| = " + num(dt));
    c.require(dhit <= 1e-8, "max hit error = " + num(dhit));
    c.require(dimg <= 1e-12, "max image error = " + num(dimg));
    return c.done();
  });

  criterion(2, "integrator cross-check", 5.0, [&] {
    Check c;
    for (bool contraction : {false, true}) {
      const Scenario exact = contraction ? ex22 : ex21;
      const Scenario numeric = contraction ? builtin::example22(true) : builtin::example21(true);
      double sup = 0.0;
      for (double r0 : {1.0, 1.25, 1.5, 1.75, 2.0}) {
        const Point x0 = Point::polar(r0, 0.3);
        Point xn = x0;
        const double dt = 0.01;
        const int steps = static_cast<int>(std::floor(2.0 * pi / dt));
        for (int k = 1; k <= steps + 1; ++k) {
          const double t = std::min(k * dt, 2.0 * pi);
          const double prev = (k - 1) * dt;
          xn = numeric.flow().advance(xn, t - prev);
          sup = std::max(sup, distance(exact.flow().advance(x0, t), xn));
        }
      }
      c.require(sup <= 1e-6, std::string(contraction ? "contraction" : "rotation") + " sup error " + num(sup));
    }
    return c.done();
  });

  criterion(3, "omega estimate, example21", 120.0, [&] {
    Check c;
    omega21 = estimate_omega(ex21, grid, full_params(50.0), threads);
    const auto flagged = omega21->flagged();
    const double cell = cell_at_unit_radius(ex21, grid);
    double cover = 0.0;
    for (int k = 0; k <= 1000; ++k) {
      cover = std::max(cover, distance_to_set(Point::polar(1.0, 1.5 * pi + 0.5 * pi * k / 1000.0), flagged));
    }
    double excess = 0.0, rmax = 0.0;
    for (const Point& x : flagged) {
      excess = std::max(excess, to_unit_arc(x, pi, 2.0 * pi));
      rmax = std::max(rmax, x[0]);
    }
    c.require(!flagged.empty(), std::to_string(flagged.size()) + " flagged");
    c.require(cover <= cell, "arc 3pi/2..2pi covered within " + num(cover) + " <= cell " + num(cell));
    c.require(excess <= cell, "flagged within " + num(excess) + " of lower half circle");
    c.require(rmax < 1.0 + 2.0 * cell, "max flagged r = " + num(rmax));
    return c.done();
  });

  criterion(4, "omega estimate, example22", 120.0, [&] {
    Check c;
    omega22 = estimate_omega(ex22, grid, full_params(20.0), threads);
    const auto flagged = omega22->flagged();
    const double cell = cell_at_unit_radius(ex22, grid);
    double cover = 0.0;
    for (int k = 0; k < 2000; ++k) cover = std::max(cover, distance_to_set(Point::polar(1.0, 2.0 * pi * k / 2000.0), flagged));
    double excess = 0.0;
    for (const Point& x : flagged) excess = std::max(excess, std::fabs(x[0] - 1.0));
    c.require(!flagged.empty(), std::to_string(flagged.size()) + " flagged");
    c.require(cover <= cell, "unit circle covered within " + num(cover));
    c.require(excess <= cell, "flagged within " + num(excess) + " of the unit circle");
    return c.done();
  });

  criterion(5, "tau_D profile", 0.0, [&] {
    Check c;
    if (!omega21 || !omega22) throw Error(ErrorKind::precondition, "omega estimates unavailable");
    std::vector<Point> arc;
    for (const Point& x : omega21->flagged()) {
      const double th = x.normalized()[1];
      if (x[0] == 1.0 && th >= pi) arc.push_back(x);
    }
    double err = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < 100 && !arc.empty(); ++k) {
      const Point& x = arc[k * arc.size() / 100];
      err = std::max(err, std::fabs(tau_d(ex21, *omega21, x) - (2.0 * pi - x.normalized()[1])));
      ++used;
    }
    c.require(used == 100, std::to_string(used) + " arc samples");
    c.require(err <= 1e-4, "max |tau_D - (2pi - th)| = " + num(err));
    const auto a21 = audit_hypotheses(ex21, *omega21, 0.01, 400, threads);
    c.require(a21.profile.modulus <= 0.02, "example21 modulus " + num(a21.profile.modulus));
    const auto a22 = audit_hypotheses(ex22, *omega22, 0.01, 400, threads);
    c.require(a22.profile.modulus >= 6.1, "example22 modulus " + num(a22.profile.modulus));
    c.require(a22.profile.discontinuous, "example22 discontinuity flag");
    bool adjacent = false;
    if (a22.profile.worst_pair) {
      const Point& x = a22.profile.samples[a22.profile.worst_pair->first].point;
      const Point& y = a22.profile.samples[a22.profile.worst_pair->second].point;
      const double cell = cell_at_unit_radius(ex22, grid);
      adjacent = distance(x, Point::polar(1.0, 0.0)) <= cell && distance(y, Point::polar(1.0, 0.0)) <= cell;
    }
    c.require(adjacent, "worst pair adjacent to (1,0)");
    return c.done();
  });

  criterion(6, "invariant measure, example21", 30.0, [&] {
    Check c;
    if (!omega21) throw Error(ErrorKind::precondition, "omega estimate unavailable");
    const auto mu = kb_average(ex21, Point::polar(1.0, pi), 0.01, 100000);
    const BoxPartition p(64);
    const double tv = tv_on_partition(mu, uniform_arc_measure(1.0, pi, 2.0 * pi, 100000), p).tv;
    c.require(tv <= 0.05, "TV to uniform arc " + num(tv));
    for (double t : {0.37, 1.0, pi}) {
      const double d = invariance_defect(ex21, mu, t, p, threads).tv_defect;
      c.require(d <= 0.1, "defect(" + num(t) + ") " + num(d));
    }
    const double near = mass_near_D(ex21, mu, 1e-3);
    c.require(near <= 0.01, "mass near D " + num(near));
    const auto sup = support_in_omega(mu, *omega21, 0.02);
    c.require(sup.pass, "support max distance " + num(sup.max_dist));
    return c.done();
  });

  criterion(7, "non-existence evidence, example22", 5.0, [&] {
    Check c;
    const auto mu = uniform_arc_measure(1.0, 0.0, 2.0 * pi, 1024, 1.0);
    const double d = invariance_defect(ex22, mu, 2.0 * pi, RadialPartition(1.001), threads).tv_defect;
    c.require(d >= 0.99, "candidate defect at 2pi " + num(d));
    return c.done();
  });

  criterion(8, "conjugacy", 30.0, [&] {
    Check c;
    if (!omega21) throw Error(ErrorKind::precondition, "omega estimate unavailable");
    const QuotientSpace q(ex21);
    const GluingGraph g(q, 200);
    const auto samples = omega_samples_off_D(q, *omega21, 100);
    const auto rep = conjugacy_residual(q, g, samples, {0.1, 1.0, 2.5}, threads);
    c.require(rep.samples == 100, std::to_string(rep.samples) + " samples");
    c.require(rep.residual <= 1e-4, "example21 residual " + num(rep.residual));

    const Scenario bad = builtin::corrupted_example21();
    const GridSpec bad_grid{{51, 64}};
    const auto bad_omega = estimate_omega(bad, bad_grid, full_params(50.0), threads);
    const QuotientSpace qb(bad);
    const GluingGraph gb(qb, 200);
    const auto bad_rep = conjugacy_residual(qb, gb, omega_samples_off_D(qb, bad_omega, 100), {0.1, 1.0, 2.5}, threads);
    c.require(bad_rep.residual >= 0.05, "corrupted residual " + num(bad_rep.residual));
    return c.done();
  });

  criterion(9, "forward invariance, example21", 0.0, [&] {
    Check c;
    if (!omega21) throw Error(ErrorKind::precondition, "omega estimate unavailable");
    const auto rep = forward_invariance(ex21, *omega21, {0.5, 1.0, 2.0});
    const double eps = omega21->params.eps_ball;
    c.require(rep.max_to_omega <= 2.0 * eps, "max distance to estimate " + num(rep.max_to_omega));
    std::ostringstream where;
    where << "min distance to D " << num(rep.min_to_D) << " from (" << num(rep.closest_to_D_start[0]) << ", "
          << num(rep.closest_to_D_start.normalized()[1]) << ") at t=" << num(rep.closest_to_D_time);
    c.require(rep.min_to_D > 0.5 * eps, where.str());
    return c.done();
  });

  criterion(10, "property suites", 60.0, [&] {
    Check c;
    const int code = run_command(std::string("\"") + IFS_PROPERTY_TESTS + "\" > /dev/null");
    c.require(code == 0, "property binary exit " + std::to_string(code));
    return c.done();
  });

  criterion(11, "zeno guard and separation", 0.0, [&] {
    Check c;
    const auto traj = build_trajectory(builtin::zeno(), Point::polar(2.0, pi), 10.0);
    c.require(traj.truncation == Truncation::zeno_abort, std::string("truncation ") + to_string(traj.truncation));
    const int code = run_command(std::string("\"") + IFS_CLI_PATH + "\" simulate \"" + IFS_SOURCE_DIR +
                                 "/scenarios/zeno.toml\" --x0 2,pi > /dev/null 2>&1");
    c.require(code == 3, "cli exit " + std::to_string(code));
    for (const Scenario* sc : {&ex21, &ex22}) {
      const auto s = check_separation(*sc, 400);
      c.require(s.pass && s.min_gap >= 1.0, sc->name() + " min_gap " + num(s.min_gap));
    }
    return c.done();
  });

  std::cout << (failures ? std::to_string(failures) + " criterion(s) failed" : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
