#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ifs/builtin.hpp"
#include "ifs/quotient.hpp"

using namespace ifs;

namespace {

constexpr double pi = std::numbers::pi;

void expect_point(const Point& got, const Point& want, double tol) {
  EXPECT_LE(distance(got, want), tol) << "got (" << got[0] << ", " << got.normalized()[1] << ")";
}

Scenario example21_without_inverse() {
  Knobs k;
  k.horizon_default = 50.0;
  return Scenario("no_inverse", Chart::polar2d, builtin::annulus(), BaseFlow::rotation(),
                  builtin::polar_surface("sin(th)", "cos(th)"), builtin::polar_map("(1 + r)/2; pi"), k);
}

}  // namespace

TEST(Class, GluedPair) {
  const auto c = class_of(builtin::example21(), Point::polar(1.0, 0.0));
  ASSERT_EQ(c.members.size(), 2u);
  expect_point(c.members[0], Point::polar(1.0, 0.0), 1e-12);
  expect_point(c.members[1], Point::polar(1.0, pi), 1e-12);
  EXPECT_TRUE(c.canonical_off_D);
  expect_point(c.canonical, Point::polar(1.0, pi), 1e-12);

  const auto d = class_of(builtin::example21(), Point::polar(1.25, pi));
  ASSERT_EQ(d.members.size(), 2u);
  expect_point(d.members[1], Point::polar(1.5, 0.0), 1e-12);
}

TEST(Class, OffDPointIsSingleton) {
  const auto c = class_of(builtin::example21(), Point::polar(1.5, pi / 2));
  ASSERT_EQ(c.members.size(), 1u);
  EXPECT_TRUE(c.canonical_off_D);
}

TEST(Class, PreimageSearchWithoutInverse) {
  const auto sc = example21_without_inverse();
  const auto c = class_of(sc, Point::polar(1.25, pi));
  ASSERT_EQ(c.members.size(), 2u);
  expect_point(c.members[1], Point::polar(1.5, 0.0), 1e-9);
}

TEST(Class, PreimageUnavailableWithEmptySection) {
  const Scenario sc("empty", Chart::polar2d, builtin::annulus(), BaseFlow::rotation(),
                    builtin::polar_surface("r + 5", "1"), builtin::polar_map("r; th"));
  try {
    class_of(sc, Point::polar(1.5, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::preimage_unavailable);
  }
}

TEST(Project, ImpulsePairsShareAClass) {
  const auto sc = builtin::example21();
  const QuotientSpace q(sc);
  EXPECT_TRUE(q.equivalent(q.project(Point::polar(1.0, 0.0)), q.project(Point::polar(1.0, pi))));
  EXPECT_TRUE(q.equivalent(q.project(Point::polar(1.0, 0.0)), q.project(Point::polar(1.0, 2.0 * pi))));
  EXPECT_FALSE(q.equivalent(q.project(Point::polar(1.0, 0.1)), q.project(Point::polar(1.0, pi))));
  for (const Point& d : sample_D(sc, 50)) EXPECT_TRUE(q.equivalent(q.project(d), q.project(sc.impulse(d))));
}

TEST(Distance, ShortcutThroughGluing) {
  const auto sc = builtin::example21();
  const QuotientSpace q(sc);
  const GluingGraph g(q, 200);
  const double d = quotient_distance(g, q.project(Point::polar(1.0, 0.1)), q.project(Point::polar(1.0, pi + 0.1)));
  EXPECT_NEAR(d, 4.0 * std::sin(0.05), 1e-9);
  EXPECT_EQ(quotient_distance(g, q.project(Point::polar(1.0, 0.0)), q.project(Point::polar(1.0, pi))), 0.0);
  // Far from the gluing the quotient distance is the ambient one.
  EXPECT_NEAR(quotient_distance(g, q.project(Point::polar(2.0, pi / 2)), q.project(Point::polar(2.0, pi / 2 + 0.1))),
              4.0 * std::sin(0.05), 1e-12);
}

TEST(Distance, PseudometricAxioms) {
  const auto sc = builtin::example21();
  const QuotientSpace q(sc);
  const GluingGraph g(q, 40);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> r(1.0, 2.0), th(0.0, 2.0 * pi);
  for (int k = 0; k < 200; ++k) {
    const auto a = q.project(Point::polar(r(rng), th(rng)));
    const auto b = q.project(Point::polar(r(rng), th(rng)));
    const auto c = q.project(Point::polar(r(rng), th(rng)));
    const double ab = quotient_distance(g, a, b);
    EXPECT_EQ(quotient_distance(g, a, a), 0.0);
    EXPECT_NEAR(ab, quotient_distance(g, b, a), 1e-12);
    EXPECT_LE(quotient_distance(g, a, c), ab + quotient_distance(g, b, c) + 1e-12);
    EXPECT_GT(ab, 0.0);
  }
}

TEST(Psi, Examples) {
  const auto sc = builtin::example21();
  const QuotientSpace q(sc);
  EXPECT_TRUE(q.equivalent(q.psi(q.project(Point::polar(1.5, 1.5 * pi)), pi / 2), q.project(Point::polar(1.5, 0.0))));
  EXPECT_TRUE(q.equivalent(q.psi(q.project(Point::polar(1.0, pi)), pi), q.project(Point::polar(1.0, pi))));
  const auto a = q.project(Point::polar(1.3, 2.0));
  EXPECT_TRUE(q.equivalent(q.psi(a, 0.0), a));
}

TEST(Psi, Semigroup) {
  const auto sc = builtin::example21();
  const QuotientSpace q(sc);
  const GluingGraph g(q, 40);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> r(1.0, 2.0), th(0.0, 2.0 * pi), t(0.0, 5.0);
  for (int k = 0; k < 30; ++k) {
    const auto a = q.project(Point::polar(r(rng), th(rng)));
    const double s = t(rng), u = t(rng);
    EXPECT_LE(quotient_distance(g, q.psi(q.psi(a, s), u), q.psi(a, s + u)), 1e-6);
  }
}

TEST(Psi, IllPosedWithoutOffDRepresentative) {
  const Scenario sc("fixed", Chart::polar2d, builtin::annulus(), BaseFlow::rotation(),
                    builtin::polar_surface("sin(th)", "cos(th)"), builtin::polar_map("r; 0", "r; 0"));
  const QuotientSpace q(sc);
  const auto a = q.project(Point::polar(1.5, 0.0));
  EXPECT_FALSE(a.cls.canonical_off_D);
  try {
    q.psi(a, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ill_posed);
  }
}

TEST(Conjugacy, Example21AndCorruptedControl) {
  const auto sc = builtin::example21();
  const QuotientSpace q(sc);
  const GluingGraph g(q, 100);
  std::vector<Point> samples;
  for (int k = 1; k < 20; ++k) samples.push_back(Point::polar(1.0, pi + pi * k / 20.0));
  EXPECT_LE(conjugacy_residual(q, g, samples, {0.1, 1.0, 2.5}, 1).residual, 1e-4);

  const auto bad = builtin::corrupted_example21();
  const QuotientSpace qb(bad);
  const GluingGraph gb(qb, 100);
  EXPECT_GE(conjugacy_residual(qb, gb, {Point::polar(1.2, 1.5 * pi)}, {2.0}, 1).residual, 0.05);
}
