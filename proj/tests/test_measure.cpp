#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ifs/builtin.hpp"
#include "ifs/measure.hpp"

using namespace ifs;

namespace {

constexpr double pi = std::numbers::pi;

}  // namespace

TEST(Measure, NormalizesAndValidates) {
  const DiscreteMeasure mu({Atom{Point::polar(1.0, 0.0), 2.0}, Atom{Point::polar(1.5, 1.0), 6.0}});
  EXPECT_DOUBLE_EQ(mu.atoms()[0].weight, 0.25);
  EXPECT_DOUBLE_EQ(mu.total_mass(), 1.0);
  EXPECT_THROW(DiscreteMeasure({Atom{Point::polar(1.0, 0.0), 0.0}}), Error);
  EXPECT_THROW(DiscreteMeasure(std::vector<Atom>{}), Error);
}

TEST(Pushforward, IdentityAndRotation) {
  const auto mu = uniform_arc_measure(1.5, 0.0, pi, 16);
  const auto same = pushforward([](const Point& x) { return x; }, mu);
  ASSERT_EQ(same.size(), mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    EXPECT_EQ(same.atoms()[i].point, mu.atoms()[i].point);
    EXPECT_EQ(same.atoms()[i].weight, mu.atoms()[i].weight);
  }
  const auto rot = pushforward([](const Point& x) { return base_flow(BaseFlow::rotation(), x, 0.5); }, mu, 2);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    EXPECT_NEAR(rot.atoms()[i].point[1], mu.atoms()[i].point[1] + 0.5, 1e-15);
    EXPECT_EQ(rot.atoms()[i].weight, mu.atoms()[i].weight);
  }
  EXPECT_NEAR(rot.total_mass(), 1.0, 1e-12);
}

TEST(Pushforward, PartialMapReportsAtoms) {
  const DiscreteMeasure mu = DiscreteMeasure::uniform({Point::polar(1.2, 0.0), Point::polar(1.5, 0.0), Point::polar(1.9, 0.0)});
  try {
    pushforward(
        [](const Point& x) {
          if (x[0] > 1.3) throw Error(ErrorKind::domain, "outside");
          return x;
        },
        mu);
    FAIL();
  } catch (const PartialMapError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::partial_map);
    EXPECT_EQ(e.atoms(), (std::vector<std::size_t>{1, 2}));
  }
}

TEST(Partition, BoxCellsAndOutside) {
  const BoxPartition p(4);
  EXPECT_EQ(p.cells(), 17u);
  EXPECT_EQ(p.cell(Point::cartesian({-1.9, -1.9})), 0u);
  EXPECT_EQ(p.cell(Point::cartesian({1.9, -1.9})), 12u);
  EXPECT_EQ(p.cell(Point::cartesian({2.0, 2.0})), 15u);
  EXPECT_EQ(p.cell(Point::cartesian({2.5, 0.0})), 16u);
  EXPECT_EQ(p.cell(Point::polar(1.0, pi)), p.cell(Point::cartesian({-1.0, 0.0})));
  const RadialPartition radial(1.001);
  EXPECT_EQ(radial.cell(Point::polar(1.0, 2.0)), 0u);
  EXPECT_EQ(radial.cell(Point::polar(1.01, 2.0)), 1u);
  EXPECT_EQ(radial.name(), "radial<=1.001");
}

TEST(TotalVariation, Extremes) {
  const BoxPartition p(8);
  const auto a = DiscreteMeasure::dirac(Point::polar(1.0, 0.0));
  const auto b = DiscreteMeasure::dirac(Point::polar(1.0, pi));
  EXPECT_EQ(tv_on_partition(a, a, p).tv, 0.0);
  EXPECT_DOUBLE_EQ(tv_on_partition(a, b, p).tv, 1.0);
  const auto half = DiscreteMeasure::uniform({Point::polar(1.0, 0.0), Point::polar(1.0, pi)});
  EXPECT_DOUBLE_EQ(tv_on_partition(a, half, p).tv, 0.5);
}

TEST(KrylovBogolyubov, SingleSampleIsDirac) {
  const Point x0 = Point::polar(1.0, pi);
  const auto mu = kb_average(builtin::example21(), x0, 0.01, 1);
  ASSERT_EQ(mu.size(), 1u);
  EXPECT_EQ(mu.atoms()[0].point, x0);
  EXPECT_EQ(mu.atoms()[0].weight, 1.0);
}

TEST(KrylovBogolyubov, ZenoScenarioAborts) {
  try {
    kb_average(builtin::zeno(), Point::polar(2.0, pi), 0.01, 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::zeno_abort);
  }
}

TEST(KrylovBogolyubov, Example21ApproachesArcMeasure) {
  const auto sc = builtin::example21();
  const auto mu = kb_average(sc, Point::polar(1.0, pi), 0.01, 20000);
  const BoxPartition p(64);
  EXPECT_LE(tv_on_partition(mu, uniform_arc_measure(1.0, pi, 2.0 * pi, 20000), p).tv, 0.05);
  EXPECT_LE(invariance_defect(sc, mu, 1.0, p).tv_defect, 0.1);
  EXPECT_LE(mass_near_D(sc, mu, 1e-3), 0.01);
}

TEST(KrylovBogolyubov, Example22MassConcentratesNearCircle) {
  const auto mu = kb_average(builtin::example22(), Point::polar(1.0, pi / 2), 0.01, 2000);
  EXPECT_NEAR(mass_in_band(mu, 1.0, 0.05), 0.85, 0.01);
}

TEST(Defect, ZeroAtTimeZero) {
  const auto mu = uniform_arc_measure(1.3, 0.0, 2.0 * pi, 100);
  const auto rep = invariance_defect(builtin::example21(), mu, 0.0, BoxPartition(16));
  EXPECT_EQ(rep.tv_defect, 0.0);
  EXPECT_EQ(rep.partition, "box16x16");
  EXPECT_THROW(invariance_defect(builtin::example21(), mu, -1.0, BoxPartition(16)), Error);
}

TEST(Defect, Example22CandidateIsNotInvariant) {
  const auto mu = uniform_arc_measure(1.0, 0.0, 2.0 * pi, 1024, 1.0);
  EXPECT_GE(invariance_defect(builtin::example22(), mu, 2.0 * pi, RadialPartition(1.001)).tv_defect, 0.99);
}

TEST(Support, FarAtomsFail) {
  const auto sc = builtin::example21();
  RecurrenceParams p;
  p.t_min = 10.0;
  p.horizon = 30.0;
  const auto omega = estimate_omega(sc, GridSpec{{6, 16}}, p, 1);
  const auto on_arc = uniform_arc_measure(1.0, pi, 2.0 * pi, 64);
  EXPECT_LE(support_in_omega(on_arc, omega, 0.25).max_dist, 0.25);
  const DiscreteMeasure mixed({Atom{Point::polar(1.0, 1.5 * pi), 0.5}, Atom{Point::polar(2.0, pi / 2), 0.5}});
  const auto rep = support_in_omega(mixed, omega, 0.25);
  EXPECT_FALSE(rep.pass);
  EXPECT_GT(rep.max_dist, 1.0);
  EXPECT_EQ(rep.atoms_checked, 2u);
}

TEST(NearD, CountsOnlyDAtoms) {
  const auto sc = builtin::example21();
  const DiscreteMeasure mu({Atom{Point::polar(1.5, 0.0), 1.0}, Atom{Point::polar(1.5, pi), 3.0}});
  EXPECT_DOUBLE_EQ(mass_near_D(sc, mu, 1e-3), 0.25);
  const auto off = without_D_atoms(sc, mu);
  ASSERT_EQ(off.size(), 1u);
  EXPECT_EQ(off.atoms()[0].weight, 1.0);
}

TEST(QuotientMeasure, RoundTrip) {
  const auto sc = builtin::example21();
  const QuotientSpace q(sc);
  const auto mu = uniform_arc_measure(1.0, pi, 2.0 * pi, 64);
  const auto back = lift_from_quotient(push_to_quotient(q, mu));
  ASSERT_EQ(back.size(), mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    EXPECT_LE(distance(back.atoms()[i].point, mu.atoms()[i].point), 1e-12);
    EXPECT_EQ(back.atoms()[i].weight, mu.atoms()[i].weight);
  }
}

TEST(QuotientMeasure, AtomOnDIsIllPosed) {
  const auto sc = builtin::example21();
  const QuotientSpace q(sc);
  try {
    push_to_quotient(q, DiscreteMeasure::dirac(Point::polar(1.5, 0.0)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ill_posed);
  }
}

TEST(QuotientMeasure, DefectMatchesAmbient) {
  const auto sc = builtin::example21();
  const QuotientSpace q(sc);
  const auto mu = uniform_arc_measure(1.0, pi, 2.0 * pi, 2000);
  const BoxPartition p(64);
  const auto nu = push_to_quotient(q, mu);
  EXPECT_EQ(quotient_invariance_defect(q, nu, 0.0, p).tv_defect, 0.0);
  EXPECT_NEAR(quotient_invariance_defect(q, nu, 1.0, p).tv_defect, invariance_defect(sc, mu, 1.0, p).tv_defect, 1e-3);
}
