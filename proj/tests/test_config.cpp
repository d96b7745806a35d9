#include <gtest/gtest.h>

#include <numbers>
#include <string>

#include "ifs/config.hpp"
#include "ifs/impulse.hpp"

using namespace ifs;

namespace {

constexpr double pi = std::numbers::pi;

const std::string kMinimal = R"toml(
name = "mini"
chart = "polar2d"

[domain]
lower = [1.0, 0.0]
upper = [2.0, "2*pi"]

[flow]
kind = "exact_rotation"

[impulse]
section = "sin(th)"
constraint = "cos(th)"
map = "(1 + r)/2; pi"
)toml";

ErrorKind kind_of(const std::string& text) {
  try {
    config::parse_scenario(text);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::precondition;
}

std::string scenario_path(const std::string& name) { return std::string(IFS_SOURCE_DIR) + "/scenarios/" + name; }

}  // namespace

TEST(Config, ShippedScenariosParse) {
  for (const char* name : {"example21.toml", "example22.toml", "zeno.toml", "corrupted_impulse.toml"}) {
    const auto f = config::load_scenario(scenario_path(name));
    EXPECT_TRUE(f.scenario.has_value()) << name;
    EXPECT_EQ(f.hash.size(), 16u);
    EXPECT_NO_THROW(f.experiment("full")) << name;
  }
}

TEST(Config, Example21Contents) {
  const auto f = config::load_scenario(scenario_path("example21.toml"));
  const auto& sc = f.get();
  EXPECT_EQ(sc.name(), "example21");
  EXPECT_EQ(sc.chart(), Chart::polar2d);
  EXPECT_DOUBLE_EQ(sc.box().upper[1], 2.0 * pi);
  const Point y = sc.impulse(Point::polar(1.0, 0.0));
  EXPECT_EQ(y[0], 1.0);
  EXPECT_DOUBLE_EQ(y[1], pi);

  const auto& ex = f.experiment("full");
  ASSERT_TRUE(ex.omega);
  EXPECT_EQ(ex.omega->grid.resolution, (std::vector<std::size_t>{200, 200}));
  EXPECT_EQ(ex.omega->params.t_min, 10.0);
  ASSERT_TRUE(ex.measure && ex.measure->kb);
  EXPECT_DOUBLE_EQ(ex.measure->kb->x0[1], pi);
  EXPECT_EQ(ex.measure->kb->n, 100000u);
  EXPECT_DOUBLE_EQ(ex.measure->times.back(), pi);
  EXPECT_EQ(std::get<bool>(ex.expect.at("tauD_continuous")), true);
  EXPECT_EQ(std::get<double>(ex.expect.at("kb_defect_max")), 0.1);
}

TEST(Config, MinimalScenarioUsesDefaults) {
  const auto f = config::parse_scenario(kMinimal);
  EXPECT_EQ(f.get().knobs().h, 1e-3);
  EXPECT_TRUE(f.experiments.empty());
  try {
    f.experiment("full");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::schema);
  }
}

TEST(Config, HashTracksBytes) {
  EXPECT_EQ(config::parse_scenario(kMinimal).hash, config::parse_scenario(kMinimal).hash);
  EXPECT_NE(config::parse_scenario(kMinimal).hash, config::parse_scenario(kMinimal + "\n").hash);
  EXPECT_EQ(config::fnv1a_hex(""), "cbf29ce484222325");
}

TEST(Config, Rejections) {
  EXPECT_EQ(kind_of(kMinimal + "colour = 1\n"), ErrorKind::schema);
  EXPECT_EQ(kind_of(kMinimal + "[knobs]\nhh = 1\n"), ErrorKind::schema);
  std::string bad_chart = kMinimal;
  bad_chart.replace(bad_chart.find("polar2d"), 7, "spherical");
  EXPECT_EQ(kind_of(bad_chart), ErrorKind::schema);
  std::string bad_map = kMinimal;
  bad_map.replace(bad_map.find("(1 + r)/2; pi"), 13, "(1 + r/2; pi");
  EXPECT_EQ(kind_of(bad_map), ErrorKind::parse);
  std::string unknown = kMinimal;
  unknown.replace(unknown.find("sin(th)"), 7, "sin(x1)");
  EXPECT_EQ(kind_of(unknown), ErrorKind::unknown_symbol);
  EXPECT_EQ(kind_of("name = \"x\"\nchart = "), ErrorKind::schema);
  EXPECT_EQ(kind_of(kMinimal + "[experiments.e.expect]\nnot_a_check = true\n"), ErrorKind::schema);
  EXPECT_EQ(kind_of(kMinimal + "[experiments.e.omega]\ngrid = [10]\n"), ErrorKind::schema);
}
