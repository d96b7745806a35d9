#pragma once

// Scenario files (TOML). Requires toml++ (vendor/toml.hpp) on the include path.
//
//   name = "example21"
//   chart = "polar2d"                       # or "cartesian"
//   [domain]  lower = [1, 0]   upper = [2, "2*pi"]
//   [flow]    kind = "exact_rotation" | "exact_contraction" | "numeric"
//             field = "0; 1"   step = 1e-3  (numeric only)
//   [impulse] section, constraint, crossing, map, inverse (optional)
//   [knobs]   h, hit_bisection_tol, tau_min, zeno_min_gap, zeno_max_impulses, horizon_default
//   [quotient] glue, glue_inverse          (optional gluing override)
//   [experiments.NAME] ...                  (see Experiment below)
//
// Numbers may be written as constant expressions in strings ("2*pi").
// Unknown keys are errors.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <toml.hpp>

#include "ifs/error.hpp"
#include "ifs/expr.hpp"
#include "ifs/flow.hpp"
#include "ifs/nonwandering.hpp"
#include "ifs/scenario.hpp"

namespace ifs::config {

struct OmegaConfig {
  GridSpec grid;
  RecurrenceParams params;
};

struct TauDConfig {
  double scale = 0.01;
  std::size_t d_samples = 400;
};

struct ArcSpec {
  double radius = 1.0;
  double theta0 = 0.0;
  double theta1 = two_pi;
  std::size_t atoms = 1024;
  double offset = 0.5;
};

struct KbSpec {
  Point x0;
  double delta = 0.01;
  std::size_t n = 1;
};

struct CandidateSpec {
  ArcSpec arc;
  std::vector<double> times;
  double radial = 1.001;
};

struct BandSpec {
  double radius = 1.0;
  double width = 0.05;
};

struct MeasureConfig {
  std::size_t partition = 64;
  std::optional<KbSpec> kb;
  std::vector<double> times;
  std::optional<ArcSpec> reference;
  std::optional<CandidateSpec> candidate;
  std::optional<BandSpec> band;
  double support_eps = 0.02;
  double near_D_margin = 1e-3;
};

struct QuotientConfig {
  std::size_t samples = 100;
  std::vector<double> times{0.1, 1.0, 2.5};
  std::size_t d_samples = 200;
};

/// Expected outcomes: booleans must match exactly, *_max / *_min keys bound
/// the corresponding measured value.
using Expectation = std::variant<bool, double>;

inline const std::set<std::string>& expectation_keys() {
  static const std::set<std::string> keys{
      "tauD_continuous",        "image_in_omega_minus_D", "omega_cap_D_empty",    "separation_pass",
      "forward_invariance",     "support_pass",           "separation_gap_min",   "kb_reference_tv_max",
      "kb_defect_max",          "near_D_mass_max",        "band_mass_min",        "candidate_defect_min",
      "conjugacy_residual_max", "tauD_modulus_max",       "tauD_modulus_min",     "flagged_min",
      "conjugacy_residual_min",
  };
  return keys;
}

struct Experiment {
  std::string name;
  std::size_t separation_samples = 400;
  std::optional<OmegaConfig> omega;
  std::optional<TauDConfig> taud;
  std::optional<MeasureConfig> measure;
  std::optional<QuotientConfig> quotient;
  std::map<std::string, Expectation> expect;
};

struct ScenarioFile {
  std::optional<Scenario> scenario;
  std::map<std::string, Experiment> experiments;
  std::string hash;  // FNV-1a 64 of the file bytes, hex

  const Scenario& get() const { return *scenario; }

  const Experiment& experiment(const std::string& name) const {
    const auto it = experiments.find(name);
    if (it == experiments.end()) throw Error(ErrorKind::schema, "no experiment block named '" + name + "'");
    return it->second;
  }
};

inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

namespace detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& why) {
  throw Error(ErrorKind::schema, path + ": " + why);
}

/// Table view that remembers which keys were read, so leftovers can be
/// reported as unknown.
class Section {
 public:
  Section(const toml::table& t, std::string path) : t_(t), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return t_.contains(key); }

  const toml::node* node(const std::string& key) {
    used_.insert(key);
    return t_.get(key);
  }

  const toml::node& need(const std::string& key) {
    const auto* n = node(key);
    if (!n) fail(path_, "missing key '" + key + "'");
    return *n;
  }

  std::string str(const std::string& key) {
    const auto& n = need(key);
    if (!n.is_string()) fail(sub(key), "expected a string");
    return std::string(*n.value<std::string>());
  }

  std::optional<std::string> opt_str(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return str(key);
  }

  static double as_number(const toml::node& n, const std::string& where) {
    if (n.is_integer() || n.is_floating_point()) return *n.value<double>();
    if (n.is_string()) {
      try {
        return parse_constant(*n.value<std::string>());
      } catch (const Error& e) {
        fail(where, std::string("bad constant expression: ") + e.what());
      }
    }
    fail(where, "expected a number or a constant expression string");
  }

  double num(const std::string& key) { return as_number(need(key), sub(key)); }
  double num(const std::string& key, double def) { return has(key) ? num(key) : def; }

  std::size_t count(const std::string& key, std::size_t def) {
    if (!has(key)) return def;
    const auto& n = need(key);
    if (!n.is_integer() || *n.value<std::int64_t>() < 0) fail(sub(key), "expected a non-negative integer");
    return static_cast<std::size_t>(*n.value<std::int64_t>());
  }

  bool boolean(const std::string& key) {
    const auto& n = need(key);
    if (!n.is_boolean()) fail(sub(key), "expected a boolean");
    return *n.value<bool>();
  }

  std::vector<double> numbers(const std::string& key) {
    const auto& n = need(key);
    const auto* arr = n.as_array();
    if (!arr) fail(sub(key), "expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < arr->size(); ++i) out.push_back(as_number(*arr->get(i), sub(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> def) {
    return has(key) ? numbers(key) : def;
  }

  std::optional<Section> table(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const auto* tb = need(key).as_table();
    if (!tb) fail(sub(key), "expected a table");
    return Section(*tb, sub(key));
  }

  Section need_table(const std::string& key) {
    auto s = table(key);
    if (!s) fail(path_, "missing table '" + key + "'");
    return *s;
  }

  const toml::table& raw() const { return t_; }
  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  /// Throws on keys that were never read.
  void finish() const {
    for (auto&& [k, v] : t_) {
      const std::string key(k.str());
      if (!used_.count(key)) fail(path_.empty() ? "<root>" : path_, "unknown key '" + key + "'");
    }
  }

 private:
  const toml::table& t_;
  std::string path_;
  std::set<std::string> used_;
};

inline Chart parse_chart(const std::string& s, const std::string& where) {
  if (s == "polar2d") return Chart::polar2d;
  if (s == "cartesian") return Chart::cartesian;
  fail(where, "chart must be 'polar2d' or 'cartesian'");
}

inline Crossing parse_crossing(const std::string& s, const std::string& where) {
  if (s == "ascending") return Crossing::ascending;
  if (s == "descending") return Crossing::descending;
  if (s == "any") return Crossing::any;
  fail(where, "crossing must be 'ascending', 'descending' or 'any'");
}

inline Point parse_point(const std::vector<double>& c, Chart chart, const std::string& where) {
  try {
    return Point(chart, std::span<const double>(c));
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

inline ArcSpec parse_arc(Section& s) {
  ArcSpec a;
  a.radius = s.num("radius", a.radius);
  a.theta0 = s.num("theta0", a.theta0);
  a.theta1 = s.num("theta1", a.theta1);
  a.atoms = s.count("atoms", a.atoms);
  a.offset = s.num("offset", a.offset);
  if (a.atoms == 0 || !(a.radius > 0.0)) fail(s.path(), "need atoms >= 1 and radius > 0");
  return a;
}

inline Experiment parse_experiment(Section s, const std::string& name, const Scenario& sc) {
  Experiment ex;
  ex.name = name;
  ex.separation_samples = s.count("separation_samples", ex.separation_samples);
  if (auto o = s.table("omega")) {
    OmegaConfig oc;
    const auto grid = o->numbers("grid");
    if (grid.size() != sc.dim()) fail(o->sub("grid"), "needs one resolution per coordinate");
    for (double g : grid) {
      if (!(g >= 1.0) || g != std::floor(g)) fail(o->sub("grid"), "resolutions must be positive integers");
      oc.grid.resolution.push_back(static_cast<std::size_t>(g));
    }
    oc.params.eps_ball = o->num("eps_ball", oc.params.eps_ball);
    oc.params.t_min = o->num("t_min", oc.params.t_min);
    oc.params.horizon = o->num("horizon", sc.knobs().horizon_default);
    oc.params.sample_step = o->num("sample_step", sc.knobs().h);
    try {
      oc.params.validate();
    } catch (const Error& e) {
      fail(o->path(), e.what());
    }
    o->finish();
    ex.omega = oc;
  }
  if (auto t = s.table("taud")) {
    TauDConfig tc;
    tc.scale = t->num("scale", tc.scale);
    tc.d_samples = t->count("d_samples", tc.d_samples);
    if (!(tc.scale > 0.0)) fail(t->sub("scale"), "must be > 0");
    t->finish();
    ex.taud = tc;
  }
  if (auto m = s.table("measure")) {
    MeasureConfig mc;
    mc.partition = m->count("partition", mc.partition);
    mc.times = m->numbers("times", {});
    mc.support_eps = m->num("support_eps", mc.support_eps);
    mc.near_D_margin = m->num("near_D_margin", mc.near_D_margin);
    if (auto k = m->table("kb")) {
      KbSpec kb;
      kb.x0 = parse_point(k->numbers("x0"), sc.chart(), k->sub("x0"));
      kb.delta = k->num("delta", kb.delta);
      kb.n = k->count("n", 1000);
      if (!(kb.delta > 0.0) || kb.n == 0) fail(k->path(), "need delta > 0 and n >= 1");
      k->finish();
      mc.kb = kb;
    }
    if (auto r = m->table("reference")) {
      mc.reference = parse_arc(*r);
      r->finish();
    }
    if (auto c = m->table("candidate")) {
      CandidateSpec cs;
      cs.times = c->numbers("times", {two_pi});
      cs.radial = c->num("radial", cs.radial);
      cs.arc = parse_arc(*c);
      c->finish();
      mc.candidate = cs;
    }
    if (auto b = m->table("band")) {
      BandSpec bs;
      bs.radius = b->num("radius", bs.radius);
      bs.width = b->num("width", bs.width);
      b->finish();
      mc.band = bs;
    }
    if (mc.partition == 0) fail(m->sub("partition"), "must be >= 1");
    m->finish();
    ex.measure = mc;
  }
  if (auto q = s.table("quotient")) {
    QuotientConfig qc;
    qc.samples = q->count("samples", qc.samples);
    qc.times = q->numbers("times", qc.times);
    qc.d_samples = q->count("d_samples", qc.d_samples);
    q->finish();
    ex.quotient = qc;
  }
  if (auto e = s.table("expect")) {
    for (auto&& [k, v] : e->raw()) {
      const std::string key(k.str());
      if (!expectation_keys().count(key)) fail(e->path(), "unknown expectation '" + key + "'");
      const bool bound = key.ends_with("_max") || key.ends_with("_min");
      if (bound) {
        ex.expect[key] = Section::as_number(v, e->sub(key));
      } else {
        ex.expect[key] = e->boolean(key);
      }
      e->node(key);
    }
    e->finish();
  }
  s.finish();
  return ex;
}

inline ImpulseMap parse_map(Section& s, const std::string& fwd, const std::string& inv, std::size_t dim, Chart chart) {
  ImpulseMap m{parse_field(s.str(fwd), dim, chart), std::nullopt};
  if (auto i = s.opt_str(inv)) m.inverse = parse_field(*i, dim, chart);
  return m;
}

}  // namespace detail

/// Parses scenario text. Expression errors keep their own kind (parse,
/// unknown_symbol, arity); everything structural is a schema error.
inline ScenarioFile parse_scenario(std::string_view text) {
  using detail::Section;
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML syntax error at line " << e.source().begin.line << ": " << e.description();
    throw Error(ErrorKind::schema, msg.str());
  }
  Section top(root, "");
  const std::string name = top.str("name");
  const Chart chart = detail::parse_chart(top.str("chart"), "chart");

  Section dom = top.need_table("domain");
  Box box{dom.numbers("lower"), dom.numbers("upper")};
  dom.finish();
  if (box.lower.size() != box.upper.size() || box.lower.empty()) detail::fail("domain", "lower and upper need equal nonzero length");
  const std::size_t dim = box.lower.size();

  Section fl = top.need_table("flow");
  const std::string kind = fl.str("kind");
  Knobs knobs;
  std::optional<Section> kn = top.table("knobs");
  if (kn) {
    knobs.h = kn->num("h", knobs.h);
    knobs.hit_bisection_tol = kn->num("hit_bisection_tol", knobs.hit_bisection_tol);
    knobs.tau_min = kn->num("tau_min", knobs.tau_min);
    knobs.zeno_min_gap = kn->num("zeno_min_gap", knobs.zeno_min_gap);
    knobs.zeno_max_impulses = kn->count("zeno_max_impulses", knobs.zeno_max_impulses);
    knobs.horizon_default = kn->num("horizon_default", knobs.horizon_default);
    kn->finish();
  }
  std::optional<BaseFlow> flow;
  if (kind == "exact_rotation") {
    flow = BaseFlow::rotation();
  } else if (kind == "exact_contraction") {
    flow = BaseFlow::contraction();
  } else if (kind == "numeric") {
    const double step = fl.num("step", knobs.h);
    flow = BaseFlow::numeric(parse_field(fl.str("field"), dim, chart), step);
  } else {
    detail::fail("flow.kind", "must be 'exact_rotation', 'exact_contraction' or 'numeric'");
  }
  fl.finish();

  Section im = top.need_table("impulse");
  ImpulseSurface surface{parse_scalar(im.str("section"), dim, chart), parse_scalar(im.str("constraint"), dim, chart),
                         detail::parse_crossing(im.opt_str("crossing").value_or("ascending"), "impulse.crossing")};
  ImpulseMap impulse = detail::parse_map(im, "map", "inverse", dim, chart);
  im.finish();

  std::optional<ImpulseMap> glue;
  if (auto q = top.table("quotient")) {
    glue = detail::parse_map(*q, "glue", "glue_inverse", dim, chart);
    q->finish();
  }

  ScenarioFile file;
  file.hash = fnv1a_hex(text);
  file.scenario.emplace(name, chart, box, *flow, surface, impulse, knobs, glue);

  if (auto exps = top.table("experiments")) {
    for (auto&& [k, v] : exps->raw()) {
      const std::string ename(k.str());
      auto sec = exps->table(ename);
      file.experiments.emplace(ename, detail::parse_experiment(*sec, ename, file.get()));
    }
    exps->finish();
  }
  top.finish();
  return file;
}

inline ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::schema, "cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace ifs::config
