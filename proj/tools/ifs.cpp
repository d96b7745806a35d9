// ifs: command-line front end for scenario files.
//
//   ifs <simulate|omega|taud|measure|quotient|verify> <scenario.toml>
//       [--experiment NAME] [--out DIR] [--threads N]
//
// Exit codes: 0 ok, 1 other runtime error, 2 schema/scenario error,
// 3 Zeno abort, 4 audit mismatch.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ifs/config.hpp"
#include "ifs/ifs.hpp"

namespace {

using nlohmann::json;
using namespace ifs;
using config::Experiment;

constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_schema = 2;
constexpr int exit_zeno = 3;
constexpr int exit_mismatch = 4;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

json num(double v) {
  if (std::isfinite(v)) return v;
  return fmt(v);
}

json point_json(const Point& p) {
  json a = json::array();
  for (double c : p.normalized().coords()) a.push_back(c);
  return a;
}

std::string csv_coords(const Point& p) {
  std::string s;
  const Point n = p.normalized();
  for (std::size_t i = 0; i < n.dim(); ++i) {
    if (i) s += ',';
    s += fmt(n[i]);
  }
  return s;
}

std::string csv_header_coords(std::size_t dim) {
  std::string s;
  for (std::size_t i = 0; i < dim; ++i) {
    if (i) s += ',';
    s += "x" + std::to_string(i + 1);
  }
  return s;
}

struct Options {
  std::string command;
  std::string scenario_path;
  std::string experiment = "full";
  std::string out;
  std::size_t threads = 0;
  std::string x0;
  std::optional<double> horizon;
  double step = 0.01;
};

class Run {
 public:
  Run(const Options& opt, const config::ScenarioFile& file) : opt_(opt), file_(file), sc_(file.get()) {}

  const Scenario& sc() const { return sc_; }
  std::size_t threads() const { return opt_.threads; }
  bool to_stdout() const { return opt_.out.empty(); }

  const Experiment& ex() const { return file_.experiment(opt_.experiment); }

  const OmegaEstimate& omega() {
    if (!omega_) {
      if (!ex().omega) throw Error(ErrorKind::schema, "experiment '" + ex().name + "' has no omega block");
      omega_ = estimate_omega(sc_, ex().omega->grid, ex().omega->params, threads());
    }
    return *omega_;
  }

  json header() const {
    json j;
    j["command"] = opt_.command;
    j["scenario"] = sc_.name();
    j["scenario_hash"] = file_.hash;
    if (opt_.command != "simulate") j["experiment"] = opt_.experiment;
    return j;
  }

  void emit(const std::string& name, const std::string& content) const {
    if (opt_.out.empty()) return;
    std::filesystem::create_directories(opt_.out);
    std::ofstream f(std::filesystem::path(opt_.out) / name, std::ios::binary);
    f << content;
    if (!f) throw Error(ErrorKind::precondition, "cannot write " + name);
  }

  void emit_report(const json& report) const {
    const std::string text = report.dump(2) + "\n";
    if (opt_.out.empty()) {
      std::cout << text;
    } else {
      emit(opt_.command + ".json", text);
    }
  }

  json omega_results() {
    const auto& est = omega();
    json r;
    r["grid"] = est.grid.resolution;
    r["nodes"] = est.nodes.size();
    r["flagged"] = est.flagged_indices().size();
    r["zeno_warnings"] = est.zeno_warnings();
    json p;
    p["eps_ball"] = est.params.eps_ball;
    p["t_min"] = est.params.t_min;
    p["horizon"] = est.params.horizon;
    p["sample_step"] = est.params.sample_step;
    r["params"] = p;
    return r;
  }

  std::string omega_csv() {
    const auto& est = omega();
    std::ostringstream s;
    s << csv_header_coords(sc_.dim()) << ",flagged,first_return_time\n";
    for (std::size_t i = 0; i < est.nodes.size(); ++i) {
      const auto& res = est.results[i];
      s << csv_coords(est.nodes[i]) << ',' << (res.recurrent ? 1 : 0) << ','
        << (res.recurrent ? fmt(res.first_return_time) : std::string()) << '\n';
    }
    return s.str();
  }

  json taud_results(HypothesisAudit& audit_out) {
    const config::TauDConfig tc = ex().taud.value_or(config::TauDConfig{});
    audit_out = audit_hypotheses(sc_, omega(), tc.scale, tc.d_samples, threads());
    const auto& prof = audit_out.profile;
    json r;
    r["tauD_continuous"] = audit_out.tauD_continuous;
    r["image_in_omega_minus_D"] = audit_out.image_in_omega_minus_D;
    r["omega_cap_D_empty"] = audit_out.omega_cap_D_empty;
    r["flagged_on_D"] = audit_out.flagged_on_D;
    r["worst_image_to_omega"] = num(audit_out.worst_image_to_omega);
    r["min_image_to_D"] = num(audit_out.min_image_to_D);
    r["scale"] = prof.scale;
    r["modulus"] = num(prof.modulus);
    r["infinite_pairs"] = prof.infinite_pairs;
    r["samples"] = prof.samples.size();
    if (prof.worst_pair) {
      r["worst_pair"] = json::array({point_json(prof.samples[prof.worst_pair->first].point),
                                     point_json(prof.samples[prof.worst_pair->second].point)});
    }
    return r;
  }

  static std::string taud_csv(const HypothesisAudit& audit, std::size_t dim) {
    std::ostringstream s;
    s << csv_header_coords(dim) << ",tau_D\n";
    for (const auto& smp : audit.profile.samples) s << csv_coords(smp.point) << ',' << fmt(smp.tau) << '\n';
    return s.str();
  }

  json measure_results(std::optional<DiscreteMeasure>& kb_out) {
    if (!ex().measure) throw Error(ErrorKind::schema, "experiment '" + ex().name + "' has no measure block");
    const auto& mc = *ex().measure;
    json r;
    BoxPartition box(mc.partition);
    if (mc.kb) {
      const auto kb = kb_average(sc_, mc.kb->x0, mc.kb->delta, mc.kb->n);
      json k;
      k["atoms"] = kb.size();
      k["total_mass"] = kb.total_mass();
      if (mc.reference) {
        const auto& a = *mc.reference;
        k["reference_tv"] = tv_on_partition(kb, uniform_arc_measure(a.radius, a.theta0, a.theta1, a.atoms, a.offset), box).tv;
      }
      json defects = json::array();
      double worst = 0.0;
      for (double t : mc.times) {
        const auto d = invariance_defect(sc_, kb, t, box, threads());
        worst = std::max(worst, d.tv_defect);
        defects.push_back({{"t", t}, {"tv_defect", d.tv_defect}, {"partition", d.partition}, {"worst_cell", d.worst_cell}});
      }
      k["defects"] = defects;
      k["max_defect"] = worst;
      k["mass_near_D"] = mass_near_D(sc_, kb, mc.near_D_margin);
      if (ex().omega) {
        const auto sup = support_in_omega(kb, omega(), mc.support_eps);
        k["support_max_dist"] = sup.max_dist;
        k["support_pass"] = sup.pass;
      }
      if (mc.band) k["band_mass"] = mass_in_band(kb, mc.band->radius, mc.band->width);
      r["kb"] = k;
      kb_out = kb;
    }
    if (mc.candidate) {
      const auto& c = *mc.candidate;
      const auto mu = uniform_arc_measure(c.arc.radius, c.arc.theta0, c.arc.theta1, c.arc.atoms, c.arc.offset);
      RadialPartition radial(c.radial);
      json defects = json::array();
      double worst = 0.0;
      for (double t : c.times) {
        const auto d = invariance_defect(sc_, mu, t, radial, threads());
        worst = std::max(worst, d.tv_defect);
        defects.push_back({{"t", t}, {"tv_defect", d.tv_defect}, {"partition", d.partition}, {"worst_cell", d.worst_cell}});
      }
      r["candidate"] = {{"atoms", mu.size()}, {"defects", defects}, {"max_defect", worst}};
    }
    return r;
  }

  static std::string measure_csv(const DiscreteMeasure& mu, std::size_t dim) {
    std::ostringstream s;
    s << csv_header_coords(dim) << ",weight\n";
    for (const auto& a : mu.atoms()) s << csv_coords(a.point) << ',' << fmt(a.weight) << '\n';
    return s.str();
  }

  json quotient_results() {
    if (!ex().quotient) throw Error(ErrorKind::schema, "experiment '" + ex().name + "' has no quotient block");
    const auto& qc = *ex().quotient;
    QuotientSpace q(sc_);
    GluingGraph g(q, qc.d_samples);
    const auto samples = omega_samples_off_D(q, omega(), qc.samples);
    const auto rep = conjugacy_residual(q, g, samples, qc.times, threads());
    json r;
    r["residual"] = num(rep.residual);
    r["samples"] = rep.samples;
    r["times"] = rep.times;
    r["graph_atoms"] = g.size();
    r["glue_override"] = sc_.has_glue_override();
    if (rep.worst_point) {
      r["worst_point"] = point_json(*rep.worst_point);
      r["worst_time"] = rep.worst_time;
    }
    json classes = json::array();
    for (const Point& x : omega().flagged()) {
      const auto c = q.class_of(x);
      if (c.members.size() < 2) continue;
      json m = json::array();
      for (const Point& p : c.members) m.push_back(point_json(p));
      classes.push_back({{"members", m}, {"canonical", point_json(c.canonical)}});
    }
    r["classes_on_omega"] = classes;
    return r;
  }

 private:
  const Options& opt_;
  const config::ScenarioFile& file_;
  const Scenario& sc_;
  std::optional<OmegaEstimate> omega_;
};

Point parse_x0(const std::string& text, const Scenario& sc) {
  std::vector<double> c;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      c.push_back(parse_constant(part));
    } catch (const Error& e) {
      throw Error(ErrorKind::schema, "bad --x0 component '" + part + "': " + e.what());
    }
  }
  if (c.size() != sc.dim()) throw Error(ErrorKind::schema, "--x0 needs " + std::to_string(sc.dim()) + " components");
  Point x = Point::unchecked(sc.chart(), c);
  try {
    sc.require_in_box(x);
  } catch (const Error& e) {
    throw Error(ErrorKind::schema, std::string("--x0: ") + e.what());
  }
  return x;
}

int cmd_simulate(const Options& opt, Run& run) {
  const Scenario& sc = run.sc();
  if (opt.x0.empty()) throw Error(ErrorKind::schema, "simulate needs --x0");
  const Point x0 = parse_x0(opt.x0, sc);
  const double horizon = opt.horizon.value_or(sc.knobs().horizon_default);
  if (!(horizon >= 0.0)) throw Error(ErrorKind::schema, "--horizon must be >= 0");
  if (!(opt.step > 0.0)) throw Error(ErrorKind::schema, "--step must be > 0");
  const auto traj = build_trajectory(sc, x0, horizon);

  std::ostringstream s;
  s << "t," << csv_header_coords(sc.dim()) << ",segment_index,is_event\n";
  auto row = [&](double t, const Point& p, std::size_t seg, bool ev) {
    s << fmt(t) << ',' << csv_coords(p) << ',' << seg << ',' << (ev ? 1 : 0) << '\n';
  };
  row(0.0, x0, 0, false);
  for (std::size_t k = 0; k < traj.segments.size(); ++k) {
    const Segment& seg = traj.segments[k];
    const double end = seg.t_start + seg.duration;
    sample_segment(sc.flow(), seg, opt.step, seg.t_start, end, [&](double t, const Point& p) {
      if (t > seg.t_start && t < end) row(t, p, k, false);
      return false;
    });
    if (k < traj.events.size()) {
      const ImpulseEvent& ev = traj.events[k];
      row(ev.tau, ev.hit, k, true);
      row(ev.tau, ev.image, k + 1, true);
    } else if (seg.duration > 0.0) {
      row(end, sc.flow().advance(seg.start, seg.duration), k, false);
    }
  }
  if (opt.out.empty()) {
    std::cout << s.str();
  } else {
    run.emit("trajectory.csv", s.str());
    json rep = run.header();
    rep["x0"] = point_json(x0);
    rep["horizon"] = horizon;
    rep["events"] = traj.events.size();
    rep["truncation"] = to_string(traj.truncation);
    rep["end_time"] = traj.end_time();
    run.emit_report(rep);
  }
  if (traj.truncation == Truncation::zeno_abort) {
    std::cerr << "ifs: truncation = zeno_abort at t = " << fmt(traj.end_time()) << " after " << traj.events.size()
              << " impulses\n";
    return exit_zeno;
  }
  return exit_ok;
}

int cmd_omega(Run& run) {
  json rep = run.header();
  rep["results"] = run.omega_results();
  run.emit("omega.csv", run.omega_csv());
  run.emit_report(rep);
  return exit_ok;
}

int cmd_taud(Run& run) {
  json rep = run.header();
  HypothesisAudit audit;
  rep["results"] = run.taud_results(audit);
  run.emit("taud.csv", Run::taud_csv(audit, run.sc().dim()));
  run.emit_report(rep);
  return exit_ok;
}

int cmd_measure(Run& run) {
  json rep = run.header();
  std::optional<DiscreteMeasure> kb;
  rep["results"] = run.measure_results(kb);
  if (kb) run.emit("measure.csv", Run::measure_csv(*kb, run.sc().dim()));
  run.emit_report(rep);
  return exit_ok;
}

int cmd_quotient(Run& run) {
  json rep = run.header();
  rep["results"] = run.quotient_results();
  run.emit_report(rep);
  return exit_ok;
}

int cmd_verify(Run& run) {
  const Experiment& ex = run.ex();
  json rep = run.header();
  json res;
  std::map<std::string, json> measured;

  const auto sep = check_separation(run.sc(), ex.separation_samples);
  res["separation"] = {{"min_gap", num(sep.min_gap)}, {"pass", sep.pass}, {"samples", sep.samples}};
  measured["separation_pass"] = sep.pass;
  measured["separation_gap_min"] = sep.min_gap;

  if (ex.omega) {
    res["omega"] = run.omega_results();
    measured["flagged_min"] = res["omega"]["flagged"];
    HypothesisAudit audit;
    res["taud"] = run.taud_results(audit);
    for (const char* k : {"tauD_continuous", "image_in_omega_minus_D", "omega_cap_D_empty"}) measured[k] = res["taud"][k];
    measured["tauD_modulus_max"] = audit.profile.modulus;
    measured["tauD_modulus_min"] = audit.profile.modulus;
    const auto fi = forward_invariance(run.sc(), run.omega(), {0.5, 1.0, 2.0});
    res["forward_invariance"] = {{"points", fi.points},
                                 {"max_to_omega", num(fi.max_to_omega)},
                                 {"min_to_D", num(fi.min_to_D)},
                                 {"pass", fi.pass}};
    measured["forward_invariance"] = fi.pass;
  }
  if (ex.measure) {
    std::optional<DiscreteMeasure> kb;
    res["measure"] = run.measure_results(kb);
    const json& m = res["measure"];
    if (m.contains("kb")) {
      const json& k = m["kb"];
      if (k.contains("reference_tv")) measured["kb_reference_tv_max"] = k["reference_tv"];
      measured["kb_defect_max"] = k["max_defect"];
      measured["near_D_mass_max"] = k["mass_near_D"];
      if (k.contains("support_pass")) measured["support_pass"] = k["support_pass"];
      if (k.contains("band_mass")) measured["band_mass_min"] = k["band_mass"];
    }
    if (m.contains("candidate")) measured["candidate_defect_min"] = m["candidate"]["max_defect"];
  }
  if (ex.quotient) {
    res["quotient"] = run.quotient_results();
    measured["conjugacy_residual_max"] = res["quotient"]["residual"];
    measured["conjugacy_residual_min"] = res["quotient"]["residual"];
  }

  bool all = true;
  json verdicts;
  for (const auto& [key, want] : ex.expect) {
    json v;
    const auto it = measured.find(key);
    bool pass = false;
    if (it == measured.end()) {
      v["actual"] = nullptr;
      v["note"] = "not measured by this experiment";
    } else {
      v["actual"] = it->second;
      if (std::holds_alternative<bool>(want)) {
        pass = it->second.is_boolean() && it->second.get<bool>() == std::get<bool>(want);
      } else if (it->second.is_number()) {
        const double a = it->second.get<double>();
        const double w = std::get<double>(want);
        pass = key.ends_with("_max") ? a <= w : a >= w;
      }
    }
    std::visit([&](auto w) { v["expected"] = w; }, want);
    v["pass"] = pass;
    all = all && pass;
    verdicts[key] = v;
  }
  rep["results"] = res;
  rep["verdicts"] = verdicts;
  rep["pass"] = all;
  run.emit_report(rep);
  if (!run.to_stdout()) {
    std::cout << (all ? "verify: all expectations met" : "verify: expectation mismatch") << "\n";
  }
  return all ? exit_ok : exit_mismatch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Impulsive semiflow toolkit"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("scenario", opt.scenario_path, "scenario TOML file")->required();
    sub->add_option("--experiment", opt.experiment, "experiment block name");
    sub->add_option("--out", opt.out, "output directory for reports and CSV files");
    sub->add_option("--threads", opt.threads, "worker threads (default: IFS_THREADS or hardware)");
  };
  auto* sim = app.add_subcommand("simulate", "impulsive trajectory as CSV");
  add_common(sim);
  sim->add_option("--x0", opt.x0, "start point, comma separated (constant expressions allowed)");
  sim->add_option("--horizon", opt.horizon, "final time (default: scenario horizon_default)");
  sim->add_option("--step", opt.step, "sampling step for CSV rows");
  const std::pair<const char*, const char*> commands[] = {
      {"omega", "grid estimate of the non-wandering set"},
      {"taud", "first-impulse-time profile and hypothesis audit"},
      {"measure", "time-averaged measures and invariance defects"},
      {"quotient", "conjugacy residual on the glued space"},
      {"verify", "run an experiment and compare against its expect block"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_schema;
  }
  opt.command = app.get_subcommands().front()->get_name();

  try {
    const auto file = config::load_scenario(opt.scenario_path);
    Run run(opt, file);
    if (opt.command == "simulate") return cmd_simulate(opt, run);
    if (opt.command == "omega") return cmd_omega(run);
    if (opt.command == "taud") return cmd_taud(run);
    if (opt.command == "measure") return cmd_measure(run);
    if (opt.command == "quotient") return cmd_quotient(run);
    return cmd_verify(run);
  } catch (const Error& e) {
    std::cerr << "ifs: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::schema:
      case ErrorKind::scenario_invalid:
      case ErrorKind::parse:
      case ErrorKind::unknown_symbol:
      case ErrorKind::arity:
        return exit_schema;
      case ErrorKind::zeno_abort:
        return exit_zeno;
      default:
        return exit_runtime;
    }
  } catch (const std::exception& e) {
    std::cerr << "ifs: " << e.what() << "\n";
    return exit_runtime;
  }
}
