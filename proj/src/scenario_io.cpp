#include "evade/scenario_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

namespace evade {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void error(const std::string& path, const std::string& what) {
  throw ScenarioError(path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) error(path.empty() ? "document" : path, "expected an object");
  for (const auto& [k, _] : obj.items()) {
    bool known = false;
    for (const char* allowed : keys) known = known || k == allowed;
    if (!known) error(join(path, k), "unknown key");
  }
}

// SI unit expected for a field; an empty string means dimensionless.
bool unit_matches(const std::string& got, const std::string& want) {
  if (got == want) return true;
  if (want == "m/s^2") return got == "m/s2" || got == "m/s\xc2\xb2";
  if (want == "m/s^3") return got == "m/s3" || got == "m/s\xc2\xb3";
  return false;
}

double to_number(const json& v, const std::string& path, const std::string& unit) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) error(path, "expected a number");
  const auto text = v.get<std::string>();
  std::istringstream in(text);
  double value = 0.0;
  std::string suffix;
  if (!(in >> value)) error(path, "expected a number, got '" + text + "'");
  in >> suffix;
  std::string rest;
  if (in >> rest) error(path, "trailing text in '" + text + "'");
  if (suffix.empty()) return value;
  if (unit.empty()) error(path, "unexpected unit '" + suffix + "' on a dimensionless value");
  if (!unit_matches(suffix, unit)) {
    error(path, "non-SI unit '" + suffix + "' (expected " + unit + ")");
  }
  return value;
}

void read(const json& obj, const std::string& path, const char* key, const std::string& unit,
          double& out) {
  if (obj.contains(key)) out = to_number(obj.at(key), join(path, key), unit);
}

void read(const json& obj, const std::string& path, const char* key, const std::string& unit,
          std::optional<double>& out) {
  if (obj.contains(key)) out = to_number(obj.at(key), join(path, key), unit);
}

void read(const json& obj, const std::string& path, const char* key, bool& out) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_boolean()) error(join(path, key), "expected true or false");
  out = obj.at(key).get<bool>();
}

double required(const json& obj, const std::string& path, const char* key, const std::string& unit) {
  if (!obj.contains(key)) error(join(path, key), "missing");
  return to_number(obj.at(key), join(path, key), unit);
}

const json& section(const json& obj, const char* key) {
  static const json empty = json::object();
  return obj.contains(key) ? obj.at(key) : empty;
}

void merge_into(json& base, const json& over) {
  for (const auto& [k, v] : over.items()) {
    if (v.is_object() && base.contains(k) && base[k].is_object()) {
      merge_into(base[k], v);
    } else {
      base[k] = v;
    }
  }
}

json parse_json(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(where + ": " + e.what());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json resolve_includes(json doc, const fs::path& base_dir, int depth) {
  if (!doc.is_object() || !doc.contains("include")) return doc;
  if (depth > 8) error("include", "nesting too deep");
  if (!doc["include"].is_string()) error("include", "expected a file name");
  const fs::path file = base_dir / doc["include"].get<std::string>();
  json base = resolve_includes(parse_json(read_file(file), file.string()), file.parent_path(),
                               depth + 1);
  doc.erase("include");
  if (!base.is_object()) error("include", file.string() + " is not an object");
  merge_into(base, doc);
  return base;
}

EgoGeometry parse_geometry(const json& j, const std::string& path) {
  only_keys(j, path, {"width", "front", "rear", "vy_max"});
  EgoGeometry g;
  read(j, path, "width", "m", g.width);
  read(j, path, "front", "m", g.front);
  read(j, path, "rear", "m", g.rear);
  read(j, path, "vy_max", "m/s", g.vy_max);
  return g;
}

BrakingParams parse_braking(const json& j, const std::string& path) {
  only_keys(j, path, {"tau1", "tau2", "t_driver", "a_trigger", "a_max_cap", "g", "clamp_to_adhesion"});
  BrakingParams b;
  read(j, path, "tau1", "s", b.tau1);
  read(j, path, "tau2", "s", b.tau2);
  read(j, path, "t_driver", "s", b.t_driver);
  read(j, path, "a_trigger", "m/s^2", b.a_trigger);
  read(j, path, "a_max_cap", "m/s^2", b.a_max_cap);
  read(j, path, "g", "m/s^2", b.g);
  read(j, path, "clamp_to_adhesion", b.clamp_to_adhesion);
  return b;
}

void parse_gate(const json& j, const std::string& path, std::optional<double>& gap,
                std::optional<double>& time) {
  only_keys(j, path, {"gap", "time"});
  read(j, path, "gap", "m", gap);
  read(j, path, "time", "s", time);
  if (gap && time) error(path, "give either gap or time, not both");
}

ObstacleSpec parse_obstacle(const json& j, const std::string& path) {
  only_keys(j, path, {"kind", "footprint", "x0", "y0", "v", "a", "lateral_v", "trigger",
                      "visible_from"});
  ObstacleSpec o;
  if (j.contains("kind")) {
    if (!j["kind"].is_string()) error(join(path, "kind"), "expected a string");
    o.kind = j["kind"].get<std::string>();
  }
  if (!j.contains("footprint")) error(join(path, "footprint"), "missing");
  const std::string fp = join(path, "footprint");
  only_keys(j["footprint"], fp, {"length", "width"});
  o.length = required(j["footprint"], fp, "length", "m");
  o.width = required(j["footprint"], fp, "width", "m");
  o.x0 = required(j, path, "x0", "m");
  read(j, path, "y0", "m", o.y0);
  o.v = required(j, path, "v", "m/s");
  read(j, path, "a", "m/s^2", o.a);
  read(j, path, "lateral_v", "m/s", o.lateral_v);
  if (j.contains("trigger")) parse_gate(j["trigger"], join(path, "trigger"), o.trigger_gap, o.trigger_time);
  if (j.contains("visible_from")) {
    parse_gate(j["visible_from"], join(path, "visible_from"), o.visible_gap, o.visible_time);
  }
  return o;
}

ScenarioSpec from_json(const json& doc) {
  if (doc.is_null()) error("ego", "missing");
  only_keys(doc, "", {"name", "ego", "road", "risk", "planner", "sim", "obstacles"});
  ScenarioSpec s;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) error("name", "expected a string");
    s.name = doc["name"].get<std::string>();
  }

  if (!doc.contains("ego")) error("ego", "missing");
  const json& ego = doc["ego"];
  only_keys(ego, "ego", {"v0", "y0", "geometry", "braking"});
  s.ego.v0 = required(ego, "ego", "v0", "m/s");
  read(ego, "ego", "y0", "m", s.ego.y0);
  s.ego.geometry = parse_geometry(section(ego, "geometry"), "ego.geometry");
  s.ego.braking = parse_braking(section(ego, "braking"), "ego.braking");

  const json& road = section(doc, "road");
  only_keys(road, "road", {"lane_width", "mu", "evade_direction"});
  read(road, "road", "lane_width", "m", s.road.lane_width);
  read(road, "road", "mu", "", s.road.mu);
  if (road.contains("evade_direction")) {
    const double d = to_number(road["evade_direction"], "road.evade_direction", "");
    if (d != 1.0 && d != -1.0) error("road.evade_direction", "must be +1 or -1");
    s.road.evade_direction = static_cast<int>(d);
  }

  const json& risk = section(doc, "risk");
  only_keys(risk, "risk", {"ttc_warn_inv", "ttc_steer_inv"});
  read(risk, "risk", "ttc_warn_inv", "1/s", s.risk.ttc_warn_inv);
  read(risk, "risk", "ttc_steer_inv", "1/s", s.risk.ttc_steer_inv);

  const json& pl = section(doc, "planner");
  only_keys(pl, "planner", {"ts", "delta_y", "merge_margin", "kappa", "weights", "jerk_max",
                            "ay_fraction", "settle_at_end"});
  read(pl, "planner", "ts", "s", s.planner.ts);
  read(pl, "planner", "delta_y", "m", s.planner.delta_y);
  read(pl, "planner", "merge_margin", "s", s.planner.merge_margin);
  read(pl, "planner", "kappa", "", s.planner.kappa);
  read(pl, "planner", "jerk_max", "m/s^3", s.planner.j_max);
  read(pl, "planner", "ay_fraction", "", s.planner.ay_fraction);
  read(pl, "planner", "settle_at_end", s.planner.settle_at_end);
  const json& w = section(pl, "weights");
  only_keys(w, "planner.weights", {"p", "q", "r"});
  read(w, "planner.weights", "p", "", s.planner.weights.p);
  read(w, "planner.weights", "q", "", s.planner.weights.q);
  read(w, "planner.weights", "r", "", s.planner.weights.r);

  const json& sim = section(doc, "sim");
  only_keys(sim, "sim", {"dt", "t_max", "settle_time", "system_enabled", "driver_takeover_time"});
  read(sim, "sim", "dt", "s", s.sim.dt);
  read(sim, "sim", "t_max", "s", s.sim.t_max);
  read(sim, "sim", "settle_time", "s", s.sim.settle_time);
  read(sim, "sim", "system_enabled", s.sim.system_enabled);
  read(sim, "sim", "driver_takeover_time", "s", s.sim.driver_takeover_time);

  if (!doc.contains("obstacles")) error("obstacles", "missing");
  if (!doc["obstacles"].is_array()) error("obstacles", "expected a list");
  for (size_t i = 0; i < doc["obstacles"].size(); ++i) {
    s.obstacles.push_back(parse_obstacle(doc["obstacles"][i], "obstacles[" + std::to_string(i) + "]"));
  }

  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
  return s;
}

json gate_json(const std::optional<double>& gap, const std::optional<double>& time) {
  json j = json::object();
  if (gap) j["gap"] = *gap;
  if (time) j["time"] = *time;
  return j;
}

// Rounds to the printed precision so that JSON output carries 6 significant digits.
json num6(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::strtod(format_number(v).c_str(), nullptr);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << content;
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::string cell(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

void RunConfig::validate(const ScenarioSpec& spec) const {
  const double d = dt.value_or(spec.sim.dt);
  const double t = ts.value_or(spec.planner.ts);
  if (!(d > 0.0)) throw ScenarioError("dt: must be > 0");
  if (!(t > 0.0)) throw ScenarioError("ts: must be > 0");
  const double ratio = t / d;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio) || std::round(ratio) < 1.0) {
    throw ScenarioError("dt: must divide ts");
  }
}

ScenarioSpec parse_scenario(const std::string& text, const fs::path& base_dir) {
  std::string trimmed = text;
  trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
  if (trimmed.empty()) error("ego", "missing");
  json doc = parse_json(text, "document");
  if (!doc.is_object()) error("document", "expected an object");
  doc = resolve_includes(std::move(doc), base_dir.empty() ? fs::current_path() : base_dir, 0);
  return from_json(doc);
}

ScenarioSpec load_scenario(const fs::path& path) {
  ScenarioSpec s = parse_scenario(read_file(path), path.parent_path());
  if (s.name.empty()) s.name = path.stem().string();
  return s;
}

std::string serialize_scenario(const ScenarioSpec& s) {
  json j;
  j["name"] = s.name;
  const auto& g = s.ego.geometry;
  const auto& b = s.ego.braking;
  j["ego"] = {{"v0", s.ego.v0},
              {"y0", s.ego.y0},
              {"geometry", {{"width", g.width}, {"front", g.front}, {"rear", g.rear}, {"vy_max", g.vy_max}}},
              {"braking",
               {{"tau1", b.tau1},
                {"tau2", b.tau2},
                {"t_driver", b.t_driver},
                {"a_trigger", b.a_trigger},
                {"a_max_cap", b.a_max_cap},
                {"g", b.g},
                {"clamp_to_adhesion", b.clamp_to_adhesion}}}};
  j["road"] = {{"lane_width", s.road.lane_width},
               {"mu", s.road.mu},
               {"evade_direction", s.road.evade_direction}};
  j["risk"] = {{"ttc_warn_inv", s.risk.ttc_warn_inv}, {"ttc_steer_inv", s.risk.ttc_steer_inv}};
  j["planner"] = {{"ts", s.planner.ts},
                  {"delta_y", s.planner.delta_y},
                  {"merge_margin", s.planner.merge_margin},
                  {"kappa", s.planner.kappa},
                  {"weights", {{"p", s.planner.weights.p}, {"q", s.planner.weights.q}, {"r", s.planner.weights.r}}},
                  {"jerk_max", s.planner.j_max},
                  {"ay_fraction", s.planner.ay_fraction},
                  {"settle_at_end", s.planner.settle_at_end}};
  j["sim"] = {{"dt", s.sim.dt},
              {"t_max", s.sim.t_max},
              {"settle_time", s.sim.settle_time},
              {"system_enabled", s.sim.system_enabled}};
  if (s.sim.driver_takeover_time) j["sim"]["driver_takeover_time"] = *s.sim.driver_takeover_time;
  j["obstacles"] = json::array();
  for (const auto& o : s.obstacles) {
    json oj = {{"kind", o.kind},
               {"footprint", {{"length", o.length}, {"width", o.width}}},
               {"x0", o.x0},
               {"y0", o.y0},
               {"v", o.v},
               {"a", o.a},
               {"lateral_v", o.lateral_v}};
    if (o.trigger_gap || o.trigger_time) oj["trigger"] = gate_json(o.trigger_gap, o.trigger_time);
    if (o.visible_gap || o.visible_time) oj["visible_from"] = gate_json(o.visible_gap, o.visible_time);
    j["obstacles"].push_back(std::move(oj));
  }
  return j.dump(2) + "\n";
}

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  std::string s = buf;
  if (s == "-0") return "0";
  return s;
}

std::string timeseries_csv(const SimLog& log) {
  std::string out = "t,x,y,v,a,mode,L,L_w,L_b,L_s,ttc_inv,y_plan,vy_plan,ay_plan,jy_plan";
  for (size_t i = 0; i < log.obstacles.size(); ++i) {
    const auto n = std::to_string(i);
    out += ",obs" + n + "_x,obs" + n + "_y,obs" + n + "_v";
  }
  out += "\n";
  for (const auto& r : log.rows) {
    out += format_number(r.t) + "," + format_number(r.x) + "," + format_number(r.y) + "," +
           format_number(r.v) + "," + format_number(r.a) + "," + r.mode + "," + cell(r.gap) + "," +
           cell(r.warn) + "," + cell(r.brake) + "," + cell(r.min) + "," + cell(r.ttc_inv);
    if (r.plan) {
      out += "," + format_number(r.plan->y) + "," + format_number(r.plan->vy) + "," +
             format_number(r.plan->ay) + "," + format_number(r.plan->jy);
    } else {
      out += ",,,,";
    }
    for (const auto& o : r.obstacles) {
      out += "," + format_number(o.x) + "," + format_number(o.y) + "," + format_number(o.v);
    }
    out += "\n";
  }
  return out;
}

std::string envelope_csv(const SimLog& log) {
  std::string out = "step,t,y_min,y_max\n";
  if (!log.plan) return out;
  const auto& env = log.plan->envelope;
  for (int k = 0; k < env.size(); ++k) {
    out += std::to_string(k) + "," + format_number(log.plan->t_start + k * env.ts) + "," +
           format_number(env.y_min[k]) + "," + format_number(env.y_max[k]) + "\n";
  }
  return out;
}

std::string summary_json(const SimLog& log) {
  const SimSummary& s = log.summary;
  json j;
  j["scenario"] = log.scenario;
  j["collision"] = s.collision;
  j["min_gap"] = num6(s.min_gap);
  j["final_gap"] = num6(s.final_gap);
  j["max_abs_ay"] = num6(s.max_abs_ay);
  j["final_v"] = num6(s.final_v);
  j["impact_speed"] = num6(s.impact_speed);
  j["timeline"] = json::array();
  for (const auto& [t, mode] : s.timeline) j["timeline"].push_back({num6(t), mode});
  if (log.plan) {
    const auto& p = *log.plan;
    json pj;
    pj["t_start"] = num6(p.t_start);
    pj["trigger_gap"] = num6(p.trigger_gap);
    pj["status"] = to_string(p.result.status);
    pj["n_obj1"] = p.timing.n_obj1;
    pj["n_obj2"] = p.timing.n_obj2;
    pj["n_end"] = p.timing.n_end;
    pj["t_near"] = num6(p.timing.t_near);
    pj["t_far"] = num6(p.timing.t_far);
    if (p.result.ok()) {
      pj["planned_max_abs_ay"] = num6(p.result.trajectory.max_abs_ay());
      pj["objective"] = num6(p.result.trajectory.objective);
      pj["iterations"] = p.result.trajectory.stats.iterations;
      pj["polished"] = p.result.trajectory.stats.polished;
      pj["executed_envelope_violation"] = num6(p.executed_violation);
    }
    j["plan"] = pj;
  }
  j["planner_failures"] = log.planner_failures;
  return j.dump(2) + "\n";
}

std::string qp_dump_json(const SimLog& log) {
  json j = json::object();
  if (!log.plan || log.plan->problem.n_end == 0) return j.dump(2) + "\n";
  const QpProblem& qp = log.plan->problem;
  auto vec = [](const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num6(v[i]));
    return a;
  };
  auto mat = [&](const Eigen::MatrixXd& m) {
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec(m.row(r).transpose()));
    return a;
  };
  j["n_end"] = qp.n_end;
  j["ts"] = num6(qp.ts);
  j["H"] = mat(qp.H);
  j["F"] = vec(qp.F);
  j["A"] = mat(qp.A);
  j["b"] = vec(qp.b);
  j["B_min"] = vec(qp.B_min);
  j["B_max"] = vec(qp.B_max);
  j["status"] = to_string(log.plan->result.status);
  if (log.plan->result.ok()) j["Y"] = vec(log.plan->result.trajectory.stacked());
  return j.dump(2) + "\n";
}

void emit(const SimLog& log, const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) throw std::runtime_error(config.out_dir.string() + ": " + ec.message());
  if (config.emit.timeseries) write_file(config.out_dir / "timeseries.csv", timeseries_csv(log));
  if (config.emit.envelope) write_file(config.out_dir / "envelope.csv", envelope_csv(log));
  if (config.emit.summary) write_file(config.out_dir / "summary.json", summary_json(log));
  if (config.emit.qp_dump) write_file(config.out_dir / "qp.json", qp_dump_json(log));
}

std::string batch_header() {
  return "scenario,collision,min_gap,final_gap,max_abs_ay,final_v,impact_speed,final_mode,steered\n";
}

std::string batch_row(const std::string& scenario, const SimLog& log) {
  const SimSummary& s = log.summary;
  const std::string mode = s.timeline.empty() ? "" : s.timeline.back().second;
  const bool steered = log.plan && log.plan->result.ok();
  return scenario + "," + (s.collision ? "true" : "false") + "," + format_number(s.min_gap) + "," +
         format_number(s.final_gap) + "," + format_number(s.max_abs_ay) + "," +
         format_number(s.final_v) + "," + format_number(s.impact_speed) + "," + mode + "," +
         (steered ? "true" : "false") + "\n";
}

}  // namespace evade
