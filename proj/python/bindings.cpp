#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <stdexcept>
#include <string>

#include "evade/drivable_area.hpp"
#include "evade/lateral_qp.hpp"
#include "evade/risk_decision.hpp"
#include "evade/safety_distance.hpp"
#include "evade/scenario_io.hpp"
#include "evade/simulator.hpp"

namespace py = pybind11;
using namespace evade;

namespace {

ObstacleMotion motion(const std::string& kind, double v_obj, double a_obj) {
  if (kind == "stationary") return ObstacleMotion::stationary();
  if (kind == "moving") return ObstacleMotion::moving(v_obj);
  if (kind == "braking") return ObstacleMotion::braking(v_obj, a_obj);
  throw std::invalid_argument("motion kind must be 'stationary', 'moving' or 'braking'");
}

py::dict summary_dict(const SimLog& log) {
  const auto& s = log.summary;
  py::dict d;
  d["collision"] = s.collision;
  d["min_gap"] = s.min_gap;
  d["final_gap"] = s.final_gap;
  d["max_abs_ay"] = s.max_abs_ay;
  d["final_v"] = s.final_v;
  d["impact_speed"] = s.impact_speed;
  d["timeline"] = s.timeline;
  d["planner_failures"] = log.planner_failures;
  if (log.plan) {
    d["trigger_gap"] = log.plan->trigger_gap;
    d["plan_status"] = to_string(log.plan->result.status);
    d["executed_envelope_violation"] = log.plan->executed_violation;
    d["planned_max_abs_ay"] =
        log.plan->result.ok() ? log.plan->result.trajectory.max_abs_ay() : 0.0;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_evade, m) {
  m.doc() = "Emergency braking and evasive steering: safety distances, planning and simulation";

  py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);

  py::class_<BrakingParams>(m, "BrakingParams")
      .def(py::init<>())
      .def_readwrite("tau1", &BrakingParams::tau1)
      .def_readwrite("tau2", &BrakingParams::tau2)
      .def_readwrite("t_driver", &BrakingParams::t_driver)
      .def_readwrite("a_trigger", &BrakingParams::a_trigger)
      .def_readwrite("a_max_cap", &BrakingParams::a_max_cap)
      .def_readwrite("mu", &BrakingParams::mu)
      .def_readwrite("g", &BrakingParams::g)
      .def_readwrite("clamp_to_adhesion", &BrakingParams::clamp_to_adhesion);

  py::class_<SafetyTriple>(m, "SafetyTriple")
      .def_readonly("warn", &SafetyTriple::warn)
      .def_readonly("brake", &SafetyTriple::brake)
      .def_readonly("min", &SafetyTriple::min)
      .def_readonly("no_conflict", &SafetyTriple::no_conflict)
      .def("__repr__", [](const SafetyTriple& t) {
        return "SafetyTriple(warn=" + format_number(t.warn) + ", brake=" + format_number(t.brake) +
               ", min=" + format_number(t.min) + (t.no_conflict ? ", no_conflict" : "") + ")";
      });

  m.def(
      "safety_triple",
      [](double v_ego, const std::string& kind, double v_obj, double a_obj, const BrakingParams& p) {
        return safety_triple(v_ego, motion(kind, v_obj, a_obj), p);
      },
      py::arg("v_ego"), py::arg("kind") = "stationary", py::arg("v_obj") = 0.0, py::arg("a_obj") = 0.0,
      py::arg("params") = BrakingParams{},
      "Warning, start-braking and minimum distances [m] for an obstacle of the given motion kind.");
  m.def("braking_distance", &braking_distance, py::arg("v_ego"), py::arg("v_end"), py::arg("a"),
        py::arg("params") = BrakingParams{});
  m.def("standstill_margin", &standstill_margin, py::arg("v_ego"));
  m.def(
      "decel_bounds",
      [](double mu, double g) {
        const auto b = decel_bounds(mu, g);
        return py::make_tuple(b.a_min, b.a_max);
      },
      py::arg("mu"), py::arg("g") = 9.81);
  m.def("ttc_inverse", &ttc_inverse, py::arg("v_ego"), py::arg("v_obj"), py::arg("gap"));
  m.def("collision_hazard_time", &collision_hazard_time, py::arg("v_ego"), py::arg("v_obj"),
        py::arg("a_obj"), py::arg("gap"));
  m.def(
      "lateral_clearance",
      [](double v_x, double width, double vy_max, double kappa) {
        EgoGeometry g;
        g.width = width;
        g.vy_max = vy_max;
        return lateral_clearance(g, v_x, kappa);
      },
      py::arg("v_x"), py::arg("width") = 1.9, py::arg("vy_max") = 2.0, py::arg("kappa") = 1.1);

  m.def(
      "plan_evasion",
      [](double v_x, double gap, double length, double width, double y_center, double v_long,
         double a_long, double v_lat) {
        const EnvelopeObstacle obs{gap, length, width, y_center, v_long, a_long, v_lat};
        const EgoGeometry geom;
        const auto env = build_envelope(obs, 0.0, v_x, geom, EnvelopeConfig{});
        py::dict d;
        d["feasible"] = env.feasible;
        d["reason"] = env.reason;
        d["y_min"] = env.envelope.y_min;
        d["y_max"] = env.envelope.y_max;
        d["n_obj1"] = env.timing.n_obj1;
        d["n_obj2"] = env.timing.n_obj2;
        d["n_end"] = env.timing.n_end;
        d["t_near"] = env.timing.t_near;
        d["t_far"] = env.timing.t_far;
        if (!env.feasible) return d;
        const auto qp = assemble(env.envelope, KinematicLimits::from_adhesion(geom.vy_max, 0.7),
                                 CostWeights{});
        const auto res = solve(qp, {});
        d["status"] = to_string(res.status);
        if (res.ok()) {
          py::list y, vy, ay, jy;
          for (const auto& s : res.trajectory.states) {
            y.append(s.y);
            vy.append(s.vy);
            ay.append(s.ay);
            jy.append(s.jy);
          }
          d["y"] = y;
          d["vy"] = vy;
          d["ay"] = ay;
          d["jy"] = jy;
          d["objective"] = res.trajectory.objective;
          d["max_abs_ay"] = res.trajectory.max_abs_ay();
          d["envelope_violation"] = envelope_violation(res.trajectory, env.envelope);
        }
        return d;
      },
      py::arg("v_x"), py::arg("gap"), py::arg("length") = 4.5, py::arg("width") = 1.9,
      py::arg("y_center") = 0.0, py::arg("v_long") = 0.0, py::arg("a_long") = 0.0,
      py::arg("v_lat") = 0.0,
      "Safety envelope and lateral QP plan with default planner settings, evasion toward +y.");

  py::class_<ScenarioSpec>(m, "Scenario")
      .def_static("load", &load_scenario, py::arg("path"))
      .def_static("parse", &parse_scenario, py::arg("text"), py::arg("base_dir") = std::filesystem::path{})
      .def_readwrite("name", &ScenarioSpec::name)
      .def("to_json", &serialize_scenario)
      .def("__eq__", [](const ScenarioSpec& a, const ScenarioSpec& b) { return a == b; });

  py::class_<SimLog>(m, "SimResult")
      .def_readonly("scenario", &SimLog::scenario)
      .def_property_readonly("summary", &summary_dict)
      .def("timeseries_csv", &timeseries_csv)
      .def("envelope_csv", &envelope_csv)
      .def("summary_json", &summary_json)
      .def("qp_json", &qp_dump_json);

  m.def(
      "run",
      [](const ScenarioSpec& spec, std::optional<double> dt, std::optional<double> ts, bool system_enabled) {
        RunConfig cfg;
        cfg.dt = dt;
        cfg.ts = ts;
        cfg.validate(spec);
        auto opt = cfg.options();
        if (!system_enabled) opt.system_enabled = false;
        py::gil_scoped_release release;
        return run(spec, opt);
      },
      py::arg("scenario"), py::arg("dt") = py::none(), py::arg("ts") = py::none(),
      py::arg("system_enabled") = true);
}
