#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "evade/scenario_io.hpp"
#include "evade/simulator.hpp"

using namespace evade;

namespace {

const std::filesystem::path kScenarios = EVADE_SCENARIO_DIR;

SimLog run_fixture(const std::string& name, const SimOptions& opt = {}) {
  return run(load_scenario(kScenarios / (name + ".json")), opt);
}

bool visited(const SimLog& log, const std::string& mode) {
  return std::any_of(log.summary.timeline.begin(), log.summary.timeline.end(),
                     [&](const auto& e) { return e.second == mode; });
}

ScenarioSpec receding_car() {
  ScenarioSpec s = load_scenario(kScenarios / "front_car_low.json");
  s.name = "receding";
  s.obstacles[0].v = 30.0;
  s.obstacles[0].a = 0.0;
  s.obstacles[0].trigger_gap.reset();
  s.obstacles[0].visible_gap.reset();
  s.sim.t_max = 3.0;
  return s;
}

}  // namespace

TEST_CASE("front car high risk is avoided by steering") {
  const auto log = run_fixture("front_car_high");
  CHECK_FALSE(log.summary.collision);
  CHECK(visited(log, "EmergencySteer"));
  REQUIRE(log.plan.has_value());
  CHECK(log.plan->result.ok());
  CHECK(log.plan->trigger_gap == doctest::Approx(26.0).epsilon(0.1 / 26.0));
  CHECK(log.plan->executed_violation <= 1e-9);
  CHECK(log.plan->validation.within());
  CHECK(log.plan->result.trajectory.max_abs_ay() <= 3.0);
  CHECK(log.planner_failures.empty());
}

TEST_CASE("front car low risk stops in two braking stages") {
  const auto log = run_fixture("front_car_low");
  CHECK_FALSE(log.summary.collision);
  CHECK(log.summary.final_v == 0.0);
  CHECK(log.summary.final_gap == doctest::Approx(4.1).epsilon(1.0 / 4.1));
  const auto& tl = log.summary.timeline;
  const auto first = std::find_if(tl.begin(), tl.end(),
                                  [](const auto& e) { return e.second == "EmergencyBrake(4)"; });
  const auto second = std::find_if(tl.begin(), tl.end(),
                                   [](const auto& e) { return e.second == "EmergencyBrake(7)"; });
  REQUIRE(first != tl.end());
  REQUIRE(second != tl.end());
  CHECK(first < second);
  CHECK_FALSE(log.plan.has_value());
}

TEST_CASE("pedestrian fixtures") {
  const auto high = run_fixture("pedestrian_high");
  CHECK_FALSE(high.summary.collision);
  CHECK(visited(high, "EmergencySteer"));
  REQUIRE(high.plan.has_value());
  CHECK(high.plan->executed_violation <= 1e-9);
  CHECK(high.plan->result.trajectory.max_abs_ay() <= 3.0);

  const auto low = run_fixture("pedestrian_low");
  CHECK_FALSE(low.summary.collision);
  CHECK(low.summary.final_v == 0.0);
  CHECK(low.summary.final_gap > 0.0);
  CHECK_FALSE(visited(low, "EmergencySteer"));
}

TEST_CASE("oncoming vehicle triggers steering near 66.7 m") {
  const auto log = run_fixture("oncoming");
  CHECK_FALSE(log.summary.collision);
  REQUIRE(log.plan.has_value());
  CHECK(log.plan->trigger_gap == doctest::Approx(66.7).epsilon(0.5 / 66.7));
  CHECK(visited(log, "Warning"));
}

TEST_CASE("unreachable envelope falls back to pre-crash braking") {
  const auto spec = load_scenario(kScenarios / "stress" / "infeasible_envelope.json");
  const auto assisted = run(spec);
  SimOptions off;
  off.system_enabled = false;
  const auto baseline = run(spec, off);
  CHECK(visited(assisted, "PreCrashBrake"));
  CHECK_FALSE(assisted.planner_failures.empty());
  REQUIRE(baseline.summary.collision);
  if (assisted.summary.collision) {
    CHECK(assisted.summary.impact_speed < baseline.summary.impact_speed);
  }
}

TEST_CASE("log invariants") {
  for (const char* name : {"front_car_high", "front_car_low", "pedestrian_high", "pedestrian_low",
                           "oncoming"}) {
    CAPTURE(name);
    const auto spec = load_scenario(kScenarios / (std::string(name) + ".json"));
    const auto log = run(spec);
    REQUIRE(log.rows.size() > 2);
    for (size_t i = 1; i < log.rows.size(); ++i) {
      const auto& a = log.rows[i - 1];
      const auto& b = log.rows[i];
      CHECK(b.t > a.t);
      const double dx = std::hypot(b.x - a.x, b.y - a.y);
      CHECK(dx <= (a.v + 1.0) * spec.sim.dt + 1e-12);
      CHECK(b.v >= 0.0);
    }
    const auto again = summarize(log);
    CHECK(again.collision == log.summary.collision);
    CHECK(again.min_gap == log.summary.min_gap);
    CHECK(again.final_gap == log.summary.final_gap);
    CHECK(again.max_abs_ay == log.summary.max_abs_ay);
    CHECK(again.final_v == log.summary.final_v);
    CHECK(again.timeline == log.summary.timeline);
  }
}

TEST_CASE("repeated runs are identical") {
  const auto spec = load_scenario(kScenarios / "pedestrian_high.json");
  const auto a = run(spec);
  const auto b = run(spec);
  CHECK(timeseries_csv(a) == timeseries_csv(b));
  CHECK(envelope_csv(a) == envelope_csv(b));
  CHECK(summary_json(a) == summary_json(b));
  CHECK(qp_dump_json(a) == qp_dump_json(b));
}

TEST_CASE("no maneuver against a receding obstacle") {
  const auto spec = receding_car();
  const auto log = run(spec);
  CHECK_FALSE(log.summary.collision);
  CHECK(log.summary.max_abs_ay == 0.0);
  REQUIRE(log.summary.timeline.size() == 1);
  CHECK(log.summary.timeline.front().second == "Normal");
  // The gap only grows, so the smallest clearance is the initial one.
  CHECK(log.summary.min_gap == doctest::Approx(spec.obstacles[0].x0).epsilon(1e-9));
}

TEST_CASE("disabled system never leaves normal mode") {
  SimOptions off;
  off.system_enabled = false;
  const auto log = run_fixture("front_car_low", off);
  CHECK(log.summary.collision);
  for (const auto& [t, mode] : log.summary.timeline) CHECK(mode == "Normal");
}

TEST_CASE("collision check helper") {
  const EgoGeometry g;
  CHECK(check_collision({0.0, 0.0}, 0.0, g, {0.0, 0.0}, 4.5, 1.9));
  CHECK_FALSE(check_collision({0.0, 0.0}, 0.0, g, {3.7 + 10.0 + 2.25, 0.0}, 4.5, 1.9));
}
