// Acceptance report: one PASS/FAIL line per criterion.  Exit status is the number
// of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "evade/longitudinal.hpp"
#include "evade/risk_decision.hpp"
#include "evade/safety_distance.hpp"
#include "evade/scenario_io.hpp"
#include "evade/simulator.hpp"
#include "oracles.hpp"

using namespace evade;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = EVADE_SCENARIO_DIR;
int failures = 0;

void report(int id, const char* title, bool pass, const std::string& detail) {
  std::printf("%s %2d %s: %s\n", pass ? "PASS" : "FAIL", id, title, detail.c_str());
  if (!pass) ++failures;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Timed {
  SimLog log;
  double seconds = 0.0;
};

Timed timed_run(const ScenarioSpec& spec, const SimOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  Timed r{run(spec, opt), 0.0};
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

ScenarioSpec fixture(const std::string& name) { return load_scenario(kScenarios / (name + ".json")); }

bool visited(const SimLog& log, const std::string& mode) {
  return std::any_of(log.summary.timeline.begin(), log.summary.timeline.end(),
                     [&](const auto& e) { return e.second == mode; });
}

void criterion_safety_distance() {
  const auto t = safety_triple(25.0, ObstacleMotion::braking(16.7, 7.0), BrakingParams{});
  const bool ok = std::abs(t.brake - 75.7) <= 0.2 && std::abs(t.min - 42.3) <= 0.2;
  report(1, "front car braking distances", ok,
         fmt("L_b=%.3f (75.7+-0.2) L_s=%.3f (42.3+-0.2)", t.brake, t.min));
}

void criterion_gap_identity() {
  const BrakingParams p;
  const auto car = safety_triple(25.0, ObstacleMotion::braking(16.7, 7.0), p);
  const auto ped = safety_triple(oracle::kmh(80.0), ObstacleMotion::stationary(), p);
  const double g_car = car.brake - car.min;
  const double g_ped = ped.brake - ped.min;
  // Independence from the timing and margin parameters.
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double spread = 0.0;
  for (int i = 0; i < 200; ++i) {
    BrakingParams q;
    q.tau1 = u(rng);
    q.tau2 = u(rng);
    q.t_driver = 2.0 * u(rng);
    const auto c = safety_triple(25.0, ObstacleMotion::braking(16.7, 7.0), q);
    spread = std::max(spread, std::abs((c.brake - c.min) - g_car));
  }
  const bool ok = std::abs(g_car - 33.4) <= 0.2 && std::abs(g_ped - 26.5) <= 0.2 && spread < 1e-9;
  report(2, "brake/minimum gap identity", ok,
         fmt("front car %.3f (33.4+-0.2), pedestrian %.3f (26.5+-0.2), spread over params %.1e",
             g_car, g_ped, spread));
}

void criterion_oncoming_trigger() {
  const RiskThresholds th;
  DecisionState s;
  double fired = -1.0;
  for (long k = 0; k < 2'000'000; ++k) {
    const double gap = 120.0 - 1e-4 * static_cast<double>(k);
    if (gap <= 0.0) break;
    RiskInput in;
    in.gap = gap;
    in.oncoming = true;
    in.ttc_inv = ttc_inverse(16.7, -16.7, gap);
    s = decide(in, s, th, {4.0, 7.0}, 0.0);
    if (s.mode == Mode::EmergencySteer) {
      fired = gap;
      break;
    }
  }
  const auto log = run(fixture("oncoming"));
  const double sim_gap = log.plan ? log.plan->trigger_gap : -1.0;
  const bool ok = std::abs(fired - 66.7) <= 0.5 && std::abs(sim_gap - 66.7) <= 0.5 &&
                  visited(log, "EmergencySteer");
  report(3, "oncoming steer trigger", ok,
         fmt("ladder fires at %.3f m, closed loop at %.3f m (66.7+-0.5)", fired, sim_gap));
}

void criterion_front_car_low() {
  const auto r = timed_run(fixture("front_car_low"));
  const auto& s = r.log.summary;
  const auto& tl = s.timeline;
  auto at = [&](const char* m) {
    return std::find_if(tl.begin(), tl.end(), [&](const auto& e) { return e.second == m; });
  };
  const auto eb4 = at("EmergencyBrake(4)");
  const auto eb7 = at("EmergencyBrake(7)");
  const bool staged = eb4 != tl.end() && eb7 != tl.end() && eb4 < eb7;
  const bool ok = !s.collision && s.final_v == 0.0 && std::abs(s.final_gap - 4.1) <= 1.0 && staged &&
                  r.seconds <= 1.0;
  report(4, "front car low risk braking", ok,
         fmt("collision=%s final_v=%.3g final_gap=%.3f (4.1+-1.0) a_min->a_max=%s runtime=%.3fs",
             s.collision ? "true" : "false", s.final_v, s.final_gap, staged ? "yes" : "no", r.seconds));
}

void criterion_pedestrian_low() {
  const auto r = timed_run(fixture("pedestrian_low"));
  const auto& s = r.log.summary;
  const bool ok = !s.collision && s.final_v == 0.0 && s.final_gap > 0.0 && r.seconds <= 1.0;
  report(5, "pedestrian low risk braking", ok,
         fmt("collision=%s final_v=%.3g final_gap=%.3f runtime=%.3fs", s.collision ? "true" : "false",
             s.final_v, s.final_gap, r.seconds));
}

void criterion_steering() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"front_car_high", "pedestrian_high"}) {
    const auto r = timed_run(fixture(name));
    const auto& log = r.log;
    const bool steered = visited(log, "EmergencySteer");
    const bool feasible = log.plan && log.plan->result.ok();
    const double violation = log.plan ? log.plan->executed_violation : INFINITY;
    const double ay = feasible ? log.plan->result.trajectory.max_abs_ay() : INFINITY;
    const bool one = steered && feasible && violation <= 1e-9 && !log.summary.collision && ay <= 3.0 &&
                     r.seconds <= 2.0;
    ok = ok && one;
    detail += fmt("%s%s: steer=%s qp=%s envelope_violation=%.1e collision=%s max|a_y|=%.3f runtime=%.3fs",
                  detail.empty() ? "" : "; ", name, steered ? "yes" : "no", feasible ? "solved" : "failed",
                  violation, log.summary.collision ? "true" : "false", ay, r.seconds);
  }
  report(6, "high risk steering", ok, detail);
}

void criterion_qp_oracle() {
  std::mt19937_64 rng(20240611);
  const int n = 200;
  int matched = 0, validated = 0, solved = 0;
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto inst = oracle::random_instance(rng);
    const auto ref = oracle::brute_force(inst);
    const auto qp = inst.to_problem();
    const auto res = solve(qp, inst.init);
    if (!res.ok() || !ref.feasible) continue;
    ++solved;
    const double rel = std::abs(res.trajectory.objective - ref.objective) / (1.0 + std::abs(ref.objective));
    worst = std::max(worst, rel);
    if (rel <= 1e-6) ++matched;
    if (validate(res.trajectory, qp).within(1e-8, 1e-8, 1e-6)) ++validated;
  }
  report(7, "QP vs enumeration oracle", matched == n && validated == n,
         fmt("%d instances, %d solved, %d matched (worst %.1e), %d validated", n, solved, matched, worst,
             validated));
}

void criterion_longitudinal() {
  const BrakingParams p;
  double worst = 0.0;
  std::string cases;
  bool ok = true;
  for (double v : {10.0, 20.0, 30.0}) {
    for (double a : {4.0, 7.0}) {
      const double sim = simulated_stopping_distance(v, a, p, 1e-3);
      const double closed = braking_distance(v, 0.0, a, p);
      const double rel = std::abs(sim - closed) / closed;
      worst = std::max(worst, rel);
      if (rel > 1e-3) {
        ok = false;
        cases += fmt(" (%g,%g):%.3f%%", v, a, 100.0 * rel);
      }
    }
  }
  report(8, "stepped braking vs closed form", ok,
         fmt("worst %.3f%% (limit 0.1%%)%s%s", 100.0 * worst, cases.empty() ? "" : "; over limit:",
             cases.c_str()));
}

void criterion_infeasible() {
  const auto spec = load_scenario(kScenarios / "stress" / "infeasible_envelope.json");
  const auto assisted = run(spec);
  SimOptions off;
  off.system_enabled = false;
  const auto baseline = run(spec, off);
  const bool precrash = visited(assisted, "PreCrashBrake");
  const double v_a = assisted.summary.collision ? assisted.summary.impact_speed : 0.0;
  const double v_b = baseline.summary.collision ? baseline.summary.impact_speed : 0.0;
  const bool ok = precrash && baseline.summary.collision && v_a < v_b;
  report(9, "infeasible envelope fallback", ok,
         fmt("PreCrashBrake=%s impact %.3f m/s vs no-action %.3f m/s", precrash ? "yes" : "no", v_a, v_b));
}

void criterion_determinism() {
  int identical = 0, total = 0;
  for (const char* name : {"front_car_high", "front_car_low", "pedestrian_high", "pedestrian_low",
                           "oncoming"}) {
    const auto spec = fixture(name);
    const auto a = run(spec);
    const auto b = run(spec);
    ++total;
    if (timeseries_csv(a) == timeseries_csv(b) && envelope_csv(a) == envelope_csv(b) &&
        summary_json(a) == summary_json(b) && qp_dump_json(a) == qp_dump_json(b)) {
      ++identical;
    }
  }
  report(10, "repeatable outputs", identical == total,
         fmt("%d/%d fixtures byte-identical across two runs", identical, total));
}

}  // namespace

int main() {
  const std::function<void()> criteria[] = {
      criterion_safety_distance, criterion_gap_identity, criterion_oncoming_trigger,
      criterion_front_car_low,   criterion_pedestrian_low, criterion_steering,
      criterion_qp_oracle,       criterion_longitudinal, criterion_infeasible,
      criterion_determinism};
  for (const auto& c : criteria) {
    try {
      c();
    } catch (const std::exception& e) {
      std::printf("FAIL    criterion raised: %s\n", e.what());
      ++failures;
    }
  }
  std::printf("%d criteria failed\n", failures);
  return failures;
}
