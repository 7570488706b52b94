#include "evade/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "evade/longitudinal.hpp"

namespace evade {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument(path + ": " + what);
}

void require_positive(double v, const std::string& path) {
  if (!(v > 0.0) || !std::isfinite(v)) fail(path, "must be > 0");
}

void require_non_negative(double v, const std::string& path) {
  if (!(v >= 0.0) || !std::isfinite(v)) fail(path, "must be >= 0");
}

}  // namespace

void ScenarioSpec::validate() const {
  require_non_negative(ego.v0, "ego.v0");
  if (!std::isfinite(ego.y0)) fail("ego.y0", "must be finite");
  require_positive(ego.geometry.width, "ego.geometry.width");
  require_positive(ego.geometry.front, "ego.geometry.front");
  require_non_negative(ego.geometry.rear, "ego.geometry.rear");
  require_positive(ego.geometry.vy_max, "ego.geometry.vy_max");
  try {
    braking().validate();
  } catch (const std::invalid_argument& e) {
    fail("ego.braking", e.what());
  }
  require_positive(road.lane_width, "road.lane_width");
  require_positive(road.mu, "road.mu");
  if (road.evade_direction != 1 && road.evade_direction != -1) {
    fail("road.evade_direction", "must be +1 or -1");
  }
  require_positive(risk.ttc_warn_inv, "risk.ttc_warn_inv");
  if (!(risk.ttc_steer_inv > risk.ttc_warn_inv)) fail("risk.ttc_steer_inv", "must exceed ttc_warn_inv");
  require_positive(planner.ts, "planner.ts");
  require_non_negative(planner.delta_y, "planner.delta_y");
  if (!(planner.delta_y < road.lane_width)) fail("planner.delta_y", "must be below road.lane_width");
  require_positive(planner.merge_margin, "planner.merge_margin");
  require_positive(planner.kappa, "planner.kappa");
  require_non_negative(planner.weights.p, "planner.weights.p");
  require_positive(planner.weights.q, "planner.weights.q");
  require_positive(planner.weights.r, "planner.weights.r");
  require_positive(planner.ay_fraction, "planner.ay_fraction");
  require_positive(planner.j_max, "planner.jerk_max");
  require_positive(sim.dt, "sim.dt");
  require_positive(sim.t_max, "sim.t_max");
  require_non_negative(sim.settle_time, "sim.settle_time");
  if (sim.driver_takeover_time) require_non_negative(*sim.driver_takeover_time, "sim.driver_takeover_time");
  if (obstacles.empty()) fail("obstacles", "at least one obstacle is required");
  for (size_t i = 0; i < obstacles.size(); ++i) {
    const auto& o = obstacles[i];
    const std::string p = "obstacles[" + std::to_string(i) + "]";
    if (o.kind != "vehicle" && o.kind != "pedestrian") fail(p + ".kind", "must be vehicle or pedestrian");
    require_positive(o.length, p + ".footprint.length");
    require_positive(o.width, p + ".footprint.width");
    require_positive(o.x0, p + ".x0");
    if (!std::isfinite(o.y0)) fail(p + ".y0", "must be finite");
    if (!std::isfinite(o.v)) fail(p + ".v", "must be finite");
    if (!std::isfinite(o.a)) fail(p + ".a", "must be finite");
    if (!std::isfinite(o.lateral_v)) fail(p + ".lateral_v", "must be finite");
    if (o.trigger_gap) require_non_negative(*o.trigger_gap, p + ".trigger.gap");
    if (o.trigger_time) require_non_negative(*o.trigger_time, p + ".trigger.time");
    if (o.visible_gap) require_non_negative(*o.visible_gap, p + ".visible_from.gap");
    if (o.visible_time) require_non_negative(*o.visible_time, p + ".visible_from.time");
  }
}

BrakingParams ScenarioSpec::braking() const {
  BrakingParams b = ego.braking;
  b.mu = road.mu;
  return b;
}

bool check_collision(Vec2 ego_rear_axle, double ego_heading, const EgoGeometry& ego,
                     Vec2 obstacle_center, double obstacle_length, double obstacle_width) {
  const auto e = OrientedBox::from_rear_axle(ego_rear_axle, ego_heading, ego.front, ego.rear,
                                             ego.width);
  const OrientedBox o{obstacle_center, 0.5 * obstacle_length, 0.5 * obstacle_width, 0.0};
  return boxes_overlap(e, o);
}

namespace {

struct ObstacleState {
  double x = 0.0;  // center
  double y = 0.0;
  double v = 0.0;
  bool visible = false;
  bool triggered = false;
  double t_trigger = 0.0;
};

double ego_heading(double v, double vy) { return (v == 0.0 && vy == 0.0) ? 0.0 : std::atan2(vy, v); }

double near_gap(const ObstacleSpec& spec, const ObstacleState& s, double ego_x,
                const EgoGeometry& g) {
  return s.x - 0.5 * spec.length - (ego_x + g.front);
}

bool is_braking_mode(Mode m) { return m == Mode::EmergencyBrake || m == Mode::PreCrashBrake; }

// Signed mean acceleration of an obstacle over [t, t + dt].
double obstacle_accel(const ObstacleSpec& spec, const ObstacleState& s, double t, double dt,
                      double tau2) {
  if (!s.triggered || spec.a == 0.0) return 0.0;
  if (spec.a > 0.0 || tau2 <= 0.0) return spec.a;
  const double mid = t + 0.5 * dt - s.t_trigger;
  return spec.a * std::clamp(mid / tau2, 0.0, 1.0);
}

void advance_obstacle(const ObstacleSpec& spec, ObstacleState& s, double t, double dt,
                      double tau2) {
  const double acc = obstacle_accel(spec, s, t, dt, tau2);
  const double v_next = s.v + acc * dt;
  if (s.v != 0.0 && acc != 0.0 && (s.v > 0.0) != (v_next > 0.0) && (s.v > 0.0) != (acc > 0.0)) {
    // Braking through zero: stop exactly.
    s.x += -s.v * s.v / (2.0 * acc);
    s.v = 0.0;
  } else if (s.v == 0.0 && spec.a < 0.0) {
    // Stopped after braking.
  } else {
    s.x += 0.5 * (s.v + v_next) * dt;
    s.v = v_next;
  }
  if (s.triggered) s.y += spec.lateral_v * dt;
}

struct Candidate {
  DecisionState state;
  int obstacle = -1;
  RiskInput input;
};

struct Playback {
  PlanRecord plan;
  double y_ref = 0.0;
  int dir = 1;

  double end_time() const {
    return plan.t_start + plan.envelope.ts * (plan.result.trajectory.states.size() - 1);
  }

  // Evasion-frame state at absolute time t.  Within a step the acceleration is held.
  LateralState sample(double t) const {
    const auto& st = plan.result.trajectory.states;
    const double ts = plan.envelope.ts;
    const double tau = std::max(0.0, t - plan.t_start);
    const double pos = tau / ts;
    auto k = static_cast<size_t>(std::floor(pos + 1e-9));
    if (k >= st.size() - 1) {
      LateralState last = st.back();
      last.vy = 0.0;
      last.ay = 0.0;
      last.jy = 0.0;
      return last;
    }
    const double r = std::max(0.0, tau - ts * static_cast<double>(k));
    const LateralState& s = st[k];
    return {s.y + s.vy * r + 0.5 * s.ay * r * r, s.vy + s.ay * r, s.ay, s.jy};
  }
};

std::string fmt_time(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", t);
  return buf;
}

}  // namespace

SimLog run(const ScenarioSpec& spec_in, const SimOptions& options) {
  ScenarioSpec spec = spec_in;
  if (options.dt) spec.sim.dt = *options.dt;
  if (options.ts) spec.planner.ts = *options.ts;
  if (options.system_enabled) spec.sim.system_enabled = *options.system_enabled;
  spec.validate();

  const double dt = spec.sim.dt;
  const double ts = spec.planner.ts;
  const double ratio = ts / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("sim.dt: must divide planner.ts");
  }

  const EgoGeometry& geom = spec.ego.geometry;
  const BrakingParams braking = spec.braking();
  const DecelBounds decel = decel_bounds(braking);
  const double y_ref = spec.ego.y0;
  const int dir = spec.road.evade_direction;

  SimLog log;
  log.scenario = spec.name;
  log.geometry = geom;
  log.obstacles = spec.obstacles;

  std::vector<ObstacleState> obs(spec.obstacles.size());
  for (size_t i = 0; i < obs.size(); ++i) {
    const auto& o = spec.obstacles[i];
    obs[i].x = geom.front + o.x0 + 0.5 * o.length;
    obs[i].y = y_ref + o.y0;
    obs[i].v = o.v;
  }

  LongitudinalState ego{0.0, spec.ego.v0, 0.0};
  double ego_y = y_ref;
  double ego_vy = 0.0;
  double ego_ay = 0.0;
  BrakeActuator brake(braking);
  DecisionState decision;
  std::optional<Playback> playback;
  std::optional<double> steer_done_at;

  const auto max_ticks = static_cast<long>(std::ceil(spec.sim.t_max / dt - 1e-9));
  for (long tick = 0;; ++tick) {
    const double t = static_cast<double>(tick) * dt;

    // Perception: visibility and obstacle triggers are latched.
    for (size_t i = 0; i < obs.size(); ++i) {
      const auto& o = spec.obstacles[i];
      const double gap = near_gap(o, obs[i], ego.x, geom);
      if (!obs[i].visible) {
        const bool gated = o.visible_gap || o.visible_time;
        obs[i].visible = !gated || (o.visible_gap && gap <= *o.visible_gap) ||
                         (o.visible_time && t >= *o.visible_time - 1e-12);
      }
      if (!obs[i].triggered) {
        const bool gated = o.trigger_gap || o.trigger_time;
        const bool fire = !gated || (o.trigger_gap && gap <= *o.trigger_gap) ||
                          (o.trigger_time && t >= *o.trigger_time - 1e-12);
        if (fire) {
          obs[i].triggered = true;
          obs[i].t_trigger = t;
        }
      }
    }

    const bool steer_complete = playback && t >= playback->end_time() - 1e-9;
    if (steer_complete && !steer_done_at) steer_done_at = t;
    const bool driver = spec.sim.driver_takeover_time && t >= *spec.sim.driver_takeover_time - 1e-12;

    auto make_input = [&](size_t i) {
      const auto& o = spec.obstacles[i];
      RiskInput in;
      in.gap = near_gap(o, obs[i], ego.x, geom);
      in.oncoming = obs[i].v < 0.0;
      in.driver_active = driver;
      in.steer_complete = steer_complete;
      in.ego_stopped = ego.v <= 0.0;
      if (in.oncoming) {
        in.ttc_inv = ttc_inverse(ego.v, obs[i].v, in.gap);
      } else {
        ObstacleMotion m;
        if (obs[i].triggered && o.a < 0.0 && obs[i].v > 0.0) {
          m = ObstacleMotion::braking(obs[i].v, -o.a);
        } else if (std::abs(obs[i].v) < 1e-9) {
          m = ObstacleMotion::stationary();
        } else {
          m = ObstacleMotion::moving(obs[i].v);
        }
        in.triple = safety_triple(ego.v, m, braking);
      }
      return in;
    };

    std::optional<Candidate> best;
    for (size_t i = 0; i < obs.size(); ++i) {
      if (!obs[i].visible) continue;
      if (!(near_gap(spec.obstacles[i], obs[i], ego.x, geom) > 0.0)) continue;
      Candidate c;
      c.input = make_input(i);
      c.obstacle = static_cast<int>(i);
      c.state = decide(c.input, decision, spec.risk, decel, t);
      if (!best || &most_severe(best->state, c.state) == &c.state) best = c;
    }

    // A vehicle brought to rest ends the run; its last mode stands.
    const bool at_rest = spec.ego.v0 > 0.0 && ego.v <= 0.0;
    DecisionState next = decision;
    if (spec.sim.system_enabled && !at_rest) {
      if (best) {
        next = best->state;
      } else {
        RiskInput idle;
        idle.gap = std::numeric_limits<double>::infinity();
        idle.triple.no_conflict = true;
        idle.driver_active = driver;
        idle.steer_complete = steer_complete;
        idle.ego_stopped = ego.v <= 0.0;
        next = decide(idle, decision, spec.risk, decel, t);
      }

      if (next.mode == Mode::EmergencySteer && decision.mode != Mode::EmergencySteer && best) {
        // Plan once, on entry.
        const auto i = static_cast<size_t>(best->obstacle);
        const auto& o = spec.obstacles[i];
        PlanRecord rec;
        rec.t_start = t;
        rec.obstacle = best->obstacle;
        rec.trigger_gap = best->input.gap;
        EnvelopeConfig cfg{spec.road.lane_width, spec.planner.delta_y, ts,
                           spec.planner.merge_margin, spec.planner.kappa};
        EnvelopeObstacle eo{best->input.gap,
                            o.length,
                            o.width,
                            dir * (obs[i].y - y_ref),
                            obs[i].v,
                            obs[i].triggered ? o.a : 0.0,
                            obs[i].triggered ? dir * o.lateral_v : 0.0};
        const double y_e = dir * (ego_y - y_ref);
        std::string failure;
        const auto env = build_envelope(eo, y_e, ego.v, geom, cfg);
        rec.envelope = env.envelope;
        rec.timing = env.timing;
        if (!env.feasible) {
          failure = "envelope: " + env.reason;
        } else {
          auto lim = KinematicLimits::from_adhesion(geom.vy_max, spec.road.mu, braking.g,
                                                    spec.planner.ay_fraction, spec.planner.j_max);
          lim.settle_at_end = spec.planner.settle_at_end;
          const LateralState init{y_e, dir * ego_vy, dir * ego_ay, 0.0};
          rec.problem = pin_initial(assemble(env.envelope, lim, spec.planner.weights), init);
          rec.result = solve(rec.problem, init);
          if (!rec.result.ok()) {
            failure = std::string("qp: ") + to_string(rec.result.status);
            if (rec.result.infeasible_step >= 0) {
              failure += " at step " + std::to_string(rec.result.infeasible_step);
            }
          } else {
            rec.validation = validate(rec.result.trajectory, rec.problem);
            if (!rec.validation.within(1e-8, 1e-8, 1e-5)) {
              char buf[160];
              std::snprintf(buf, sizeof buf,
                            "qp: solution failed validation (dynamics %.1e, bounds %.1e, "
                            "stationarity %.1e)",
                            rec.validation.dynamics, rec.validation.bounds,
                            rec.validation.stationarity);
              failure = buf;
            }
          }
        }
        if (failure.empty()) {
          playback = Playback{rec, y_ref, dir};
          steer_done_at.reset();
        } else {
          log.planner_failures.push_back(fmt_time(t) + " " + failure);
          if (!log.plan) log.plan = rec;
          RiskInput in = best->input;
          in.planner_feasible = false;
          next = decide(in, decision, spec.risk, decel, t);
        }
      }
    }
    decision = next;

    // Log the state at t.
    SimRow row;
    row.t = t;
    row.x = ego.x;
    row.y = ego_y;
    row.v = ego.v;
    row.a = ego.a;
    row.vy = ego_vy;
    row.ay = ego_ay;
    row.mode = decision.label();
    if (best) {
      const RiskInput& in = best->input;
      row.gap = in.gap;
      if (in.oncoming) {
        row.ttc_inv = in.ttc_inv;
      } else {
        row.warn = in.triple.warn;
        row.brake = in.triple.brake;
        row.min = in.triple.min;
      }
    }
    if (playback) {
      LateralState s = playback->sample(t);
      row.plan = s;
      const double k = (t - playback->plan.t_start) / ts;
      const auto kk = static_cast<long>(std::lround(k));
      const auto& env = playback->plan.envelope;
      if (std::abs(k - static_cast<double>(kk)) < 1e-6 && kk >= 0 && kk < env.size()) {
        const double y_e = dir * (ego_y - y_ref);
        auto& worst = playback->plan.executed_violation;
        worst = std::max({worst, env.y_min[kk] - y_e, y_e - env.y_max[kk]});
      }
    }
    const double heading = ego_heading(ego.v, ego_vy);
    for (size_t i = 0; i < obs.size(); ++i) {
      row.obstacles.push_back({obs[i].x, obs[i].y, obs[i].v});
      if (check_collision({ego.x, ego_y}, heading, geom, {obs[i].x, obs[i].y},
                          spec.obstacles[i].length, spec.obstacles[i].width)) {
        row.collision = true;
      }
    }
    log.rows.push_back(std::move(row));

    if (log.rows.back().collision) break;
    if (ego.v <= 0.0) break;
    if (steer_done_at && t >= *steer_done_at + spec.sim.settle_time - 1e-9) break;
    if (tick >= max_ticks) break;

    // Actuation.
    if (is_braking_mode(decision.mode)) {
      // Each new braking stage follows the command response from its own start.
      if (brake.target() != decision.a_cmd) {
        brake.release();
        brake.command(decision.a_cmd);
      }
    } else if (brake.engaged()) {
      brake.release();
    }
    const double mean_decel = brake.advance(dt);
    ego = step(ego, mean_decel, dt);

    const double t_next = static_cast<double>(tick + 1) * dt;
    if (playback && decision.mode == Mode::EmergencySteer) {
      const LateralState s = playback->sample(t_next);
      ego_y = y_ref + dir * s.y;
      ego_vy = dir * s.vy;
      ego_ay = dir * s.ay;
    } else {
      ego_vy = 0.0;
      ego_ay = 0.0;
    }
    for (size_t i = 0; i < obs.size(); ++i) {
      advance_obstacle(spec.obstacles[i], obs[i], t, dt, braking.tau2);
    }
  }

  if (playback) log.plan = playback->plan;
  log.summary = summarize(log);
  return log;
}

SimSummary summarize(const SimLog& log) {
  SimSummary s;
  s.min_gap = std::numeric_limits<double>::infinity();
  std::string last_mode;
  for (const auto& row : log.rows) {
    if (row.mode != last_mode) {
      s.timeline.emplace_back(row.t, row.mode);
      last_mode = row.mode;
    }
    s.max_abs_ay = std::max(s.max_abs_ay, std::abs(row.ay));
    const double heading = ego_heading(row.v, row.vy);
    const auto ego = OrientedBox::from_rear_axle({row.x, row.y}, heading, log.geometry.front,
                                                 log.geometry.rear, log.geometry.width);
    for (size_t i = 0; i < row.obstacles.size() && i < log.obstacles.size(); ++i) {
      const auto& o = row.obstacles[i];
      const OrientedBox box{{o.x, o.y}, 0.5 * log.obstacles[i].length,
                            0.5 * log.obstacles[i].width, 0.0};
      const double c = box_clearance(ego, box);
      s.min_gap = std::min(s.min_gap, c);
      if (!s.collision && boxes_overlap(ego, box)) {
        s.collision = true;
        s.impact_speed = std::abs(row.v - o.v);
      }
    }
  }
  if (!log.rows.empty()) {
    const auto& last = log.rows.back();
    s.final_v = last.v;
    if (!last.obstacles.empty() && !log.obstacles.empty()) {
      s.final_gap = last.obstacles[0].x - 0.5 * log.obstacles[0].length -
                    (last.x + log.geometry.front);
    }
  }
  if (!std::isfinite(s.min_gap)) s.min_gap = 0.0;
  return s;
}

}  // namespace evade
