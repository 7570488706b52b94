#include "evade/drivable_area.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evade {

void EgoGeometry::validate() const {
  if (!(width > 0.0)) throw std::invalid_argument("geometry: width must be > 0");
  if (!(front > 0.0)) throw std::invalid_argument("geometry: front must be > 0");
  if (!(rear >= 0.0)) throw std::invalid_argument("geometry: rear must be >= 0");
  if (!(vy_max >= 0.0)) throw std::invalid_argument("geometry: vy_max must be >= 0");
}

std::optional<double> collision_hazard_time(double v_ego, double v_obj, double a_obj, double gap) {
  if (!(v_ego > 0.0)) throw std::invalid_argument("collision_hazard_time: v_ego must be > 0");
  if (!(gap > 0.0)) throw std::invalid_argument("collision_hazard_time: gap must be > 0");

  if (a_obj >= 0.0 || v_obj <= 0.0) {
    // A braking obstacle that is already stopped (or oncoming) keeps its speed.
    const double closing = v_ego - v_obj;
    if (!(closing > 0.0)) return std::nullopt;
    return gap / closing;
  }

  const double decel = -a_obj;
  const double t_brake = v_obj / decel;
  const double x_brake = v_obj * v_obj / (2.0 * decel);
  if (v_ego * t_brake >= gap + x_brake) {
    // The ego reaches the obstacle while it is still moving.
    const double rel = v_obj - v_ego;
    const double disc = rel * rel + 2.0 * decel * gap;
    if (disc < 0.0) return std::nullopt;
    return (rel + std::sqrt(disc)) / decel;
  }
  // The obstacle is at rest when the ego arrives.
  return (v_obj * v_obj + 2.0 * decel * gap) / (2.0 * decel * v_ego);
}

double lateral_clearance(const EgoGeometry& geom, double v_x, double kappa) {
  if (!(v_x > 0.0)) throw std::invalid_argument("lateral_clearance: v_x must be > 0");
  const double theta_max = std::atan(geom.vy_max / v_x);
  return kappa * geom.width / (2.0 * std::cos(theta_max));
}

SafetyEnvelope make_envelope(int n_obj1, int n_obj2, int n_end, double blocked,
                             const EnvelopeConfig& cfg, double y_floor) {
  if (!(0 <= n_obj1 && n_obj1 <= n_obj2 && n_obj2 < n_end)) {
    throw std::invalid_argument("make_envelope: require 0 <= n_obj1 <= n_obj2 < n_end");
  }
  SafetyEnvelope env;
  env.lane_width = cfg.lane_width;
  env.delta_y = cfg.delta_y;
  env.ts = cfg.ts;
  env.y_max.assign(n_end, cfg.lane_width + cfg.delta_y);
  env.y_min.assign(n_end, y_floor);
  for (int k = n_obj1; k < n_obj2; ++k) env.y_min[k] = blocked;
  env.y_min[n_end - 1] = cfg.lane_width - cfg.delta_y;
  return env;
}

bool envelope_has_witness(const SafetyEnvelope& env, double y0, double vy_max) {
  const double target = std::clamp(env.lane_width, env.lane_width - env.delta_y,
                                   env.lane_width + env.delta_y);
  double hold = target;
  for (double lo : env.y_min) hold = std::max(hold, lo);
  for (int k = 0; k < env.size(); ++k) {
    const double y = std::min(y0 + vy_max * env.ts * k, hold);
    constexpr double tol = 1e-12;
    if (y < env.y_min[k] - tol || y > env.y_max[k] + tol) return false;
  }
  return true;
}

EnvelopeOutcome build_envelope(const EnvelopeObstacle& obs, double ego_y, double v_x,
                               const EgoGeometry& geom, const EnvelopeConfig& cfg) {
  if (!(cfg.ts > 0.0)) throw std::invalid_argument("build_envelope: ts must be > 0");
  if (!(obs.length > 0.0) || !(obs.width > 0.0)) {
    throw std::invalid_argument("build_envelope: obstacle footprint must be positive");
  }
  EnvelopeOutcome out;
  const auto t_near = collision_hazard_time(v_x, obs.v_long, obs.a_long, obs.gap);
  const double far_gap = obs.gap + obs.length + geom.front + geom.rear;
  const auto t_far = collision_hazard_time(v_x, obs.v_long, obs.a_long, far_gap);
  if (!t_near || !t_far) {
    out.reason = "no closing geometry";
    return out;
  }

  HazardTiming& tm = out.timing;
  tm.t_near = *t_near;
  tm.t_far = *t_far;
  tm.n_obj1 = static_cast<int>(std::ceil(tm.t_near / cfg.ts - 1e-9));
  tm.n_obj2 = std::max(static_cast<int>(std::ceil(tm.t_far / cfg.ts - 1e-9)), tm.n_obj1 + 1);
  const int merge_steps = std::max(1, static_cast<int>(std::ceil(cfg.merge_margin / cfg.ts - 1e-9)));
  tm.n_end = tm.n_obj2 + merge_steps;

  const double predicted_center = obs.y_center + obs.v_lat * tm.t_near;
  const double occupancy = predicted_center + 0.5 * obs.width;
  const double d_lat = lateral_clearance(geom, v_x, cfg.kappa);

  out.envelope = make_envelope(tm.n_obj1, tm.n_obj2, tm.n_end, occupancy + d_lat, cfg,
                               std::min(0.0, ego_y));
  out.envelope.occupancy = occupancy;
  out.envelope.d_lat = d_lat;
  for (double& hi : out.envelope.y_max) hi = std::max(hi, ego_y);

  if (tm.n_obj1 < 2) {
    out.reason = "hazard too imminent for a lateral plan";
    return out;
  }
  if (occupancy + d_lat > cfg.lane_width + cfg.delta_y) {
    out.reason = "obstacle blocks the target lane";
    return out;
  }
  if (!envelope_has_witness(out.envelope, ego_y, geom.vy_max)) {
    out.reason = "lateral offset unreachable before the hazard moment";
    return out;
  }
  out.feasible = true;
  return out;
}

}  // namespace evade
