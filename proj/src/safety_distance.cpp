#include "evade/safety_distance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace evade {

void BrakingParams::validate() const {
  if (!(tau1 >= 0.0) || !(tau2 >= 0.0) || !(t_driver >= 0.0)) {
    throw std::invalid_argument("braking: tau1, tau2 and t_driver must be >= 0");
  }
  if (!(mu > 0.0) || mu > 1.2) {
    throw std::invalid_argument("braking: mu must be in (0, 1.2]");
  }
  if (!(g > 0.0) || !(a_trigger > 0.0) || !(a_max_cap > 0.0)) {
    throw std::invalid_argument("braking: g, a_trigger and a_max_cap must be > 0");
  }
  const DecelBounds b = decel_bounds(*this);
  if (b.a_min > b.a_max) {
    throw std::invalid_argument("braking: trigger deceleration exceeds maximum deceleration");
  }
}

double braking_distance(double v_ego, double v_end, double a, const BrakingParams& params) {
  if (!(a > 0.0)) throw std::invalid_argument("braking_distance: deceleration must be > 0");
  if (v_end < 0.0 || v_end > v_ego) {
    throw std::invalid_argument("braking_distance: require v_ego >= v_end >= 0");
  }
  return (params.tau1 + 0.5 * params.tau2) * v_ego + (v_ego * v_ego - v_end * v_end) / (2.0 * a);
}

double standstill_margin(double v_ego) {
  if (v_ego < 0.0) throw std::invalid_argument("standstill_margin: v_ego must be >= 0");
  if (v_ego == 0.0) return 3.6;
  return std::max(0.2364 * v_ego + 1.6109, 3.6);
}

DecelBounds decel_bounds(double mu, double g) {
  if (!(mu > 0.0)) throw std::invalid_argument("decel_bounds: mu must be > 0");
  const double adhesion = mu * g;
  return {std::min(4.0, adhesion), std::max(7.0, adhesion)};
}

DecelBounds decel_bounds(const BrakingParams& params) {
  if (!(params.mu > 0.0)) throw std::invalid_argument("decel_bounds: mu must be > 0");
  const double adhesion = params.mu * params.g;
  DecelBounds b{std::min(params.a_trigger, adhesion), std::max(params.a_max_cap, adhesion)};
  if (params.clamp_to_adhesion) b.a_max = std::min(b.a_max, adhesion);
  return b;
}

SafetyTriple safety_triple(double v_ego, const ObstacleMotion& obstacle,
                           const BrakingParams& params) {
  if (v_ego < 0.0) throw std::invalid_argument("safety_triple: v_ego must be >= 0");
  const DecelBounds decel = decel_bounds(params);
  const double margin = standstill_margin(v_ego);
  const double ramp = params.tau1 + 0.5 * params.tau2;
  const double v2 = v_ego * v_ego;

  SafetyTriple out;
  switch (obstacle.tag) {
    case MotionClass::Stationary: {
      if (obstacle.v_obj != 0.0) {
        throw std::invalid_argument("safety_triple: stationary obstacle must have v_obj = 0");
      }
      out.brake = ramp * v_ego + v2 / (2.0 * decel.a_min) + margin;
      out.min = ramp * v_ego + v2 / (2.0 * decel.a_max) + margin;
      break;
    }
    case MotionClass::UniformOrAccelerating: {
      const double v_obj = obstacle.v_obj;
      if (v_ego < v_obj) return SafetyTriple{0.0, 0.0, 0.0, true};
      const double kinetic = v2 - v_obj * v_obj;
      out.brake = ramp * (v_ego - v_obj) + kinetic / (2.0 * decel.a_min) + margin;
      out.min = ramp * (v_ego - v_obj) + kinetic / (2.0 * decel.a_max) + margin;
      break;
    }
    case MotionClass::EmergencyBraking: {
      const double v_obj = obstacle.v_obj;
      if (!(obstacle.a_obj > 0.0)) {
        throw std::invalid_argument("safety_triple: braking obstacle needs a_obj > 0");
      }
      if (v_ego < v_obj) return SafetyTriple{0.0, 0.0, 0.0, true};
      const double delay = params.tau1 * v_ego + 0.5 * params.tau2 * (v_ego - v_obj);
      const double obstacle_stop = v_obj * v_obj / (2.0 * obstacle.a_obj);
      out.brake = delay + v2 / (2.0 * decel.a_min) - obstacle_stop + margin;
      out.min = delay + v2 / (2.0 * decel.a_max) - obstacle_stop + margin;
      break;
    }
  }
  out.warn = out.brake + params.t_driver * v_ego;
  return out;
}

}  // namespace evade
