#pragma once

#include <stdexcept>

namespace evade {

/// Braking-system timing and deceleration levels.  All quantities are SI.
struct BrakingParams {
  double tau1 = 0.3;       // brake system adjustment (dead) time [s]
  double tau2 = 0.6;       // deceleration build-up time [s]
  double t_driver = 1.0;   // driver reaction allowance used by the warning distance [s]
  double a_trigger = 4.0;  // comfort braking level [m/s^2]
  double a_max_cap = 7.0;  // emergency braking level [m/s^2]
  double mu = 0.7;         // road adhesion coefficient
  double g = 9.81;
  // Cap a_max at mu*g.  Off by default, which keeps max(7, mu*g) verbatim.
  bool clamp_to_adhesion = false;

  void validate() const;
  bool operator==(const BrakingParams&) const = default;
};

enum class MotionClass { Stationary, UniformOrAccelerating, EmergencyBraking };

struct ObstacleMotion {
  MotionClass tag = MotionClass::Stationary;
  double v_obj = 0.0;  // [m/s], along the ego direction
  double a_obj = 0.0;  // deceleration magnitude for EmergencyBraking, signed otherwise

  static ObstacleMotion stationary() { return {}; }
  static ObstacleMotion moving(double v) { return {MotionClass::UniformOrAccelerating, v, 0.0}; }
  static ObstacleMotion braking(double v, double decel) {
    return {MotionClass::EmergencyBraking, v, decel};
  }
};

/// Warning / start-braking / minimum braking distances.  `no_conflict` marks
/// an obstacle that is pulling away; all distances are zero then.
struct SafetyTriple {
  double warn = 0.0;
  double brake = 0.0;
  double min = 0.0;
  bool no_conflict = false;
};

struct DecelBounds {
  double a_min;
  double a_max;
};

/// Distance covered while braking from v_ego to v_end with target deceleration a,
/// including the dead time and half the build-up time at full speed.
double braking_distance(double v_ego, double v_end, double a, const BrakingParams& params);

/// Residual gap kept at standstill.  v_ego is in m/s.
double standstill_margin(double v_ego);

DecelBounds decel_bounds(double mu, double g = 9.81);
DecelBounds decel_bounds(const BrakingParams& params);

SafetyTriple safety_triple(double v_ego, const ObstacleMotion& obstacle,
                           const BrakingParams& params);

}  // namespace evade
