#pragma once

#include "evade/safety_distance.hpp"

namespace evade {

struct LongitudinalState {
  double x = 0.0;  // rear-axle station [m]
  double v = 0.0;  // [m/s], never negative
  double a = 0.0;  // achieved acceleration, <= 0 while braking
};

/// Achieved deceleration t seconds after a fresh brake command: dead time tau1,
/// linear build-up over tau2, then hold.
double command_response(double t_since_command, double a_target, const BrakingParams& params);

/// Brake actuator with the same profile, supporting a target raised mid-maneuver.
/// A raised target continues the ramp from the current value at slope target / tau2.
class BrakeActuator {
 public:
  explicit BrakeActuator(const BrakingParams& params) : params_(params) {}

  void command(double a_target);
  void release();
  /// Advances by dt and returns the mean deceleration over the interval.
  double advance(double dt);

  double achieved() const { return achieved_; }
  double target() const { return target_; }
  bool engaged() const { return target_ > 0.0; }

 private:
  BrakingParams params_;
  double target_ = 0.0;
  double achieved_ = 0.0;
  double since_command_ = 0.0;
};

/// Semi-implicit update under a deceleration magnitude.  Stops exactly at v = 0.
LongitudinalState step(const LongitudinalState& state, double decel, double dt);

/// Distance covered from v0 to standstill by stepping the actuator profile.
double simulated_stopping_distance(double v0, double a_target, const BrakingParams& params,
                                   double dt = 1e-3);

}  // namespace evade
