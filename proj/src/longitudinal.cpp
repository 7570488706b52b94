#include "evade/longitudinal.hpp"

#include <algorithm>
#include <stdexcept>

namespace evade {

double command_response(double t, double a_target, const BrakingParams& params) {
  if (!(a_target > 0.0)) throw std::invalid_argument("command_response: a_target must be > 0");
  if (t < params.tau1) return 0.0;
  if (params.tau2 <= 0.0 || t >= params.tau1 + params.tau2) return a_target;
  return a_target * (t - params.tau1) / params.tau2;
}

void BrakeActuator::command(double a_target) {
  if (!(a_target > 0.0)) throw std::invalid_argument("BrakeActuator: a_target must be > 0");
  if (target_ <= 0.0) since_command_ = 0.0;
  target_ = a_target;
}

void BrakeActuator::release() {
  target_ = 0.0;
  achieved_ = 0.0;
  since_command_ = 0.0;
}

double BrakeActuator::advance(double dt) {
  if (target_ <= 0.0) return 0.0;
  const double t_start = since_command_;
  since_command_ += dt;
  const double dead = std::clamp(params_.tau1 - t_start, 0.0, dt);
  const double active = dt - dead;
  if (active <= 0.0) return 0.0;
  if (params_.tau2 <= 0.0 || achieved_ >= target_) {
    achieved_ = std::min(std::max(achieved_, params_.tau2 <= 0.0 ? target_ : 0.0), target_);
    return achieved_ * active / dt;
  }
  const double slope = target_ / params_.tau2;
  const double ramp = std::min(active, (target_ - achieved_) / slope);
  double integral = ramp * (achieved_ + 0.5 * slope * ramp);
  achieved_ = ramp < active ? target_ : achieved_ + slope * ramp;
  integral += (active - ramp) * achieved_;
  return integral / dt;
}

LongitudinalState step(const LongitudinalState& s, double decel, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
  LongitudinalState out = s;
  if (s.v <= 0.0) {
    out.v = 0.0;
    out.a = 0.0;
    return out;
  }
  const double v_next = s.v - decel * dt;
  if (v_next <= 0.0) {
    out.x = s.x + (decel > 0.0 ? s.v * s.v / (2.0 * decel) : 0.0);
    out.v = 0.0;
    out.a = 0.0;
    return out;
  }
  out.x = s.x + 0.5 * (s.v + v_next) * dt;
  out.v = v_next;
  out.a = -decel;
  return out;
}

double simulated_stopping_distance(double v0, double a_target, const BrakingParams& params,
                                   double dt) {
  BrakeActuator brake(params);
  brake.command(a_target);
  LongitudinalState s{0.0, v0, 0.0};
  for (int i = 0; i < 10'000'000 && s.v > 0.0; ++i) s = step(s, brake.advance(dt), dt);
  return s.x;
}

}  // namespace evade
