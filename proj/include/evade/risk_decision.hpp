#pragma once

#include <optional>
#include <string>

#include "evade/safety_distance.hpp"

namespace evade {

enum class Mode { Normal, Warning, EmergencyBrake, EmergencySteer, PreCrashBrake, DriverOverride };

enum class Trigger { None, DistanceThreshold, TtcThreshold, PlannerInfeasible, DriverInput };

/// Ordering used for escalation: Normal < Warning < EmergencyBrake < {Steer, PreCrash}.
/// DriverOverride sits above everything.
int severity(Mode mode);

const char* to_string(Mode mode);
const char* to_string(Trigger trigger);

struct DecisionState {
  Mode mode = Mode::Normal;
  double a_cmd = 0.0;  // commanded deceleration for the braking modes [m/s^2]
  double entered_at = 0.0;
  Trigger trigger = Trigger::None;

  /// "EmergencyBrake(4)", "Warning", ...
  std::string label() const;
  bool operator==(const DecisionState&) const = default;
};

struct RiskInput {
  double gap = 0.0;  // ego nose to obstacle near face [m]
  SafetyTriple triple;
  std::optional<double> ttc_inv;  // present iff oncoming
  bool oncoming = false;
  bool driver_active = false;
  bool planner_feasible = true;
  bool steer_complete = false;  // merging phase of an active steer finished
  bool ego_stopped = false;     // ends a committed braking maneuver
};

struct RiskThresholds {
  double ttc_warn_inv = 0.3;
  double ttc_steer_inv = 0.5;

  bool operator==(const RiskThresholds&) const = default;
};

/// Inverse time-to-collision.  For an oncoming obstacle v_obj is negative.
double ttc_inverse(double v_ego, double v_obj, double gap);

/// One tick of the decision machine.  Pure: the result depends only on the arguments.
DecisionState decide(const RiskInput& input, const DecisionState& prev,
                     const RiskThresholds& thresholds, const DecelBounds& decel, double now);

/// Picks the most severe of two candidate states; ties keep `a`.
const DecisionState& most_severe(const DecisionState& a, const DecisionState& b);

}  // namespace evade
