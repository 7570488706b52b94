#include "evade/risk_decision.hpp"

#include <cstdio>
#include <stdexcept>

namespace evade {

int severity(Mode mode) {
  switch (mode) {
    case Mode::Normal: return 0;
    case Mode::Warning: return 1;
    case Mode::EmergencyBrake: return 2;
    case Mode::EmergencySteer: return 3;
    case Mode::PreCrashBrake: return 3;
    case Mode::DriverOverride: return 4;
  }
  return 0;
}

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::Normal: return "Normal";
    case Mode::Warning: return "Warning";
    case Mode::EmergencyBrake: return "EmergencyBrake";
    case Mode::EmergencySteer: return "EmergencySteer";
    case Mode::PreCrashBrake: return "PreCrashBrake";
    case Mode::DriverOverride: return "DriverOverride";
  }
  return "?";
}

const char* to_string(Trigger trigger) {
  switch (trigger) {
    case Trigger::None: return "none";
    case Trigger::DistanceThreshold: return "distance";
    case Trigger::TtcThreshold: return "ttc";
    case Trigger::PlannerInfeasible: return "planner_infeasible";
    case Trigger::DriverInput: return "driver";
  }
  return "?";
}

std::string DecisionState::label() const {
  if (mode != Mode::EmergencyBrake) return to_string(mode);
  char buf[48];
  std::snprintf(buf, sizeof buf, "EmergencyBrake(%g)", a_cmd);
  return buf;
}

double ttc_inverse(double v_ego, double v_obj, double gap) {
  if (!(gap > 0.0)) throw std::domain_error("ttc_inverse: gap must be > 0 (collision geometry)");
  return (v_ego - v_obj) / gap;
}

namespace {

// Keeps entered_at when the mode and command are unchanged.
DecisionState transition(const DecisionState& prev, Mode mode, double a_cmd, Trigger trigger,
                         double now) {
  if (prev.mode == mode && prev.a_cmd == a_cmd) return prev;
  return DecisionState{mode, a_cmd, now, trigger};
}

DecisionState severe_action(const RiskInput& in, const DecisionState& prev, Trigger trigger,
                            const DecelBounds& decel, double now) {
  if (in.planner_feasible) return transition(prev, Mode::EmergencySteer, 0.0, trigger, now);
  return transition(prev, Mode::PreCrashBrake, decel.a_max, Trigger::PlannerInfeasible, now);
}

}  // namespace

DecisionState decide(const RiskInput& in, const DecisionState& prev,
                     const RiskThresholds& thresholds, const DecelBounds& decel, double now) {
  if (prev.mode == Mode::DriverOverride) return prev;
  if (in.driver_active) return transition(prev, Mode::DriverOverride, 0.0, Trigger::DriverInput, now);

  // Committed maneuvers.
  if (prev.mode == Mode::EmergencySteer && !in.steer_complete) return prev;
  if (prev.mode == Mode::PreCrashBrake && !in.ego_stopped) return prev;
  if (prev.mode == Mode::EmergencyBrake && !in.ego_stopped) {
    if (prev.a_cmd >= decel.a_max) return prev;
    if (!in.oncoming && !in.triple.no_conflict && in.gap <= in.triple.min) {
      return transition(prev, Mode::EmergencyBrake, decel.a_max, Trigger::DistanceThreshold, now);
    }
    return prev;
  }

  if (in.oncoming) {
    const double ttc_inv = in.ttc_inv.value_or(0.0);
    if (ttc_inv <= thresholds.ttc_warn_inv) return transition(prev, Mode::Normal, 0.0, Trigger::None, now);
    if (ttc_inv <= thresholds.ttc_steer_inv) {
      return transition(prev, Mode::Warning, 0.0, Trigger::TtcThreshold, now);
    }
    return severe_action(in, prev, Trigger::TtcThreshold, decel, now);
  }

  const SafetyTriple& tri = in.triple;
  if (tri.no_conflict || in.gap > tri.warn) return transition(prev, Mode::Normal, 0.0, Trigger::None, now);
  if (in.gap > tri.brake) return transition(prev, Mode::Warning, 0.0, Trigger::DistanceThreshold, now);
  if (in.gap > tri.min) {
    return transition(prev, Mode::EmergencyBrake, decel.a_min, Trigger::DistanceThreshold, now);
  }
  return severe_action(in, prev, Trigger::DistanceThreshold, decel, now);
}

const DecisionState& most_severe(const DecisionState& a, const DecisionState& b) {
  const int sa = severity(a.mode);
  const int sb = severity(b.mode);
  if (sb > sa) return b;
  if (sb == sa && b.mode == Mode::EmergencyBrake && b.a_cmd > a.a_cmd) return b;
  return a;
}

}  // namespace evade
