#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evade/collision.hpp"
#include "evade/drivable_area.hpp"
#include "evade/lateral_qp.hpp"
#include "evade/risk_decision.hpp"
#include "evade/safety_distance.hpp"

namespace evade {

struct ObstacleSpec {
  std::string kind = "vehicle";  // vehicle | pedestrian
  double length = 4.5;
  double width = 1.9;
  double x0 = 0.0;  // initial gap from the ego nose to the obstacle near face
  double y0 = 0.0;  // lateral offset of the obstacle center from the ego lane center
  double v = 0.0;   // longitudinal speed, negative when oncoming
  double a = 0.0;   // longitudinal acceleration applied once triggered
  double lateral_v = 0.0;  // also applied once triggered
  // Scripted motion (a, lateral_v) starts when the gap falls to trigger_gap or at
  // trigger_time; without either it runs from the start.
  std::optional<double> trigger_gap;
  std::optional<double> trigger_time;
  std::optional<double> visible_gap;   // obstacle unseen until the gap falls to this
  std::optional<double> visible_time;

  bool oncoming() const { return v < 0.0; }
  bool operator==(const ObstacleSpec&) const = default;
};

struct EgoSpec {
  double v0 = 0.0;
  double y0 = 0.0;
  EgoGeometry geometry;
  BrakingParams braking;

  bool operator==(const EgoSpec&) const = default;
};

struct RoadSpec {
  double lane_width = 3.5;  // lateral offset to the evasion lane center
  double mu = 0.7;
  int evade_direction = 1;  // +1 toward +y, -1 toward -y

  bool operator==(const RoadSpec&) const = default;
};

struct PlannerSpec {
  double ts = 0.05;
  double delta_y = 0.2;
  double merge_margin = 1.5;
  double kappa = 1.1;
  CostWeights weights;
  double ay_fraction = 0.4;  // |a_y| <= fraction * mu * g
  double j_max = 10.0;
  bool settle_at_end = true;

  bool operator==(const PlannerSpec&) const = default;
};

struct SimSpec {
  double dt = 0.01;
  double t_max = 20.0;
  double settle_time = 1.0;
  bool system_enabled = true;
  std::optional<double> driver_takeover_time;

  bool operator==(const SimSpec&) const = default;
};

struct ScenarioSpec {
  std::string name;
  EgoSpec ego;
  RoadSpec road;
  RiskThresholds risk;
  PlannerSpec planner;
  SimSpec sim;
  std::vector<ObstacleSpec> obstacles;

  /// Throws std::invalid_argument on inconsistent values.
  void validate() const;
  /// Braking parameters with the road adhesion applied.
  BrakingParams braking() const;

  bool operator==(const ScenarioSpec&) const = default;
};

struct ObstacleSample {
  double x = 0.0;  // center
  double y = 0.0;
  double v = 0.0;
};

struct SimRow {
  double t = 0.0;
  double x = 0.0;  // ego rear axle
  double y = 0.0;
  double v = 0.0;
  double a = 0.0;
  double vy = 0.0;
  double ay = 0.0;
  std::string mode;
  std::optional<double> gap, warn, brake, min, ttc_inv;
  std::optional<LateralState> plan;  // planner state at this time, evasion frame
  std::vector<ObstacleSample> obstacles;
  bool collision = false;
};

struct PlanRecord {
  double t_start = 0.0;
  int obstacle = -1;
  SafetyEnvelope envelope;
  HazardTiming timing;
  QpProblem problem;  // step 0 pinned
  PlanResult result;
  ValidationReport validation;
  double executed_violation = 0.0;  // executed lateral path vs envelope on the planner grid
  double trigger_gap = 0.0;
};

struct SimSummary {
  bool collision = false;
  double min_gap = 0.0;    // smallest footprint clearance over the run
  double final_gap = 0.0;  // longitudinal gap to obstacle 0 on the last row
  double max_abs_ay = 0.0;
  double final_v = 0.0;
  double impact_speed = 0.0;  // closing speed at first contact
  std::vector<std::pair<double, std::string>> timeline;
};

struct SimLog {
  std::string scenario;
  EgoGeometry geometry;
  std::vector<ObstacleSpec> obstacles;
  std::vector<SimRow> rows;
  std::optional<PlanRecord> plan;
  std::vector<std::string> planner_failures;
  SimSummary summary;
};

struct SimOptions {
  std::optional<double> dt;  // overrides the scenario values
  std::optional<double> ts;
  std::optional<bool> system_enabled;
};

/// Oriented-rectangle overlap between the ego (rear-axle pose plus heading) and an
/// axis-aligned obstacle footprint.
bool check_collision(Vec2 ego_rear_axle, double ego_heading, const EgoGeometry& ego,
                     Vec2 obstacle_center, double obstacle_length, double obstacle_width);

SimLog run(const ScenarioSpec& spec, const SimOptions& options = {});

/// Recomputes the summary from the rows.
SimSummary summarize(const SimLog& log);

}  // namespace evade
