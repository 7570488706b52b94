#pragma once

#include <optional>
#include <string>
#include <vector>

namespace evade {

/// Ego body dimensions measured from the rear-axle midpoint.
struct EgoGeometry {
  double width = 1.9;          // B
  double front = 3.7;          // S_f, rear axle to front end
  double rear = 1.0;           // S_r, rear axle to rear end
  double vy_max = 2.0;         // lateral speed cap [m/s]

  void validate() const;
  double length() const { return front + rear; }
  bool operator==(const EgoGeometry&) const = default;
};

struct HazardTiming {
  double t_near = 0.0;  // collision hazard moment
  double t_far = 0.0;   // ego body clears the obstacle far face
  int n_obj1 = 0;
  int n_obj2 = 0;
  int n_end = 0;
};

/// Per-step lateral bounds.  Step k is at time k * ts from the plan start.
struct SafetyEnvelope {
  std::vector<double> y_min;
  std::vector<double> y_max;
  double lane_width = 3.5;
  double occupancy = 0.0;  // predicted obstacle edge facing the evasion side
  double delta_y = 0.2;
  double d_lat = 0.0;
  double ts = 0.05;

  int size() const { return static_cast<int>(y_min.size()); }
};

/// Obstacle seen from the ego, lateral values already in the evasion frame
/// (evasion toward +y).
struct EnvelopeObstacle {
  double gap = 0.0;     // ego nose to obstacle near face
  double length = 0.0;  // along the road
  double width = 0.0;
  double y_center = 0.0;
  double v_long = 0.0;  // signed, negative when oncoming
  double a_long = 0.0;  // signed
  double v_lat = 0.0;
};

struct EnvelopeConfig {
  double lane_width = 3.5;  // W, lateral offset of the target lane center
  double delta_y = 0.2;
  double ts = 0.05;
  double merge_margin = 1.5;
  double kappa = 1.1;
};

struct EnvelopeOutcome {
  bool feasible = false;
  std::string reason;  // set when infeasible
  SafetyEnvelope envelope;
  HazardTiming timing;
};

/// Time until the ego covers `gap` relative to the obstacle, or nullopt when the
/// two never close.  a_obj < 0 means the obstacle brakes to a stop.
std::optional<double> collision_hazard_time(double v_ego, double v_obj, double a_obj, double gap);

/// Lateral clearance kept between the rear-axle midpoint and the obstacle edge.
double lateral_clearance(const EgoGeometry& geom, double v_x, double kappa = 1.1);

/// Envelope from explicit indices: y_min is 0 outside the hazard window,
/// `blocked` inside [n_obj1, n_obj2), and W - delta_y on the last step.
SafetyEnvelope make_envelope(int n_obj1, int n_obj2, int n_end, double blocked,
                             const EnvelopeConfig& cfg, double y_floor = 0.0);

EnvelopeOutcome build_envelope(const EnvelopeObstacle& obstacle, double ego_y, double v_x,
                               const EgoGeometry& geom, const EnvelopeConfig& cfg);

/// Fastest v_y-limited ramp toward the target lane.  True when it stays inside the envelope.
bool envelope_has_witness(const SafetyEnvelope& env, double y0, double vy_max);

}  // namespace evade
