#pragma once

#include <array>

namespace evade {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Oriented rectangle in the road frame.
struct OrientedBox {
  Vec2 center;
  double half_length = 0.0;  // along the heading
  double half_width = 0.0;
  double heading = 0.0;      // [rad]

  std::array<Vec2, 4> corners() const;

  /// Ego footprint from its rear-axle midpoint pose.
  static OrientedBox from_rear_axle(Vec2 rear_axle, double heading, double front, double rear,
                                    double width);
};

/// Separating-axis test on closed rectangles: touching counts as overlap.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);

/// Euclidean distance between the two rectangles, 0 when they overlap.
double box_clearance(const OrientedBox& a, const OrientedBox& b);

}  // namespace evade
