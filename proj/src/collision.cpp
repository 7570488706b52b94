#include "evade/collision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evade {

std::array<Vec2, 4> OrientedBox::corners() const {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  const Vec2 ax{c * half_length, s * half_length};
  const Vec2 ay{-s * half_width, c * half_width};
  return {{{center.x + ax.x + ay.x, center.y + ax.y + ay.y},
           {center.x - ax.x + ay.x, center.y - ax.y + ay.y},
           {center.x - ax.x - ay.x, center.y - ax.y - ay.y},
           {center.x + ax.x - ay.x, center.y + ax.y - ay.y}}};
}

OrientedBox OrientedBox::from_rear_axle(Vec2 rear_axle, double heading, double front, double rear,
                                        double width) {
  const double offset = 0.5 * (front - rear);
  return {{rear_axle.x + offset * std::cos(heading), rear_axle.y + offset * std::sin(heading)},
          0.5 * (front + rear),
          0.5 * width,
          heading};
}

namespace {

double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

void project(const std::array<Vec2, 4>& pts, Vec2 axis, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const auto& p : pts) {
    const double d = dot(p, axis);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab{b.x - a.x, b.y - a.y};
  const Vec2 ap{p.x - a.x, p.y - a.y};
  const double len2 = dot(ab, ab);
  const double t = len2 > 0.0 ? std::clamp(dot(ap, ab) / len2, 0.0, 1.0) : 0.0;
  return std::hypot(ap.x - t * ab.x, ap.y - t * ab.y);
}

}  // namespace

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  // Relative tolerance so that exactly touching edges register as contact.
  const double eps = 1e-9 * (1.0 + std::abs(a.center.x) + std::abs(b.center.x) +
                             std::abs(a.center.y) + std::abs(b.center.y));
  const std::array<Vec2, 4> axes{{{std::cos(a.heading), std::sin(a.heading)},
                                  {-std::sin(a.heading), std::cos(a.heading)},
                                  {std::cos(b.heading), std::sin(b.heading)},
                                  {-std::sin(b.heading), std::cos(b.heading)}}};
  for (const auto& axis : axes) {
    double a_lo, a_hi, b_lo, b_hi;
    project(ca, axis, a_lo, a_hi);
    project(cb, axis, b_lo, b_hi);
    if (a_hi < b_lo - eps || b_hi < a_lo - eps) return false;
  }
  return true;
}

double box_clearance(const OrientedBox& a, const OrientedBox& b) {
  if (boxes_overlap(a, b)) return 0.0;
  const auto ca = a.corners();
  const auto cb = b.corners();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      best = std::min(best, point_segment_distance(ca[i], cb[j], cb[(j + 1) % 4]));
      best = std::min(best, point_segment_distance(cb[i], ca[j], ca[(j + 1) % 4]));
    }
  }
  return best;
}

}  // namespace evade
