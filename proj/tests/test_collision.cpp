#include <doctest.h>

#include <cmath>
#include <random>

#include "evade/collision.hpp"
#include "evade/simulator.hpp"

using namespace evade;

TEST_CASE("identical and separated boxes") {
  const OrientedBox a{{0.0, 0.0}, 2.35, 0.95, 0.0};
  CHECK(boxes_overlap(a, a));
  CHECK(box_clearance(a, a) == 0.0);
  OrientedBox b = a;
  b.center.x = 4.7 + 10.0;
  CHECK_FALSE(boxes_overlap(a, b));
  CHECK(box_clearance(a, b) == doctest::Approx(10.0));
}

TEST_CASE("touching corners count as contact") {
  const OrientedBox a{{0.0, 0.0}, 1.0, 0.5, 0.0};
  const OrientedBox b{{2.0, 1.0}, 1.0, 0.5, 0.0};
  CHECK(boxes_overlap(a, b));
  OrientedBox c = b;
  c.center.x += 1e-6;
  CHECK_FALSE(boxes_overlap(a, c));
  CHECK(box_clearance(a, c) == doctest::Approx(1e-6).epsilon(1e-3));
}

TEST_CASE("rotated box separated only along a diagonal axis") {
  const OrientedBox a{{0.0, 0.0}, 1.0, 1.0, M_PI / 4.0};
  // Corner of the rotated square reaches sqrt(2) along x.
  OrientedBox b{{std::sqrt(2.0) + 1.0 + 0.01, 0.0}, 1.0, 1.0, 0.0};
  CHECK_FALSE(boxes_overlap(a, b));
  b.center.x -= 0.02;
  CHECK(boxes_overlap(a, b));
}

TEST_CASE("overlap is symmetric and agrees with clearance") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> pos(-4.0, 4.0), size(0.2, 2.5), ang(-M_PI, M_PI);
  for (int i = 0; i < 2000; ++i) {
    const OrientedBox a{{pos(rng), pos(rng)}, size(rng), size(rng), ang(rng)};
    const OrientedBox b{{pos(rng), pos(rng)}, size(rng), size(rng), ang(rng)};
    const bool ab = boxes_overlap(a, b);
    CHECK(ab == boxes_overlap(b, a));
    const double d = box_clearance(a, b);
    CHECK((ab ? d == 0.0 : d > 0.0));
    // Boxes whose centres are closer than both inscribed half-widths must overlap.
    const double inner = std::min(a.half_length, a.half_width) + std::min(b.half_length, b.half_width);
    if (std::hypot(a.center.x - b.center.x, a.center.y - b.center.y) < inner) CHECK(ab);
  }
}

TEST_CASE("ego footprint from the rear axle") {
  const EgoGeometry g;
  const auto box = OrientedBox::from_rear_axle({10.0, 0.0}, 0.0, g.front, g.rear, g.width);
  CHECK(box.center.x == doctest::Approx(10.0 + 0.5 * (3.7 - 1.0)));
  CHECK(box.half_length == doctest::Approx(2.35));
  // Nose at 13.7: an obstacle face at 13.7 is contact, at 13.8 is not.
  CHECK(check_collision({10.0, 0.0}, 0.0, g, {13.7 + 2.25, 0.0}, 4.5, 1.9));
  CHECK_FALSE(check_collision({10.0, 0.0}, 0.0, g, {13.8 + 2.25, 0.0}, 4.5, 1.9));
  // Laterally clear by more than the half widths.
  CHECK_FALSE(check_collision({10.0, 2.0}, 0.0, g, {12.0, 0.0}, 4.5, 1.9));
}
