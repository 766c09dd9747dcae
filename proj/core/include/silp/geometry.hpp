#pragma once

#include <Eigen/Core>

namespace silp {

using Vec2 = Eigen::Vector2d;

// Axis-aligned box in the plane.
struct Aabb {
  Vec2 min{0.0, 0.0};
  Vec2 max{0.0, 0.0};

  static Aabb from_center(const Vec2& center, double width, double height) {
    const Vec2 half(0.5 * width, 0.5 * height);
    return {center - half, center + half};
  }

  bool valid() const { return (min.array() <= max.array()).all(); }
  Vec2 center() const { return 0.5 * (min + max); }
  double width() const { return max.x() - min.x(); }
  double height() const { return max.y() - min.y(); }

  Aabb inflated(double r) const {
    return {min - Vec2(r, r), max + Vec2(r, r)};
  }

  bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() &&
           p.y() <= max.y();
  }
};

struct Segment {
  Vec2 p0{0.0, 0.0};
  Vec2 p1{0.0, 0.0};

  double length() const { return (p1 - p0).norm(); }
  Vec2 point_at(double t) const { return p0 + t * (p1 - p0); }
};

// True iff the segment touches the box inflated by `inflate` on all sides.
// Endpoints inside the box count as intersections. Exact slab clipping, no
// sampling.
bool segment_intersects_aabb(const Segment& seg, const Aabb& box,
                             double inflate = 0.0);

}  // namespace silp
