#include "silp/geometry.hpp"

#include <algorithm>

namespace silp {

bool segment_intersects_aabb(const Segment& seg, const Aabb& box,
                             double inflate) {
  const Vec2 lo = box.min - Vec2(inflate, inflate);
  const Vec2 hi = box.max + Vec2(inflate, inflate);
  const Vec2 d = seg.p1 - seg.p0;

  // Clip the parameter interval [0, 1] against both slabs.
  double t0 = 0.0;
  double t1 = 1.0;
  for (int ax = 0; ax < 2; ++ax) {
    if (d[ax] == 0.0) {
      if (seg.p0[ax] < lo[ax] || seg.p0[ax] > hi[ax]) return false;
    } else {
      const double inv = 1.0 / d[ax];
      double ta = (lo[ax] - seg.p0[ax]) * inv;
      double tb = (hi[ax] - seg.p0[ax]) * inv;
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) return false;
    }
  }
  return true;
}

}  // namespace silp
