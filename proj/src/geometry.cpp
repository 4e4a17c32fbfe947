#include "layoutforge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "layoutforge/errors.hpp"

namespace layoutforge::geometry {

namespace {

// Orientation of c relative to the directed line a->b: >0 left, <0 right.
double orient(Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); }

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_touch(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

std::vector<Vec2> dedupe(std::vector<Vec2> pts) {
  constexpr double kSame = 1e-12;
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (const Vec2& p : pts) {
    if (out.empty() || norm(p - out.back()) > kSame) out.push_back(p);
  }
  while (out.size() > 1 && norm(out.front() - out.back()) <= kSame) out.pop_back();
  if (out.size() < 3) out.clear();
  return out;
}

}  // namespace

std::array<Vec2, 4> OrientedRect2D::corners() const {
  const std::array<Vec2, 4> local = {Vec2{-half_width, -half_depth}, Vec2{half_width, -half_depth},
                                     Vec2{half_width, half_depth}, Vec2{-half_width, half_depth}};
  std::array<Vec2, 4> out;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = center + Vec2{c * local[i].x - s * local[i].y, s * local[i].x + c * local[i].y};
  }
  return out;
}

Polygon2D OrientedRect2D::polygon() const {
  const auto c = corners();
  return Polygon2D{{c.begin(), c.end()}};
}

double OrientedRect2D::circumradius() const { return std::hypot(half_width, half_depth); }

bool OrientedRect2D::contains(Vec2 p, double tolerance) const {
  const Vec2 local = rotate(p - center, -angle);
  return std::abs(local.x) <= half_width + tolerance && std::abs(local.y) <= half_depth + tolerance;
}

OrientedRect2D footprint(const Placement& placement, const BoxSize& size, FootprintMode mode) {
  OrientedRect2D rect{placement.position.xy(), size.width / 2.0, size.depth / 2.0,
                      placement.rotation};
  if (mode == FootprintMode::axis_aligned) {
    const double c = std::abs(std::cos(placement.rotation));
    const double s = std::abs(std::sin(placement.rotation));
    rect = OrientedRect2D{rect.center, c * rect.half_width + s * rect.half_depth,
                          s * rect.half_width + c * rect.half_depth, 0.0};
  }
  return rect;
}

OrientedRect2D footprint(const PlacedObject& object, FootprintMode mode) {
  return footprint(object.placement, object.size, mode);
}

double signed_area(const std::vector<Vec2>& v) {
  if (v.size() < 3) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0, n = v.size(); i < n; ++i) sum += cross(v[i], v[(i + 1) % n]);
  return sum / 2.0;
}

double polygon_area(const Polygon2D& polygon) { return std::abs(signed_area(polygon.vertices)); }

Vec2 polygon_centroid(const Polygon2D& polygon) {
  const auto& v = polygon.vertices;
  const double a = signed_area(v);
  if (std::abs(a) <= kEpsilon * kEpsilon) throw DegenerateError("polygon has zero area");
  // Shift to the first vertex to limit cancellation for far-off polygons.
  const Vec2 origin = v.front();
  double cx = 0.0;
  double cy = 0.0;
  for (std::size_t i = 0, n = v.size(); i < n; ++i) {
    const Vec2 p = v[i] - origin;
    const Vec2 q = v[(i + 1) % n] - origin;
    const double w = cross(p, q);
    cx += (p.x + q.x) * w;
    cy += (p.y + q.y) * w;
  }
  return origin + Vec2{cx / (6.0 * a), cy / (6.0 * a)};
}

Polygon2D clip_to_convex(const Polygon2D& subject, const std::vector<Vec2>& convex_ccw) {
  std::vector<Vec2> output = subject.vertices;
  const std::size_t m = convex_ccw.size();
  for (std::size_t e = 0; e < m && !output.empty(); ++e) {
    const Vec2 a = convex_ccw[e];
    const Vec2 b = convex_ccw[(e + 1) % m];
    const Vec2 edge = b - a;
    const double len = norm(edge);
    if (len == 0.0) continue;
    // Signed distance to the edge line, positive on the inner (left) side.
    auto dist = [&](Vec2 p) { return cross(edge, p - a) / len; };

    std::vector<Vec2> input = std::move(output);
    output.clear();
    for (std::size_t i = 0, n = input.size(); i < n; ++i) {
      const Vec2 cur = input[i];
      const Vec2 prev = input[(i + n - 1) % n];
      const double dc = dist(cur);
      const double dp = dist(prev);
      const bool cur_in = dc >= -kEpsilon;
      const bool prev_in = dp >= -kEpsilon;
      if (cur_in) {
        if (!prev_in) output.push_back(prev + (cur - prev) * (dp / (dp - dc)));
        output.push_back(cur);
      } else if (prev_in) {
        output.push_back(prev + (cur - prev) * (dp / (dp - dc)));
      }
    }
  }
  return Polygon2D{dedupe(std::move(output))};
}

Polygon2D convex_clip(const Polygon2D& subject, const OrientedRect2D& clip) {
  const auto c = clip.corners();
  return clip_to_convex(subject, std::vector<Vec2>(c.begin(), c.end()));
}

double overlap_area(const OrientedRect2D& a, const OrientedRect2D& b) {
  const auto key = [](const OrientedRect2D& r) {
    return std::tie(r.center.x, r.center.y, r.half_width, r.half_depth, r.angle);
  };
  const OrientedRect2D& first = key(a) <= key(b) ? a : b;
  const OrientedRect2D& second = key(a) <= key(b) ? b : a;
  if (norm(first.center - second.center) > first.circumradius() + second.circumradius()) {
    return 0.0;
  }
  const double area = polygon_area(convex_clip(first.polygon(), second));
  return std::min(area, std::min(a.area(), b.area()));
}

double oor(const Layout& layout, FootprintMode mode) {
  if (layout.objects.empty()) throw EmptyLayoutError("overlap rate of a layout without objects");
  std::vector<OrientedRect2D> rects;
  rects.reserve(layout.objects.size());
  double total_area = 0.0;
  for (const PlacedObject& o : layout.objects) {
    rects.push_back(footprint(o, mode));
    total_area += rects.back().area();
  }
  double total_overlap = 0.0;
  for (std::size_t i = 0; i < rects.size(); ++i) {
    for (std::size_t j = i + 1; j < rects.size(); ++j) total_overlap += overlap_area(rects[i], rects[j]);
  }
  return total_overlap / total_area;
}

double containment_violation(const OrientedRect2D& rect, const FloorPlan& floor) {
  const auto c = rect.corners();
  const Polygon2D inside =
      clip_to_convex(Polygon2D{floor.vertices}, std::vector<Vec2>(c.begin(), c.end()));
  const double v = rect.area() - polygon_area(inside);
  return v <= kEpsilon ? 0.0 : v;
}

bool point_in_polygon(Vec2 p, const std::vector<Vec2>& v) {
  bool inside = false;
  for (std::size_t i = 0, n = v.size(), j = n - 1; i < n; j = i++) {
    if ((v[i].y > p.y) != (v[j].y > p.y)) {
      const double x = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

bool is_simple(const std::vector<Vec2>& v) {
  const std::size_t n = v.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a1 = v[i];
    const Vec2 a2 = v[(i + 1) % n];
    if (a1 == a2) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_touch(a1, a2, v[j], v[(j + 1) % n])) return false;
    }
  }
  return true;
}

double circumradius(const FloorPlan& floor) {
  const Vec2 c = polygon_centroid(Polygon2D{floor.vertices});
  double r = 0.0;
  for (const Vec2& p : floor.vertices) r = std::max(r, norm(p - c));
  return r;
}

Bounds bounds(const std::vector<Vec2>& points) {
  Bounds b{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
           {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
  for (const Vec2& p : points) {
    b.min.x = std::min(b.min.x, p.x);
    b.min.y = std::min(b.min.y, p.y);
    b.max.x = std::max(b.max.x, p.x);
    b.max.y = std::max(b.max.y, p.y);
  }
  return b;
}

Vec2 facing_direction(double rotation) { return {-std::sin(rotation), std::cos(rotation)}; }

std::optional<double> ray_hit(Vec2 origin, Vec2 dir, const OrientedRect2D& rect, double max_t) {
  const Vec2 o = rotate(origin - rect.center, -rect.angle);
  const Vec2 d = rotate(dir, -rect.angle);
  double t0 = 0.0;
  double t1 = max_t;
  const double lo[2] = {-rect.half_width, -rect.half_depth};
  const double hi[2] = {rect.half_width, rect.half_depth};
  const double os[2] = {o.x, o.y};
  const double ds[2] = {d.x, d.y};
  for (int axis = 0; axis < 2; ++axis) {
    if (std::abs(ds[axis]) < 1e-15) {
      if (os[axis] < lo[axis] || os[axis] > hi[axis]) return std::nullopt;
      continue;
    }
    double ta = (lo[axis] - os[axis]) / ds[axis];
    double tb = (hi[axis] - os[axis]) / ds[axis];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return t0;
}

}  // namespace layoutforge::geometry
