#pragma once

#include <array>
#include <optional>
#include <vector>

#include "layoutforge/scene.hpp"
#include "layoutforge/vec.hpp"

// Ground-plane geometry kernel. Everything here is a pure function of its
// arguments.
namespace layoutforge::geometry {

// Point-on-edge classification tolerance, meters.
inline constexpr double kEpsilon = 1e-9;

struct Polygon2D {
  std::vector<Vec2> vertices;

  bool empty() const { return vertices.size() < 3; }
};

struct OrientedRect2D {
  Vec2 center;
  double half_width = 0.0;
  double half_depth = 0.0;
  double angle = 0.0;

  // Counter-clockwise: local (-w,-d), (+w,-d), (+w,+d), (-w,+d), rotated by
  // `angle` about the center.
  std::array<Vec2, 4> corners() const;
  Polygon2D polygon() const;
  double area() const { return 4.0 * half_width * half_depth; }
  double circumradius() const;
  bool contains(Vec2 p, double tolerance = kEpsilon) const;
};

enum class FootprintMode { oriented, axis_aligned };

OrientedRect2D footprint(const Placement& placement, const BoxSize& size,
                         FootprintMode mode = FootprintMode::oriented);
OrientedRect2D footprint(const PlacedObject& object,
                         FootprintMode mode = FootprintMode::oriented);

// |shoelace| / 2; 0 for fewer than 3 vertices.
double polygon_area(const Polygon2D& polygon);
// Signed shoelace area, positive for counter-clockwise winding.
double signed_area(const std::vector<Vec2>& vertices);
// Area-weighted centroid. Throws DegenerateError for zero area.
Vec2 polygon_centroid(const Polygon2D& polygon);

// Sutherland-Hodgman clip of `subject` against a convex, counter-clockwise
// clip polygon. The subject may be non-convex; the result then can contain
// zero-width bridges, which do not change its area.
Polygon2D clip_to_convex(const Polygon2D& subject, const std::vector<Vec2>& convex_ccw);
Polygon2D convex_clip(const Polygon2D& subject, const OrientedRect2D& clip);

// Area of a ∩ b. Exactly symmetric in its arguments.
double overlap_area(const OrientedRect2D& a, const OrientedRect2D& b);

// Sum of pairwise overlaps divided by the summed footprint area. May exceed 1
// when three or more footprints share area. Throws EmptyLayoutError.
double oor(const Layout& layout, FootprintMode mode = FootprintMode::oriented);

// area(rect) - area(rect ∩ floor); clamped to 0 below kEpsilon.
double containment_violation(const OrientedRect2D& rect, const FloorPlan& floor);

bool point_in_polygon(Vec2 p, const std::vector<Vec2>& vertices);
// True when no two non-adjacent edges touch.
bool is_simple(const std::vector<Vec2>& vertices);
// Largest distance from the area centroid to a vertex.
double circumradius(const FloorPlan& floor);

struct Bounds {
  Vec2 min;
  Vec2 max;
};
Bounds bounds(const std::vector<Vec2>& points);

// Unit vector an object faces at `rotation`: local +y turned by the rotation.
Vec2 facing_direction(double rotation);

// Smallest t in [0, max_t] where the ray origin + t*dir enters `rect`, if any.
std::optional<double> ray_hit(Vec2 origin, Vec2 dir, const OrientedRect2D& rect, double max_t);

}  // namespace layoutforge::geometry
