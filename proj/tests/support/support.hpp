#pragma once

// Independent oracles and fixture builders shared by the unit tests and the
// acceptance runner. Nothing here calls into the geometry kernel.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "layoutforge/scene.hpp"

namespace lf_test {

using layoutforge::BoxSize;
using layoutforge::FloorPlan;
using layoutforge::Layout;
using layoutforge::PlacedObject;
using layoutforge::RoomType;
using layoutforge::Vec2;

inline std::filesystem::path data_dir() { return LAYOUTFORGE_TEST_DATA; }

struct Rect {
  double cx = 0, cy = 0, w = 1, d = 1, angle = 0;
};

// Range of x for which (x, y) lies inside the rect, from the four slab
// constraints |(p-c).u| <= w/2 and |(p-c).v| <= d/2.
inline bool row_interval(const Rect& r, double y, double& lo, double& hi) {
  const double ux = std::cos(r.angle), uy = std::sin(r.angle);
  const double vx = -uy, vy = ux;
  lo = -std::numeric_limits<double>::infinity();
  hi = std::numeric_limits<double>::infinity();
  const double dy = y - r.cy;
  const auto slab = [&](double ax, double ay, double half) {
    // ax * (x - cx) + ay * dy in [-half, half]
    const double b = ay * dy;
    if (std::abs(ax) < 1e-15) {
      if (std::abs(b) > half) {
        lo = 1;
        hi = 0;
      }
      return;
    }
    double a0 = (-half - b) / ax + r.cx;
    double a1 = (half - b) / ax + r.cx;
    if (a0 > a1) std::swap(a0, a1);
    lo = std::max(lo, a0);
    hi = std::min(hi, a1);
  };
  slab(ux, uy, r.w / 2);
  slab(vx, vy, r.d / 2);
  return lo <= hi;
}

// Counts grid cells of side `cell` whose centers lie in both rects. Each row
// is resolved analytically, so the cost is linear in the number of rows.
inline double raster_overlap(const Rect& a, const Rect& b, double cell = 1e-3) {
  const auto y_extent = [](const Rect& r) {
    const double e = std::abs(r.w / 2 * std::sin(r.angle)) + std::abs(r.d / 2 * std::cos(r.angle));
    return std::pair{r.cy - e, r.cy + e};
  };
  const auto [a0, a1] = y_extent(a);
  const auto [b0, b1] = y_extent(b);
  const double y0 = std::max(a0, b0), y1 = std::min(a1, b1);
  if (y0 >= y1) return 0.0;
  std::int64_t cells = 0;
  for (auto j = static_cast<std::int64_t>(std::floor(y0 / cell)); j <= static_cast<std::int64_t>(std::floor(y1 / cell));
       ++j) {
    const double y = (static_cast<double>(j) + 0.5) * cell;
    double la, ha, lb, hb;
    if (!row_interval(a, y, la, ha) || !row_interval(b, y, lb, hb)) continue;
    const double lo = std::max(la, lb), hi = std::min(ha, hb);
    if (lo > hi) continue;
    // Cells i with (i + 0.5) * cell in [lo, hi].
    const auto i0 = static_cast<std::int64_t>(std::ceil(lo / cell - 0.5));
    const auto i1 = static_cast<std::int64_t>(std::floor(hi / cell - 0.5));
    if (i1 >= i0) cells += i1 - i0 + 1;
  }
  return static_cast<double>(cells) * cell * cell;
}

inline Rect random_rect(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> pos(-1.0, 1.0), size(0.2, 2.0), ang(0.0, 2 * std::numbers::pi);
  Rect r;
  r.cx = pos(gen);
  r.cy = pos(gen);
  r.w = size(gen);
  r.d = size(gen);
  r.angle = ang(gen);
  return r;
}

inline FloorPlan rect_floor(double width, double depth, double cx = 0.0, double cy = 0.0) {
  const double hw = width / 2, hd = depth / 2;
  return {{{cx - hw, cy - hd}, {cx + hw, cy - hd}, {cx + hw, cy + hd}, {cx - hw, cy + hd}}};
}

inline PlacedObject object(std::string id, std::string description, double w, double d, double x, double y,
                           double rotation = 0.0, double h = 0.8) {
  PlacedObject o;
  o.instance_id = std::move(id);
  o.description = std::move(description);
  o.size = {w, d, h};
  o.placement.position = {x, y, h / 2};
  o.placement.rotation = layoutforge::normalize_angle(rotation);
  return o;
}

inline Layout room(RoomType type, FloorPlan floor, std::vector<PlacedObject> objects = {}) {
  Layout l;
  l.room_type = type;
  l.floor = std::move(floor);
  l.objects = std::move(objects);
  return l;
}

// Rect corners under the same conventions the layout file uses, computed
// here without the kernel.
inline std::vector<Vec2> corners(const PlacedObject& o) {
  const double c = std::cos(o.placement.rotation), s = std::sin(o.placement.rotation);
  std::vector<Vec2> out;
  for (auto [lx, ly] : {std::pair{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}}) {
    const double x = lx * o.size.width / 2, y = ly * o.size.depth / 2;
    out.push_back({o.placement.position.x + c * x - s * y, o.placement.position.y + s * x + c * y});
  }
  return out;
}

// Separating-axis test for two convex quads; true when interiors overlap by
// more than `gap`.
inline bool quads_intersect(const std::vector<Vec2>& a, const std::vector<Vec2>& b, double gap = 0.0) {
  for (const auto* poly : {&a, &b}) {
    for (std::size_t i = 0; i < poly->size(); ++i) {
      const Vec2 e = (*poly)[(i + 1) % poly->size()] - (*poly)[i];
      const Vec2 n{-e.y, e.x};
      const double len = std::hypot(n.x, n.y);
      double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
      for (Vec2 p : a) {
        const double t = (p.x * n.x + p.y * n.y) / len;
        amin = std::min(amin, t);
        amax = std::max(amax, t);
      }
      for (Vec2 p : b) {
        const double t = (p.x * n.x + p.y * n.y) / len;
        bmin = std::min(bmin, t);
        bmax = std::max(bmax, t);
      }
      if (amax <= bmin + gap || bmax <= amin + gap) return false;
    }
  }
  return true;
}

// A clean layout: rectangular room, 2 to 6 objects placed by rejection so
// none overlap and all sit inside the floor with a margin.
inline Layout random_clean_layout(std::mt19937_64& gen, const std::string& prefix = "obj") {
  std::uniform_real_distribution<double> room_dim(3.0, 7.0), size(0.3, 1.2), unit(0.0, 1.0);
  std::uniform_int_distribution<int> count(2, 6), quarter(0, 3);
  static const char* kNames[] = {"bed", "desk", "chair", "wardrobe", "sofa", "table", "cabinet", "lamp"};
  const double W = room_dim(gen), D = room_dim(gen);
  Layout l = room(RoomType::bedroom, rect_floor(W, D));
  const int n = count(gen);
  for (int attempt = 0; static_cast<int>(l.objects.size()) < n && attempt < 2000; ++attempt) {
    const double w = size(gen), d = size(gen);
    const double rot = quarter(gen) * std::numbers::pi / 2 + (unit(gen) < 0.3 ? unit(gen) : 0.0);
    const double reach = std::hypot(w, d) / 2 + 0.05;
    const double x = (unit(gen) - 0.5) * (W - 2 * reach), y = (unit(gen) - 0.5) * (D - 2 * reach);
    const auto* name = kNames[l.objects.size() % 8];
    auto o = object(prefix + "_" + std::to_string(l.objects.size()), name, w, d, x, y, rot);
    bool clear = true;
    for (const auto& other : l.objects) {
      if (quads_intersect(corners(o), corners(other), -0.02)) {
        clear = false;
        break;
      }
    }
    if (clear) l.objects.push_back(std::move(o));
  }
  return l;
}

// -log(sigmoid(z)) the textbook way, for comparison with the stable form.
inline double naive_dpo(double pp, double pn, double rp, double rn, double beta) {
  const double z = beta * ((pp - rp) - (pn - rn));
  const double sigmoid = 1.0 / (1.0 + std::exp(-z));
  return -std::log(sigmoid);
}

// Navigation fixtures.
inline Layout open_room() {
  return room(RoomType::living_room, rect_floor(6, 6),
              {object("table_0", "coffee table", 0.8, 0.5, 0.0, 0.5), object("sofa_0", "sofa", 2.0, 0.9, 0.0, 2.4)});
}

// Target boxed in by four walls with no door.
inline Layout walled_room() {
  const double h = 2.3, t = 0.2;
  return room(RoomType::living_room, rect_floor(10, 10),
              {object("target_0", "table", 0.6, 0.6, 0, 0), object("wall_n", "wall", 2 * h + t, t, 0, h),
               object("wall_s", "wall", 2 * h + t, t, 0, -h), object("wall_e", "wall", t, 2 * h + t, h, 0),
               object("wall_w", "wall", t, 2 * h + t, -h, 0)});
}

// A corridor between two full-length walls with the target behind the upper
// one: the robot can only get within range while looking along the corridor.
inline Layout corridor_room() {
  return room(RoomType::living_room, rect_floor(10, 10),
              {object("wall_top", "wall", 10.0, 0.2, 0.0, 0.0), object("wall_bottom", "wall", 10.0, 0.2, 0.0, -0.8),
               object("target_0", "cabinet", 0.4, 0.4, 0.0, 1.3)});
}

}  // namespace lf_test
