// Object-centric navigation check on an occupancy grid.
#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include "layoutforge/errors.hpp"
#include "layoutforge/eval.hpp"
#include "layoutforge/geometry.hpp"

namespace layoutforge::eval {

namespace {

using Json = nlohmann::ordered_json;

class Grid {
 public:
  Grid(const Layout& layout, double res) : res_(res) {
    const auto b = geometry::bounds(layout.floor.vertices);
    origin_ = b.min;
    nx_ = std::max(1, static_cast<int>(std::ceil((b.max.x - b.min.x) / res - 1e-9)));
    ny_ = std::max(1, static_cast<int>(std::ceil((b.max.y - b.min.y) / res - 1e-9)));
    free_.assign(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), false);
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) free_[index(i, j)] = geometry::point_in_polygon(center(i, j), layout.floor.vertices);
    }
    // A cell is blocked when its square overlaps a footprint with positive
    // area; only cells under each footprint's bounding box are tested.
    for (const PlacedObject& o : layout.objects) {
      const auto rect = geometry::footprint(o);
      const auto c = rect.corners();
      const auto fb = geometry::bounds({c.begin(), c.end()});
      const int i0 = std::max(0, static_cast<int>(std::floor((fb.min.x - origin_.x) / res)));
      const int i1 = std::min(nx_ - 1, static_cast<int>(std::floor((fb.max.x - origin_.x) / res)));
      const int j0 = std::max(0, static_cast<int>(std::floor((fb.min.y - origin_.y) / res)));
      const int j1 = std::min(ny_ - 1, static_cast<int>(std::floor((fb.max.y - origin_.y) / res)));
      for (int j = j0; j <= j1; ++j) {
        for (int i = i0; i <= i1; ++i) {
          if (!free_[index(i, j)]) continue;
          const geometry::OrientedRect2D cell{center(i, j), res / 2.0, res / 2.0, 0.0};
          if (geometry::overlap_area(cell, rect) > 1e-12) free_[index(i, j)] = false;
        }
      }
    }
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i); }
  bool inside(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }
  bool free(int i, int j) const { return inside(i, j) && free_[index(i, j)]; }
  Vec2 center(int i, int j) const { return origin_ + Vec2{(i + 0.5) * res_, (j + 0.5) * res_}; }
  std::pair<int, int> cell_of(Vec2 p) const {
    return {static_cast<int>(std::floor((p.x - origin_.x) / res_)), static_cast<int>(std::floor((p.y - origin_.y) / res_))};
  }

  // Every sample along a->b lands in a free cell.
  bool line_of_sight(Vec2 a, Vec2 b) const {
    const double len = norm(b - a);
    const int steps = std::max(1, static_cast<int>(std::ceil(len / (res_ / 4.0))));
    for (int s = 0; s <= steps; ++s) {
      const auto [i, j] = cell_of(a + (b - a) * (static_cast<double>(s) / steps));
      if (!free(i, j)) return false;
    }
    return true;
  }

 private:
  double res_;
  Vec2 origin_;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<bool> free_;
};

double angle_between(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
  return d > std::numbers::pi ? 2.0 * std::numbers::pi - d : d;
}

}  // namespace

NavResult nav_eval(const Layout& layout, const NavTask& task) {
  if (!(task.success_radius > 0.0) || !std::isfinite(task.success_radius)) throw ValueError("success_radius must be > 0");
  if (!(task.fov_half_angle > 0.0 && task.fov_half_angle < std::numbers::pi)) {
    throw ValueError("fov_half_angle must lie in (0, pi)");
  }
  if (!(task.grid_resolution > 0.0) || !std::isfinite(task.grid_resolution)) throw ValueError("grid_resolution must be > 0");
  const auto target_it = std::find_if(layout.objects.begin(), layout.objects.end(),
                                      [&](const PlacedObject& o) { return o.instance_id == task.target_instance; });
  if (target_it == layout.objects.end()) throw UnknownTargetError("no object '" + task.target_instance + "' in the layout");
  const Vec2 target = target_it->placement.position.xy();

  const Vec2 start{task.start.x, task.start.y};
  if (!std::isfinite(start.x) || !std::isfinite(start.y) || !std::isfinite(task.start.heading)) {
    throw InvalidStartError("start pose is not finite");
  }
  if (!geometry::point_in_polygon(start, layout.floor.vertices)) throw InvalidStartError("start lies outside the floor");
  for (const PlacedObject& o : layout.objects) {
    if (geometry::footprint(o).contains(start, 0.0)) throw InvalidStartError("start lies inside '" + o.instance_id + "'");
  }

  const Grid grid(layout, task.grid_resolution);
  const auto [si, sj] = grid.cell_of(start);
  if (!grid.free(si, sj)) throw InvalidStartError("start cell touches an obstacle at this grid resolution");

  NavResult result;
  const auto finish = [&](Vec2 p, double heading) {
    result.final_pose = {p.x, p.y, heading};
    result.nav_error = norm(target - p);
    const Vec2 d = target - p;
    result.bearing_error = result.nav_error > 0.0 ? angle_between(std::atan2(d.y, d.x), heading) : 0.0;
    result.success = result.reachable && result.nav_error <= task.success_radius &&
                     result.bearing_error <= task.fov_half_angle;
    return result;
  };

  // Already inside the radius: the robot stays put.
  if (norm(target - start) <= task.success_radius) {
    result.reachable = true;
    result.path.push_back(task.start);
    return finish(start, task.start.heading);
  }

  const double res = task.grid_resolution;
  const auto is_goal = [&](int i, int j) { return norm(grid.center(i, j) - target) <= task.success_radius; };
  const auto h = [&](int i, int j) { return std::max(0.0, norm(grid.center(i, j) - target) - task.success_radius); };

  const std::size_t n = static_cast<std::size_t>(grid.nx()) * static_cast<std::size_t>(grid.ny());
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<std::ptrdiff_t> parent(n, -1);
  std::vector<bool> closed(n, false);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  g[grid.index(si, sj)] = 0.0;
  open.push({h(si, sj), grid.index(si, sj)});
  std::optional<std::size_t> goal;
  while (!open.empty()) {
    const auto [f, cur] = open.top();
    open.pop();
    if (closed[cur]) continue;
    closed[cur] = true;
    const int ci = static_cast<int>(cur % static_cast<std::size_t>(grid.nx()));
    const int cj = static_cast<int>(cur / static_cast<std::size_t>(grid.nx()));
    if (is_goal(ci, cj)) {
      goal = cur;
      break;
    }
    for (int dj = -1; dj <= 1; ++dj) {
      for (int di = -1; di <= 1; ++di) {
        if (di == 0 && dj == 0) continue;
        const int ni = ci + di;
        const int nj = cj + dj;
        if (!grid.free(ni, nj)) continue;
        // No corner cutting past a blocked cell.
        if (di != 0 && dj != 0 && (!grid.free(ci + di, cj) || !grid.free(ci, cj + dj))) continue;
        const std::size_t next = grid.index(ni, nj);
        const double cost = g[cur] + ((di != 0 && dj != 0) ? res * std::numbers::sqrt2 : res);
        if (cost < g[next]) {
          g[next] = cost;
          parent[next] = static_cast<std::ptrdiff_t>(cur);
          open.push({cost + h(ni, nj), next});
        }
      }
    }
  }

  if (!goal) {
    result.reachable = false;
    result.path.push_back(task.start);
    return finish(start, task.start.heading);
  }
  result.reachable = true;

  std::vector<Vec2> cells;
  for (auto c = static_cast<std::ptrdiff_t>(*goal); c != -1; c = parent[static_cast<std::size_t>(c)]) {
    const auto idx = static_cast<std::size_t>(c);
    cells.push_back(grid.center(static_cast<int>(idx % static_cast<std::size_t>(grid.nx())),
                                static_cast<int>(idx / static_cast<std::size_t>(grid.nx()))));
  }
  std::reverse(cells.begin(), cells.end());
  cells.front() = start;

  // Greedy line-of-sight shortcutting.
  std::vector<Vec2> waypoints{cells.front()};
  std::size_t at = 0;
  while (at + 1 < cells.size()) {
    std::size_t next = at + 1;
    for (std::size_t k = cells.size() - 1; k > at + 1; --k) {
      if (grid.line_of_sight(cells[at], cells[k])) {
        next = k;
        break;
      }
    }
    waypoints.push_back(cells[next]);
    at = next;
  }

  double heading = task.start.heading;
  result.path.push_back(task.start);
  for (std::size_t k = 1; k < waypoints.size(); ++k) {
    const Vec2 d = waypoints[k] - waypoints[k - 1];
    if (norm(d) > 0.0) heading = std::atan2(d.y, d.x);
    result.path.push_back({waypoints[k].x, waypoints[k].y, heading});
  }
  return finish(waypoints.back(), heading);
}

Json to_json(const NavResult& r) {
  Json path = Json::array();
  for (const Pose& p : r.path) path.push_back(Json{{"x", p.x}, {"y", p.y}, {"heading", p.heading}});
  return Json{{"success", r.success},
              {"reachable", r.reachable},
              {"nav_error", r.nav_error},
              {"bearing_error", r.bearing_error},
              {"final_pose", Json{{"x", r.final_pose.x}, {"y", r.final_pose.y}, {"heading", r.final_pose.heading}}},
              {"path", std::move(path)}};
}

}  // namespace layoutforge::eval
